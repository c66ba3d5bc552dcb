//! Exclusivity enhanced autoencoders.
//!
//! Unsupervised feature learning that adds two cosine-form exclusivity constraints to
//! the usual reconstruction loss: each latent code is pushed away from the encoded mean
//! of every other example and towards the encoded mean of its nearest input-space peers.
//! The crate also covers greedy stacked pretraining with norm-banded fine-tuning,
//! dataset loading, and a nearest-neighbour evaluation harness.
//!
//! Modules, bottom up:
//!
//! - [`numkit`]: dense matrices, affine layers, SGD, finite-difference checks.
//! - [`exclusivity`]: the clamp `Ω`, prototype means, and the constraint losses.
//! - [`autoencoder`]: a single model, the joint objective and its training loop.
//! - [`stacking`]: layerwise pretraining, assembly and banded fine-tuning.
//! - [`dataio`]: IDX and graymap loaders, mirroring, splits, synthetic data.
//! - [`eval`]: features, k-NN, experiments, checkpoints, metrics, configuration.
//! - [`gradsuite`]: randomised gradient checks of the full objective.

pub mod autoencoder;
pub mod dataio;
pub mod error;
pub mod eval;
pub mod exclusivity;
pub mod gradsuite;
pub mod numkit;
pub mod stacking;

pub use autoencoder::{AEConfig, AEModel, LossBreakdown, MeanGrad, Objective};
pub use error::{Error, Result};
pub use exclusivity::{ExclusivityContext, Reduction};
pub use numkit::{Activation, DenseLayer, Matrix};
pub use stacking::{StackConfig, StackedModel};

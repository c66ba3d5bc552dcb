//! Python bindings. Matrices cross the boundary as lists of row lists.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use eeae::autoencoder::{encode as ae_encode, decode as ae_decode, train};
use eeae::eval::checkpoint::{load_checkpoint, save_checkpoint, Checkpoint};
use eeae::eval::{ExperimentConfig, Metric};
use eeae::{AEConfig, AEModel, Activation, Matrix, MeanGrad, Reduction};

fn err(e: eeae::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_matrix(rows: Vec<Vec<f64>>) -> PyResult<Matrix> {
    if rows.is_empty() {
        return Err(PyValueError::new_err("empty matrix"));
    }
    Matrix::from_rows(&rows).map_err(err)
}

fn parse<T: std::str::FromStr>(s: &str, what: &str) -> PyResult<T> {
    s.parse().map_err(|_| PyValueError::new_err(format!("unknown {what} '{s}'")))
}

/// Element-wise max(v, 0).
#[pyfunction]
fn omega(v: Vec<f64>) -> Vec<f64> {
    eeae::exclusivity::omega(&v)
}

/// Cosine of Ω(u − h) with h; 0 when either vector is degenerate.
#[pyfunction]
fn clamped_cosine(u: Vec<f64>, h: Vec<f64>) -> PyResult<f64> {
    eeae::exclusivity::clamped_cosine(&u, &h, eeae::exclusivity::DEFAULT_EPS).map_err(err)
}

#[pyfunction]
fn top_m_neighbors(rows: Vec<Vec<f64>>, j: usize, m: usize) -> PyResult<Vec<usize>> {
    eeae::exclusivity::top_m_neighbors(&to_matrix(rows)?, j, m).map_err(err)
}

/// `(rows, labels)` of a Gaussian-blob dataset.
#[pyfunction]
fn synth_gaussian(classes: usize, dim: usize, per_class: usize, spread: f64, seed: u64) -> PyResult<(Vec<Vec<f64>>, Vec<usize>)> {
    let ds = eeae::dataio::synth_gaussian(classes, dim, per_class, spread, seed).map_err(err)?;
    let labels = ds.labels().map_err(err)?.to_vec();
    Ok((ds.examples.to_rows(), labels))
}

#[pyfunction]
#[pyo3(signature = (train_rows, train_labels, query_rows, k = 1, metric = "euclidean"))]
fn knn_classify(
    train_rows: Vec<Vec<f64>>,
    train_labels: Vec<usize>,
    query_rows: Vec<Vec<f64>>,
    k: usize,
    metric: &str,
) -> PyResult<Vec<usize>> {
    let metric: Metric = parse(metric, "metric")?;
    eeae::eval::knn_classify(&to_matrix(train_rows)?, &train_labels, &to_matrix(query_rows)?, k, metric).map_err(err)
}

#[pyfunction]
fn accuracy(predicted: Vec<usize>, truth: Vec<usize>) -> PyResult<f64> {
    eeae::eval::accuracy(&predicted, &truth).map_err(err)
}

#[pyfunction]
fn default_config() -> String {
    ExperimentConfig::default_toml()
}

/// Runs the trial protocol from a config file; returns the summary as a dict.
#[pyfunction]
fn run_experiment<'py>(py: Python<'py>, config_path: &str) -> PyResult<Bound<'py, PyDict>> {
    let cfg = ExperimentConfig::from_file(config_path).map_err(err)?;
    let report = eeae::eval::run_experiment(&cfg).map_err(err)?;
    let s = &report.summary;
    let d = PyDict::new(py);
    d.set_item("trials", s.trials)?;
    d.set_item("completed", s.completed)?;
    d.set_item("failed", s.failed)?;
    d.set_item("partial", s.partial)?;
    d.set_item("mean_accuracy", s.mean_accuracy)?;
    d.set_item("std_accuracy", s.std_accuracy)?;
    let accs: Vec<Option<f64>> = report.records.iter().map(|r| r.accuracy).collect();
    d.set_item("accuracies", accs)?;
    Ok(d)
}

/// A single exclusivity enhanced autoencoder.
#[pyclass]
struct AutoEncoder {
    config: AEConfig,
    model: AEModel,
}

#[pymethods]
impl AutoEncoder {
    #[new]
    #[pyo3(signature = (
        layer_sizes,
        lam = 7.0,
        m = 6,
        lr = 0.05,
        epochs = 50,
        batch_size = 32,
        seed = 0,
        latent_activation = "relu",
        output_activation = "sigmoid",
        sum_mode = "batch_mean",
        mean_grad = "full",
    ))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        layer_sizes: Vec<usize>,
        lam: f64,
        m: usize,
        lr: f64,
        epochs: usize,
        batch_size: usize,
        seed: u64,
        latent_activation: &str,
        output_activation: &str,
        sum_mode: &str,
        mean_grad: &str,
    ) -> PyResult<Self> {
        let config = AEConfig {
            layer_sizes,
            latent_activation: parse::<Activation>(latent_activation, "activation")?,
            output_activation: parse::<Activation>(output_activation, "activation")?,
            lambda: lam,
            m,
            lr,
            epochs,
            batch_size,
            seed,
            sum_mode: match sum_mode {
                "batch_mean" => Reduction::BatchMean,
                "paper_sum" => Reduction::PaperSum,
                other => return Err(PyValueError::new_err(format!("unknown sum_mode '{other}'"))),
            },
            mean_grad: match mean_grad {
                "full" => MeanGrad::Full,
                "stopped" => MeanGrad::Stopped,
                other => return Err(PyValueError::new_err(format!("unknown mean_grad '{other}'"))),
            },
            ..AEConfig::default()
        };
        let model = AEModel::init(&config).map_err(err)?;
        Ok(Self { config, model })
    }

    /// Trains in place; returns one dict of loss terms per epoch.
    fn fit<'py>(&mut self, py: Python<'py>, rows: Vec<Vec<f64>>) -> PyResult<Vec<Bound<'py, PyDict>>> {
        let data = to_matrix(rows)?;
        let history = train(&mut self.model, &self.config, &data).map_err(err)?;
        history
            .iter()
            .map(|l| {
                let d = PyDict::new(py);
                d.set_item("L_a", l.l_a)?;
                d.set_item("L_h1", l.l_h1)?;
                d.set_item("L_h2", l.l_h2)?;
                d.set_item("L_h", l.l_h)?;
                d.set_item("L", l.l)?;
                Ok(d)
            })
            .collect()
    }

    fn encode(&self, rows: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
        Ok(ae_encode(&self.model, &to_matrix(rows)?).map_err(err)?.to_rows())
    }

    fn decode(&self, codes: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
        Ok(ae_decode(&self.model, &to_matrix(codes)?).map_err(err)?.to_rows())
    }

    #[getter]
    fn num_params(&self) -> usize {
        self.model.num_params()
    }

    fn save(&self, path: &str) -> PyResult<()> {
        let text = toml::to_string(&self.config).unwrap_or_default();
        save_checkpoint(&Checkpoint::from_model(&self.model, text), path).map_err(err)
    }

    /// Loads a checkpoint's deployed model; training settings come from the stored config.
    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        let ck = load_checkpoint(path).map_err(err)?;
        let config = toml::from_str::<AEConfig>(&ck.config).unwrap_or_default();
        Ok(Self { config, model: ck.model })
    }
}

#[pymodule]
fn eeae_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(omega, m)?)?;
    m.add_function(wrap_pyfunction!(clamped_cosine, m)?)?;
    m.add_function(wrap_pyfunction!(top_m_neighbors, m)?)?;
    m.add_function(wrap_pyfunction!(synth_gaussian, m)?)?;
    m.add_function(wrap_pyfunction!(knn_classify, m)?)?;
    m.add_function(wrap_pyfunction!(accuracy, m)?)?;
    m.add_function(wrap_pyfunction!(default_config, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_class::<AutoEncoder>()?;
    Ok(())
}

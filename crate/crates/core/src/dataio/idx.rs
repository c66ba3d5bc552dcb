//! Big-endian IDX files as used by MNIST: `0x00000803` for u8 images (count × H × W)
//! and `0x00000801` for u8 labels (count).

use std::path::Path;

use super::Dataset;
use crate::numkit::Matrix;
use crate::{Error, Result};

pub const IMAGE_MAGIC: u32 = 0x0000_0803;
pub const LABEL_MAGIC: u32 = 0x0000_0801;

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
    what: &'static str,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len()).ok_or_else(|| {
            Error::Truncated(format!(
                "{}: wanted {n} bytes at offset {}, file has {}",
                self.what,
                self.pos,
                self.buf.len()
            ))
        })?;
        let out = &self.buf[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32> {
        let b = self.take(4)?;
        Ok(u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
    }
}

/// Returns `(count, height, width, pixels)`.
pub fn parse_images(bytes: &[u8]) -> Result<(usize, usize, usize, &[u8])> {
    let mut c = Cursor { buf: bytes, pos: 0, what: "idx images" };
    let magic = c.u32()?;
    if magic != IMAGE_MAGIC {
        return Err(Error::BadMagic { found: magic, expected: IMAGE_MAGIC });
    }
    let count = c.u32()? as usize;
    let h = c.u32()? as usize;
    let w = c.u32()? as usize;
    let pixels = c.take(count * h * w)?;
    Ok((count, h, w, pixels))
}

pub fn parse_labels(bytes: &[u8]) -> Result<&[u8]> {
    let mut c = Cursor { buf: bytes, pos: 0, what: "idx labels" };
    let magic = c.u32()?;
    if magic != LABEL_MAGIC {
        return Err(Error::BadMagic { found: magic, expected: LABEL_MAGIC });
    }
    let count = c.u32()? as usize;
    c.take(count)
}

pub fn decode(image_bytes: &[u8], label_bytes: &[u8]) -> Result<Dataset> {
    let (count, h, w, pixels) = parse_images(image_bytes)?;
    let labels = parse_labels(label_bytes)?;
    if labels.len() != count {
        return Err(Error::CountMismatch { images: count, labels: labels.len() });
    }
    let data = pixels.iter().map(|&p| f64::from(p) / 255.0).collect();
    Ok(Dataset {
        examples: Matrix::new(count, h * w, data)?,
        labels: Some(labels.iter().map(|&l| usize::from(l)).collect()),
        image_shape: Some((h, w)),
    })
}

pub fn load_idx(image_path: impl AsRef<Path>, label_path: impl AsRef<Path>) -> Result<Dataset> {
    let (ip, lp) = (image_path.as_ref(), label_path.as_ref());
    let images = std::fs::read(ip).map_err(|e| Error::io(ip, e))?;
    let labels = std::fs::read(lp).map_err(|e| Error::io(lp, e))?;
    decode(&images, &labels)
}

fn quantize(v: f64) -> u8 {
    (v * 255.0).round().clamp(0.0, 255.0) as u8
}

/// Encodes a dataset as `(image_bytes, label_bytes)`. Pixels are rounded to bytes;
/// a missing image shape is written as `1 × cols`, missing labels as zeros.
pub fn encode(ds: &Dataset) -> Result<(Vec<u8>, Vec<u8>)> {
    let n = ds.examples.rows();
    let (h, w) = ds.image_shape.unwrap_or((1, ds.examples.cols()));
    let mut img = Vec::with_capacity(16 + n * h * w);
    for v in [IMAGE_MAGIC, n as u32, h as u32, w as u32] {
        img.extend_from_slice(&v.to_be_bytes());
    }
    img.extend(ds.examples.as_slice().iter().map(|&v| quantize(v)));
    let mut lab = Vec::with_capacity(8 + n);
    for v in [LABEL_MAGIC, n as u32] {
        lab.extend_from_slice(&v.to_be_bytes());
    }
    match &ds.labels {
        Some(labels) => {
            for &l in labels {
                let b = u8::try_from(l).map_err(|_| Error::invalid(format!("label {l} does not fit in a byte")))?;
                lab.push(b);
            }
        }
        None => lab.extend(std::iter::repeat(0u8).take(n)),
    }
    Ok((img, lab))
}

pub fn write_idx(ds: &Dataset, image_path: impl AsRef<Path>, label_path: impl AsRef<Path>) -> Result<()> {
    let (img, lab) = encode(ds)?;
    let (ip, lp) = (image_path.as_ref(), label_path.as_ref());
    std::fs::write(ip, img).map_err(|e| Error::io(ip, e))?;
    std::fs::write(lp, lab).map_err(|e| Error::io(lp, e))?;
    Ok(())
}

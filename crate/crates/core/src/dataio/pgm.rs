//! Binary portable graymap ("P5", max value 255) and class-per-subdirectory image trees.

use std::path::{Path, PathBuf};

use super::Dataset;
use crate::numkit::Matrix;
use crate::{Error, Result};

/// Parsed P5 image: `(height, width, pixels)`.
pub fn parse_pgm(bytes: &[u8], path: &Path) -> Result<(usize, usize, Vec<u8>)> {
    let fail = |reason: String| Error::Format { path: path.to_path_buf(), reason };
    let mut pos = 0;
    let mut tokens = Vec::with_capacity(4);
    while tokens.len() < 4 {
        while pos < bytes.len() && (bytes[pos].is_ascii_whitespace() || bytes[pos] == b'#') {
            if bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                pos += 1;
            }
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(fail("truncated header".into()));
        }
        tokens.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
    }
    if tokens[0] != "P5" {
        return Err(fail(format!("expected P5 graymap, found {:?}", tokens[0])));
    }
    let num = |s: &str| s.parse::<usize>().map_err(|_| fail(format!("bad header field {s:?}")));
    let (w, h, max) = (num(&tokens[1])?, num(&tokens[2])?, num(&tokens[3])?);
    if max != 255 {
        return Err(fail(format!("max value {max} unsupported, expected 255")));
    }
    // exactly one whitespace byte separates the header from the raster
    pos += 1;
    let need = w * h;
    if bytes.len() < pos + need {
        return Err(fail(format!("raster truncated: need {need} bytes")));
    }
    Ok((h, w, bytes[pos..pos + need].to_vec()))
}

pub fn encode_pgm(h: usize, w: usize, pixels: &[u8]) -> Vec<u8> {
    let mut out = format!("P5\n{w} {h}\n255\n").into_bytes();
    out.extend_from_slice(pixels);
    out
}

fn sorted_entries(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        out.push(entry.map_err(|e| Error::io(dir, e))?.path());
    }
    out.sort();
    Ok(out)
}

/// Loads `root/<class>/<image>.pgm`. Rows are ordered by (class name, file name) and
/// labels number the classes in that order.
pub fn load_image_dir(root: impl AsRef<Path>) -> Result<Dataset> {
    let root = root.as_ref();
    let mut data = Vec::new();
    let mut labels = Vec::new();
    let mut shape: Option<(usize, usize)> = None;
    let classes: Vec<PathBuf> = sorted_entries(root)?.into_iter().filter(|p| p.is_dir()).collect();
    for (label, class_dir) in classes.iter().enumerate() {
        for file in sorted_entries(class_dir)? {
            if !file.is_file() {
                continue;
            }
            let bytes = std::fs::read(&file).map_err(|e| Error::io(&file, e))?;
            let (h, w, px) = parse_pgm(&bytes, &file)?;
            match shape {
                None => shape = Some((h, w)),
                Some(s) if s != (h, w) => {
                    return Err(Error::Format {
                        path: file,
                        reason: format!("image is {h}x{w}, earlier images are {}x{}", s.0, s.1),
                    })
                }
                Some(_) => {}
            }
            data.extend(px.iter().map(|&p| f64::from(p) / 255.0));
            labels.push(label);
        }
    }
    let (h, w) = shape.unwrap_or((0, 0));
    Ok(Dataset {
        examples: Matrix::new(labels.len(), h * w, data)?,
        labels: Some(labels),
        image_shape: shape,
    })
}

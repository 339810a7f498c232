//! `.qdm` density-matrix files: a JSON header next to a little-endian binary
//! payload of `(re, im)` f64 pairs.
//!
//! Dense payloads are row-major `D×D`. Factored payloads hold the `r` weights
//! followed by the `r` vectors, one after another; `r` is recovered from the
//! payload length.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{DensityMatrix, Factor, Storage};
use crate::{Error, Result, C64};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QdmHeader {
    pub version: u32,
    pub factors: Vec<Factor>,
    pub storage: String,
    pub data_file: String,
}

fn push_c(buf: &mut Vec<u8>, z: C64) {
    buf.extend_from_slice(&z.re.to_le_bytes());
    buf.extend_from_slice(&z.im.to_le_bytes());
}

fn read_f64(b: &[u8], k: usize) -> f64 {
    f64::from_le_bytes(b[8 * k..8 * k + 8].try_into().expect("8 bytes"))
}

/// Writes `path` (header) and `<stem>.bin` (payload) beside it; returns both paths.
pub fn write_qdm(rho: &DensityMatrix, path: &Path) -> Result<(PathBuf, PathBuf)> {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("state");
    let data_name = format!("{stem}.bin");
    let data_path = path.with_file_name(&data_name);
    let d = rho.dim();
    let (kind, bytes) = match rho.storage() {
        Storage::Factored { weights, vectors } => {
            let mut buf = Vec::with_capacity(weights.len() * (8 + 16 * d));
            for w in weights {
                buf.extend_from_slice(&w.to_le_bytes());
            }
            for col in vectors.column_iter() {
                for z in col.iter() {
                    push_c(&mut buf, *z);
                }
            }
            ("factored", buf)
        }
        _ => {
            let m = rho.to_dense();
            let mut buf = Vec::with_capacity(16 * d * d);
            for i in 0..d {
                for j in 0..d {
                    push_c(&mut buf, m[(i, j)]);
                }
            }
            ("dense", buf)
        }
    };
    let header = QdmHeader {
        version: 1,
        factors: rho.factors().to_vec(),
        storage: kind.into(),
        data_file: data_name,
    };
    fs::write(&data_path, bytes)?;
    fs::write(path, serde_json::to_string_pretty(&header)? + "\n")?;
    Ok((path.to_path_buf(), data_path))
}

/// Reads and validates a `.qdm` file.
pub fn read_qdm(path: &Path) -> Result<DensityMatrix> {
    let header: QdmHeader = serde_json::from_str(&fs::read_to_string(path)?)?;
    if header.version != 1 {
        return Err(Error::Parse(format!(
            "unsupported qdm version {}",
            header.version
        )));
    }
    let data_path = path
        .parent()
        .unwrap_or(Path::new("."))
        .join(&header.data_file);
    let bytes = fs::read(data_path)?;
    let d: usize = header.factors.iter().map(|f| f.dim).product();
    match header.storage.as_str() {
        "dense" => {
            if bytes.len() != 16 * d * d {
                return Err(Error::Parse(format!(
                    "dense payload has {} bytes, expected {}",
                    bytes.len(),
                    16 * d * d
                )));
            }
            let m = DMatrix::from_fn(d, d, |i, j| {
                let k = 2 * (i * d + j);
                C64::new(read_f64(&bytes, k), read_f64(&bytes, k + 1))
            });
            DensityMatrix::from_dense(header.factors, m)
        }
        "factored" => {
            let per = 8 + 16 * d;
            if bytes.is_empty() || bytes.len() % per != 0 {
                return Err(Error::Parse(format!(
                    "factored payload of {} bytes does not fit dimension {d}",
                    bytes.len()
                )));
            }
            let r = bytes.len() / per;
            let weights: Vec<f64> = (0..r).map(|k| read_f64(&bytes, k)).collect();
            let vectors = DMatrix::from_fn(d, r, |i, j| {
                let k = r + 2 * (j * d + i);
                C64::new(read_f64(&bytes, k), read_f64(&bytes, k + 1))
            });
            DensityMatrix::factored(header.factors, weights, vectors)
        }
        other => Err(Error::Parse(format!("unknown storage kind {other:?}"))),
    }
}

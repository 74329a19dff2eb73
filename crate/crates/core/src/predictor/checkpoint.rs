//! Versioned binary model checkpoint: magic bytes, dims, then row-major
//! little-endian f64 parameters.

use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2};

use super::{PredictorError, SoftmaxModel};

const MAGIC: &[u8; 8] = b"RELPREP1";
const VERSION: u32 = 1;

pub fn save(model: &SoftmaxModel, path: &Path) -> Result<(), PredictorError> {
    let (weights, bias) = model.parameters();
    let mut bytes = Vec::with_capacity(16 + 8 * (weights.len() + bias.len()));
    bytes.extend_from_slice(MAGIC);
    bytes.extend_from_slice(&VERSION.to_le_bytes());
    bytes.extend_from_slice(&(model.feature_dim() as u32).to_le_bytes());
    bytes.extend_from_slice(&(model.num_classes() as u32).to_le_bytes());
    for &v in weights.iter() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    for &v in bias.iter() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, bytes).map_err(|source| PredictorError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load(path: &Path) -> Result<SoftmaxModel, PredictorError> {
    let bad = |message: String| PredictorError::BadCheckpoint {
        path: path.to_path_buf(),
        message,
    };
    let bytes = fs::read(path).map_err(|source| PredictorError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    if bytes.len() < 16 {
        return Err(bad(format!("truncated header: {} bytes", bytes.len())));
    }
    if &bytes[0..8] != MAGIC {
        return Err(bad("bad magic bytes".into()));
    }
    let u32_at = |offset: usize| u32::from_le_bytes(bytes[offset..offset + 4].try_into().unwrap());
    let version = u32_at(8);
    if version != VERSION {
        return Err(bad(format!("unsupported version {version}")));
    }
    let feature_dim = u32_at(12) as usize;
    // Classes live right after the header in v1.
    if bytes.len() < 20 {
        return Err(bad("truncated dims".into()));
    }
    let num_classes = u32_at(16) as usize;
    let expected = 20 + 8 * (feature_dim * num_classes + num_classes);
    if bytes.len() != expected {
        return Err(bad(format!(
            "size mismatch: {} bytes, expected {expected} for {feature_dim}x{num_classes}",
            bytes.len()
        )));
    }
    let mut values = bytes[20..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()));
    let weights = Array2::from_shape_fn((feature_dim, num_classes), |_| {
        values.next().expect("length checked")
    });
    let bias = Array1::from_shape_fn(num_classes, |_| values.next().expect("length checked"));
    for v in weights.iter().chain(bias.iter()) {
        if !v.is_finite() {
            return Err(bad("non-finite parameter".into()));
        }
    }
    let mut model = SoftmaxModel::zeros(feature_dim, num_classes);
    {
        let (w, b) = model.parameters_mut();
        *w = weights;
        *b = bias;
    }
    Ok(model)
}

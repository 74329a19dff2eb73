//! Desk-scale reference predicate classifier.
//!
//! A linear softmax model over 32x32-downsampled rasters stands in for
//! the paper-scale CNN backbone: the optimization recipe (categorical
//! cross-entropy, batch size 10, Nesterov momentum 0.9, staged learning
//! rates over three five-epoch phases) is kept verbatim so preprocessing
//! methods can be compared end-to-end.

mod checkpoint;
mod train;

pub use train::train;

use std::path::{Path, PathBuf};

use ndarray::{Array1, Array2, ArrayView2, Axis};
use thiserror::Error;

use crate::raster::{Raster, RasterError};
use crate::transforms::{resize_normalize, ManifestEntry, TransformError};

/// Side of the fixed feature downsample; features are 32*32*C long.
pub const FEATURE_SIDE: u32 = 32;

#[derive(Debug, Error)]
pub enum PredictorError {
    #[error("feature dimension mismatch: model expects {expected}, batch has {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("loss became non-finite at phase {phase}, epoch {epoch}, batch {batch}")]
    NonFiniteLoss {
        phase: usize,
        epoch: usize,
        batch: usize,
    },
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("bad checkpoint {path}: {message}")]
    BadCheckpoint { path: PathBuf, message: String },
    #[error("io error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Raster(#[from] RasterError),
    #[error(transparent)]
    Transform(#[from] TransformError),
}

/// Linear softmax classifier: `softmax(x W + b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftmaxModel {
    weights: Array2<f64>,
    bias: Array1<f64>,
}

impl SoftmaxModel {
    /// Zero-initialized model (a deterministic start for a convex problem).
    pub fn zeros(feature_dim: usize, num_classes: usize) -> Self {
        Self {
            weights: Array2::zeros((feature_dim, num_classes)),
            bias: Array1::zeros(num_classes),
        }
    }

    pub fn feature_dim(&self) -> usize {
        self.weights.nrows()
    }

    pub fn num_classes(&self) -> usize {
        self.weights.ncols()
    }

    pub fn save(&self, path: &Path) -> Result<(), PredictorError> {
        checkpoint::save(self, path)
    }

    pub fn load(path: &Path) -> Result<Self, PredictorError> {
        checkpoint::load(path)
    }

    pub fn parameters_mut(&mut self) -> (&mut Array2<f64>, &mut Array1<f64>) {
        (&mut self.weights, &mut self.bias)
    }

    pub fn parameters(&self) -> (&Array2<f64>, &Array1<f64>) {
        (&self.weights, &self.bias)
    }

    /// Row-wise softmax probabilities for a batch of feature vectors.
    pub fn forward(&self, batch: ArrayView2<'_, f64>) -> Result<Array2<f64>, PredictorError> {
        if batch.ncols() != self.feature_dim() {
            return Err(PredictorError::DimensionMismatch {
                expected: self.feature_dim(),
                got: batch.ncols(),
            });
        }
        let mut logits = batch.dot(&self.weights);
        logits += &self.bias;
        softmax_rows(&mut logits);
        Ok(logits)
    }

    /// Mean categorical cross-entropy and its gradients on one batch.
    pub fn loss_and_gradients(
        &self,
        batch: ArrayView2<'_, f64>,
        labels: &[usize],
    ) -> Result<(f64, Array2<f64>, Array1<f64>), PredictorError> {
        let probs = self.forward(batch)?;
        let inv_b = 1.0 / batch.nrows() as f64;
        let mut loss = 0.0;
        let mut delta = probs;
        for (i, &label) in labels.iter().enumerate() {
            if label >= self.num_classes() {
                return Err(PredictorError::LabelOutOfRange {
                    label,
                    classes: self.num_classes(),
                });
            }
            loss -= delta[(i, label)].max(f64::MIN_POSITIVE).ln();
            delta[(i, label)] -= 1.0;
        }
        delta *= inv_b;
        let grad_w = batch.t().dot(&delta);
        let grad_b = delta.sum_axis(Axis(0));
        Ok((loss * inv_b, grad_w, grad_b))
    }
}

fn softmax_rows(logits: &mut Array2<f64>) {
    for mut row in logits.rows_mut() {
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        row.mapv_inplace(|v| (v - max).exp());
        let sum: f64 = row.sum();
        row.mapv_inplace(|v| v / sum);
    }
}

/// The paper's optimization recipe: three phases of five epochs at
/// learning rates 0.001, 0.001, 0.00001.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub momentum: f64,
    pub phases: Vec<Phase>,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Phase {
    pub learning_rate: f64,
    pub epochs: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 10,
            momentum: 0.9,
            phases: vec![
                Phase {
                    learning_rate: 0.001,
                    epochs: 5,
                },
                Phase {
                    learning_rate: 0.001,
                    epochs: 5,
                },
                Phase {
                    learning_rate: 0.00001,
                    epochs: 5,
                },
            ],
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), PredictorError> {
        if self.batch_size == 0 {
            return Err(PredictorError::InvalidConfig("batch_size must be >= 1".into()));
        }
        if !(self.momentum >= 0.0 && self.momentum < 1.0) {
            return Err(PredictorError::InvalidConfig(format!(
                "momentum must be in [0, 1), got {}",
                self.momentum
            )));
        }
        if self.phases.is_empty() {
            return Err(PredictorError::InvalidConfig("no phases".into()));
        }
        for p in &self.phases {
            if !(p.learning_rate > 0.0) {
                return Err(PredictorError::InvalidConfig(format!(
                    "learning rate must be positive, got {}",
                    p.learning_rate
                )));
            }
            if p.epochs == 0 {
                return Err(PredictorError::InvalidConfig("phase with 0 epochs".into()));
            }
        }
        Ok(())
    }
}

/// Feature matrix extracted from an emitted dataset, aligned with its
/// manifest order.
#[derive(Debug, Clone)]
pub struct FeatureSet {
    pub instance_ids: Vec<String>,
    pub features: Array2<f64>,
    pub labels: Vec<usize>,
}

/// Load every manifest entry's PNG and downsample it to the fixed
/// 32x32xC feature grid, honoring the method's channel policy.
pub fn extract_features(
    emit_dir: &Path,
    entries: &[ManifestEntry],
) -> Result<FeatureSet, PredictorError> {
    if entries.is_empty() {
        return Err(PredictorError::EmptyTrainingSet);
    }
    let mut instance_ids = Vec::with_capacity(entries.len());
    let mut labels = Vec::with_capacity(entries.len());
    let mut rows: Vec<f64> = Vec::new();
    let mut dim: Option<usize> = None;
    for entry in entries {
        let raster = Raster::open(&emit_dir.join(&entry.relative_path))?;
        let small = resize_normalize(
            &raster,
            (FEATURE_SIDE, FEATURE_SIDE),
            entry.method.resize_policy(),
        );
        let feature_len = small.data().len();
        match dim {
            None => dim = Some(feature_len),
            Some(d) if d != feature_len => {
                return Err(PredictorError::DimensionMismatch {
                    expected: d,
                    got: feature_len,
                })
            }
            _ => {}
        }
        rows.extend(small.data().iter().map(|&v| f64::from(v)));
        instance_ids.push(entry.instance_id.clone());
        labels.push(entry.predicate_id);
    }
    let dim = dim.expect("at least one entry");
    let features = Array2::from_shape_vec((entries.len(), dim), rows).expect("consistent rows");
    Ok(FeatureSet {
        instance_ids,
        features,
        labels,
    })
}

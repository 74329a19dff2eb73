//! Mini-batch SGD with Nesterov momentum over a deterministic, reseeded
//! shuffle stream.

use log::info;
use ndarray::{Array1, Array2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{PredictorError, SoftmaxModel, TrainConfig};

/// Train a softmax model on a feature matrix with the staged-learning-rate
/// recipe. The shuffle order is drawn from a single seeded stream and
/// reshuffled every epoch; per-epoch mean loss is logged.
///
/// The velocity update follows the usual framework formulation of
/// Nesterov momentum, with the gradient evaluated at the current
/// parameters and the lookahead folded into the step:
/// `v <- mu*v - lr*g`, `w <- w + mu*v - lr*g`. With `mu = 0` this is
/// plain SGD.
pub fn train(
    config: &TrainConfig,
    features: &Array2<f64>,
    labels: &[usize],
    num_classes: usize,
) -> Result<SoftmaxModel, PredictorError> {
    config.validate()?;
    if features.nrows() == 0 {
        return Err(PredictorError::EmptyTrainingSet);
    }
    if features.nrows() != labels.len() {
        return Err(PredictorError::DimensionMismatch {
            expected: features.nrows(),
            got: labels.len(),
        });
    }

    let mut model = SoftmaxModel::zeros(features.ncols(), num_classes);
    let mut velocity_w = Array2::<f64>::zeros((features.ncols(), num_classes));
    let mut velocity_b = Array1::<f64>::zeros(num_classes);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..features.nrows()).collect();

    for (phase_idx, phase) in config.phases.iter().enumerate() {
        for epoch in 0..phase.epochs {
            order.shuffle(&mut rng);
            let mut epoch_loss = 0.0;
            let mut batches = 0usize;
            for (batch_idx, chunk) in order.chunks(config.batch_size).enumerate() {
                let batch = features.select(Axis(0), chunk);
                let batch_labels: Vec<usize> = chunk.iter().map(|&i| labels[i]).collect();
                let (loss, grad_w, grad_b) =
                    model.loss_and_gradients(batch.view(), &batch_labels)?;
                if !loss.is_finite() {
                    return Err(PredictorError::NonFiniteLoss {
                        phase: phase_idx + 1,
                        epoch: epoch + 1,
                        batch: batch_idx + 1,
                    });
                }
                epoch_loss += loss;
                batches += 1;

                let (mu, lr) = (config.momentum, phase.learning_rate);
                velocity_w.zip_mut_with(&grad_w, |v, &g| *v = mu * *v - lr * g);
                velocity_b.zip_mut_with(&grad_b, |v, &g| *v = mu * *v - lr * g);
                let (w, b) = model.parameters_mut();
                ndarray::Zip::from(&mut *w)
                    .and(&velocity_w)
                    .and(&grad_w)
                    .for_each(|w, &v, &g| *w += mu * v - lr * g);
                ndarray::Zip::from(&mut *b)
                    .and(&velocity_b)
                    .and(&grad_b)
                    .for_each(|b, &v, &g| *b += mu * v - lr * g);
            }
            info!(
                "phase {} epoch {}: mean loss {:.6}",
                phase_idx + 1,
                epoch + 1,
                epoch_loss / batches as f64
            );
        }
    }
    Ok(model)
}

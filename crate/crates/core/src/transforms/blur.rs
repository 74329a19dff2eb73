//! Separable Gaussian low-pass filtering for the blur preprocessing variants.

use crate::raster::Raster;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum KernelError {
    #[error("kernel side must be odd and >= 3, got {0}")]
    BadSide(usize),
    #[error("sigma must be positive, got {0}")]
    BadSigma(f64),
}

/// 1-D normalized Gaussian, the separable representation of the 2-D filter.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianKernel {
    sigma: f64,
    weights: Vec<f64>,
}

impl GaussianKernel {
    /// Sample `exp(-(i-c)^2 / (2 sigma^2))` at integer taps and normalize
    /// to unit sum.
    pub fn new(sigma: f64, side: usize) -> Result<Self, KernelError> {
        if side < 3 || side % 2 == 0 {
            return Err(KernelError::BadSide(side));
        }
        if !(sigma > 0.0) {
            return Err(KernelError::BadSigma(sigma));
        }
        let center = (side - 1) as f64 / 2.0;
        let mut weights: Vec<f64> = (0..side)
            .map(|i| {
                let d = i as f64 - center;
                (-d * d / (2.0 * sigma * sigma)).exp()
            })
            .collect();
        let total: f64 = weights.iter().sum();
        for w in &mut weights {
            *w /= total;
        }
        Ok(Self { sigma, weights })
    }

    /// Kernel side for the paper's blur settings: `2*ceil(3*sigma) + 1`.
    pub fn side_for_sigma(sigma: f64) -> usize {
        2 * (3.0 * sigma).ceil() as usize + 1
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn side(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// Separable Gaussian blur: horizontal pass then vertical pass per channel,
/// borders handled by edge replication. Output dimensions equal input.
pub fn blur(image: &Raster, kernel: &GaussianKernel) -> Raster {
    let (h, w, ch) = (image.height(), image.width(), image.channels());
    let radius = (kernel.side() / 2) as i64;
    let weights = kernel.weights();

    let mut horizontal = Raster::zeros(h, w, ch).expect("same dims as input");
    for y in 0..h {
        for x in 0..w {
            for c in 0..ch {
                let mut acc = 0.0f64;
                for (k, &wk) in weights.iter().enumerate() {
                    let sx = (x as i64 + k as i64 - radius).clamp(0, w as i64 - 1) as u32;
                    acc += wk * f64::from(image.get(y, sx, c));
                }
                horizontal.set(y, x, c, acc as f32);
            }
        }
    }

    let mut out = Raster::zeros(h, w, ch).expect("same dims as input");
    for y in 0..h {
        for x in 0..w {
            for c in 0..ch {
                let mut acc = 0.0f64;
                for (k, &wk) in weights.iter().enumerate() {
                    let sy = (y as i64 + k as i64 - radius).clamp(0, h as i64 - 1) as u32;
                    acc += wk * f64::from(horizontal.get(sy, x, c));
                }
                out.set(y, x, c, acc as f32);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn paper_kernel_sides() {
        assert_eq!(GaussianKernel::side_for_sigma(3.0), 19);
        assert_eq!(GaussianKernel::side_for_sigma(5.0), 31);
        assert_eq!(GaussianKernel::side_for_sigma(7.0), 43);
    }

    #[test]
    fn weights_sum_to_one() {
        for (sigma, side) in [(3.0, 19), (5.0, 31), (7.0, 43)] {
            let k = GaussianKernel::new(sigma, side).unwrap();
            let sum: f64 = k.weights().iter().sum();
            assert!((sum - 1.0).abs() < 1e-9, "sigma {sigma}: sum {sum}");
            assert!(k.weights().iter().all(|&w| w > 0.0));
        }
    }

    #[test]
    fn weights_symmetric_about_center() {
        let k = GaussianKernel::new(3.0, 19).unwrap();
        let c = k.side() / 2;
        for offset in 1..=c {
            assert_eq!(k.weights()[c - offset], k.weights()[c + offset]);
        }
    }

    // Frozen from direct evaluation of the formula: w[c] = 1 / sum_i
    // exp(-(i-9)^2/18) for side 19, sigma 3.
    #[test]
    fn center_weight_matches_closed_form() {
        let k = GaussianKernel::new(3.0, 19).unwrap();
        assert!((k.weights()[9] - 0.1331759960155365).abs() < 1e-12);
    }

    #[test]
    fn even_side_rejected() {
        assert_eq!(
            GaussianKernel::new(3.0, 18).unwrap_err(),
            KernelError::BadSide(18)
        );
        assert!(GaussianKernel::new(0.0, 19).is_err());
    }

    #[test]
    fn constant_image_is_fixed_point() {
        let mut img = Raster::zeros(12, 17, 3).unwrap();
        for y in 0..12 {
            for x in 0..17 {
                for c in 0..3 {
                    img.set(y, x, c, 0.37);
                }
            }
        }
        let k = GaussianKernel::new(5.0, 31).unwrap();
        let blurred = blur(&img, &k);
        for v in blurred.data() {
            assert!((v - 0.37).abs() < 1e-6);
        }
    }

    #[test]
    fn centered_impulse_becomes_symmetric_bump() {
        let mut img = Raster::zeros(41, 41, 1).unwrap();
        img.set(20, 20, 0, 1.0);
        let k = GaussianKernel::new(3.0, 19).unwrap();
        let out = blur(&img, &k);
        let peak = out.get(20, 20, 0);
        for y in 0..41 {
            for x in 0..41 {
                assert!(out.get(y, x, 0) <= peak);
            }
        }
        // Far from the border the response is the outer product of the taps.
        assert!((f64::from(out.get(20, 23, 0)) - k.weights()[9] * k.weights()[12]).abs() < 1e-7);
        assert!((f64::from(out.get(18, 20, 0)) - k.weights()[7] * k.weights()[9]).abs() < 1e-7);
    }

    // Oracle: dense 2-D convolution with the outer-product kernel and
    // replicated borders.
    fn dense_blur(image: &Raster, kernel: &GaussianKernel) -> Raster {
        let (h, w, ch) = (image.height(), image.width(), image.channels());
        let r = (kernel.side() / 2) as i64;
        let taps = kernel.weights();
        let mut out = Raster::zeros(h, w, ch).unwrap();
        for y in 0..h {
            for x in 0..w {
                for c in 0..ch {
                    let mut acc = 0.0f64;
                    for (ky, &wy) in taps.iter().enumerate() {
                        for (kx, &wx) in taps.iter().enumerate() {
                            let sy = (y as i64 + ky as i64 - r).clamp(0, h as i64 - 1) as u32;
                            let sx = (x as i64 + kx as i64 - r).clamp(0, w as i64 - 1) as u32;
                            acc += wy * wx * f64::from(image.get(sy, sx, c));
                        }
                    }
                    out.set(y, x, c, acc as f32);
                }
            }
        }
        out
    }

    #[test]
    fn separable_matches_dense_convolution() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let k = GaussianKernel::new(3.0, 19).unwrap();
        for _ in 0..5 {
            let mut img = Raster::zeros(32, 32, 3).unwrap();
            for y in 0..32 {
                for x in 0..32 {
                    for c in 0..3 {
                        img.set(y, x, c, rng.random::<f32>());
                    }
                }
            }
            let sep = blur(&img, &k);
            let dense = dense_blur(&img, &k);
            for (a, b) in sep.data().iter().zip(dense.data()) {
                assert!((a - b).abs() < 1e-6, "{a} vs {b}");
            }
        }
    }
}

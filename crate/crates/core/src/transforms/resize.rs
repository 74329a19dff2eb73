//! Raster resizing with per-channel interpolation policies.
//!
//! Visual channels resize bilinearly; binary mask channels use
//! nearest-neighbor so they stay binary. Both use the half-pixel-center
//! source mapping `src = (dst + 0.5) * scale - 0.5`.

use crate::raster::Raster;

/// How each channel of a raster is interpolated when resized.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelPolicy {
    /// All channels bilinear (photographic content).
    Bilinear,
    /// All channels nearest-neighbor (mask-valued content).
    Nearest,
}

/// The 224x224 network input size used throughout.
pub const TARGET_SIDE: u32 = 224;

pub fn resize_normalize(image: &Raster, target: (u32, u32), policy: ChannelPolicy) -> Raster {
    let resized = match policy {
        ChannelPolicy::Bilinear => resize_bilinear(image, target),
        ChannelPolicy::Nearest => resize_nearest(image, target),
    };
    clamp_unit(resized)
}

fn clamp_unit(mut image: Raster) -> Raster {
    // Bilinear output is a convex combination so this only trims float dust.
    let (h, w, ch) = (image.height(), image.width(), image.channels());
    for y in 0..h {
        for x in 0..w {
            for c in 0..ch {
                image.set(y, x, c, image.get(y, x, c).clamp(0.0, 1.0));
            }
        }
    }
    image
}

pub fn resize_bilinear(image: &Raster, (th, tw): (u32, u32)) -> Raster {
    if th == image.height() && tw == image.width() {
        return image.clone();
    }
    let mut out = Raster::zeros(th, tw, image.channels()).expect("positive target");
    let sy = f64::from(image.height()) / f64::from(th);
    let sx = f64::from(image.width()) / f64::from(tw);
    for y in 0..th {
        let src_y = (f64::from(y) + 0.5) * sy - 0.5;
        let y0 = src_y.floor().clamp(0.0, f64::from(image.height() - 1)) as u32;
        let y1 = (y0 + 1).min(image.height() - 1);
        let fy = (src_y - f64::from(y0)).clamp(0.0, 1.0);
        for x in 0..tw {
            let src_x = (f64::from(x) + 0.5) * sx - 0.5;
            let x0 = src_x.floor().clamp(0.0, f64::from(image.width() - 1)) as u32;
            let x1 = (x0 + 1).min(image.width() - 1);
            let fx = (src_x - f64::from(x0)).clamp(0.0, 1.0);
            for c in 0..image.channels() {
                let top = f64::from(image.get(y0, x0, c)) * (1.0 - fx)
                    + f64::from(image.get(y0, x1, c)) * fx;
                let bottom = f64::from(image.get(y1, x0, c)) * (1.0 - fx)
                    + f64::from(image.get(y1, x1, c)) * fx;
                out.set(y, x, c, (top * (1.0 - fy) + bottom * fy) as f32);
            }
        }
    }
    out
}

pub fn resize_nearest(image: &Raster, (th, tw): (u32, u32)) -> Raster {
    if th == image.height() && tw == image.width() {
        return image.clone();
    }
    let mut out = Raster::zeros(th, tw, image.channels()).expect("positive target");
    let sy = f64::from(image.height()) / f64::from(th);
    let sx = f64::from(image.width()) / f64::from(tw);
    for y in 0..th {
        let src_y = (((f64::from(y) + 0.5) * sy).floor() as u32).min(image.height() - 1);
        for x in 0..tw {
            let src_x = (((f64::from(x) + 0.5) * sx).floor() as u32).min(image.width() - 1);
            for c in 0..image.channels() {
                out.set(y, x, c, image.get(src_y, src_x, c));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_resize_keeps_values() {
        let mut img = Raster::zeros(224, 224, 3).unwrap();
        img.set(100, 50, 1, 0.42);
        let out = resize_normalize(&img, (224, 224), ChannelPolicy::Bilinear);
        assert_eq!(out, img);
    }

    #[test]
    fn all_ones_mask_stays_all_ones() {
        let mut img = Raster::zeros(9, 13, 1).unwrap();
        for y in 0..9 {
            for x in 0..13 {
                img.set(y, x, 0, 1.0);
            }
        }
        for policy in [ChannelPolicy::Nearest, ChannelPolicy::Bilinear] {
            let out = resize_normalize(&img, (224, 224), policy);
            assert!(out.data().iter().all(|&v| v == 1.0), "{policy:?}");
        }
    }

    #[test]
    fn nearest_output_stays_binary() {
        let mut img = Raster::zeros(6, 6, 1).unwrap();
        for y in 0..6 {
            for x in 0..6 {
                img.set(y, x, 0, f32::from(u8::from((x + y) % 2 == 0)));
            }
        }
        let out = resize_normalize(&img, (17, 23), ChannelPolicy::Nearest);
        assert!(out.data().iter().all(|&v| v == 0.0 || v == 1.0));
    }

    // Oracle: evaluate the interpolation formula directly at a handful of
    // output pixels of an 8x8 checkerboard upscaled to 19x19.
    #[test]
    fn checkerboard_upscale_matches_direct_formula() {
        let mut img = Raster::zeros(8, 8, 1).unwrap();
        for y in 0..8 {
            for x in 0..8 {
                img.set(y, x, 0, f32::from(u8::from((x + y) % 2 == 0)));
            }
        }
        let out = resize_bilinear(&img, (19, 19));

        let direct = |dy: u32, dx: u32| -> f64 {
            let scale = 8.0 / 19.0;
            let sy = (f64::from(dy) + 0.5) * scale - 0.5;
            let sx = (f64::from(dx) + 0.5) * scale - 0.5;
            let y0 = sy.floor().clamp(0.0, 7.0);
            let x0 = sx.floor().clamp(0.0, 7.0);
            let y1 = (y0 + 1.0).min(7.0);
            let x1 = (x0 + 1.0).min(7.0);
            let fy = (sy - y0).clamp(0.0, 1.0);
            let fx = (sx - x0).clamp(0.0, 1.0);
            let v = |yy: f64, xx: f64| f64::from(img.get(yy as u32, xx as u32, 0));
            (v(y0, x0) * (1.0 - fx) + v(y0, x1) * fx) * (1.0 - fy)
                + (v(y1, x0) * (1.0 - fx) + v(y1, x1) * fx) * fy
        };

        for (y, x) in [(0, 0), (0, 18), (18, 0), (18, 18), (9, 9), (3, 14)] {
            let expected = direct(y, x);
            let got = f64::from(out.get(y, x, 0));
            assert!((got - expected).abs() < 1e-6, "({y},{x}): {got} vs {expected}");
        }
    }

    #[test]
    fn downscale_values_stay_in_unit_interval() {
        let mut img = Raster::zeros(50, 40, 3).unwrap();
        for y in 0..50 {
            for x in 0..40 {
                for c in 0..3 {
                    img.set(y, x, c, ((y * 40 + x + c as u32) % 256) as f32 / 255.0);
                }
            }
        }
        let out = resize_normalize(&img, (32, 32), ChannelPolicy::Bilinear);
        assert!(out.data().iter().all(|&v| (0.0..=1.0).contains(&v)));
    }
}

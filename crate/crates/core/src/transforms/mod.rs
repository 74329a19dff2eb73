//! The eleven input-image preprocessing methods, plus the resizing,
//! normalization, and blur machinery they share.
//!
//! Every method maps one relationship instance and its source image onto
//! the union-box crop frame and emits a 224x224 raster in [0,1].

mod blur;
mod emit;
mod resize;

pub use blur::{blur, GaussianKernel, KernelError};
pub use emit::{emit_dataset, read_manifest, EmitOutcome, ManifestEntry, MANIFEST_FILE};
pub use resize::{resize_bilinear, resize_nearest, resize_normalize, ChannelPolicy, TARGET_SIDE};

use std::str::FromStr;

use crate::dataset::RelInstance;
use crate::geometry::{BBox, GeometryError, Mask};
use crate::raster::{Raster, RasterError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TransformError {
    #[error("instance {instance_id}: {which} box {bbox} lies outside the {width}x{height} image")]
    BoxOutsideImage {
        instance_id: String,
        which: &'static str,
        bbox: BBox,
        width: u32,
        height: u32,
    },
    #[error("instance {instance_id}: segmentation method needs masks on both objects")]
    MissingMask { instance_id: String },
    #[error("unknown preprocessing method {0:?}")]
    UnknownMethod(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Raster(#[from] RasterError),
    #[error("io error at {path}: {source}")]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("manifest {path} line {line}: {message}")]
    BadManifest {
        path: std::path::PathBuf,
        line: usize,
        message: String,
    },
}

/// The preprocessing method enumeration. Blur variants carry their sigma;
/// kernel side is derived as `2*ceil(3*sigma)+1` (19, 31, 43).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PreprocessMethod {
    Union,
    UnionWb,
    UnionWbSc,
    UnionWbB,
    UnionWbBSc,
    UnionWbAndB,
    Segment,
    SegmentB,
    BlurSigma3,
    BlurSigma5,
    BlurSigma7,
}

impl PreprocessMethod {
    pub const ALL: [PreprocessMethod; 11] = [
        PreprocessMethod::Union,
        PreprocessMethod::UnionWb,
        PreprocessMethod::UnionWbSc,
        PreprocessMethod::UnionWbB,
        PreprocessMethod::UnionWbBSc,
        PreprocessMethod::UnionWbAndB,
        PreprocessMethod::Segment,
        PreprocessMethod::SegmentB,
        PreprocessMethod::BlurSigma3,
        PreprocessMethod::BlurSigma5,
        PreprocessMethod::BlurSigma7,
    ];

    /// Output channel count: the two single-channel variants emit 1.
    pub fn channels(&self) -> usize {
        match self {
            PreprocessMethod::UnionWbSc | PreprocessMethod::UnionWbBSc => 1,
            _ => 3,
        }
    }

    /// Mask-valued outputs resize nearest-neighbor so they stay binary
    /// (or three-level, for the single-channel box encoding).
    pub fn resize_policy(&self) -> ChannelPolicy {
        match self {
            PreprocessMethod::UnionWbB
            | PreprocessMethod::SegmentB
            | PreprocessMethod::UnionWbBSc => ChannelPolicy::Nearest,
            _ => ChannelPolicy::Bilinear,
        }
    }

    pub fn blur_sigma(&self) -> Option<f64> {
        match self {
            PreprocessMethod::BlurSigma3 => Some(3.0),
            PreprocessMethod::BlurSigma5 => Some(5.0),
            PreprocessMethod::BlurSigma7 => Some(7.0),
            _ => None,
        }
    }

    pub fn requires_masks(&self) -> bool {
        matches!(self, PreprocessMethod::Segment | PreprocessMethod::SegmentB)
    }
}

impl std::fmt::Display for PreprocessMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PreprocessMethod::Union => "Union",
            PreprocessMethod::UnionWb => "Union-WB",
            PreprocessMethod::UnionWbSc => "Union-WB-SC",
            PreprocessMethod::UnionWbB => "Union-WB-B",
            PreprocessMethod::UnionWbBSc => "Union-WB-B-SC",
            PreprocessMethod::UnionWbAndB => "Union-WB-and-B",
            PreprocessMethod::Segment => "Segment",
            PreprocessMethod::SegmentB => "Segment-B",
            PreprocessMethod::BlurSigma3 => "Blur-Sigma3",
            PreprocessMethod::BlurSigma5 => "Blur-Sigma5",
            PreprocessMethod::BlurSigma7 => "Blur-Sigma7",
        })
    }
}

impl FromStr for PreprocessMethod {
    type Err = TransformError;

    /// Accepts both the hyphenated names ("Union-WB-B") and the compact
    /// form ("UnionWBB"), case-insensitively.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String = s
            .chars()
            .filter(|c| *c != '-' && *c != '_' && *c != ' ')
            .collect::<String>()
            .to_ascii_lowercase();
        Ok(match key.as_str() {
            "union" => PreprocessMethod::Union,
            "unionwb" => PreprocessMethod::UnionWb,
            "unionwbsc" => PreprocessMethod::UnionWbSc,
            "unionwbb" => PreprocessMethod::UnionWbB,
            "unionwbbsc" => PreprocessMethod::UnionWbBSc,
            "unionwbandb" => PreprocessMethod::UnionWbAndB,
            "segment" => PreprocessMethod::Segment,
            "segmentb" => PreprocessMethod::SegmentB,
            "blursigma3" => PreprocessMethod::BlurSigma3,
            "blursigma5" => PreprocessMethod::BlurSigma5,
            "blursigma7" => PreprocessMethod::BlurSigma7,
            _ => return Err(TransformError::UnknownMethod(s.to_string())),
        })
    }
}

/// Behavior switches for method variants whose wording admits more than
/// one reading.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TransformOptions {
    /// Alternative Union-WB-and-B reading: grayscale Union-WB content on
    /// the red channel plus the two box masks on green/blue, instead of
    /// per-object grayscale content on the green/blue channels.
    pub union_wb_and_b_alt: bool,
}

struct CropFrame {
    union: BBox,
    subject_local: BBox,
    object_local: BBox,
}

fn crop_frame(instance: &RelInstance, image: &Raster) -> Result<CropFrame, TransformError> {
    for (which, bbox) in [("subject", instance.subject.bbox), ("object", instance.object.bbox)] {
        if bbox.xmax > image.width() || bbox.ymax > image.height() {
            return Err(TransformError::BoxOutsideImage {
                instance_id: instance.instance_id.clone(),
                which,
                bbox,
                width: image.width(),
                height: image.height(),
            });
        }
    }
    let union = instance.subject.bbox.union(&instance.object.bbox);
    Ok(CropFrame {
        union,
        subject_local: instance.subject.bbox.to_local(&union)?,
        object_local: instance.object.bbox.to_local(&union)?,
    })
}

fn instance_masks<'a>(
    instance: &'a RelInstance,
) -> Result<(&'a Mask, &'a Mask), TransformError> {
    match (&instance.subject.mask, &instance.object.mask) {
        (Some(s), Some(o)) => Ok((s, o)),
        _ => Err(TransformError::MissingMask {
            instance_id: instance.instance_id.clone(),
        }),
    }
}

/// Apply the per-method content rule in the union-box crop frame,
/// without the final resize. Values stay in [0,1].
pub fn apply_method(
    instance: &RelInstance,
    image: &Raster,
    method: PreprocessMethod,
    options: &TransformOptions,
) -> Result<Raster, TransformError> {
    let frame = crop_frame(instance, image)?;
    let (h, w) = (frame.union.height(), frame.union.width());
    let in_subject = |y, x| frame.subject_local.contains_point(x, y);
    let in_object = |y, x| frame.object_local.contains_point(x, y);

    let out = match method {
        PreprocessMethod::Union => image.crop(&frame.union)?,
        PreprocessMethod::UnionWb => {
            let mut crop = image.crop(&frame.union)?;
            for y in 0..h {
                for x in 0..w {
                    if !in_subject(y, x) && !in_object(y, x) {
                        for c in 0..crop.channels() {
                            crop.set(y, x, c, 0.0);
                        }
                    }
                }
            }
            crop
        }
        PreprocessMethod::UnionWbSc => {
            let wb = apply_method(instance, image, PreprocessMethod::UnionWb, options)?;
            wb.to_luminance()
        }
        PreprocessMethod::UnionWbB => {
            let mut out = Raster::zeros(h, w, 3)?;
            for y in 0..h {
                for x in 0..w {
                    if in_subject(y, x) {
                        out.set(y, x, 1, 1.0);
                    }
                    if in_object(y, x) {
                        out.set(y, x, 2, 1.0);
                    }
                }
            }
            out
        }
        PreprocessMethod::UnionWbBSc => {
            let mut out = Raster::zeros(h, w, 1)?;
            for y in 0..h {
                for x in 0..w {
                    // Subject wins where the boxes overlap.
                    let v = if in_subject(y, x) {
                        1.0
                    } else if in_object(y, x) {
                        0.5
                    } else {
                        0.0
                    };
                    out.set(y, x, 0, v);
                }
            }
            out
        }
        PreprocessMethod::UnionWbAndB => {
            let gray = image.crop(&frame.union)?.to_luminance();
            let mut out = Raster::zeros(h, w, 3)?;
            if options.union_wb_and_b_alt {
                for y in 0..h {
                    for x in 0..w {
                        if in_subject(y, x) || in_object(y, x) {
                            out.set(y, x, 0, gray.get(y, x, 0));
                        }
                        if in_subject(y, x) {
                            out.set(y, x, 1, 1.0);
                        }
                        if in_object(y, x) {
                            out.set(y, x, 2, 1.0);
                        }
                    }
                }
            } else {
                for y in 0..h {
                    for x in 0..w {
                        if in_subject(y, x) {
                            out.set(y, x, 1, gray.get(y, x, 0));
                        }
                        if in_object(y, x) {
                            out.set(y, x, 2, gray.get(y, x, 0));
                        }
                    }
                }
            }
            out
        }
        PreprocessMethod::Segment => {
            let (subject_mask, object_mask) = instance_masks(instance)?;
            let s = subject_mask.crop(&frame.union)?;
            let o = object_mask.crop(&frame.union)?;
            let mut crop = image.crop(&frame.union)?;
            for y in 0..h {
                for x in 0..w {
                    if !s.get(y, x) && !o.get(y, x) {
                        for c in 0..crop.channels() {
                            crop.set(y, x, c, 0.0);
                        }
                    }
                }
            }
            crop
        }
        PreprocessMethod::SegmentB => {
            let (subject_mask, object_mask) = instance_masks(instance)?;
            let s = subject_mask.crop(&frame.union)?;
            let o = object_mask.crop(&frame.union)?;
            let mut out = Raster::zeros(h, w, 3)?;
            for y in 0..h {
                for x in 0..w {
                    if s.get(y, x) {
                        out.set(y, x, 1, 1.0);
                    }
                    if o.get(y, x) {
                        out.set(y, x, 2, 1.0);
                    }
                }
            }
            out
        }
        PreprocessMethod::BlurSigma3
        | PreprocessMethod::BlurSigma5
        | PreprocessMethod::BlurSigma7 => {
            let sigma = method.blur_sigma().expect("blur variant");
            let kernel = GaussianKernel::new(sigma, GaussianKernel::side_for_sigma(sigma))
                .expect("valid paper kernel");
            // Blur the full source image first so the background has no
            // crop-boundary artifacts, then crop both versions.
            let blurred = blur(image, &kernel);
            let raw = image.crop(&frame.union)?;
            let mut out = blurred.crop(&frame.union)?;
            for y in 0..h {
                for x in 0..w {
                    if in_subject(y, x) || in_object(y, x) {
                        for c in 0..out.channels() {
                            out.set(y, x, c, raw.get(y, x, c));
                        }
                    }
                }
            }
            out
        }
    };
    Ok(out)
}

/// Full preprocessing: per-method content rule, then resize to 224x224
/// under the method's channel policy.
pub fn preprocess(
    instance: &RelInstance,
    image: &Raster,
    method: PreprocessMethod,
    options: &TransformOptions,
) -> Result<Raster, TransformError> {
    let raw = apply_method(instance, image, method, options)?;
    Ok(resize_normalize(
        &raw,
        (TARGET_SIDE, TARGET_SIDE),
        method.resize_policy(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{ObjectInstance, RelInstance};
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn test_image(h: u32, w: u32, seed: u64) -> Raster {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut img = Raster::zeros(h, w, 3).unwrap();
        for y in 0..h {
            for x in 0..w {
                for c in 0..3 {
                    img.set(y, x, c, rng.random::<f32>());
                }
            }
        }
        img
    }

    fn test_instance(img_h: u32, img_w: u32, subject: BBox, object: BBox) -> RelInstance {
        RelInstance {
            instance_id: "t#0".into(),
            image_id: "t.png".into(),
            subject: ObjectInstance {
                category_id: 0,
                bbox: subject,
                mask: Some(subject.rasterize(img_h, img_w).unwrap()),
            },
            object: ObjectInstance {
                category_id: 1,
                bbox: object,
                mask: Some(object.rasterize(img_h, img_w).unwrap()),
            },
            predicate_id: 0,
        }
    }

    fn bb(xmin: u32, ymin: u32, xmax: u32, ymax: u32) -> BBox {
        BBox::new(xmin, ymin, xmax, ymax).unwrap()
    }

    #[test]
    fn method_names_round_trip_and_accept_compact_form() {
        for method in PreprocessMethod::ALL {
            assert_eq!(method.to_string().parse::<PreprocessMethod>().unwrap(), method);
        }
        assert_eq!(
            "UnionWBB".parse::<PreprocessMethod>().unwrap(),
            PreprocessMethod::UnionWbB
        );
        assert_eq!(
            "union-wb-and-b".parse::<PreprocessMethod>().unwrap(),
            PreprocessMethod::UnionWbAndB
        );
        assert!("UnionXL".parse::<PreprocessMethod>().is_err());
    }

    #[test]
    fn union_with_full_frame_box_is_plain_resize() {
        let img = test_image(16, 16, 1);
        let inst = test_instance(16, 16, bb(0, 0, 8, 16), bb(4, 0, 16, 16));
        let raw = apply_method(&inst, &img, PreprocessMethod::Union, &Default::default()).unwrap();
        assert_eq!(raw, img);
        let out = preprocess(&inst, &img, PreprocessMethod::Union, &Default::default()).unwrap();
        assert_eq!(
            out,
            resize_normalize(&img, (224, 224), ChannelPolicy::Bilinear)
        );
    }

    #[test]
    fn union_wb_zeroes_background_and_keeps_foreground() {
        let img = test_image(16, 16, 2);
        let inst = test_instance(16, 16, bb(2, 1, 5, 4), bb(8, 6, 12, 10));
        let union = apply_method(&inst, &img, PreprocessMethod::Union, &Default::default()).unwrap();
        let wb = apply_method(&inst, &img, PreprocessMethod::UnionWb, &Default::default()).unwrap();
        let frame = inst.subject.bbox.union(&inst.object.bbox);
        let sl = inst.subject.bbox.to_local(&frame).unwrap();
        let ol = inst.object.bbox.to_local(&frame).unwrap();
        for y in 0..wb.height() {
            for x in 0..wb.width() {
                let fg = sl.contains_point(x, y) || ol.contains_point(x, y);
                for c in 0..3 {
                    if fg {
                        assert_eq!(wb.get(y, x, c), union.get(y, x, c));
                    } else {
                        assert_eq!(wb.get(y, x, c), 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn union_wbb_red_zero_and_popcounts_match_areas() {
        let img = test_image(20, 24, 3);
        let inst = test_instance(20, 24, bb(1, 2, 4, 8), bb(6, 3, 14, 9));
        let out =
            apply_method(&inst, &img, PreprocessMethod::UnionWbB, &Default::default()).unwrap();
        let mut subject_pixels = 0u64;
        let mut object_pixels = 0u64;
        for y in 0..out.height() {
            for x in 0..out.width() {
                assert_eq!(out.get(y, x, 0), 0.0);
                for c in 1..3 {
                    assert!(out.get(y, x, c) == 0.0 || out.get(y, x, c) == 1.0);
                }
                subject_pixels += u64::from(out.get(y, x, 1) == 1.0);
                object_pixels += u64::from(out.get(y, x, 2) == 1.0);
            }
        }
        assert_eq!(subject_pixels, inst.subject.bbox.area());
        assert_eq!(object_pixels, inst.object.bbox.area());

        // The binary structure survives the nearest-neighbor resize.
        let resized = preprocess(&inst, &img, PreprocessMethod::UnionWbB, &Default::default())
            .unwrap();
        assert_eq!(resized.height(), 224);
        assert!(resized
            .data()
            .iter()
            .all(|&v| v == 0.0 || v == 1.0));
    }

    #[test]
    fn union_wbbsc_subject_wins_overlap() {
        let img = test_image(16, 16, 4);
        // Overlapping boxes.
        let inst = test_instance(16, 16, bb(2, 2, 8, 8), bb(5, 5, 12, 12));
        let out =
            apply_method(&inst, &img, PreprocessMethod::UnionWbBSc, &Default::default()).unwrap();
        assert_eq!(out.channels(), 1);
        // (6,6) global is inside both; local frame starts at (2,2).
        assert_eq!(out.get(4, 4, 0), 1.0);
        // Inside object only.
        assert_eq!(out.get(8, 8, 0), 0.5);
        // Background.
        assert_eq!(out.get(0, 9, 0), 0.0);
    }

    #[test]
    fn blur_methods_keep_foreground_verbatim() {
        let img = test_image(32, 32, 5);
        let inst = test_instance(32, 32, bb(4, 4, 10, 12), bb(16, 14, 28, 26));
        let union = apply_method(&inst, &img, PreprocessMethod::Union, &Default::default()).unwrap();
        for method in [
            PreprocessMethod::BlurSigma3,
            PreprocessMethod::BlurSigma5,
            PreprocessMethod::BlurSigma7,
        ] {
            let out = apply_method(&inst, &img, method, &Default::default()).unwrap();
            let frame = inst.subject.bbox.union(&inst.object.bbox);
            let sl = inst.subject.bbox.to_local(&frame).unwrap();
            let ol = inst.object.bbox.to_local(&frame).unwrap();
            let mut background_differs = false;
            for y in 0..out.height() {
                for x in 0..out.width() {
                    let fg = sl.contains_point(x, y) || ol.contains_point(x, y);
                    for c in 0..3 {
                        if fg {
                            assert_eq!(out.get(y, x, c), union.get(y, x, c));
                        } else if out.get(y, x, c) != union.get(y, x, c) {
                            background_differs = true;
                        }
                    }
                }
            }
            assert!(background_differs, "{method}: blur had no effect");
        }
    }

    fn total_variation(img: &Raster) -> f64 {
        let mut tv = 0.0;
        for y in 0..img.height() {
            for x in 0..img.width() {
                for c in 0..img.channels() {
                    if x + 1 < img.width() {
                        tv += f64::from((img.get(y, x + 1, c) - img.get(y, x, c)).abs());
                    }
                    if y + 1 < img.height() {
                        tv += f64::from((img.get(y + 1, x, c) - img.get(y, x, c)).abs());
                    }
                }
            }
        }
        tv
    }

    #[test]
    fn stronger_blur_never_increases_total_variation() {
        let img = test_image(48, 48, 6);
        let tv_orig = total_variation(&img);
        let tv = |sigma: f64| {
            let k = GaussianKernel::new(sigma, GaussianKernel::side_for_sigma(sigma)).unwrap();
            total_variation(&blur(&img, &k))
        };
        let (tv3, tv5, tv7) = (tv(3.0), tv(5.0), tv(7.0));
        assert!(tv7 <= tv5 && tv5 <= tv3 && tv3 <= tv_orig, "{tv7} {tv5} {tv3} {tv_orig}");
    }

    #[test]
    fn segment_methods_require_masks() {
        let img = test_image(16, 16, 7);
        let mut inst = test_instance(16, 16, bb(1, 1, 6, 6), bb(8, 8, 14, 14));
        inst.object.mask = None;
        for method in [PreprocessMethod::Segment, PreprocessMethod::SegmentB] {
            assert!(matches!(
                apply_method(&inst, &img, method, &Default::default()),
                Err(TransformError::MissingMask { .. })
            ));
        }
    }

    #[test]
    fn single_channel_methods_declare_one_channel() {
        let img = test_image(16, 16, 8);
        let inst = test_instance(16, 16, bb(1, 1, 6, 6), bb(8, 8, 14, 14));
        for method in PreprocessMethod::ALL {
            let out = preprocess(&inst, &img, method, &Default::default()).unwrap();
            assert_eq!(out.channels(), method.channels(), "{method}");
            assert_eq!((out.height(), out.width()), (224, 224));
            assert!(out.data().iter().all(|&v| (0.0..=1.0).contains(&v)));
        }
    }

    #[test]
    fn union_wb_and_b_alt_variant_differs() {
        let img = test_image(16, 16, 9);
        let inst = test_instance(16, 16, bb(1, 1, 6, 6), bb(8, 8, 14, 14));
        let main = apply_method(
            &inst,
            &img,
            PreprocessMethod::UnionWbAndB,
            &TransformOptions::default(),
        )
        .unwrap();
        let alt = apply_method(
            &inst,
            &img,
            PreprocessMethod::UnionWbAndB,
            &TransformOptions {
                union_wb_and_b_alt: true,
            },
        )
        .unwrap();
        assert_ne!(main, alt);
        // Main reading: red channel unused.
        let mut red_sum = 0.0;
        for y in 0..main.height() {
            for x in 0..main.width() {
                red_sum += f64::from(main.get(y, x, 0));
            }
        }
        assert_eq!(red_sum, 0.0);
        // Alt reading: green/blue are pure box masks.
        for y in 0..alt.height() {
            for x in 0..alt.width() {
                for c in 1..3 {
                    assert!(alt.get(y, x, c) == 0.0 || alt.get(y, x, c) == 1.0);
                }
            }
        }
    }

    #[test]
    fn box_outside_image_is_error() {
        let img = test_image(10, 10, 10);
        let inst = test_instance(16, 16, bb(1, 1, 6, 6), bb(8, 8, 14, 14));
        assert!(matches!(
            apply_method(&inst, &img, PreprocessMethod::Union, &Default::default()),
            Err(TransformError::BoxOutsideImage { .. })
        ));
    }
}

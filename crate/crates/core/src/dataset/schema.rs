//! Canonical annotation file format.
//!
//! One JSON document per split: a top-level map of image filename to the
//! list of relationship records in that image. Bounding boxes are stored
//! in Stanford-VRD field order `[ymin, ymax, xmin, xmax]` and converted
//! to the internal `(xmin, ymin, xmax, ymax)` exclusive-max convention at
//! parse time. Vocabularies live in sidecar files `objects.txt` and
//! `predicates.txt` next to the annotation file, one name per line, line
//! index = id.
//!
//! Masks are optional and ingested as given: either a polygon (pixel
//! coordinates, rasterized over pixel centers with the even-odd rule) or
//! an uncompressed COCO-style column-major run-length encoding.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use log::warn;
use serde::{Deserialize, Serialize};

use crate::geometry::{BBox, Mask};
use crate::raster::Raster;

use super::{DatasetError, DatasetSplit, ObjectInstance, RelInstance, SplitName};

pub const OBJECT_VOCAB_FILE: &str = "objects.txt";
pub const PREDICATE_VOCAB_FILE: &str = "predicates.txt";

#[derive(Debug, Serialize, Deserialize)]
struct RelationshipRecord {
    predicate: String,
    subject: ObjectRecord,
    object: ObjectRecord,
}

#[derive(Debug, Serialize, Deserialize)]
struct ObjectRecord {
    category: String,
    /// Stanford VRD field order.
    bbox: [i64; 4],
    #[serde(skip_serializing_if = "Option::is_none")]
    mask: Option<MaskRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
enum MaskRecord {
    #[serde(rename = "polygon")]
    Polygon(Vec<[f64; 2]>),
    #[serde(rename = "rle")]
    Rle { size: [u32; 2], counts: Vec<u64> },
}

/// Repair counters accumulated while parsing one annotation file.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct ParseStats {
    /// Boxes nudged back inside the image bounds.
    pub clamped_boxes: usize,
    /// Mask pixels cleared because they fell outside their bounding box.
    pub clipped_mask_pixels: u64,
}

fn read_vocab(path: &Path) -> Result<Vec<String>, DatasetError> {
    let text = fs::read_to_string(path).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(text.lines().map(str::to_owned).collect())
}

fn write_vocab(path: &Path, vocab: &[String]) -> Result<(), DatasetError> {
    let mut text = vocab.join("\n");
    text.push('\n');
    fs::write(path, text).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Load and validate one split.
///
/// Boxes marginally outside the image are clamped and counted; zero-area
/// boxes after clamping, malformed geometry, and unknown vocabulary names
/// are hard errors naming the record. Every referenced image must exist
/// under `image_root`.
pub fn parse_annotations(
    path: &Path,
    image_root: &Path,
    name: SplitName,
) -> Result<(DatasetSplit, ParseStats), DatasetError> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let object_vocab = read_vocab(&dir.join(OBJECT_VOCAB_FILE))?;
    let predicate_vocab = read_vocab(&dir.join(PREDICATE_VOCAB_FILE))?;

    let text = fs::read_to_string(path).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    // BTreeMap gives a deterministic image order regardless of file order.
    let doc: BTreeMap<String, Vec<RelationshipRecord>> =
        serde_json::from_str(&text).map_err(|source| DatasetError::Json {
            path: path.to_path_buf(),
            source,
        })?;

    let mut stats = ParseStats::default();
    let mut instances = Vec::new();
    for (image_id, records) in &doc {
        let image_path = image_root.join(image_id);
        if !image_path.is_file() {
            return Err(DatasetError::MissingImage(image_path));
        }
        let (img_w, img_h) = Raster::peek_dimensions(&image_path)?;
        for (idx, record) in records.iter().enumerate() {
            let record_name = format!("{image_id}#{idx}");
            let predicate_id = lookup(
                &predicate_vocab,
                &record.predicate,
                "predicate",
                path,
                &record_name,
            )?;
            let subject = parse_object(
                &record.subject,
                &object_vocab,
                (img_w, img_h),
                path,
                &record_name,
                &mut stats,
            )?;
            let object = parse_object(
                &record.object,
                &object_vocab,
                (img_w, img_h),
                path,
                &record_name,
                &mut stats,
            )?;
            instances.push(RelInstance {
                instance_id: record_name,
                image_id: image_id.clone(),
                subject,
                object,
                predicate_id,
            });
        }
    }

    let split = DatasetSplit {
        name,
        instances,
        object_vocab,
        predicate_vocab,
    };
    split.validate()?;
    if stats.clamped_boxes > 0 || stats.clipped_mask_pixels > 0 {
        warn!(
            "{}: repaired {} out-of-bounds boxes, clipped {} mask pixels",
            path.display(),
            stats.clamped_boxes,
            stats.clipped_mask_pixels
        );
    }
    Ok((split, stats))
}

fn lookup(
    vocab: &[String],
    name: &str,
    kind: &'static str,
    path: &Path,
    record: &str,
) -> Result<usize, DatasetError> {
    vocab
        .iter()
        .position(|v| v == name)
        .ok_or_else(|| DatasetError::UnknownName {
            path: path.to_path_buf(),
            record: record.to_string(),
            kind,
            name: name.to_string(),
        })
}

fn parse_object(
    record: &ObjectRecord,
    object_vocab: &[String],
    (img_w, img_h): (u32, u32),
    path: &Path,
    record_name: &str,
    stats: &mut ParseStats,
) -> Result<ObjectInstance, DatasetError> {
    let category_id = lookup(object_vocab, &record.category, "category", path, record_name)?;
    let [ymin, ymax, xmin, xmax] = record.bbox;
    let malformed = |message: String| DatasetError::MalformedRecord {
        path: path.to_path_buf(),
        record: record_name.to_string(),
        message,
    };
    if xmax <= xmin || ymax <= ymin {
        return Err(malformed(format!(
            "bbox [ymin={ymin}, ymax={ymax}, xmin={xmin}, xmax={xmax}] has max <= min"
        )));
    }

    let cx_min = xmin.clamp(0, i64::from(img_w)) as u32;
    let cy_min = ymin.clamp(0, i64::from(img_h)) as u32;
    let cx_max = xmax.clamp(0, i64::from(img_w)) as u32;
    let cy_max = ymax.clamp(0, i64::from(img_h)) as u32;
    if (cx_min, cy_min, cx_max, cy_max) != (xmin as u32, ymin as u32, xmax as u32, ymax as u32)
        || xmin < 0
        || ymin < 0
    {
        stats.clamped_boxes += 1;
    }
    let bbox = BBox::new(cx_min, cy_min, cx_max, cy_max).map_err(|_| {
        malformed(format!(
            "bbox [ymin={ymin}, ymax={ymax}, xmin={xmin}, xmax={xmax}] is empty after clamping to {img_w}x{img_h}"
        ))
    })?;

    let mask = match &record.mask {
        None => None,
        Some(m) => {
            let mut mask = rasterize_mask(m, (img_w, img_h)).map_err(malformed)?;
            stats.clipped_mask_pixels += mask.clip_to(&bbox);
            Some(mask)
        }
    };
    Ok(ObjectInstance {
        category_id,
        bbox,
        mask,
    })
}

fn rasterize_mask(record: &MaskRecord, (img_w, img_h): (u32, u32)) -> Result<Mask, String> {
    match record {
        MaskRecord::Polygon(points) => {
            if points.len() < 3 {
                return Err(format!("polygon needs >= 3 points, got {}", points.len()));
            }
            Ok(rasterize_polygon(points, img_h, img_w))
        }
        MaskRecord::Rle { size, counts } => {
            let [h, w] = *size;
            if h != img_h || w != img_w {
                return Err(format!(
                    "rle size {h}x{w} does not match image {img_h}x{img_w}"
                ));
            }
            let total: u64 = counts.iter().sum();
            if total != u64::from(h) * u64::from(w) {
                return Err(format!(
                    "rle counts sum to {total}, expected {}",
                    u64::from(h) * u64::from(w)
                ));
            }
            let mut mask = Mask::zeros(h, w);
            // COCO convention: column-major, starting with a run of zeros.
            let mut pos = 0u64;
            for (i, &run) in counts.iter().enumerate() {
                if i % 2 == 1 {
                    for p in pos..pos + run {
                        let x = (p / u64::from(h)) as u32;
                        let y = (p % u64::from(h)) as u32;
                        mask.set(y, x, true);
                    }
                }
                pos += run;
            }
            Ok(mask)
        }
    }
}

/// Even-odd point-in-polygon test over pixel centers.
fn rasterize_polygon(points: &[[f64; 2]], height: u32, width: u32) -> Mask {
    let mut mask = Mask::zeros(height, width);
    for y in 0..height {
        let py = f64::from(y) + 0.5;
        for x in 0..width {
            let px = f64::from(x) + 0.5;
            let mut inside = false;
            let mut j = points.len() - 1;
            for i in 0..points.len() {
                let [xi, yi] = points[i];
                let [xj, yj] = points[j];
                if (yi > py) != (yj > py) && px < (xj - xi) * (py - yi) / (yj - yi) + xi {
                    inside = !inside;
                }
                j = i;
            }
            mask.set(y, x, inside);
        }
    }
    mask
}

/// Write a split back out in the canonical format (annotations JSON plus
/// vocabulary sidecars). Masks serialize as column-major RLE.
pub fn serialize_annotations(split: &DatasetSplit, dir: &Path) -> Result<PathBuf, DatasetError> {
    fs::create_dir_all(dir).map_err(|source| DatasetError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut doc: BTreeMap<String, Vec<RelationshipRecord>> = BTreeMap::new();
    for inst in &split.instances {
        doc.entry(inst.image_id.clone())
            .or_default()
            .push(RelationshipRecord {
                predicate: split.predicate_vocab[inst.predicate_id].clone(),
                subject: serialize_object(&inst.subject, &split.object_vocab),
                object: serialize_object(&inst.object, &split.object_vocab),
            });
    }
    let path = dir.join("annotations.json");
    let text = serde_json::to_string_pretty(&doc).expect("schema types serialize");
    fs::write(&path, text).map_err(|source| DatasetError::Io {
        path: path.clone(),
        source,
    })?;
    write_vocab(&dir.join(OBJECT_VOCAB_FILE), &split.object_vocab)?;
    write_vocab(&dir.join(PREDICATE_VOCAB_FILE), &split.predicate_vocab)?;
    Ok(path)
}

fn serialize_object(obj: &ObjectInstance, vocab: &[String]) -> ObjectRecord {
    ObjectRecord {
        category: vocab[obj.category_id].clone(),
        bbox: [
            i64::from(obj.bbox.ymin),
            i64::from(obj.bbox.ymax),
            i64::from(obj.bbox.xmin),
            i64::from(obj.bbox.xmax),
        ],
        mask: obj.mask.as_ref().map(mask_to_rle),
    }
}

fn mask_to_rle(mask: &Mask) -> MaskRecord {
    let (h, w) = (mask.height(), mask.width());
    let mut counts = Vec::new();
    let mut current = false;
    let mut run = 0u64;
    for x in 0..w {
        for y in 0..h {
            let v = mask.get(y, x);
            if v == current {
                run += 1;
            } else {
                counts.push(run);
                current = v;
                run = 1;
            }
        }
    }
    counts.push(run);
    MaskRecord::Rle {
        size: [h, w],
        counts,
    }
}

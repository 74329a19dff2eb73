//! Materialize a preprocessed dataset on disk: one PNG per instance plus
//! a CSV manifest.

use std::fs;
use std::path::{Path, PathBuf};

use log::warn;

use crate::dataset::DatasetSplit;
use crate::raster::Raster;

use super::{preprocess, PreprocessMethod, TransformError, TransformOptions};

pub const MANIFEST_FILE: &str = "manifest.csv";
const MANIFEST_HEADER: &str = "instance_id,predicate_id,method,relative_path";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub instance_id: String,
    pub predicate_id: usize,
    pub method: PreprocessMethod,
    pub relative_path: String,
}

#[derive(Debug)]
pub struct EmitOutcome {
    pub entries: Vec<ManifestEntry>,
    /// Instances skipped because a segmentation method found no masks.
    pub skipped_missing_mask: usize,
    pub manifest_path: PathBuf,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> TransformError + '_ {
    move |source| TransformError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// File-system-safe stand-in for an instance id.
fn file_stem(instance_id: &str) -> String {
    instance_id
        .chars()
        .map(|c| if c == '/' || c == '\\' || c == ':' { '_' } else { c })
        .collect()
}

/// Preprocess every instance of `split` with `method` and write the
/// results under `out_dir`: `<instance>.png` files plus `manifest.csv`
/// in split order. Re-running overwrites byte-identically.
///
/// Source images are loaded from `image_root/<image_id>`. Instances
/// without masks are skipped (with a logged count) when the method needs
/// segmentations.
pub fn emit_dataset(
    split: &DatasetSplit,
    method: PreprocessMethod,
    image_root: &Path,
    out_dir: &Path,
    options: &TransformOptions,
) -> Result<EmitOutcome, TransformError> {
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;

    let mut entries = Vec::with_capacity(split.len());
    let mut skipped = 0usize;
    let mut cached: Option<(String, Raster)> = None;
    for instance in &split.instances {
        if method.requires_masks()
            && (instance.subject.mask.is_none() || instance.object.mask.is_none())
        {
            warn!("{}: no masks, skipped for {method}", instance.instance_id);
            skipped += 1;
            continue;
        }
        for field in [&instance.instance_id, &instance.image_id] {
            if field.contains(',') || field.contains('"') || field.contains('\n') {
                return Err(TransformError::BadManifest {
                    path: out_dir.join(MANIFEST_FILE),
                    line: entries.len() + 1,
                    message: format!("id {field:?} contains CSV delimiter characters"),
                });
            }
        }

        let image = match &cached {
            Some((id, img)) if *id == instance.image_id => img.clone(),
            _ => {
                let img = Raster::open(&image_root.join(&instance.image_id))?;
                cached = Some((instance.image_id.clone(), img.clone()));
                img
            }
        };
        let raster = preprocess(instance, &image, method, options)?;
        let relative_path = format!("{}.png", file_stem(&instance.instance_id));
        raster.save_png(&out_dir.join(&relative_path))?;
        entries.push(ManifestEntry {
            instance_id: instance.instance_id.clone(),
            predicate_id: instance.predicate_id,
            method,
            relative_path,
        });
    }
    if skipped > 0 {
        warn!("{method}: skipped {skipped} instances lacking masks");
    }

    let manifest_path = out_dir.join(MANIFEST_FILE);
    let mut text = String::from(MANIFEST_HEADER);
    text.push('\n');
    for e in &entries {
        text.push_str(&format!(
            "{},{},{},{}\n",
            e.instance_id, e.predicate_id, e.method, e.relative_path
        ));
    }
    fs::write(&manifest_path, text).map_err(io_err(&manifest_path))?;

    Ok(EmitOutcome {
        entries,
        skipped_missing_mask: skipped,
        manifest_path,
    })
}

/// Read back a manifest written by [`emit_dataset`].
pub fn read_manifest(path: &Path) -> Result<Vec<ManifestEntry>, TransformError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header == MANIFEST_HEADER => {}
        other => {
            return Err(TransformError::BadManifest {
                path: path.to_path_buf(),
                line: 1,
                message: format!(
                    "expected header {MANIFEST_HEADER:?}, got {:?}",
                    other.map(|(_, l)| l).unwrap_or_default()
                ),
            })
        }
    }
    let mut entries = Vec::new();
    for (idx, line) in lines {
        if line.is_empty() {
            continue;
        }
        let bad = |message: String| TransformError::BadManifest {
            path: path.to_path_buf(),
            line: idx + 1,
            message,
        };
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(bad(format!("expected 4 fields, got {}", fields.len())));
        }
        entries.push(ManifestEntry {
            instance_id: fields[0].to_string(),
            predicate_id: fields[1]
                .parse()
                .map_err(|e| bad(format!("bad predicate id {:?}: {e}", fields[1])))?,
            method: fields[2]
                .parse()
                .map_err(|_| bad(format!("bad method {:?}", fields[2])))?,
            relative_path: fields[3].to_string(),
        });
    }
    Ok(entries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{generate_synthetic, write_synthetic_dataset, SplitName, SyntheticConfig};

    fn emitted_setup(method: PreprocessMethod) -> (tempfile::TempDir, EmitOutcome, DatasetSplit) {
        let dir = tempfile::tempdir().unwrap();
        let config = SyntheticConfig {
            n: 3,
            seed: 21,
            image_size: 48,
        };
        let (split, images) = generate_synthetic(&config, SplitName::Train).unwrap();
        write_synthetic_dataset(&split, &images, dir.path()).unwrap();
        let outcome = emit_dataset(
            &split,
            method,
            &dir.path().join("images"),
            &dir.path().join("emitted"),
            &TransformOptions::default(),
        )
        .unwrap();
        (dir, outcome, split)
    }

    #[test]
    fn three_instances_produce_three_files_and_rows() {
        let (dir, outcome, _) = emitted_setup(PreprocessMethod::UnionWbB);
        assert_eq!(outcome.entries.len(), 3);
        assert_eq!(outcome.skipped_missing_mask, 0);
        for e in &outcome.entries {
            assert!(dir.path().join("emitted").join(&e.relative_path).is_file());
        }
        let parsed = read_manifest(&outcome.manifest_path).unwrap();
        assert_eq!(parsed, outcome.entries);
    }

    #[test]
    fn rerun_is_byte_identical() {
        let (dir, first, split) = emitted_setup(PreprocessMethod::Union);
        let manifest_before = fs::read(&first.manifest_path).unwrap();
        let png_before = fs::read(
            dir.path()
                .join("emitted")
                .join(&first.entries[0].relative_path),
        )
        .unwrap();
        let second = emit_dataset(
            &split,
            PreprocessMethod::Union,
            &dir.path().join("images"),
            &dir.path().join("emitted"),
            &TransformOptions::default(),
        )
        .unwrap();
        assert_eq!(fs::read(&second.manifest_path).unwrap(), manifest_before);
        assert_eq!(
            fs::read(
                dir.path()
                    .join("emitted")
                    .join(&second.entries[0].relative_path)
            )
            .unwrap(),
            png_before
        );
    }

    #[test]
    fn emitted_png_round_trips_within_one_quantization_level() {
        let (dir, outcome, split) = emitted_setup(PreprocessMethod::BlurSigma3);
        let image_root = dir.path().join("images");
        for (entry, instance) in outcome.entries.iter().zip(&split.instances) {
            let source = Raster::open(&image_root.join(&instance.image_id)).unwrap();
            let expected = preprocess(
                instance,
                &source,
                PreprocessMethod::BlurSigma3,
                &TransformOptions::default(),
            )
            .unwrap();
            let reloaded =
                Raster::open(&dir.path().join("emitted").join(&entry.relative_path)).unwrap();
            assert_eq!(reloaded.channels(), expected.channels());
            for (a, b) in reloaded.data().iter().zip(expected.data()) {
                assert!((a - b).abs() <= 1.0 / 255.0 + 1e-6);
            }
        }
    }

    #[test]
    fn instances_without_masks_are_skipped_for_segment_methods() {
        let dir = tempfile::tempdir().unwrap();
        let config = SyntheticConfig {
            n: 3,
            seed: 22,
            image_size: 48,
        };
        let (mut split, images) = generate_synthetic(&config, SplitName::Train).unwrap();
        split.instances[1].subject.mask = None;
        write_synthetic_dataset(&split, &images, dir.path()).unwrap();
        let outcome = emit_dataset(
            &split,
            PreprocessMethod::SegmentB,
            &dir.path().join("images"),
            &dir.path().join("emitted"),
            &TransformOptions::default(),
        )
        .unwrap();
        assert_eq!(outcome.entries.len(), 2);
        assert_eq!(outcome.skipped_missing_mask, 1);
    }
}

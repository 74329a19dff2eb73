use relprep_core::dataset::parse_annotations;
use relprep_core::transforms::{emit_dataset, TransformOptions};

use crate::manifest::ManifestBuilder;
use crate::PreprocessArgs;

use super::{parse_method, parse_split, required, require_file, CliError, CmdResult, Workspace};

pub fn run(ws: &Workspace, args: PreprocessArgs) -> CmdResult {
    let mut manifest = ManifestBuilder::new("preprocess");
    let method = parse_method(&required(args.method, &ws.config, "method")?)?;
    let split_name = args
        .split
        .clone()
        .or_else(|| ws.config.get("split").map(str::to_string))
        .unwrap_or_else(|| "train".to_string());
    let split = parse_split(&split_name)?;

    // Explicit annotation/image paths bypass the workspace layout.
    let (dataset, images_root) = match (&args.annotations, &args.images) {
        (Some(annotations), Some(images)) => {
            require_file(annotations)?;
            let (dataset, _) = parse_annotations(annotations, images, split)?;
            manifest.input(annotations.clone());
            (dataset, images.clone())
        }
        (None, None) => {
            let loaded = ws.load_split(split)?;
            manifest.input(ws.dataset_dir(split));
            loaded
        }
        _ => {
            return Err(CliError::usage(
                "--annotations and --images must be given together",
            ))
        }
    };

    let options = TransformOptions {
        union_wb_and_b_alt: args.union_wb_and_b_alt,
    };
    let out_dir = ws.emit_dir(split, method);
    let outcome = emit_dataset(&dataset, method, &images_root, &out_dir, &options)?;
    log::info!(
        "preprocess: {method} over {split}: {} images, {} skipped",
        outcome.entries.len(),
        outcome.skipped_missing_mask
    );

    manifest
        .setting("method", method)
        .setting("split", split)
        .setting("union-wb-and-b-alt", args.union_wb_and_b_alt)
        .input(images_root)
        .output(out_dir);
    manifest.write(&ws.root).map_err(|e| CliError::Runtime(format!("{e:#}")))?;
    Ok(())
}

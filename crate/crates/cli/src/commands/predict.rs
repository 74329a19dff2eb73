use std::fs;

use relprep_core::evaluation::ScoreMatrix;
use relprep_core::predictor::{extract_features, SoftmaxModel};
use relprep_core::transforms::{read_manifest, MANIFEST_FILE};

use crate::manifest::ManifestBuilder;
use crate::PredictArgs;

use super::{parse_method, parse_split, required, require_file, CliError, CmdResult, Workspace};

pub fn run(ws: &Workspace, args: PredictArgs) -> CmdResult {
    let mut manifest = ManifestBuilder::new("predict");
    let method = parse_method(&required(args.method, &ws.config, "method")?)?;
    let split = parse_split(
        &args
            .split
            .or_else(|| ws.config.get("split").map(str::to_string))
            .unwrap_or_else(|| "test".to_string()),
    )?;

    let model_path = args.model.unwrap_or_else(|| ws.model_path(method));
    require_file(&model_path)?;
    let model = SoftmaxModel::load(&model_path)?;

    let emit_dir = ws.emit_dir(split, method);
    let manifest_path = emit_dir.join(MANIFEST_FILE);
    require_file(&manifest_path)?;
    let entries = read_manifest(&manifest_path)?;
    let (dataset, _) = ws.load_split(split)?;
    if model.num_classes() != dataset.predicate_vocab.len() {
        return Err(CliError::Runtime(format!(
            "model predicts {} classes but split {split} has {} predicates",
            model.num_classes(),
            dataset.predicate_vocab.len()
        )));
    }

    let features = extract_features(&emit_dir, &entries)?;
    let probabilities = model.forward(features.features.view())?;
    let rows: Vec<Vec<f64>> = probabilities.rows().into_iter().map(|r| r.to_vec()).collect();
    let scores = ScoreMatrix::new(features.instance_ids, rows)?;

    let scores_path = args.scores.unwrap_or_else(|| ws.scores_path(method, split));
    if let Some(parent) = scores_path.parent() {
        fs::create_dir_all(parent).map_err(|e| CliError::Runtime(e.to_string()))?;
    }
    scores.write_csv(&scores_path)?;
    log::info!(
        "predict: wrote {} score rows to {}",
        scores.len(),
        scores_path.display()
    );

    manifest
        .setting("method", method)
        .setting("split", split)
        .setting("model", model_path.display())
        .input(model_path)
        .input(emit_dir)
        .output(scores_path);
    manifest.write(&ws.root).map_err(|e| CliError::Runtime(format!("{e:#}")))?;
    Ok(())
}

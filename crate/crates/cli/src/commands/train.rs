use std::fs;

use relprep_core::predictor::{extract_features, train, Phase, TrainConfig};
use relprep_core::transforms::{read_manifest, MANIFEST_FILE};

use crate::manifest::ManifestBuilder;
use crate::TrainArgs;

use super::{parse_method, parse_split, required, require_file, CliError, CmdResult, Workspace};

fn parse_phases(raw: &str) -> Result<Vec<Phase>, CliError> {
    raw.split(',')
        .map(|entry| {
            let (lr, epochs) = entry.split_once(['x', 'X']).ok_or_else(|| {
                CliError::usage(format!("phase {entry:?}: expected <lr>x<epochs>"))
            })?;
            Ok(Phase {
                learning_rate: lr
                    .trim()
                    .parse()
                    .map_err(|e| CliError::usage(format!("phase {entry:?}: {e}")))?,
                epochs: epochs
                    .trim()
                    .parse()
                    .map_err(|e| CliError::usage(format!("phase {entry:?}: {e}")))?,
            })
        })
        .collect()
}

pub fn run(ws: &Workspace, args: TrainArgs) -> CmdResult {
    let mut manifest = ManifestBuilder::new("train");
    let method = parse_method(&required(args.method, &ws.config, "method")?)?;
    let split = parse_split(
        &args
            .split
            .or_else(|| ws.config.get("train-split").map(str::to_string))
            .unwrap_or_else(|| "train".to_string()),
    )?;
    let usage = |e: anyhow::Error| CliError::usage(e.to_string());
    let mut config = TrainConfig {
        batch_size: ws.config.resolve(args.batch_size, "batch-size", 10).map_err(usage)?,
        momentum: ws.config.resolve(args.momentum, "momentum", 0.9).map_err(usage)?,
        seed: ws.config.resolve(args.seed, "seed", 0).map_err(usage)?,
        ..TrainConfig::default()
    };
    if let Some(raw) = args
        .phases
        .as_deref()
        .or_else(|| ws.config.get("phases"))
    {
        config.phases = parse_phases(raw)?;
    }
    config.validate().map_err(|e| CliError::usage(e.to_string()))?;

    let emit_dir = ws.emit_dir(split, method);
    let manifest_path = emit_dir.join(MANIFEST_FILE);
    require_file(&manifest_path)?;
    let entries = read_manifest(&manifest_path)?;
    let (dataset, _) = ws.load_split(split)?;

    let features = extract_features(&emit_dir, &entries)?;
    let model = train(
        &config,
        &features.features,
        &features.labels,
        dataset.predicate_vocab.len(),
    )?;

    let model_path = args.model.unwrap_or_else(|| ws.model_path(method));
    if let Some(parent) = model_path.parent() {
        fs::create_dir_all(parent).map_err(|e| CliError::Runtime(e.to_string()))?;
    }
    model.save(&model_path)?;
    log::info!("train: saved checkpoint to {}", model_path.display());

    let phases_text = config
        .phases
        .iter()
        .map(|p| format!("{}x{}", p.learning_rate, p.epochs))
        .collect::<Vec<_>>()
        .join(",");
    manifest
        .setting("method", method)
        .setting("split", split)
        .setting("batch-size", config.batch_size)
        .setting("momentum", config.momentum)
        .setting("phases", phases_text)
        .seed(config.seed)
        .input(emit_dir)
        .output(model_path);
    manifest.write(&ws.root).map_err(|e| CliError::Runtime(format!("{e:#}")))?;
    Ok(())
}

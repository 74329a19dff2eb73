use std::collections::BTreeMap;
use std::fs;

use relprep_core::evaluation::{per_predicate_recall, recall_at_k, ScoreMatrix};
use relprep_core::report::MethodEvaluation;

use crate::manifest::ManifestBuilder;
use crate::EvaluateArgs;

use super::{parse_method, parse_split, required, require_file, CliError, CmdResult, Workspace};

fn parse_ks(raw: &str) -> Result<Vec<usize>, CliError> {
    let mut ks: Vec<usize> = raw
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<usize>()
                .map_err(|e| CliError::usage(format!("bad k {s:?}: {e}")))
        })
        .collect::<Result<_, _>>()?;
    ks.sort_unstable();
    ks.dedup();
    if ks.is_empty() {
        return Err(CliError::usage("--k needs at least one cutoff"));
    }
    Ok(ks)
}

pub fn run(ws: &Workspace, args: EvaluateArgs) -> CmdResult {
    let mut manifest = ManifestBuilder::new("evaluate");
    let method = parse_method(&required(args.method, &ws.config, "method")?)?;
    let split_name = parse_split(
        &args
            .split
            .or_else(|| ws.config.get("split").map(str::to_string))
            .unwrap_or_else(|| "test".to_string()),
    )?;
    let ks = parse_ks(
        args.k
            .as_deref()
            .or_else(|| ws.config.get("k"))
            .unwrap_or("1"),
    )?;
    let architecture = args
        .architecture
        .or_else(|| ws.config.get("architecture").map(str::to_string))
        .unwrap_or_else(|| "softmax32".to_string());

    let scores_path = args
        .scores
        .unwrap_or_else(|| ws.scores_path(method, split_name));
    require_file(&scores_path)?;
    let scores = ScoreMatrix::read_csv(&scores_path)?;
    let (split, _) = ws.load_split(split_name)?;
    if let Some(&bad) = ks.iter().find(|&&k| k < 1 || k > scores.num_predicates()) {
        return Err(CliError::usage(format!(
            "k={bad} outside 1..={}",
            scores.num_predicates()
        )));
    }

    let mut recall_at = BTreeMap::new();
    for &k in &ks {
        recall_at.insert(k, 100.0 * recall_at_k(&scores, &split, k)?);
    }
    let per_predicate: BTreeMap<String, (f64, usize)> = per_predicate_recall(&scores, &split, 1)?
        .into_iter()
        .map(|(id, r)| {
            (
                split.predicate_vocab[id].clone(),
                (100.0 * r.recall, r.support),
            )
        })
        .collect();

    let evaluation = MethodEvaluation {
        architecture,
        method: method.to_string(),
        split: split_name.to_string(),
        recall_at,
        per_predicate,
    };
    fs::create_dir_all(ws.reports_dir()).map_err(|e| CliError::Runtime(e.to_string()))?;
    let out_path = ws.eval_csv_path(method, split_name);
    relprep_core::report::write_evaluation_csv(&evaluation, &out_path)?;

    for (&k, &recall) in &evaluation.recall_at {
        println!("{method} {split_name} R@{k}: {recall:.2}");
    }
    log::info!("evaluate: wrote {}", out_path.display());

    manifest
        .setting("method", method)
        .setting("split", split_name)
        .setting(
            "k",
            ks.iter().map(ToString::to_string).collect::<Vec<_>>().join(","),
        )
        .input(scores_path)
        .output(out_path);
    manifest.write(&ws.root).map_err(|e| CliError::Runtime(format!("{e:#}")))?;
    Ok(())
}

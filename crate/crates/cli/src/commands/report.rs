use std::fs;
use std::path::PathBuf;

use relprep_core::evaluation::{aggregate_error_tags, read_error_tags};
use relprep_core::report::{
    read_evaluation_csv, render_error_taxonomy, render_method_ranking,
    render_per_predicate_matrix, render_recall_grid, MethodEvaluation,
};

use crate::manifest::ManifestBuilder;
use crate::ReportArgs;

use super::{require_file, CliError, CmdResult, Workspace};

/// Default input: every eval-*.csv under reports/, sorted for
/// deterministic join order.
fn discover_evals(ws: &Workspace) -> Result<Vec<PathBuf>, CliError> {
    let dir = ws.reports_dir();
    let mut found = Vec::new();
    if dir.is_dir() {
        for entry in fs::read_dir(&dir).map_err(|e| CliError::Runtime(e.to_string()))? {
            let path = entry.map_err(|e| CliError::Runtime(e.to_string()))?.path();
            let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("");
            if name.starts_with("eval-") && name.ends_with(".csv") {
                found.push(path);
            }
        }
    }
    found.sort();
    Ok(found)
}

pub fn run(ws: &Workspace, args: ReportArgs) -> CmdResult {
    let mut manifest = ManifestBuilder::new("report");
    let eval_paths = if args.evals.is_empty() {
        discover_evals(ws)?
    } else {
        args.evals.clone()
    };
    if eval_paths.is_empty() && args.error_tags.is_none() {
        return Err(CliError::usage(
            "nothing to report: no evaluation CSVs found and no --error-tags",
        ));
    }

    fs::create_dir_all(ws.reports_dir()).map_err(|e| CliError::Runtime(e.to_string()))?;
    let mut outputs = Vec::new();

    if !eval_paths.is_empty() {
        let mut evals: Vec<MethodEvaluation> = Vec::with_capacity(eval_paths.len());
        for path in &eval_paths {
            require_file(path)?;
            evals.push(read_evaluation_csv(path)?);
            manifest.input(path.clone());
        }

        let ranking = render_method_ranking(&evals)?;
        print!("{ranking}");
        let ranking_path = ws.reports_dir().join("report_methods.txt");
        fs::write(&ranking_path, &ranking).map_err(|e| CliError::Runtime(e.to_string()))?;
        outputs.push(ranking_path);

        let grid_path = ws.reports_dir().join("report_recall_grid.txt");
        fs::write(&grid_path, render_recall_grid(&evals)?)
            .map_err(|e| CliError::Runtime(e.to_string()))?;
        outputs.push(grid_path);

        if evals.iter().any(|e| !e.per_predicate.is_empty()) {
            let matrix_path = ws.reports_dir().join("report_per_predicate.txt");
            fs::write(&matrix_path, render_per_predicate_matrix(&evals)?)
                .map_err(|e| CliError::Runtime(e.to_string()))?;
            outputs.push(matrix_path);
        }
    }

    if let Some(tags_path) = &args.error_tags {
        require_file(tags_path)?;
        let tags = read_error_tags(tags_path)?;
        let percentages = aggregate_error_tags(&tags)?;
        let table = render_error_taxonomy(&percentages);
        print!("{table}");
        let errors_path = ws.reports_dir().join("report_errors.txt");
        fs::write(&errors_path, table).map_err(|e| CliError::Runtime(e.to_string()))?;
        outputs.push(errors_path);
        manifest.input(tags_path.clone());
    }

    manifest.setting(
        "evals",
        eval_paths
            .iter()
            .map(|p| p.display().to_string())
            .collect::<Vec<_>>()
            .join(","),
    );
    if let Some(tags) = &args.error_tags {
        manifest.setting("error-tags", tags.display());
    }
    for output in outputs {
        manifest.output(output);
    }
    manifest.write(&ws.root).map_err(|e| CliError::Runtime(format!("{e:#}")))?;
    Ok(())
}

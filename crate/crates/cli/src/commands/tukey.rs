use std::fs;

use relprep_core::stats::{read_run_groups, render_grouping_table, result_csv, tukey_hsd};

use crate::manifest::ManifestBuilder;
use crate::TukeyArgs;

use super::{require_file, CliError, CmdResult, Workspace};

pub fn run(ws: &Workspace, args: TukeyArgs) -> CmdResult {
    let mut manifest = ManifestBuilder::new("tukey");
    let runs_path = args
        .runs
        .or_else(|| ws.config.get("runs").map(Into::into))
        .ok_or_else(|| CliError::usage("--runs is required"))?;
    require_file(&runs_path)?;
    let alpha = ws
        .config
        .resolve(args.alpha, "alpha", 0.05)
        .map_err(|e| CliError::usage(e.to_string()))?;
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(CliError::usage(format!("alpha must be in (0,1), got {alpha}")));
    }

    let groups = read_run_groups(&runs_path)?;
    let result = tukey_hsd(&groups, alpha)?;
    let table = render_grouping_table(&result);
    print!("{table}");

    fs::create_dir_all(ws.reports_dir()).map_err(|e| CliError::Runtime(e.to_string()))?;
    let csv_path = ws.reports_dir().join("tukey.csv");
    let table_path = ws.reports_dir().join("tukey.txt");
    fs::write(&csv_path, result_csv(&result)).map_err(|e| CliError::Runtime(e.to_string()))?;
    fs::write(&table_path, table).map_err(|e| CliError::Runtime(e.to_string()))?;
    log::info!(
        "tukey: q({alpha}, {}, {}) = {:.4}",
        result.groups.len(),
        result.df_within,
        result.q_critical
    );

    manifest
        .setting("alpha", alpha)
        .setting("runs", runs_path.display())
        .input(runs_path)
        .output(csv_path)
        .output(table_path);
    manifest.write(&ws.root).map_err(|e| CliError::Runtime(format!("{e:#}")))?;
    Ok(())
}

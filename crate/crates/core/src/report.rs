//! Joining per-method evaluation results into the published table shapes:
//! a ranked method summary, a Recall@k grid, a per-predicate matrix with
//! row/column maxima marked, and the error-taxonomy percentages.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::evaluation::ErrorCategory;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("{path} line {line}: {message}")]
    BadFile {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("no evaluations to report")]
    Empty,
    #[error("io error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Everything `evaluate` measured for one (architecture, method, split).
#[derive(Debug, Clone, PartialEq)]
pub struct MethodEvaluation {
    pub architecture: String,
    pub method: String,
    pub split: String,
    /// k -> Recall@k in percent.
    pub recall_at: BTreeMap<usize, f64>,
    /// predicate name -> (Recall@1 in percent, support).
    pub per_predicate: BTreeMap<String, (f64, usize)>,
}

impl MethodEvaluation {
    pub fn recall1(&self) -> Option<f64> {
        self.recall_at.get(&1).copied()
    }
}

/// One CSV per evaluation run:
/// `architecture,method,split,metric,value,support` where metric is
/// `recall@<k>` or `predicate:<name>`.
pub fn write_evaluation_csv(eval: &MethodEvaluation, path: &Path) -> Result<(), ReportError> {
    let mut text = String::from("architecture,method,split,metric,value,support\n");
    for (k, v) in &eval.recall_at {
        text.push_str(&format!(
            "{},{},{},recall@{k},{v:.4},\n",
            eval.architecture, eval.method, eval.split
        ));
    }
    for (name, (recall, support)) in &eval.per_predicate {
        text.push_str(&format!(
            "{},{},{},predicate:{name},{recall:.4},{support}\n",
            eval.architecture, eval.method, eval.split
        ));
    }
    fs::write(path, text).map_err(|source| ReportError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_evaluation_csv(path: &Path) -> Result<MethodEvaluation, ReportError> {
    let text = fs::read_to_string(path).map_err(|source| ReportError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let bad = |line: usize, message: String| ReportError::BadFile {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut eval: Option<MethodEvaluation> = None;
    for (idx, line) in text.lines().enumerate() {
        if idx == 0 {
            if line != "architecture,method,split,metric,value,support" {
                return Err(bad(1, format!("unexpected header {line:?}")));
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(bad(idx + 1, format!("expected 6 fields, got {}", fields.len())));
        }
        let value: f64 = fields[4]
            .parse()
            .map_err(|e| bad(idx + 1, format!("bad value {:?}: {e}", fields[4])))?;
        let entry = eval.get_or_insert_with(|| MethodEvaluation {
            architecture: fields[0].to_string(),
            method: fields[1].to_string(),
            split: fields[2].to_string(),
            recall_at: BTreeMap::new(),
            per_predicate: BTreeMap::new(),
        });
        if (entry.architecture.as_str(), entry.method.as_str(), entry.split.as_str())
            != (fields[0], fields[1], fields[2])
        {
            return Err(bad(idx + 1, "mixed evaluations in one file".into()));
        }
        if let Some(k) = fields[3].strip_prefix("recall@") {
            let k: usize = k
                .parse()
                .map_err(|e| bad(idx + 1, format!("bad k {k:?}: {e}")))?;
            entry.recall_at.insert(k, value);
        } else if let Some(name) = fields[3].strip_prefix("predicate:") {
            let support: usize = fields[5]
                .parse()
                .map_err(|e| bad(idx + 1, format!("bad support {:?}: {e}", fields[5])))?;
            entry.per_predicate.insert(name.to_string(), (value, support));
        } else {
            return Err(bad(idx + 1, format!("unknown metric {:?}", fields[3])));
        }
    }
    eval.ok_or(ReportError::Empty)
}

fn aligned(rows: &[Vec<String>]) -> String {
    let columns = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..columns)
        .map(|c| rows.iter().filter_map(|r| r.get(c)).map(String::len).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for (idx, row) in rows.iter().enumerate() {
        let mut line = String::new();
        for (c, cell) in row.iter().enumerate() {
            if c > 0 {
                line.push_str("  ");
            }
            if c == 0 {
                line.push_str(&format!("{:<w$}", cell, w = widths[c]));
            } else {
                line.push_str(&format!("{:>w$}", cell, w = widths[c]));
            }
        }
        out.push_str(line.trim_end());
        out.push('\n');
        if idx == 0 {
            let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
            out.push_str(&rule.join("--"));
            out.push('\n');
        }
    }
    out
}

/// Ranked method summary (one row per evaluation, best Recall@1 first).
pub fn render_method_ranking(evals: &[MethodEvaluation]) -> Result<String, ReportError> {
    if evals.is_empty() {
        return Err(ReportError::Empty);
    }
    let mut order: Vec<&MethodEvaluation> = evals.iter().collect();
    order.sort_by(|a, b| {
        b.recall1()
            .unwrap_or(f64::NEG_INFINITY)
            .partial_cmp(&a.recall1().unwrap_or(f64::NEG_INFINITY))
            .expect("finite recall")
            .then_with(|| (&a.architecture, &a.method, &a.split).cmp(&(&b.architecture, &b.method, &b.split)))
    });
    let mut rows = vec![vec![
        "Architecture".to_string(),
        "Method".to_string(),
        "Split".to_string(),
        "R@1".to_string(),
    ]];
    for e in order {
        rows.push(vec![
            e.architecture.clone(),
            e.method.clone(),
            e.split.clone(),
            e.recall1().map_or_else(|| "-".into(), |v| format!("{v:.2}")),
        ]);
    }
    Ok(aligned(&rows))
}

/// Recall@k grid: one row per evaluation, one column per k.
pub fn render_recall_grid(evals: &[MethodEvaluation]) -> Result<String, ReportError> {
    if evals.is_empty() {
        return Err(ReportError::Empty);
    }
    let ks: Vec<usize> = {
        let mut all: Vec<usize> = evals
            .iter()
            .flat_map(|e| e.recall_at.keys().copied())
            .collect();
        all.sort_unstable();
        all.dedup();
        all
    };
    let mut order: Vec<&MethodEvaluation> = evals.iter().collect();
    order.sort_by(|a, b| {
        b.recall1()
            .unwrap_or(f64::NEG_INFINITY)
            .partial_cmp(&a.recall1().unwrap_or(f64::NEG_INFINITY))
            .expect("finite recall")
            .then_with(|| (&a.method, &a.split).cmp(&(&b.method, &b.split)))
    });
    let mut header = vec!["Method".to_string(), "Dataset".to_string()];
    header.extend(ks.iter().map(|k| format!("R@{k}")));
    let mut rows = vec![header];
    for e in order {
        let mut row = vec![e.method.clone(), e.split.clone()];
        row.extend(ks.iter().map(|k| {
            e.recall_at
                .get(k)
                .map_or_else(|| "-".into(), |v| format!("{v:.2}"))
        }));
        rows.push(row);
    }
    Ok(aligned(&rows))
}

/// Per-predicate matrix: predicates as rows, methods as columns. The
/// highest value in each column is italicised (`*x*`) and the highest in
/// each row is bold (`**x**`), mirroring the published formatting.
pub fn render_per_predicate_matrix(evals: &[MethodEvaluation]) -> Result<String, ReportError> {
    if evals.is_empty() {
        return Err(ReportError::Empty);
    }
    let mut columns: Vec<&MethodEvaluation> = evals.iter().collect();
    columns.sort_by(|a, b| (&a.method, &a.split).cmp(&(&b.method, &b.split)));
    let predicates: Vec<String> = {
        let mut all: Vec<String> = columns
            .iter()
            .flat_map(|e| e.per_predicate.keys().cloned())
            .collect();
        all.sort();
        all.dedup();
        all
    };
    if predicates.is_empty() {
        return Err(ReportError::Empty);
    }

    let value = |e: &MethodEvaluation, p: &str| e.per_predicate.get(p).map(|&(r, _)| r);
    let column_max: Vec<f64> = columns
        .iter()
        .map(|e| {
            e.per_predicate
                .values()
                .map(|&(r, _)| r)
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect();
    let row_max: Vec<f64> = predicates
        .iter()
        .map(|p| {
            columns
                .iter()
                .filter_map(|e| value(e, p))
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect();

    let mut header = vec!["Predicate".to_string()];
    header.extend(columns.iter().map(|e| e.method.clone()));
    let mut rows = vec![header];
    for (pi, predicate) in predicates.iter().enumerate() {
        let mut row = vec![predicate.clone()];
        for (ci, e) in columns.iter().enumerate() {
            row.push(match value(e, predicate) {
                None => "-".to_string(),
                Some(v) => {
                    let mut cell = format!("{v:.2}");
                    if v == column_max[ci] {
                        cell = format!("*{cell}*");
                    }
                    if v == row_max[pi] {
                        cell = format!("**{cell}**");
                    }
                    cell
                }
            });
        }
        rows.push(row);
    }
    Ok(aligned(&rows))
}

/// Error-taxonomy percentages rounded to integer percent.
pub fn render_error_taxonomy(percentages: &BTreeMap<ErrorCategory, f64>) -> String {
    let mut rows = vec![vec!["Type".to_string(), "Percentage".to_string()]];
    let mut entries: Vec<(&ErrorCategory, &f64)> = percentages.iter().collect();
    entries.sort_by(|a, b| {
        b.1.partial_cmp(a.1)
            .expect("finite percent")
            .then_with(|| a.0.cmp(b.0))
    });
    for (category, percent) in entries {
        rows.push(vec![
            category.to_string(),
            format!("{}%", percent.round() as i64),
        ]);
    }
    aligned(&rows)
}

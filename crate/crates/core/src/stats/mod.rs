//! One-way ANOVA with Tukey's HSD post-hoc test and a compact letter
//! display, for comparing repeated-run Recall@1 results across
//! (method, architecture) configurations.

mod letters;
mod srange;

pub use letters::{letter_name, render_grouping_table};
pub use srange::{studentized_range_cdf, studentized_range_quantile};

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("alpha must be in (0, 1), got {0}")]
    BadAlpha(f64),
    #[error("need at least 2 groups, got {0}")]
    TooFewGroups(usize),
    #[error("group {label} needs at least 2 runs, got {runs}")]
    TooFewRuns { label: String, runs: usize },
    #[error("degrees of freedom must be finite and >= 1, got {0}")]
    BadDegreesOfFreedom(f64),
    #[error("group {label}: recall value {value} outside [0, 100]")]
    ValueOutOfRange { label: String, value: f64 },
    #[error("duplicate group label {0}")]
    DuplicateLabel(String),
    #[error("quantile search failed: {0}")]
    NonConvergence(String),
    #[error("{path} line {line}: {message}")]
    BadFile {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("io error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Identifies one compared configuration.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GroupLabel {
    pub architecture: String,
    pub method: String,
}

impl std::fmt::Display for GroupLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}/{}", self.architecture, self.method)
    }
}

/// Repeated-run Recall@1 percentages for one configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunGroup {
    pub label: GroupLabel,
    pub values: Vec<f64>,
}

impl RunGroup {
    pub fn new(label: GroupLabel, values: Vec<f64>) -> Result<Self, StatsError> {
        if values.len() < 2 {
            return Err(StatsError::TooFewRuns {
                label: label.to_string(),
                runs: values.len(),
            });
        }
        for &v in &values {
            if !(0.0..=100.0).contains(&v) || !v.is_finite() {
                return Err(StatsError::ValueOutOfRange {
                    label: label.to_string(),
                    value: v,
                });
            }
        }
        Ok(Self { label, values })
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupSummary {
    pub label: GroupLabel,
    pub mean: f64,
    pub runs: usize,
}

/// Tukey HSD outcome: groups sorted by descending mean, the pairwise
/// significance matrix in that order, and the letter sets.
#[derive(Debug, Clone, PartialEq)]
pub struct TukeyResult {
    pub groups: Vec<GroupSummary>,
    pub significant: Vec<Vec<bool>>,
    pub letters: Vec<BTreeSet<usize>>,
    pub alpha: f64,
    pub q_critical: f64,
    pub ms_within: f64,
    pub df_within: f64,
}

impl TukeyResult {
    /// Comma-joined letter names for the group at `index` (display order).
    pub fn letter_string(&self, index: usize) -> String {
        self.letters[index]
            .iter()
            .map(|&l| letter_name(l))
            .collect::<Vec<_>>()
            .join(",")
    }
}

/// Tukey's HSD with the Tukey-Kramer correction for unequal run counts:
/// pair (i, j) differs significantly iff
/// `|mean_i - mean_j| > q(alpha, k, df) * sqrt(MS_within/2 * (1/n_i + 1/n_j))`.
pub fn tukey_hsd(groups: &[RunGroup], alpha: f64) -> Result<TukeyResult, StatsError> {
    if groups.len() < 2 {
        return Err(StatsError::TooFewGroups(groups.len()));
    }
    let mut seen = BTreeSet::new();
    for g in groups {
        if g.values.len() < 2 {
            return Err(StatsError::TooFewRuns {
                label: g.label.to_string(),
                runs: g.values.len(),
            });
        }
        if !seen.insert(&g.label) {
            return Err(StatsError::DuplicateLabel(g.label.to_string()));
        }
    }

    // Display order: descending mean, label as the deterministic tie-break.
    let mut order: Vec<usize> = (0..groups.len()).collect();
    order.sort_by(|&a, &b| {
        groups[b]
            .mean()
            .partial_cmp(&groups[a].mean())
            .expect("finite means")
            .then_with(|| groups[a].label.cmp(&groups[b].label))
    });
    let sorted: Vec<&RunGroup> = order.iter().map(|&i| &groups[i]).collect();

    let total_runs: usize = sorted.iter().map(|g| g.values.len()).sum();
    let k = sorted.len();
    let df_within = (total_runs - k) as f64;
    let ss_within: f64 = sorted
        .iter()
        .map(|g| {
            let mean = g.mean();
            g.values.iter().map(|v| (v - mean).powi(2)).sum::<f64>()
        })
        .sum();
    let ms_within = ss_within / df_within;

    let q_critical = studentized_range_quantile(alpha, k, df_within)?;
    let mut significant = vec![vec![false; k]; k];
    for i in 0..k {
        for j in (i + 1)..k {
            let (ni, nj) = (sorted[i].values.len() as f64, sorted[j].values.len() as f64);
            let hsd = q_critical * (ms_within / 2.0 * (1.0 / ni + 1.0 / nj)).sqrt();
            let diff = (sorted[i].mean() - sorted[j].mean()).abs();
            significant[i][j] = diff > hsd;
            significant[j][i] = significant[i][j];
        }
    }

    let letters = letters::assign_letters(&significant);
    Ok(TukeyResult {
        groups: sorted
            .iter()
            .map(|g| GroupSummary {
                label: g.label.clone(),
                mean: g.mean(),
                runs: g.values.len(),
            })
            .collect(),
        significant,
        letters,
        alpha,
        q_critical,
        ms_within,
        df_within,
    })
}

/// Read `(architecture, method, run_index, recall)` rows, grouping in
/// first-appearance order.
pub fn read_run_groups(path: &Path) -> Result<Vec<RunGroup>, StatsError> {
    let text = fs::read_to_string(path).map_err(|source| StatsError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let bad = |line: usize, message: String| StatsError::BadFile {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut labels: Vec<GroupLabel> = Vec::new();
    let mut values: Vec<Vec<f64>> = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if idx == 0 {
            if line != "architecture,method,run_index,recall" {
                return Err(bad(1, format!("unexpected header {line:?}")));
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(bad(idx + 1, format!("expected 4 fields, got {}", fields.len())));
        }
        let label = GroupLabel {
            architecture: fields[0].to_string(),
            method: fields[1].to_string(),
        };
        let recall: f64 = fields[3]
            .parse()
            .map_err(|e| bad(idx + 1, format!("bad recall {:?}: {e}", fields[3])))?;
        match labels.iter().position(|l| *l == label) {
            Some(pos) => values[pos].push(recall),
            None => {
                labels.push(label);
                values.push(vec![recall]);
            }
        }
    }
    labels
        .into_iter()
        .zip(values)
        .map(|(label, vals)| RunGroup::new(label, vals))
        .collect()
}

/// CSV rendering of a Tukey result: one row per group in display order.
pub fn result_csv(result: &TukeyResult) -> String {
    let mut text = String::from("architecture,method,mean_recall,runs,group\n");
    for (i, g) in result.groups.iter().enumerate() {
        text.push_str(&format!(
            "{},{},{:.4},{},{}\n",
            g.label.architecture,
            g.label.method,
            g.mean,
            g.runs,
            result.letter_string(i).replace(',', ";"),
        ));
    }
    text
}

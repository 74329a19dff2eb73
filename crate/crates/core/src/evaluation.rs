//! Scoring of prediction files: Recall@k, per-predicate recall, top-1
//! confusion counts, and error-taxonomy aggregation.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

use crate::dataset::DatasetSplit;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("score row {row} has {got} scores, expected {expected}")]
    RowLength {
        row: usize,
        expected: usize,
        got: usize,
    },
    #[error("scores misaligned with split: no score row for instance {0}")]
    MissingRow(String),
    #[error("scores misaligned with split: row for unknown instance {0}")]
    UnknownRow(String),
    #[error("duplicate score row for instance {0}")]
    DuplicateRow(String),
    #[error("k must be in 1..={vocab}, got {k}")]
    BadK { k: usize, vocab: usize },
    #[error("score matrix is empty")]
    Empty,
    #[error("error tag list is empty")]
    EmptyTags,
    #[error("instance {instance_id} tagged twice with {category}")]
    DuplicateTag {
        instance_id: String,
        category: ErrorCategory,
    },
    #[error("unknown error category {0:?}")]
    UnknownCategory(String),
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

/// Per-instance predicate score vectors, keyed and ordered by instance id.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix {
    instance_ids: Vec<String>,
    rows: Vec<Vec<f64>>,
}

impl ScoreMatrix {
    pub fn new(instance_ids: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self, EvalError> {
        if rows.is_empty() || instance_ids.len() != rows.len() {
            return Err(EvalError::Empty);
        }
        let width = rows[0].len();
        if width == 0 {
            return Err(EvalError::Empty);
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != width {
                return Err(EvalError::RowLength {
                    row: i + 1,
                    expected: width,
                    got: row.len(),
                });
            }
        }
        let mut seen = HashSet::with_capacity(instance_ids.len());
        for id in &instance_ids {
            if !seen.insert(id.as_str()) {
                return Err(EvalError::DuplicateRow(id.clone()));
            }
        }
        Ok(Self { instance_ids, rows })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn num_predicates(&self) -> usize {
        self.rows[0].len()
    }

    pub fn instance_ids(&self) -> &[String] {
        &self.instance_ids
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    /// CSV with header `instance_id,s0,...,s{C-1}`.
    pub fn write_csv(&self, path: &Path) -> Result<(), EvalError> {
        let mut text = String::from("instance_id");
        for c in 0..self.num_predicates() {
            text.push_str(&format!(",s{c}"));
        }
        text.push('\n');
        for (id, row) in self.instance_ids.iter().zip(&self.rows) {
            text.push_str(id);
            for v in row {
                text.push_str(&format!(",{v}"));
            }
            text.push('\n');
        }
        fs::write(path, text).map_err(|source| EvalError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn read_csv(path: &Path) -> Result<Self, EvalError> {
        let text = fs::read_to_string(path).map_err(|source| EvalError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let bad = |line: usize, message: String| EvalError::BadFile {
            path: path.to_path_buf(),
            line,
            message,
        };
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or_else(|| bad(1, "empty file".into()))?;
        if !header.starts_with("instance_id,s0") {
            return Err(bad(1, format!("unexpected header {header:?}")));
        }
        let mut ids = Vec::new();
        let mut rows = Vec::new();
        for (idx, line) in lines {
            if line.is_empty() {
                continue;
            }
            let mut fields = line.split(',');
            let id = fields.next().unwrap_or_default();
            let row: Result<Vec<f64>, _> = fields.map(str::parse::<f64>).collect();
            ids.push(id.to_string());
            rows.push(row.map_err(|e| bad(idx + 1, format!("bad score: {e}")))?);
        }
        Self::new(ids, rows)
    }

    /// Row indices aligned to the split's instance order; errors name the
    /// first mismatched instance in either direction.
    fn align(&self, split: &DatasetSplit) -> Result<Vec<usize>, EvalError> {
        let index: HashMap<&str, usize> = self
            .instance_ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.as_str(), i))
            .collect();
        let mut aligned = Vec::with_capacity(split.len());
        let mut used = vec![false; self.len()];
        for inst in &split.instances {
            let &row = index
                .get(inst.instance_id.as_str())
                .ok_or_else(|| EvalError::MissingRow(inst.instance_id.clone()))?;
            used[row] = true;
            aligned.push(row);
        }
        if let Some(extra) = used.iter().position(|u| !u) {
            return Err(EvalError::UnknownRow(self.instance_ids[extra].clone()));
        }
        Ok(aligned)
    }
}

/// Rank of the ground-truth predicate under (score descending, index
/// ascending): the number of predicates strictly ahead of it.
fn rank_of(row: &[f64], ground_truth: usize) -> usize {
    let gt_score = row[ground_truth];
    row.iter()
        .enumerate()
        .filter(|&(j, &s)| s > gt_score || (s == gt_score && j < ground_truth))
        .count()
}

/// Fraction of instances whose ground-truth predicate is among the k
/// highest-scoring predicates (ties broken by lower predicate index).
pub fn recall_at_k(scores: &ScoreMatrix, split: &DatasetSplit, k: usize) -> Result<f64, EvalError> {
    let vocab = scores.num_predicates();
    if k == 0 || k > vocab {
        return Err(EvalError::BadK { k, vocab });
    }
    let aligned = scores.align(split)?;
    let hits = split
        .instances
        .iter()
        .zip(&aligned)
        .filter(|(inst, &row)| rank_of(&scores.rows[row], inst.predicate_id) < k)
        .count();
    Ok(hits as f64 / split.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredicateRecall {
    pub recall: f64,
    pub support: usize,
}

/// Recall@k restricted to the instances of each ground-truth predicate.
/// Predicates with zero support are omitted.
pub fn per_predicate_recall(
    scores: &ScoreMatrix,
    split: &DatasetSplit,
    k: usize,
) -> Result<BTreeMap<usize, PredicateRecall>, EvalError> {
    let vocab = scores.num_predicates();
    if k == 0 || k > vocab {
        return Err(EvalError::BadK { k, vocab });
    }
    let aligned = scores.align(split)?;
    let mut hits: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
    for (inst, &row) in split.instances.iter().zip(&aligned) {
        let entry = hits.entry(inst.predicate_id).or_insert((0, 0));
        entry.1 += 1;
        if rank_of(&scores.rows[row], inst.predicate_id) < k {
            entry.0 += 1;
        }
    }
    Ok(hits
        .into_iter()
        .map(|(p, (h, support))| {
            (
                p,
                PredicateRecall {
                    recall: h as f64 / support as f64,
                    support,
                },
            )
        })
        .collect())
}

/// Top-1 confusion counts: `counts[ground_truth][predicted]`.
pub fn confusion_top1(
    scores: &ScoreMatrix,
    split: &DatasetSplit,
) -> Result<Vec<Vec<u64>>, EvalError> {
    let vocab = scores.num_predicates();
    let aligned = scores.align(split)?;
    let mut counts = vec![vec![0u64; vocab]; vocab];
    for (inst, &row) in split.instances.iter().zip(&aligned) {
        let row_scores = &scores.rows[row];
        let top = (0..vocab)
            .min_by(|&a, &b| {
                row_scores[b]
                    .partial_cmp(&row_scores[a])
                    .unwrap_or(std::cmp::Ordering::Equal)
                    .then(a.cmp(&b))
            })
            .expect("vocab >= 1");
        counts[inst.predicate_id][top] += 1;
    }
    Ok(counts)
}

/// The fixed error taxonomy used by the qualitative analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ErrorCategory {
    AlternativePredicates,
    DifferentPov,
    IncorrectPrediction,
    LinguisticError,
    Phrases,
    Synonyms,
    IncorrectAnnotation,
    BackgroundObjects,
}

impl ErrorCategory {
    pub const ALL: [ErrorCategory; 8] = [
        ErrorCategory::AlternativePredicates,
        ErrorCategory::DifferentPov,
        ErrorCategory::IncorrectPrediction,
        ErrorCategory::LinguisticError,
        ErrorCategory::Phrases,
        ErrorCategory::Synonyms,
        ErrorCategory::IncorrectAnnotation,
        ErrorCategory::BackgroundObjects,
    ];
}

impl std::fmt::Display for ErrorCategory {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ErrorCategory::AlternativePredicates => "AlternativePredicates",
            ErrorCategory::DifferentPov => "DifferentPOV",
            ErrorCategory::IncorrectPrediction => "IncorrectPrediction",
            ErrorCategory::LinguisticError => "LinguisticError",
            ErrorCategory::Phrases => "Phrases",
            ErrorCategory::Synonyms => "Synonyms",
            ErrorCategory::IncorrectAnnotation => "IncorrectAnnotation",
            ErrorCategory::BackgroundObjects => "BackgroundObjects",
        })
    }
}

impl FromStr for ErrorCategory {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ErrorCategory::ALL
            .into_iter()
            .find(|c| c.to_string().eq_ignore_ascii_case(s))
            .ok_or_else(|| EvalError::UnknownCategory(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ErrorTag {
    pub instance_id: String,
    pub category: ErrorCategory,
}

/// Percentage of tagged instances carrying each category. An instance may
/// carry several categories, so the percentages can sum past 100.
pub fn aggregate_error_tags(
    tags: &[ErrorTag],
) -> Result<BTreeMap<ErrorCategory, f64>, EvalError> {
    if tags.is_empty() {
        return Err(EvalError::EmptyTags);
    }
    let mut seen: HashSet<(&str, ErrorCategory)> = HashSet::with_capacity(tags.len());
    let mut instances: HashSet<&str> = HashSet::new();
    let mut counts: BTreeMap<ErrorCategory, usize> = BTreeMap::new();
    for tag in tags {
        if !seen.insert((tag.instance_id.as_str(), tag.category)) {
            return Err(EvalError::DuplicateTag {
                instance_id: tag.instance_id.clone(),
                category: tag.category,
            });
        }
        instances.insert(tag.instance_id.as_str());
        *counts.entry(tag.category).or_insert(0) += 1;
    }
    let total = instances.len() as f64;
    Ok(counts
        .into_iter()
        .map(|(c, n)| (c, 100.0 * n as f64 / total))
        .collect())
}

/// Read `instance_id,category` tag rows (with header) from a CSV file.
pub fn read_error_tags(path: &Path) -> Result<Vec<ErrorTag>, EvalError> {
    let text = fs::read_to_string(path).map_err(|source| EvalError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let bad = |line: usize, message: String| EvalError::BadFile {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut tags = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if idx == 0 {
            if line != "instance_id,category" {
                return Err(bad(1, format!("unexpected header {line:?}")));
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let (id, category) = line
            .split_once(',')
            .ok_or_else(|| bad(idx + 1, "expected 2 fields".into()))?;
        tags.push(ErrorTag {
            instance_id: id.to_string(),
            category: category.parse()?,
        });
    }
    Ok(tags)
}

//! Python bindings for the relprep toolkit: geometry and kernel
//! primitives, the metric and Tukey machinery, and the file-level
//! pipeline stages (synth -> preprocess -> train -> predict -> evaluate).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use relprep_core::dataset::{
    self, derive_zero_shot, generate_synthetic, parse_annotations, SplitName, SyntheticConfig,
};
use relprep_core::evaluation::{self, ScoreMatrix};
use relprep_core::geometry::BBox;
use relprep_core::predictor::{extract_features, SoftmaxModel, TrainConfig};
use relprep_core::stats::{self, GroupLabel, RunGroup};
use relprep_core::transforms::{
    emit_dataset, read_manifest, GaussianKernel, PreprocessMethod, TransformOptions, MANIFEST_FILE,
};

fn value_err(err: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(err.to_string())
}

fn runtime_err(err: impl std::fmt::Display) -> PyErr {
    PyRuntimeError::new_err(err.to_string())
}

fn bbox_from_tuple((xmin, ymin, xmax, ymax): (u32, u32, u32, u32)) -> PyResult<BBox> {
    BBox::new(xmin, ymin, xmax, ymax).map_err(value_err)
}

fn split_from_str(raw: &str) -> PyResult<SplitName> {
    raw.parse().map_err(value_err)
}

fn method_from_str(raw: &str) -> PyResult<PreprocessMethod> {
    raw.parse().map_err(value_err)
}

/// Smallest box enclosing both boxes, as (xmin, ymin, xmax, ymax).
#[pyfunction]
fn union_box(
    a: (u32, u32, u32, u32),
    b: (u32, u32, u32, u32),
) -> PyResult<(u32, u32, u32, u32)> {
    let u = bbox_from_tuple(a)?.union(&bbox_from_tuple(b)?);
    Ok((u.xmin, u.ymin, u.xmax, u.ymax))
}

/// Binary H x W raster with ones exactly inside the box.
#[pyfunction]
fn rasterize_box(bbox: (u32, u32, u32, u32), height: u32, width: u32) -> PyResult<Vec<Vec<u8>>> {
    let mask = bbox_from_tuple(bbox)?
        .rasterize(height, width)
        .map_err(value_err)?;
    Ok((0..height)
        .map(|y| (0..width).map(|x| u8::from(mask.get(y, x))).collect())
        .collect())
}

/// Normalized 1-D Gaussian taps (the separable blur kernel).
#[pyfunction]
fn gaussian_kernel(sigma: f64, side: usize) -> PyResult<Vec<f64>> {
    Ok(GaussianKernel::new(sigma, side)
        .map_err(value_err)?
        .weights()
        .to_vec())
}

/// The eleven preprocessing method names.
#[pyfunction]
fn preprocess_methods() -> Vec<String> {
    PreprocessMethod::ALL.iter().map(ToString::to_string).collect()
}

/// Upper studentized-range quantile q with P(Q <= q) = 1 - alpha.
#[pyfunction]
fn studentized_range_quantile(alpha: f64, k: usize, df: f64) -> PyResult<f64> {
    stats::studentized_range_quantile(alpha, k, df).map_err(value_err)
}

/// Recall@k (in percent) for raw score rows against ground-truth labels.
#[pyfunction]
fn recall_at_k(scores: Vec<Vec<f64>>, labels: Vec<usize>, k: usize) -> PyResult<f64> {
    if scores.len() != labels.len() {
        return Err(value_err(format!(
            "{} score rows vs {} labels",
            scores.len(),
            labels.len()
        )));
    }
    let ids: Vec<String> = (0..scores.len()).map(|i| format!("i{i}")).collect();
    let matrix = ScoreMatrix::new(ids, scores).map_err(value_err)?;
    let split = synthetic_split_for_labels(&labels, matrix.num_predicates())?;
    evaluation::recall_at_k(&matrix, &split, k)
        .map(|r| 100.0 * r)
        .map_err(value_err)
}

/// Per-predicate Recall@k: predicate id -> (percent, support).
#[pyfunction]
fn per_predicate_recall(
    scores: Vec<Vec<f64>>,
    labels: Vec<usize>,
    k: usize,
) -> PyResult<BTreeMap<usize, (f64, usize)>> {
    let ids: Vec<String> = (0..scores.len()).map(|i| format!("i{i}")).collect();
    let matrix = ScoreMatrix::new(ids, scores).map_err(value_err)?;
    let split = synthetic_split_for_labels(&labels, matrix.num_predicates())?;
    Ok(evaluation::per_predicate_recall(&matrix, &split, k)
        .map_err(value_err)?
        .into_iter()
        .map(|(p, r)| (p, (100.0 * r.recall, r.support)))
        .collect())
}

fn synthetic_split_for_labels(
    labels: &[usize],
    vocab: usize,
) -> PyResult<dataset::DatasetSplit> {
    let ids: Vec<String> = (0..labels.len()).map(|i| format!("i{i}")).collect();
    split_for_ids(&ids, labels, vocab)
}

fn split_for_ids(
    ids: &[String],
    labels: &[usize],
    vocab: usize,
) -> PyResult<dataset::DatasetSplit> {
    let bbox = BBox::new(0, 0, 2, 2).map_err(value_err)?;
    let object = dataset::ObjectInstance {
        category_id: 0,
        bbox,
        mask: None,
    };
    let split = dataset::DatasetSplit {
        name: SplitName::Test,
        instances: ids
            .iter()
            .zip(labels)
            .map(|(id, &p)| dataset::RelInstance {
                instance_id: id.clone(),
                image_id: format!("{id}.png"),
                subject: object.clone(),
                object: object.clone(),
                predicate_id: p,
            })
            .collect(),
        object_vocab: vec!["object".to_string()],
        predicate_vocab: (0..vocab).map(|p| format!("p{p}")).collect(),
    };
    split.validate().map_err(value_err)?;
    Ok(split)
}

/// Tukey HSD over (architecture, method, runs) groups.
#[pyclass]
struct TukeyOutcome {
    #[pyo3(get)]
    labels: Vec<(String, String)>,
    #[pyo3(get)]
    means: Vec<f64>,
    #[pyo3(get)]
    letters: Vec<String>,
    #[pyo3(get)]
    significant: Vec<Vec<bool>>,
    #[pyo3(get)]
    q_critical: f64,
    table: String,
}

#[pymethods]
impl TukeyOutcome {
    /// Aligned text table, rows sorted by descending mean.
    fn render(&self) -> String {
        self.table.clone()
    }
}

#[pyfunction]
#[pyo3(signature = (groups, alpha = 0.05))]
fn tukey_hsd(groups: Vec<((String, String), Vec<f64>)>, alpha: f64) -> PyResult<TukeyOutcome> {
    let groups: Vec<RunGroup> = groups
        .into_iter()
        .map(|((architecture, method), values)| {
            RunGroup::new(
                GroupLabel {
                    architecture,
                    method,
                },
                values,
            )
            .map_err(value_err)
        })
        .collect::<PyResult<_>>()?;
    let result = stats::tukey_hsd(&groups, alpha).map_err(value_err)?;
    Ok(TukeyOutcome {
        labels: result
            .groups
            .iter()
            .map(|g| (g.label.architecture.clone(), g.label.method.clone()))
            .collect(),
        means: result.groups.iter().map(|g| g.mean).collect(),
        letters: (0..result.groups.len())
            .map(|i| result.letter_string(i))
            .collect(),
        significant: result.significant.clone(),
        q_critical: result.q_critical,
        table: stats::render_grouping_table(&result),
    })
}

/// Generate a synthetic spatial-relation split under `out_dir`
/// (images/ + annotations.json + vocab sidecars). Returns the instance
/// count.
#[pyfunction]
#[pyo3(signature = (out_dir, n, seed, image_size = 96, split = "train"))]
fn generate_synthetic_dataset(
    out_dir: PathBuf,
    n: usize,
    seed: u64,
    image_size: u32,
    split: &str,
) -> PyResult<usize> {
    let name = split_from_str(split)?;
    let config = SyntheticConfig {
        n,
        seed,
        image_size,
    };
    let (dataset, images) = generate_synthetic(&config, name).map_err(value_err)?;
    dataset::write_synthetic_dataset(&dataset, &images, &out_dir).map_err(runtime_err)?;
    Ok(dataset.len())
}

fn load_dataset(dataset_dir: &Path, split: SplitName) -> PyResult<dataset::DatasetSplit> {
    let annotations = dataset_dir.join("annotations.json");
    let images = dataset_dir.join("images");
    let (dataset, _) = parse_annotations(&annotations, &images, split).map_err(runtime_err)?;
    Ok(dataset)
}

/// Instance ids of the zero-shot subset of `test_dir` relative to
/// `train_dir` (both canonical dataset directories).
#[pyfunction]
fn zero_shot_instance_ids(train_dir: PathBuf, test_dir: PathBuf) -> PyResult<Vec<String>> {
    let train = load_dataset(&train_dir, SplitName::Train)?;
    let test = load_dataset(&test_dir, SplitName::Test)?;
    let zero_shot = derive_zero_shot(&train, &test).map_err(value_err)?;
    Ok(zero_shot
        .instances
        .into_iter()
        .map(|i| i.instance_id)
        .collect())
}

/// Apply one preprocessing method over a dataset directory, writing PNGs
/// plus a manifest under `emit_dir`. Returns (emitted, skipped).
#[pyfunction]
#[pyo3(signature = (dataset_dir, method, emit_dir, split = "train"))]
fn preprocess_dataset(
    dataset_dir: PathBuf,
    method: &str,
    emit_dir: PathBuf,
    split: &str,
) -> PyResult<(usize, usize)> {
    let method = method_from_str(method)?;
    let name = split_from_str(split)?;
    let dataset = load_dataset(&dataset_dir, name)?;
    let outcome = emit_dataset(
        &dataset,
        method,
        &dataset_dir.join("images"),
        &emit_dir,
        &TransformOptions::default(),
    )
    .map_err(runtime_err)?;
    Ok((outcome.entries.len(), outcome.skipped_missing_mask))
}

/// Train the reference softmax classifier on an emitted dataset and save
/// the checkpoint. Returns the final number of classes.
#[pyfunction]
#[pyo3(signature = (emit_dir, num_classes, model_path, seed = 0))]
fn train_model(
    emit_dir: PathBuf,
    num_classes: usize,
    model_path: PathBuf,
    seed: u64,
) -> PyResult<usize> {
    let entries = read_manifest(&emit_dir.join(MANIFEST_FILE)).map_err(runtime_err)?;
    let features = extract_features(&emit_dir, &entries).map_err(runtime_err)?;
    let config = TrainConfig {
        seed,
        ..TrainConfig::default()
    };
    let model = relprep_core::predictor::train(
        &config,
        &features.features,
        &features.labels,
        num_classes,
    )
    .map_err(runtime_err)?;
    model.save(&model_path).map_err(runtime_err)?;
    Ok(model.num_classes())
}

/// Score an emitted dataset with a trained model and write the
/// prediction CSV. Returns (rows, Recall@1 percent against the manifest
/// labels).
#[pyfunction]
fn predict_and_score(
    model_path: PathBuf,
    emit_dir: PathBuf,
    scores_path: PathBuf,
) -> PyResult<(usize, f64)> {
    let model = SoftmaxModel::load(&model_path).map_err(runtime_err)?;
    let entries = read_manifest(&emit_dir.join(MANIFEST_FILE)).map_err(runtime_err)?;
    let features = extract_features(&emit_dir, &entries).map_err(runtime_err)?;
    let probabilities = model.forward(features.features.view()).map_err(runtime_err)?;
    let rows: Vec<Vec<f64>> = probabilities.rows().into_iter().map(|r| r.to_vec()).collect();

    let labels = features.labels.clone();
    let matrix = ScoreMatrix::new(features.instance_ids, rows).map_err(runtime_err)?;
    matrix.write_csv(&scores_path).map_err(runtime_err)?;

    let split = split_for_ids(matrix.instance_ids(), &labels, matrix.num_predicates())?;
    let r1 = evaluation::recall_at_k(&matrix, &split, 1).map_err(runtime_err)?;
    Ok((matrix.len(), 100.0 * r1))
}

#[pymodule]
fn relprep(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<TukeyOutcome>()?;
    m.add_function(wrap_pyfunction!(union_box, m)?)?;
    m.add_function(wrap_pyfunction!(rasterize_box, m)?)?;
    m.add_function(wrap_pyfunction!(gaussian_kernel, m)?)?;
    m.add_function(wrap_pyfunction!(preprocess_methods, m)?)?;
    m.add_function(wrap_pyfunction!(studentized_range_quantile, m)?)?;
    m.add_function(wrap_pyfunction!(recall_at_k, m)?)?;
    m.add_function(wrap_pyfunction!(per_predicate_recall, m)?)?;
    m.add_function(wrap_pyfunction!(tukey_hsd, m)?)?;
    m.add_function(wrap_pyfunction!(generate_synthetic_dataset, m)?)?;
    m.add_function(wrap_pyfunction!(zero_shot_instance_ids, m)?)?;
    m.add_function(wrap_pyfunction!(preprocess_dataset, m)?)?;
    m.add_function(wrap_pyfunction!(train_model, m)?)?;
    m.add_function(wrap_pyfunction!(predict_and_score, m)?)?;
    Ok(())
}

//! VRD-style annotation loading, validation, splitting, and synthetic
//! dataset generation.

mod schema;
mod synthetic;

pub use schema::{parse_annotations, serialize_annotations, ParseStats};
pub use synthetic::{generate_synthetic, write_synthetic_dataset, SyntheticConfig};

use std::collections::HashSet;
use std::path::PathBuf;
use std::str::FromStr;

use crate::geometry::{BBox, Mask};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("record {record} in {path}: {message}")]
    MalformedRecord {
        path: PathBuf,
        record: String,
        message: String,
    },
    #[error("record {record} in {path}: unknown {kind} name {name:?}")]
    UnknownName {
        path: PathBuf,
        record: String,
        kind: &'static str,
        name: String,
    },
    #[error("referenced image does not exist: {0}")]
    MissingImage(PathBuf),
    #[error("duplicate instance id {0}")]
    DuplicateInstanceId(String),
    #[error("vocabulary mismatch between splits: {0}")]
    VocabMismatch(&'static str),
    #[error("synthetic dataset size must be >= 1, got {0}")]
    InvalidCount(usize),
    #[error("category id {id} out of range for vocabulary of {len}")]
    CategoryOutOfRange { id: usize, len: usize },
    #[error("predicate id {id} out of range for vocabulary of {len}")]
    PredicateOutOfRange { id: usize, len: usize },
    #[error("io error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("json error at {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error(transparent)]
    Raster(#[from] crate::raster::RasterError),
}

/// One annotated object: category plus geometry.
///
/// `mask`, when present, is aligned to the full image and satisfies
/// mask ⊆ bbox.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectInstance {
    pub category_id: usize,
    pub bbox: BBox,
    pub mask: Option<Mask>,
}

/// One (subject, predicate, object) annotation. Subject and object share
/// `image_id` by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct RelInstance {
    pub instance_id: String,
    pub image_id: String,
    pub subject: ObjectInstance,
    pub object: ObjectInstance,
    pub predicate_id: usize,
}

impl RelInstance {
    /// The (subject category, predicate, object category) triple that
    /// defines zero-shot membership.
    pub fn triple(&self) -> (usize, usize, usize) {
        (
            self.subject.category_id,
            self.predicate_id,
            self.object.category_id,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitName {
    Train,
    Test,
    ZeroShot,
}

impl std::fmt::Display for SplitName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SplitName::Train => "train",
            SplitName::Test => "test",
            SplitName::ZeroShot => "zero_shot",
        })
    }
}

impl FromStr for SplitName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "train" => Ok(SplitName::Train),
            "test" => Ok(SplitName::Test),
            "zero_shot" | "zero-shot" | "zeroshot" => Ok(SplitName::ZeroShot),
            other => Err(format!(
                "unknown split {other:?}: expected train, test, or zero_shot"
            )),
        }
    }
}

/// An ordered, validated list of relationship instances plus the
/// vocabularies they index into. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSplit {
    pub name: SplitName,
    pub instances: Vec<RelInstance>,
    pub object_vocab: Vec<String>,
    pub predicate_vocab: Vec<String>,
}

impl DatasetSplit {
    /// Check id uniqueness and vocabulary ranges for every instance.
    pub fn validate(&self) -> Result<(), DatasetError> {
        let mut seen = HashSet::with_capacity(self.instances.len());
        for inst in &self.instances {
            if !seen.insert(inst.instance_id.as_str()) {
                return Err(DatasetError::DuplicateInstanceId(inst.instance_id.clone()));
            }
            if inst.predicate_id >= self.predicate_vocab.len() {
                return Err(DatasetError::PredicateOutOfRange {
                    id: inst.predicate_id,
                    len: self.predicate_vocab.len(),
                });
            }
            for obj in [&inst.subject, &inst.object] {
                if obj.category_id >= self.object_vocab.len() {
                    return Err(DatasetError::CategoryOutOfRange {
                        id: obj.category_id,
                        len: self.object_vocab.len(),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    /// Instances that carry masks on both objects, as required by the
    /// segmentation-based methods.
    pub fn with_masks(&self) -> impl Iterator<Item = &RelInstance> {
        self.instances
            .iter()
            .filter(|i| i.subject.mask.is_some() && i.object.mask.is_some())
    }
}

/// Test instances whose (subject, predicate, object) triple never occurs
/// in the train split, order preserved.
pub fn derive_zero_shot(
    train: &DatasetSplit,
    test: &DatasetSplit,
) -> Result<DatasetSplit, DatasetError> {
    if train.object_vocab != test.object_vocab {
        return Err(DatasetError::VocabMismatch("object vocabulary differs"));
    }
    if train.predicate_vocab != test.predicate_vocab {
        return Err(DatasetError::VocabMismatch("predicate vocabulary differs"));
    }
    let seen: HashSet<(usize, usize, usize)> =
        train.instances.iter().map(RelInstance::triple).collect();
    let instances = test
        .instances
        .iter()
        .filter(|inst| !seen.contains(&inst.triple()))
        .cloned()
        .collect();
    Ok(DatasetSplit {
        name: SplitName::ZeroShot,
        instances,
        object_vocab: test.object_vocab.clone(),
        predicate_vocab: test.predicate_vocab.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn obj(category_id: usize) -> ObjectInstance {
        ObjectInstance {
            category_id,
            bbox: BBox::new(0, 0, 10, 10).unwrap(),
            mask: None,
        }
    }

    fn inst(id: &str, s: usize, p: usize, o: usize) -> RelInstance {
        RelInstance {
            instance_id: id.to_string(),
            image_id: format!("{id}.png"),
            subject: obj(s),
            object: obj(o),
            predicate_id: p,
        }
    }

    fn split(name: SplitName, instances: Vec<RelInstance>) -> DatasetSplit {
        DatasetSplit {
            name,
            instances,
            object_vocab: vec!["person".into(), "horse".into(), "elephant".into()],
            predicate_vocab: vec!["ride".into(), "on".into()],
        }
    }

    #[test]
    fn zero_shot_keeps_unseen_triples_only() {
        let train = split(SplitName::Train, vec![inst("t0", 0, 0, 1)]);
        let test = split(
            SplitName::Test,
            vec![inst("e0", 0, 0, 1), inst("e1", 0, 0, 2)],
        );
        let zs = derive_zero_shot(&train, &test).unwrap();
        assert_eq!(zs.name, SplitName::ZeroShot);
        assert_eq!(zs.len(), 1);
        assert_eq!(zs.instances[0].instance_id, "e1");
    }

    #[test]
    fn zero_shot_empty_when_test_is_subset() {
        let train = split(
            SplitName::Train,
            vec![inst("t0", 0, 0, 1), inst("t1", 1, 1, 2)],
        );
        let test = split(
            SplitName::Test,
            vec![inst("e0", 0, 0, 1), inst("e1", 1, 1, 2)],
        );
        assert!(derive_zero_shot(&train, &test).unwrap().is_empty());
    }

    #[test]
    fn zero_shot_rejects_vocabulary_mismatch() {
        let train = split(SplitName::Train, vec![]);
        let mut test = split(SplitName::Test, vec![]);
        test.predicate_vocab.push("under".into());
        assert!(matches!(
            derive_zero_shot(&train, &test),
            Err(DatasetError::VocabMismatch(_))
        ));
    }

    // Oracle: brute-force double loop over all (test, train) pairs.
    #[test]
    fn zero_shot_matches_double_loop_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let rand_insts = |rng: &mut ChaCha8Rng, tag: &str, n: usize| -> Vec<RelInstance> {
            (0..n)
                .map(|i| {
                    inst(
                        &format!("{tag}{i}"),
                        rng.random_range(0..3),
                        rng.random_range(0..2),
                        rng.random_range(0..3),
                    )
                })
                .collect()
        };
        for _ in 0..10 {
            let train = split(SplitName::Train, rand_insts(&mut rng, "t", 500));
            let test = split(SplitName::Test, rand_insts(&mut rng, "e", 500));
            let zs = derive_zero_shot(&train, &test).unwrap();

            let expected: Vec<&RelInstance> = test
                .instances
                .iter()
                .filter(|te| train.instances.iter().all(|tr| tr.triple() != te.triple()))
                .collect();
            assert_eq!(zs.len(), expected.len());
            for (got, want) in zs.instances.iter().zip(expected) {
                assert_eq!(got, want);
            }
            // Disjointness holds by construction.
            for z in &zs.instances {
                assert!(train.instances.iter().all(|tr| tr.triple() != z.triple()));
            }
        }
    }

    #[test]
    fn validate_rejects_out_of_range_ids() {
        let bad = split(SplitName::Train, vec![inst("a", 0, 5, 1)]);
        assert!(matches!(
            bad.validate(),
            Err(DatasetError::PredicateOutOfRange { id: 5, .. })
        ));
        let dup = split(
            SplitName::Train,
            vec![inst("a", 0, 0, 1), inst("a", 0, 0, 1)],
        );
        assert!(matches!(
            dup.validate(),
            Err(DatasetError::DuplicateInstanceId(_))
        ));
    }
}

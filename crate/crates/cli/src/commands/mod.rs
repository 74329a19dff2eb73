//! Subcommand implementations and the shared workspace layout.

mod evaluate;
mod predict;
mod preprocess;
mod report;
mod synth;
mod train;
mod tukey;

use std::fmt;
use std::path::{Path, PathBuf};

use relprep_core::dataset::{derive_zero_shot, parse_annotations, DatasetSplit, SplitName};
use relprep_core::transforms::PreprocessMethod;

use crate::config::ConfigFile;
use crate::Cli;

/// Usage problems exit 2, runtime failures exit 1.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(String),
}

impl CliError {
    pub fn usage(message: impl fmt::Display) -> Self {
        CliError::Usage(message.to_string())
    }

    pub fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }

    pub fn single_line(&self) -> String {
        let text = match self {
            CliError::Usage(m) | CliError::Runtime(m) => m,
        };
        text.replace('\n', "; ")
    }
}

impl<E: std::error::Error> From<E> for CliError {
    fn from(err: E) -> Self {
        let mut message = err.to_string();
        let mut source = err.source();
        while let Some(cause) = source {
            message.push_str(&format!(": {cause}"));
            source = cause.source();
        }
        CliError::Runtime(message)
    }
}

pub type CmdResult = Result<(), CliError>;

/// Fixed artifact layout under the chosen output root.
pub struct Workspace {
    pub root: PathBuf,
    pub config: ConfigFile,
}

impl Workspace {
    pub fn dataset_dir(&self, split: SplitName) -> PathBuf {
        self.root.join("datasets").join(split.to_string())
    }

    pub fn images_dir(&self, split: SplitName) -> PathBuf {
        self.dataset_dir(split).join("images")
    }

    pub fn annotations_path(&self, split: SplitName) -> PathBuf {
        self.dataset_dir(split).join("annotations.json")
    }

    pub fn emit_dir(&self, split: SplitName, method: PreprocessMethod) -> PathBuf {
        self.dataset_dir(split).join(method.to_string())
    }

    pub fn models_dir(&self) -> PathBuf {
        self.root.join("models")
    }

    pub fn model_path(&self, method: PreprocessMethod) -> PathBuf {
        self.models_dir().join(format!("{method}.ckpt"))
    }

    pub fn scores_dir(&self) -> PathBuf {
        self.root.join("scores")
    }

    pub fn scores_path(&self, method: PreprocessMethod, split: SplitName) -> PathBuf {
        self.scores_dir().join(format!("{method}-{split}.csv"))
    }

    pub fn reports_dir(&self) -> PathBuf {
        self.root.join("reports")
    }

    pub fn eval_csv_path(&self, method: PreprocessMethod, split: SplitName) -> PathBuf {
        self.reports_dir().join(format!("eval-{method}-{split}.csv"))
    }

    /// Load a split; `zero_shot` is derived from train and test when no
    /// materialized annotation file exists. Returns the split plus the
    /// image root its instances reference.
    pub fn load_split(&self, name: SplitName) -> Result<(DatasetSplit, PathBuf), CliError> {
        match name {
            SplitName::Train | SplitName::Test => {
                let annotations = self.annotations_path(name);
                let images = self.images_dir(name);
                require_file(&annotations)?;
                let (split, _) = parse_annotations(&annotations, &images, name)?;
                Ok((split, images))
            }
            SplitName::ZeroShot => {
                let materialized = self.annotations_path(SplitName::ZeroShot);
                if materialized.is_file() {
                    let images = self.images_dir(SplitName::ZeroShot);
                    let (split, _) =
                        parse_annotations(&materialized, &images, SplitName::ZeroShot)?;
                    return Ok((split, images));
                }
                let (train, _) = self.load_split(SplitName::Train)?;
                let (test, test_images) = self.load_split(SplitName::Test)?;
                let zero_shot = derive_zero_shot(&train, &test)?;
                Ok((zero_shot, test_images))
            }
        }
    }
}

pub fn require_file(path: &Path) -> Result<(), CliError> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::usage(format!(
            "missing input file {}",
            path.display()
        )))
    }
}

pub fn parse_split(raw: &str) -> Result<SplitName, CliError> {
    raw.parse().map_err(CliError::usage)
}

pub fn parse_method(raw: &str) -> Result<PreprocessMethod, CliError> {
    raw.parse::<PreprocessMethod>()
        .map_err(|e| CliError::usage(e.to_string()))
}

fn required(flag: Option<String>, config: &ConfigFile, key: &str) -> Result<String, CliError> {
    flag.or_else(|| config.get(key).map(str::to_string))
        .ok_or_else(|| CliError::usage(format!("--{key} is required")))
}

pub fn run(cli: Cli) -> CmdResult {
    let config = match &cli.config {
        Some(path) => ConfigFile::load(path).map_err(|e| CliError::usage(e.to_string()))?,
        None => ConfigFile::default(),
    };
    let root = cli
        .out
        .or_else(|| config.get("out").map(PathBuf::from))
        .or_else(|| std::env::var_os("RELPREP_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    let workspace = Workspace { root, config };

    match cli.command {
        crate::Command::Synth(args) => synth::run(&workspace, args),
        crate::Command::Preprocess(args) => preprocess::run(&workspace, args),
        crate::Command::Train(args) => train::run(&workspace, args),
        crate::Command::Predict(args) => predict::run(&workspace, args),
        crate::Command::Evaluate(args) => evaluate::run(&workspace, args),
        crate::Command::Tukey(args) => tukey::run(&workspace, args),
        crate::Command::Report(args) => report::run(&workspace, args),
    }
}

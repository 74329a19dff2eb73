use relprep_core::dataset::{generate_synthetic, write_synthetic_dataset, SplitName, SyntheticConfig};

use crate::manifest::ManifestBuilder;
use crate::SynthArgs;

use super::{parse_split, CliError, CmdResult, Workspace};

pub fn run(ws: &Workspace, args: SynthArgs) -> CmdResult {
    let mut manifest = ManifestBuilder::new("synth");
    let n = ws
        .config
        .resolve(args.n, "n", 2000)
        .map_err(|e| CliError::usage(e.to_string()))?;
    let seed = ws
        .config
        .resolve(args.seed, "seed", 0)
        .map_err(|e| CliError::usage(e.to_string()))?;
    let image_size = ws
        .config
        .resolve(args.image_size, "image-size", 96)
        .map_err(|e| CliError::usage(e.to_string()))?;
    let split_name = args
        .split
        .clone()
        .or_else(|| ws.config.get("split").map(str::to_string))
        .unwrap_or_else(|| "train".to_string());
    let split = parse_split(&split_name)?;
    if split == SplitName::ZeroShot {
        return Err(CliError::usage(
            "synth targets train or test; zero_shot is derived from them",
        ));
    }
    if n < 1 {
        return Err(CliError::usage(format!("--n must be >= 1, got {n}")));
    }

    let config = SyntheticConfig {
        n,
        seed,
        image_size,
    };
    let (dataset, images) = generate_synthetic(&config, split)?;
    let dir = ws.dataset_dir(split);
    write_synthetic_dataset(&dataset, &images, &dir)?;
    log::info!(
        "synth: wrote {} instances to {}",
        dataset.len(),
        dir.display()
    );

    manifest
        .setting("n", n)
        .setting("image-size", image_size)
        .setting("split", split)
        .seed(seed)
        .output(dir);
    manifest.write(&ws.root).map_err(|e| CliError::Runtime(format!("{e:#}")))?;
    Ok(())
}

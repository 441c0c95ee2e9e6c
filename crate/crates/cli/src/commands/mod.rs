mod evaluate;
mod ingest;
mod resolve;
mod selpref;
mod synth;
mod train;
mod verify;

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use anyhow::Context;
use isrl::prnsfm::{load_model, PrnsfmModel};

use crate::config::{self, PipelineConfig};
use crate::manifest::{self, Manifest};
use crate::{Cli, Command, Failure, Global, SelprefFlags};

pub fn run(cli: Cli) -> anyhow::Result<()> {
    let config = PipelineConfig::load(cli.global.config.as_deref())?;
    let global = &cli.global;
    match cli.command {
        Command::Ingest(args) => ingest::run(args, config, global),
        Command::Train(args) => train::run(args, config, global),
        Command::Selpref(args) => selpref::run(args, config, global),
        Command::Resolve(args) => resolve::run(args, config, global),
        Command::Evaluate(args) => evaluate::run(args, config, global),
        Command::Verify(args) => verify::run(args, config, global),
        Command::Synth(args) => synth::run(args, config, global),
    }
}

fn open(path: &Path) -> anyhow::Result<BufReader<File>> {
    let f = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    Ok(BufReader::new(f))
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    }
    let f = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(BufWriter::new(f))
}

/// Flushes a writer, surfacing errors that `Drop` would swallow.
fn finish(mut w: BufWriter<File>) -> anyhow::Result<()> {
    use std::io::Write;
    w.flush()?;
    Ok(())
}

fn read_model(path: &Path) -> anyhow::Result<PrnsfmModel> {
    let model = load_model(open(path)?).with_context(|| format!("loading model {}", path.display()))?;
    log::info!(
        "loaded {} model with {} output units from {}",
        model.mode(),
        model.num_outputs(),
        path.display()
    );
    Ok(model)
}

/// Output path that may come from a flag or the config.
fn output(path: &Option<PathBuf>, role: &str) -> anyhow::Result<PathBuf> {
    path.clone().ok_or_else(|| {
        Failure::Usage(format!(
            "no {role} output path given (flag or [paths] {role} in the config)"
        ))
        .into()
    })
}

fn apply_selpref(config: &mut PipelineConfig, flags: &SelprefFlags) {
    config::set(&mut config.selpref.k, flags.k);
    config::set(&mut config.selpref.depth, flags.depth);
    config.selpref.expand_eos |= flags.expand_eos;
}

fn write_manifest(manifest: &Manifest, global: &Global, primary: &Path) -> anyhow::Result<()> {
    let path = global
        .manifest
        .clone()
        .unwrap_or_else(|| manifest::default_path(primary));
    manifest.write(&path)
}

fn threads(requested: usize) -> usize {
    if requested > 0 {
        requested
    } else {
        std::thread::available_parallelism().map_or(1, |n| n.get())
    }
}

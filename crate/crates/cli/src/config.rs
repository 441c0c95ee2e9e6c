//! Pipeline configuration: a TOML file whose every field has a default,
//! overridden by command-line flags.

use std::path::{Path, PathBuf};

use clap::ValueEnum;
use isrl::frames::{FrameFormat, InputMode};
use isrl::prnsfm::{ModelConfig, TrainConfig};
use isrl::resolver::{CandidateFilter, ResolverConfig};
use isrl::selpref::SelPrefConfig;
use serde::{Deserialize, Serialize};

use crate::Failure;

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub paths: Paths,
    pub data: DataSettings,
    pub model: ModelSettings,
    pub training: TrainingSettings,
    pub selpref: SelPrefSettings,
    pub resolver: ResolverSettings,
    pub seeds: Seeds,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub corpus: Option<PathBuf>,
    pub frames: Option<PathBuf>,
    pub vocab: Option<PathBuf>,
    pub lexicon: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub triples: Option<PathBuf>,
    pub documents: Option<PathBuf>,
    pub queries: Option<PathBuf>,
    pub gold: Option<PathBuf>,
    pub predictions: Option<PathBuf>,
}

impl Paths {
    /// Relative paths in a config file are relative to that file.
    fn rebase(&mut self, base: &Path) {
        for slot in [
            &mut self.corpus,
            &mut self.frames,
            &mut self.vocab,
            &mut self.lexicon,
            &mut self.embeddings,
            &mut self.model,
            &mut self.triples,
            &mut self.documents,
            &mut self.queries,
            &mut self.gold,
            &mut self.predictions,
        ] {
            if let Some(p) = slot.as_mut().filter(|p| p.is_relative()) {
                *p = base.join(&*p);
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum CorpusFormat {
    /// Column corpus (CoNLL-2009 layout).
    Columns,
    /// Frame-record lines.
    Records,
}

impl From<CorpusFormat> for FrameFormat {
    fn from(f: CorpusFormat) -> Self {
        match f {
            CorpusFormat::Columns => FrameFormat::Columns,
            CorpusFormat::Records => FrameFormat::Records,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataSettings {
    pub format: CorpusFormat,
    /// Sentences with at least this many tokens are skipped; 0 keeps all.
    pub max_sentence_tokens: usize,
    pub min_count: u64,
}

impl Default for DataSettings {
    fn default() -> Self {
        DataSettings {
            format: CorpusFormat::Columns,
            max_sentence_tokens: 100,
            min_count: 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Architecture {
    /// One embedding per word:label unit.
    Joint,
    /// Concatenated word and label embeddings.
    Separate,
}

impl From<Architecture> for InputMode {
    fn from(a: Architecture) -> Self {
        match a {
            Architecture::Joint => InputMode::Joint,
            Architecture::Separate => InputMode::Separate,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSettings {
    pub mode: Architecture,
    pub word_dim: usize,
    pub label_dim: usize,
    pub joint_dim: usize,
    pub init_range: f64,
}

impl Default for ModelSettings {
    fn default() -> Self {
        let m = ModelConfig::default();
        ModelSettings {
            mode: Architecture::Separate,
            word_dim: m.word_dim,
            label_dim: m.label_dim,
            joint_dim: m.joint_dim,
            init_range: m.init_range,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingSettings {
    pub epochs: usize,
    pub max_grad_norm: Option<f64>,
    pub freeze_word_embeddings: bool,
}

impl Default for TrainingSettings {
    fn default() -> Self {
        TrainingSettings {
            epochs: TrainConfig::default().epochs,
            max_grad_norm: None,
            freeze_word_embeddings: false,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelPrefSettings {
    pub k: usize,
    pub depth: usize,
    pub expand_eos: bool,
}

impl Default for SelPrefSettings {
    fn default() -> Self {
        let s = SelPrefConfig::default();
        SelPrefSettings {
            k: s.k,
            depth: s.depth,
            expand_eos: s.expand_eos,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum CandidateSet {
    /// Nouns and pronouns (untagged tokens are kept).
    NominalHeads,
    AllTokens,
}

impl From<CandidateSet> for CandidateFilter {
    fn from(c: CandidateSet) -> Self {
        match c {
            CandidateSet::NominalHeads => CandidateFilter::NominalHeads,
            CandidateSet::AllTokens => CandidateFilter::AllTokens,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ResolverSettings {
    pub threshold: f64,
    pub recency_magnitude: f64,
    pub recency_decay: f64,
    pub window: usize,
    pub candidates: CandidateSet,
    pub threshold_on_raw: bool,
    pub baseline_only: bool,
    /// Worker threads; 0 uses every available core.
    pub threads: usize,
}

impl Default for ResolverSettings {
    fn default() -> Self {
        let r = ResolverConfig::default();
        ResolverSettings {
            threshold: r.threshold,
            recency_magnitude: r.recency_magnitude,
            recency_decay: r.recency_decay,
            window: r.window_size,
            candidates: CandidateSet::NominalHeads,
            threshold_on_raw: r.threshold_on_raw,
            baseline_only: r.baseline_only,
            threads: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Seeds {
    /// Weight initialization.
    pub model: u64,
    /// Per-epoch frame order.
    pub shuffle: u64,
    /// Rows for words missing from pretrained vectors.
    pub embeddings: u64,
    /// Random models and coordinate samples in `verify`.
    pub verify: u64,
    /// Synthetic fixture generation.
    pub synth: u64,
}

impl Default for Seeds {
    fn default() -> Self {
        Seeds {
            model: ModelConfig::default().seed,
            shuffle: TrainConfig::default().shuffle_seed,
            embeddings: 1,
            verify: 0,
            synth: 7,
        }
    }
}

impl PipelineConfig {
    pub fn load(path: Option<&Path>) -> anyhow::Result<Self> {
        let Some(path) = path else {
            return Ok(PipelineConfig::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Input(format!("cannot read config {}: {e}", path.display())))?;
        let mut config: PipelineConfig =
            toml::from_str(&text).map_err(|e| Failure::Config(format!("{}: {}", path.display(), e.message())))?;
        config.paths.rebase(path.parent().unwrap_or(Path::new("")));
        Ok(config)
    }

    pub fn model_config(&self) -> ModelConfig {
        ModelConfig {
            mode: self.model.mode.into(),
            word_dim: self.model.word_dim,
            label_dim: self.model.label_dim,
            joint_dim: self.model.joint_dim,
            seed: self.seeds.model,
            init_range: self.model.init_range,
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.training.epochs,
            shuffle_seed: self.seeds.shuffle,
            max_grad_norm: self.training.max_grad_norm,
            freeze_word_embeddings: self.training.freeze_word_embeddings,
            ..TrainConfig::default()
        }
    }

    pub fn selpref_config(&self) -> SelPrefConfig {
        SelPrefConfig {
            k: self.selpref.k,
            depth: self.selpref.depth,
            expand_eos: self.selpref.expand_eos,
        }
    }

    pub fn resolver_config(&self) -> ResolverConfig {
        ResolverConfig {
            threshold: self.resolver.threshold,
            recency_magnitude: self.resolver.recency_magnitude,
            recency_decay: self.resolver.recency_decay,
            window_size: self.resolver.window,
            selpref: self.selpref_config(),
            baseline_only: self.resolver.baseline_only,
            candidate_filter: self.resolver.candidates.into(),
            threshold_on_raw: self.resolver.threshold_on_raw,
        }
    }
}

/// Overwrites `slot` when a flag was given.
pub fn set<T>(slot: &mut T, flag: Option<T>) {
    if let Some(v) = flag {
        *slot = v;
    }
}

/// Like [`set`] for optional settings.
pub fn set_some<T>(slot: &mut Option<T>, flag: Option<T>) {
    if flag.is_some() {
        *slot = flag;
    }
}

/// The path for `role`, which must be configured and exist.
pub fn existing(path: &Option<PathBuf>, role: &str) -> anyhow::Result<PathBuf> {
    let path = path
        .clone()
        .ok_or_else(|| Failure::Usage(format!("no {role} path given (flag or [paths] {role} in the config)")))?;
    if !path.exists() {
        return Err(Failure::Input(format!("{role} file {} does not exist", path.display())).into());
    }
    Ok(path)
}

/// An optional input: checked for existence only when configured.
pub fn existing_opt(path: &Option<PathBuf>, role: &str) -> anyhow::Result<Option<PathBuf>> {
    match path {
        Some(_) => existing(path, role).map(Some),
        None => Ok(None),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_mirror_library_constants() {
        let c = PipelineConfig::default();
        assert_eq!(c.selpref.k, 1);
        assert_eq!(c.selpref.depth, 4);
        assert_eq!(c.resolver.threshold, 0.0003);
        assert_eq!(c.resolver.recency_magnitude, 0.00005);
        assert_eq!(c.resolver.recency_decay, 0.5);
        assert_eq!(c.resolver.window, 3);
        assert_eq!(c.training.epochs, 120);
        assert_eq!((c.model.word_dim, c.model.label_dim), (50, 16));
        assert_eq!(c.data.min_count, 2);
    }

    #[test]
    fn partial_file_keeps_other_defaults() {
        let c: PipelineConfig = toml::from_str("[selpref]\nk = 3\n[model]\nmode = \"joint\"\n").unwrap();
        assert_eq!(c.selpref.k, 3);
        assert_eq!(c.selpref.depth, 4);
        assert_eq!(c.model.mode, Architecture::Joint);
        assert_eq!(c.resolver.window, 3);
    }

    #[test]
    fn relative_paths_follow_the_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("pipeline.toml");
        std::fs::write(&file, "[paths]\nmodel = \"model.bin\"\ngold = \"/abs/gold.tsv\"\n").unwrap();
        let c = PipelineConfig::load(Some(&file)).unwrap();
        assert_eq!(c.paths.model, Some(dir.path().join("model.bin")));
        assert_eq!(c.paths.gold, Some(PathBuf::from("/abs/gold.tsv")));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<PipelineConfig>("[selpref]\nwidth = 3\n").is_err());
    }

    #[test]
    fn round_trips_through_toml() {
        let mut c = PipelineConfig::default();
        c.paths.model = Some("m.bin".into());
        c.training.max_grad_norm = Some(5.0);
        let back: PipelineConfig = toml::from_str(&toml::to_string(&c).unwrap()).unwrap();
        assert_eq!(back.paths.model, c.paths.model);
        assert_eq!(back.training.max_grad_norm, Some(5.0));
    }
}

//! Predictive recurrent frame models.
//!
//! Both variants read a frame left to right and predict the next
//! `word:label` unit (or EOS) with `softmax(h_t W + b)` over the joint unit
//! inventory. They differ only in how a unit is embedded: one table over
//! joint units, or a word table and a label table whose rows are
//! concatenated.

mod persist;
mod precise;
mod train;

pub use persist::{load_model, load_model_checked, save_model, MODEL_MAGIC, MODEL_VERSION};
pub use precise::Perturbation;
pub use train::{train, FrameObjective, TrainConfig, TrainReport};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::frames::{ArgumentUnit, DataError, EncodedSequence, FrameSequence, InputMode, Vocabulary};
use crate::nn::{lstm_step, softmax_layer, LstmParams, LstmState, Matrix, NnError, SoftmaxParams};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("invalid prefix: {0}")]
    InvalidPrefix(String),
    #[error("configuration: {0}")]
    Config(String),
    #[error("non-finite loss in epoch {epoch} on frame {frame}")]
    NonFiniteLoss { epoch: usize, frame: usize },
    #[error("model file: {0}")]
    Format(String),
    #[error("vocabulary checksum mismatch: model has {model}, vocabulary has {vocabulary}")]
    Checksum { model: String, vocabulary: String },
}

/// Architecture and initialization settings.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub mode: InputMode,
    /// Word embedding width (separate mode).
    pub word_dim: usize,
    /// Label embedding width (separate mode).
    pub label_dim: usize,
    /// Joint unit embedding width (joint mode).
    pub joint_dim: usize,
    pub seed: u64,
    /// LSTM and softmax weights are drawn from `U[-init_range, init_range]`.
    pub init_range: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            mode: InputMode::Separate,
            word_dim: 50,
            label_dim: 16,
            joint_dim: 64,
            seed: 1,
            init_range: 0.08,
        }
    }
}

impl ModelConfig {
    pub fn joint(dim: usize) -> Self {
        ModelConfig {
            mode: InputMode::Joint,
            joint_dim: dim,
            ..Self::default()
        }
    }

    pub fn separate(word_dim: usize, label_dim: usize) -> Self {
        ModelConfig {
            mode: InputMode::Separate,
            word_dim,
            label_dim,
            ..Self::default()
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_init_range(mut self, range: f64) -> Self {
        self.init_range = range;
        self
    }

    /// LSTM input width.
    pub fn input_size(&self) -> usize {
        match self.mode {
            InputMode::Joint => self.joint_dim,
            InputMode::Separate => self.word_dim + self.label_dim,
        }
    }

    /// Hidden width, equal to the input width.
    pub fn hidden_size(&self) -> usize {
        self.input_size()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Embeddings {
    Joint(Matrix),
    Separate { words: Matrix, labels: Matrix },
}

/// Model input at one time step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Token {
    Joint(usize),
    Separate { word: usize, label: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrnsfmModel {
    config: ModelConfig,
    vocab: Vocabulary,
    embeddings: Embeddings,
    lstm: LstmParams,
    softmax: SoftmaxParams,
}

impl PrnsfmModel {
    /// Seeded random initialization. `pretrained` replaces the word table
    /// (separate mode only; `|V_word| × word_dim`).
    pub fn new(config: ModelConfig, vocab: Vocabulary, pretrained: Option<&Matrix>) -> Result<Self, ModelError> {
        let input = config.input_size();
        if input == 0 {
            return Err(ModelError::Config("embedding width must be positive".into()));
        }
        if !(config.init_range >= 0.0 && config.init_range.is_finite()) {
            return Err(ModelError::Config(format!("bad init range {}", config.init_range)));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let embeddings = match config.mode {
            InputMode::Joint => {
                if pretrained.is_some() {
                    return Err(ModelError::Config(
                        "pretrained word embeddings require separate mode".into(),
                    ));
                }
                let d = config.joint_dim;
                Embeddings::Joint(Matrix::uniform(vocab.num_units(), d, 0.5 / d as f64, &mut rng))
            }
            InputMode::Separate => {
                if config.word_dim == 0 || config.label_dim == 0 {
                    return Err(ModelError::Config("word and label widths must be positive".into()));
                }
                let (dw, dl) = (config.word_dim, config.label_dim);
                let mut words = Matrix::uniform(vocab.num_words(), dw, 0.5 / dw as f64, &mut rng);
                let labels = Matrix::uniform(vocab.num_labels(), dl, 0.5 / dl as f64, &mut rng);
                if let Some(p) = pretrained {
                    if p.shape() != words.shape() {
                        return Err(ModelError::Config(format!(
                            "pretrained embeddings are {:?}, expected {:?}",
                            p.shape(),
                            words.shape()
                        )));
                    }
                    words = p.clone();
                }
                Embeddings::Separate { words, labels }
            }
        };
        let lstm = LstmParams::uniform(input, input, config.init_range, &mut rng);
        let softmax = SoftmaxParams::uniform(input, vocab.num_units(), config.init_range, &mut rng);
        Ok(PrnsfmModel {
            config,
            vocab,
            embeddings,
            lstm,
            softmax,
        })
    }

    pub(crate) fn from_parts(
        config: ModelConfig,
        vocab: Vocabulary,
        embeddings: Embeddings,
        lstm: LstmParams,
        softmax: SoftmaxParams,
    ) -> Self {
        PrnsfmModel {
            config,
            vocab,
            embeddings,
            lstm,
            softmax,
        }
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn mode(&self) -> InputMode {
        self.config.mode
    }

    pub fn embeddings(&self) -> &Embeddings {
        &self.embeddings
    }

    pub fn lstm(&self) -> &LstmParams {
        &self.lstm
    }

    pub fn lstm_mut(&mut self) -> &mut LstmParams {
        &mut self.lstm
    }

    pub fn softmax(&self) -> &SoftmaxParams {
        &self.softmax
    }

    pub fn softmax_mut(&mut self) -> &mut SoftmaxParams {
        &mut self.softmax
    }

    /// Output vocabulary size.
    pub fn num_outputs(&self) -> usize {
        self.vocab.num_units()
    }

    pub fn tensor_names(&self) -> Vec<String> {
        let mut names: Vec<String> = match self.embeddings {
            Embeddings::Joint(_) => vec!["embedding.units".into()],
            Embeddings::Separate { .. } => vec!["embedding.words".into(), "embedding.labels".into()],
        };
        names.extend(LstmParams::TENSOR_NAMES.iter().map(|s| s.to_string()));
        names.push("softmax.w".into());
        names.push("softmax.b".into());
        names
    }

    /// All parameters in a fixed order (see [`PrnsfmModel::tensor_names`]).
    pub fn tensors(&self) -> Vec<&Matrix> {
        let mut out: Vec<&Matrix> = match &self.embeddings {
            Embeddings::Joint(m) => vec![m],
            Embeddings::Separate { words, labels } => vec![words, labels],
        };
        out.extend(self.lstm.tensors());
        out.push(&self.softmax.w);
        out.push(&self.softmax.b);
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Matrix> {
        let mut out: Vec<&mut Matrix> = match &mut self.embeddings {
            Embeddings::Joint(m) => vec![m],
            Embeddings::Separate { words, labels } => vec![words, labels],
        };
        out.extend(self.lstm.tensors_mut());
        out.push(&mut self.softmax.w);
        out.push(&mut self.softmax.b);
        out
    }

    pub fn token_for_unit_id(&self, id: usize) -> Token {
        match self.config.mode {
            InputMode::Joint => Token::Joint(id),
            InputMode::Separate => {
                let (word, label) = self.vocab.unit_parts(id);
                Token::Separate { word, label }
            }
        }
    }

    pub fn token_for_unit(&self, unit: &ArgumentUnit) -> Token {
        match self.config.mode {
            InputMode::Joint => Token::Joint(self.vocab.unit_id_or_unk(&unit.word, &unit.label)),
            InputMode::Separate => Token::Separate {
                word: if unit.is_eos() {
                    Vocabulary::EOS
                } else {
                    self.vocab.word_id_or_unk(&unit.word)
                },
                label: self.vocab.label_id_or_unk(&unit.label),
            },
        }
    }

    /// Input tokens of every position of an encoded frame.
    pub fn tokens_for_encoded(&self, encoded: &EncodedSequence) -> Result<Vec<Token>, ModelError> {
        match (encoded, self.config.mode) {
            (EncodedSequence::Joint { units }, InputMode::Joint) => {
                Ok(units.iter().map(|&u| Token::Joint(u)).collect())
            }
            (EncodedSequence::Separate { words, labels, .. }, InputMode::Separate) => Ok(words
                .iter()
                .zip(labels)
                .map(|(&word, &label)| Token::Separate { word, label })
                .collect()),
            (enc, mode) => Err(ModelError::Config(format!(
                "frame encoded for {} mode, model is {mode}",
                enc.mode()
            ))),
        }
    }

    pub fn embed(&self, token: Token) -> Vec<f64> {
        match (&self.embeddings, token) {
            (Embeddings::Joint(m), Token::Joint(u)) => m.row(u).to_vec(),
            (Embeddings::Separate { words, labels }, Token::Separate { word, label }) => {
                let mut x = Vec::with_capacity(words.cols() + labels.cols());
                x.extend_from_slice(words.row(word));
                x.extend_from_slice(labels.row(label));
                x
            }
            (Embeddings::Joint(_), Token::Separate { .. }) | (Embeddings::Separate { .. }, Token::Joint(_)) => {
                unreachable!("token kind always follows the model mode")
            }
        }
    }

    /// One recurrent step from `state` (the zero state when `None`).
    pub fn step(&self, state: Option<&LstmState>, token: Token) -> Result<(LstmState, Vec<f64>), ModelError> {
        let zero;
        let prev = match state {
            Some(s) => s,
            None => {
                zero = LstmState::zeros(self.lstm.hidden_size());
                &zero
            }
        };
        let next = lstm_step(&self.embed(token), prev, &self.lstm)?;
        let dist = softmax_layer(&next.h, &self.softmax);
        Ok((next, dist))
    }

    /// `P(next unit | prefix)` over the joint inventory.
    pub fn next_argument_distribution(&self, prefix: &[ArgumentUnit]) -> Result<Vec<f64>, ModelError> {
        validate_prefix(prefix)?;
        let mut state = None;
        let mut dist = Vec::new();
        for unit in prefix {
            let (s, d) = self.step(state.as_ref(), self.token_for_unit(unit))?;
            state = Some(s);
            dist = d;
        }
        Ok(dist)
    }

    /// `sum_t ln P(unit_t | units_<t)` including the EOS step.
    pub fn sequence_log_probability(&self, frame: &FrameSequence) -> Result<f64, ModelError> {
        let units = frame.units();
        validate_prefix(&units[..units.len() - 1])?;
        let mut state = None;
        let mut total = 0.0;
        for pair in units.windows(2) {
            let (s, dist) = self.step(state.as_ref(), self.token_for_unit(&pair[0]))?;
            state = Some(s);
            let target = self.vocab.unit_id_or_unk(&pair[1].word, &pair[1].label);
            total += dist[target].ln();
        }
        Ok(total)
    }
}

fn validate_prefix(prefix: &[ArgumentUnit]) -> Result<(), ModelError> {
    let first = prefix
        .first()
        .ok_or_else(|| ModelError::InvalidPrefix("empty prefix".into()))?;
    if !first.is_predicate() {
        return Err(ModelError::InvalidPrefix(format!(
            "prefix starts with {first}, not a predicate"
        )));
    }
    if prefix.iter().any(ArgumentUnit::is_eos) {
        return Err(ModelError::InvalidPrefix("EOS inside prefix".into()));
    }
    Ok(())
}

/// Anything that yields next-unit distributions over a vocabulary's joint
/// inventory, one unit at a time. Selectional preference inference is
/// written against this.
pub trait ArgumentModel {
    type State: Clone;

    fn vocabulary(&self) -> &Vocabulary;

    /// Feeds joint unit `unit` after `state` (`None` starts a sequence).
    fn advance(&self, state: Option<&Self::State>, unit: usize) -> Result<(Self::State, Vec<f64>), ModelError>;

    /// Distribution after a whole prefix of unit ids, recomputed from scratch.
    fn distribution_after(&self, prefix: &[usize]) -> Result<Vec<f64>, ModelError> {
        let mut state: Option<Self::State> = None;
        let mut dist = None;
        for &unit in prefix {
            let (s, d) = self.advance(state.as_ref(), unit)?;
            state = Some(s);
            dist = Some(d);
        }
        dist.ok_or_else(|| ModelError::InvalidPrefix("empty prefix".into()))
    }
}

impl ArgumentModel for PrnsfmModel {
    type State = LstmState;

    fn vocabulary(&self) -> &Vocabulary {
        &self.vocab
    }

    fn advance(&self, state: Option<&LstmState>, unit: usize) -> Result<(LstmState, Vec<f64>), ModelError> {
        if unit == Vocabulary::EOS {
            return Err(ModelError::InvalidPrefix("EOS inside prefix".into()));
        }
        if unit >= self.num_outputs() {
            return Err(ModelError::InvalidPrefix(format!("unit id {unit} out of range")));
        }
        self.step(state, self.token_for_unit_id(unit))
    }
}

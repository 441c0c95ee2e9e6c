//! Semantic frames as EOS-terminated unit sequences, and the resources built
//! from them.

mod embeddings;
mod encode;
mod parse;
mod verbmap;
mod vocab;

pub use embeddings::{load_pretrained_embeddings, Coverage, PretrainedEmbeddings};
pub use encode::{decode_units, encode_frame, EncodedSequence, InputMode};
pub use parse::{parse_frames, write_frame_records, FrameFormat, ParseOptions, ParsedCorpus};
pub use verbmap::{build_verb_map, Lexicon, VerbForm, VerbMap};
pub use vocab::{build_vocabularies, Vocabulary, WordForm};

use std::fmt;

use thiserror::Error;

pub const PRED_LABEL: &str = "PRED";
pub const EOS_LABEL: &str = "EOS";
/// Sentinel word carried by every EOS unit.
pub const EOS_WORD: &str = "<eos>";
pub const UNK_WORD: &str = "<unk>";
pub const UNK_LABEL: &str = "<unk>";

/// Frames with more arguments are truncated on construction.
pub const MAX_ARGUMENTS: usize = 9;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid frame: {0}")]
    InvalidFrame(String),
    #[error("vector dimensionality mismatch on line {line}: expected {expected}, found {found}")]
    Dimension { line: usize, expected: usize, found: usize },
    #[error("vocabulary: {0}")]
    Vocabulary(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl DataError {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        DataError::Parse {
            line,
            message: message.into(),
        }
    }
}

/// A `word:label` unit of a frame sequence.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ArgumentUnit {
    pub word: String,
    pub label: String,
}

impl ArgumentUnit {
    pub fn new(word: impl Into<String>, label: impl Into<String>) -> Self {
        ArgumentUnit {
            word: word.into(),
            label: label.into(),
        }
    }

    pub fn predicate(word: impl Into<String>) -> Self {
        Self::new(word, PRED_LABEL)
    }

    pub fn eos() -> Self {
        Self::new(EOS_WORD, EOS_LABEL)
    }

    pub fn is_eos(&self) -> bool {
        self.label == EOS_LABEL
    }

    pub fn is_predicate(&self) -> bool {
        self.label == PRED_LABEL
    }
}

impl fmt::Display for ArgumentUnit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_eos() {
            f.write_str(EOS_LABEL)
        } else {
            write!(f, "{}:{}", self.word, self.label)
        }
    }
}

/// `[pred:PRED, arg_1, ..., arg_n, EOS]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameSequence {
    units: Vec<ArgumentUnit>,
    source_id: String,
}

impl FrameSequence {
    /// Builds a frame from a predicate and its arguments in textual order,
    /// appending EOS. More than [`MAX_ARGUMENTS`] arguments are truncated.
    pub fn new(
        source_id: impl Into<String>,
        predicate: impl Into<String>,
        mut arguments: Vec<ArgumentUnit>,
    ) -> Result<Self, DataError> {
        let source_id = source_id.into();
        let predicate = predicate.into();
        if predicate.is_empty() {
            return Err(DataError::InvalidFrame(format!("{source_id}: empty predicate")));
        }
        if let Some(bad) = arguments.iter().find(|a| a.is_eos() || a.is_predicate()) {
            return Err(DataError::InvalidFrame(format!(
                "{source_id}: reserved label on argument {bad}"
            )));
        }
        if let Some(bad) = arguments.iter().find(|a| a.word.is_empty() || a.label.is_empty()) {
            return Err(DataError::InvalidFrame(format!(
                "{source_id}: empty word or label in {bad:?}"
            )));
        }
        if arguments.len() > MAX_ARGUMENTS {
            log::warn!(
                "frame {source_id} has {} arguments, truncated to {MAX_ARGUMENTS}",
                arguments.len()
            );
            arguments.truncate(MAX_ARGUMENTS);
        }
        let mut units = Vec::with_capacity(arguments.len() + 2);
        units.push(ArgumentUnit::predicate(predicate));
        units.extend(arguments);
        units.push(ArgumentUnit::eos());
        Ok(FrameSequence { units, source_id })
    }

    /// Validates an already assembled unit list.
    pub fn from_units(source_id: impl Into<String>, units: Vec<ArgumentUnit>) -> Result<Self, DataError> {
        let source_id = source_id.into();
        let n = units.len();
        if n < 2 {
            return Err(DataError::InvalidFrame(format!("{source_id}: fewer than two units")));
        }
        if !units[0].is_predicate() {
            return Err(DataError::InvalidFrame(format!("{source_id}: first unit is not PRED")));
        }
        if !units[n - 1].is_eos() {
            return Err(DataError::InvalidFrame(format!("{source_id}: last unit is not EOS")));
        }
        let arguments = units[1..n - 1].to_vec();
        let frame = Self::new(source_id, units[0].word.clone(), arguments)?;
        Ok(frame)
    }

    pub fn units(&self) -> &[ArgumentUnit] {
        &self.units
    }

    pub fn source_id(&self) -> &str {
        &self.source_id
    }

    pub fn predicate(&self) -> &str {
        &self.units[0].word
    }

    pub fn arguments(&self) -> &[ArgumentUnit] {
        &self.units[1..self.units.len() - 1]
    }

    pub fn len(&self) -> usize {
        self.units.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

impl fmt::Display for FrameSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, u) in self.units.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{u}")?;
        }
        f.write_str("]")
    }
}

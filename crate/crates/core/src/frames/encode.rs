use super::{ArgumentUnit, FrameSequence, Vocabulary};

/// Input representation of a model variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InputMode {
    /// One embedding per `word:label` unit.
    Joint,
    /// Separate word and label embeddings, concatenated.
    Separate,
}

impl std::fmt::Display for InputMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            InputMode::Joint => "joint",
            InputMode::Separate => "separate",
        })
    }
}

impl std::str::FromStr for InputMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "joint" | "1" => Ok(InputMode::Joint),
            "separate" | "2" => Ok(InputMode::Separate),
            other => Err(format!("unknown model mode `{other}`")),
        }
    }
}

/// A frame as index streams. `units` always holds joint-unit ids (the
/// prediction targets); separate mode adds parallel word and label streams.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EncodedSequence {
    Joint {
        units: Vec<usize>,
    },
    Separate {
        words: Vec<usize>,
        labels: Vec<usize>,
        units: Vec<usize>,
    },
}

impl EncodedSequence {
    pub fn mode(&self) -> InputMode {
        match self {
            EncodedSequence::Joint { .. } => InputMode::Joint,
            EncodedSequence::Separate { .. } => InputMode::Separate,
        }
    }

    pub fn units(&self) -> &[usize] {
        match self {
            EncodedSequence::Joint { units } | EncodedSequence::Separate { units, .. } => units,
        }
    }

    pub fn len(&self) -> usize {
        self.units().len()
    }

    pub fn is_empty(&self) -> bool {
        self.units().is_empty()
    }
}

pub fn encode_frame(frame: &FrameSequence, vocab: &Vocabulary, mode: InputMode) -> EncodedSequence {
    let units: Vec<usize> = frame
        .units()
        .iter()
        .map(|u| vocab.unit_id_or_unk(&u.word, &u.label))
        .collect();
    match mode {
        InputMode::Joint => EncodedSequence::Joint { units },
        InputMode::Separate => {
            let words = frame
                .units()
                .iter()
                .map(|u| {
                    if u.is_eos() {
                        Vocabulary::EOS
                    } else {
                        vocab.word_id_or_unk(&u.word)
                    }
                })
                .collect();
            let labels = frame.units().iter().map(|u| vocab.label_id_or_unk(&u.label)).collect();
            EncodedSequence::Separate { words, labels, units }
        }
    }
}

/// Maps an encoded sequence back to units. Separate sequences decode from
/// their word and label streams, joint ones from the unit stream.
pub fn decode_units(encoded: &EncodedSequence, vocab: &Vocabulary) -> Vec<ArgumentUnit> {
    match encoded {
        EncodedSequence::Joint { units } => units.iter().map(|&u| vocab.unit(u)).collect(),
        EncodedSequence::Separate { words, labels, .. } => words
            .iter()
            .zip(labels)
            .map(|(&w, &l)| ArgumentUnit::new(vocab.word(w), vocab.label(l)))
            .collect(),
    }
}

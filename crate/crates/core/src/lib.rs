//! Recurrent semantic frame models.
//!
//! Frames are modelled as sequences `[pred:PRED, w1:l1, ..., EOS]`. An LSTM
//! predicts the next `word:label` unit given the prefix; selectional
//! preferences `P(w:l | p:PRED)` are obtained by summing over a pruned tree of
//! likely argument prefixes, and those preferences drive implicit role
//! resolution in discourse.
//!
//! Module map:
//!
//! * [`frames`]: corpus ingestion, vocabularies, encoding, word vectors, verb lexicon
//! * [`nn`]: dense kernel (LSTM, softmax, NLL, BPTT, AdaDelta, gradient checking)
//! * [`prnsfm`]: the joint- and separate-embedding sequence models
//! * [`selpref`]: tree marginalization and its exhaustive oracle
//! * [`resolver`]: context windows, explicit fallback, recency, selection
//! * [`eval`]: Dice scoring and precision / recall / F1
//! * [`synthetic`]: generated grammar corpora and discourse fixtures

pub mod eval;
pub mod frames;
pub mod nn;
pub mod prnsfm;
pub mod resolver;
pub mod selpref;
pub mod synthetic;

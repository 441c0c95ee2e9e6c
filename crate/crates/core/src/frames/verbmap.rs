use std::collections::{BTreeMap, HashSet};
use std::io::BufRead;

use super::{DataError, FrameSequence};

/// Nominal lemma → associated verb forms, as listed in a lexicon file
/// (`nominal<TAB>verb1,verb2,...`). Repeated nominals are merged.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Lexicon {
    entries: BTreeMap<String, Vec<String>>,
}

impl Lexicon {
    pub fn read<R: BufRead>(reader: R) -> Result<Self, DataError> {
        let mut lexicon = Lexicon::default();
        for (no, line) in reader.lines().enumerate() {
            let line = line?;
            let line = line.trim_end();
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (nominal, verbs) = line
                .split_once('\t')
                .ok_or_else(|| DataError::parse(no + 1, "expected nominal<TAB>verb,verb,..."))?;
            let nominal = nominal.trim();
            if nominal.is_empty() {
                return Err(DataError::parse(no + 1, "empty nominal lemma"));
            }
            let forms = lexicon.entries.entry(nominal.to_owned()).or_default();
            for verb in verbs.split(',').map(str::trim).filter(|v| !v.is_empty()) {
                if !forms.iter().any(|f| f == verb) {
                    forms.push(verb.to_owned());
                }
            }
        }
        Ok(lexicon)
    }

    pub fn insert(&mut self, nominal: &str, verbs: &[&str]) {
        let forms = self.entries.entry(nominal.to_owned()).or_default();
        for v in verbs {
            if !forms.iter().any(|f| f == v) {
                forms.push((*v).to_owned());
            }
        }
    }

    pub fn verbs(&self, nominal: &str) -> &[String] {
        self.entries.get(nominal).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[String])> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerbForm {
    pub form: String,
    /// Whether the form occurs as a predicate in the training frames.
    pub seen: bool,
}

/// `V(np)`: verbal forms associated with each nominal predicate.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct VerbMap {
    entries: BTreeMap<String, Vec<VerbForm>>,
}

impl VerbMap {
    /// Flags each lexicon form by membership in `predicate_words`.
    pub fn from_lexicon<'a, I>(lexicon: &Lexicon, predicate_words: I) -> Self
    where
        I: IntoIterator<Item = &'a str>,
    {
        let seen: HashSet<&str> = predicate_words.into_iter().collect();
        let entries = lexicon
            .iter()
            .map(|(nominal, verbs)| {
                let forms = verbs
                    .iter()
                    .map(|v| VerbForm {
                        form: v.clone(),
                        seen: seen.contains(v.as_str()),
                    })
                    .collect();
                (nominal.to_owned(), forms)
            })
            .collect();
        VerbMap { entries }
    }

    /// All forms of `nominal`; empty when the nominal is not in the lexicon.
    pub fn forms(&self, nominal: &str) -> &[VerbForm] {
        self.entries.get(nominal).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn seen_forms<'a>(&'a self, nominal: &str) -> impl Iterator<Item = &'a str> + 'a {
        self.forms(nominal).iter().filter(|f| f.seen).map(|f| f.form.as_str())
    }

    /// True when the nominal has forms but none occurs in the frames.
    pub fn all_unseen(&self, nominal: &str) -> bool {
        let forms = self.forms(nominal);
        !forms.is_empty() && forms.iter().all(|f| !f.seen)
    }

    pub fn contains(&self, nominal: &str) -> bool {
        self.entries.contains_key(nominal)
    }

    /// Whether `word` is `nominal` itself or one of its verbal forms.
    pub fn matches(&self, nominal: &str, word: &str) -> bool {
        word == nominal || self.forms(nominal).iter().any(|f| f.form == word)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Reads a lexicon and marks which of its verbs are predicates in `frames`.
pub fn build_verb_map<R: BufRead>(lexicon: R, frames: &[FrameSequence]) -> Result<VerbMap, DataError> {
    let lexicon = Lexicon::read(lexicon)?;
    Ok(VerbMap::from_lexicon(
        &lexicon,
        frames.iter().map(FrameSequence::predicate),
    ))
}

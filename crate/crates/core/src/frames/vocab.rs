use std::collections::HashMap;
use std::fmt;
use std::io::{BufRead, Write};

use sha2::{Digest, Sha256};

use super::{ArgumentUnit, DataError, FrameSequence, EOS_LABEL, EOS_WORD, PRED_LABEL, UNK_LABEL, UNK_WORD};

/// Which word convention the frames were built with. Models trained on one
/// convention must not be queried with the other.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WordForm {
    Lemma,
    Surface,
}

impl fmt::Display for WordForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WordForm::Lemma => "lemma",
            WordForm::Surface => "surface",
        })
    }
}

impl std::str::FromStr for WordForm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "lemma" => Ok(WordForm::Lemma),
            "surface" => Ok(WordForm::Surface),
            other => Err(format!("unknown word form `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
struct Interner {
    items: Vec<String>,
    index: HashMap<String, usize>,
    counts: Vec<u64>,
}

impl Interner {
    fn insert(&mut self, item: &str, count: u64) -> usize {
        if let Some(&id) = self.index.get(item) {
            return id;
        }
        let id = self.items.len();
        self.items.push(item.to_owned());
        self.index.insert(item.to_owned(), id);
        self.counts.push(count);
        id
    }

    fn get(&self, item: &str) -> Option<usize> {
        self.index.get(item).copied()
    }
}

/// Word, label and joint `word:label` inventories.
///
/// Reserved ids: word 0 is UNK and word 1 the EOS sentinel; label 0 is UNK,
/// label 1 is EOS and label 2 is PRED; joint unit 0 is the global `UNK:UNK`
/// and joint unit 1 is EOS. The joint inventory is the output vocabulary of
/// both model variants.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    words: Interner,
    labels: Interner,
    joint: Vec<(usize, usize)>,
    joint_index: HashMap<(usize, usize), usize>,
    joint_counts: Vec<u64>,
    min_count: u64,
    word_form: WordForm,
}

impl Vocabulary {
    pub const UNK: usize = 0;
    pub const EOS: usize = 1;
    pub const PRED_LABEL: usize = 2;

    fn empty(min_count: u64, word_form: WordForm) -> Self {
        let mut v = Vocabulary {
            words: Interner::default(),
            labels: Interner::default(),
            joint: Vec::new(),
            joint_index: HashMap::new(),
            joint_counts: Vec::new(),
            min_count,
            word_form,
        };
        v.words.insert(UNK_WORD, 0);
        v.words.insert(EOS_WORD, 0);
        v.labels.insert(UNK_LABEL, 0);
        v.labels.insert(EOS_LABEL, 0);
        v.labels.insert(PRED_LABEL, 0);
        v.push_joint(Self::UNK, Self::UNK, 0);
        v.push_joint(Self::EOS, Self::EOS, 0);
        v
    }

    fn push_joint(&mut self, word: usize, label: usize, count: u64) -> usize {
        if let Some(&id) = self.joint_index.get(&(word, label)) {
            return id;
        }
        let id = self.joint.len();
        self.joint.push((word, label));
        self.joint_index.insert((word, label), id);
        self.joint_counts.push(count);
        id
    }

    pub fn min_count(&self) -> u64 {
        self.min_count
    }

    pub fn word_form(&self) -> WordForm {
        self.word_form
    }

    pub fn num_words(&self) -> usize {
        self.words.items.len()
    }

    pub fn num_labels(&self) -> usize {
        self.labels.items.len()
    }

    /// Size of the joint inventory, `|V_out|`.
    pub fn num_units(&self) -> usize {
        self.joint.len()
    }

    pub fn word(&self, id: usize) -> &str {
        &self.words.items[id]
    }

    pub fn label(&self, id: usize) -> &str {
        &self.labels.items[id]
    }

    pub fn word_count(&self, id: usize) -> u64 {
        self.words.counts[id]
    }

    pub fn unit_count(&self, id: usize) -> u64 {
        self.joint_counts[id]
    }

    pub fn word_id(&self, word: &str) -> Option<usize> {
        self.words.get(word)
    }

    pub fn label_id(&self, label: &str) -> Option<usize> {
        self.labels.get(label)
    }

    pub fn word_id_or_unk(&self, word: &str) -> usize {
        self.word_id(word).unwrap_or(Self::UNK)
    }

    pub fn label_id_or_unk(&self, label: &str) -> usize {
        self.label_id(label).unwrap_or(Self::UNK)
    }

    /// Exact joint unit for `word:label`, if it is in the inventory.
    pub fn unit_id(&self, word: &str, label: &str) -> Option<usize> {
        if label == EOS_LABEL {
            return Some(Self::EOS);
        }
        let w = self.word_id(word)?;
        let l = self.label_id(label)?;
        self.joint_index.get(&(w, l)).copied()
    }

    /// Joint unit for `word:label`, falling back to `UNK:label` when that
    /// unit exists and to the global UNK otherwise.
    pub fn unit_id_or_unk(&self, word: &str, label: &str) -> usize {
        if let Some(id) = self.unit_id(word, label) {
            return id;
        }
        self.label_id(label)
            .and_then(|l| self.joint_index.get(&(Self::UNK, l)).copied())
            .unwrap_or(Self::UNK)
    }

    /// `p:PRED` unit for a predicate word.
    pub fn predicate_unit(&self, word: &str) -> Option<usize> {
        self.unit_id(word, PRED_LABEL)
    }

    /// Word and label ids of a joint unit.
    pub fn unit_parts(&self, id: usize) -> (usize, usize) {
        self.joint[id]
    }

    pub fn unit(&self, id: usize) -> ArgumentUnit {
        let (w, l) = self.joint[id];
        ArgumentUnit::new(self.word(w), self.label(l))
    }

    /// Predicate words present as `p:PRED` units.
    pub fn predicate_words(&self) -> impl Iterator<Item = &str> {
        self.joint
            .iter()
            .filter(|&&(w, l)| l == Self::PRED_LABEL && w != Self::UNK)
            .map(move |&(w, _)| self.word(w))
    }

    /// Canonical text serialization; also the input of [`Vocabulary::checksum`].
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        s.push_str("#isrl-vocabulary v1\n");
        s.push_str(&format!("form={}\n", self.word_form));
        s.push_str(&format!("min_count={}\n", self.min_count));
        s.push_str("[words]\n");
        for (w, c) in self.words.items.iter().zip(&self.words.counts) {
            s.push_str(&format!("{w}\t{c}\n"));
        }
        s.push_str("[labels]\n");
        for (l, c) in self.labels.items.iter().zip(&self.labels.counts) {
            s.push_str(&format!("{l}\t{c}\n"));
        }
        s.push_str("[units]\n");
        for (&(w, l), c) in self.joint.iter().zip(&self.joint_counts) {
            s.push_str(&format!("{}\t{}\t{c}\n", self.word(w), self.label(l)));
        }
        s
    }

    pub fn write<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        out.write_all(self.to_text().as_bytes())
    }

    pub fn read<R: BufRead>(reader: R) -> Result<Self, DataError> {
        let mut word_form = None;
        let mut min_count = None;
        let mut section = "";
        let mut words = Interner::default();
        let mut labels = Interner::default();
        let mut units: Vec<(String, String, u64)> = Vec::new();
        let mut lines = reader.lines().enumerate();
        match lines.next() {
            Some((_, Ok(header))) if header.trim() == "#isrl-vocabulary v1" => {}
            Some((_, Err(e))) => return Err(e.into()),
            _ => return Err(DataError::Vocabulary("missing or unsupported header".into())),
        }
        for (no, line) in lines {
            let line_no = no + 1;
            let line = line?;
            if line.is_empty() {
                continue;
            }
            if line.starts_with('[') {
                section = match line.as_str() {
                    "[words]" => "words",
                    "[labels]" => "labels",
                    "[units]" => "units",
                    other => return Err(DataError::parse(line_no, format!("unknown section {other}"))),
                };
                continue;
            }
            let count = |s: &str| {
                s.parse::<u64>()
                    .map_err(|_| DataError::parse(line_no, format!("bad count `{s}`")))
            };
            let fields: Vec<&str> = line.split('\t').collect();
            match (section, fields.as_slice()) {
                ("", [kv]) => {
                    let (k, v) = kv
                        .split_once('=')
                        .ok_or_else(|| DataError::parse(line_no, "expected key=value"))?;
                    match k {
                        "form" => word_form = Some(v.parse().map_err(|e: String| DataError::parse(line_no, e))?),
                        "min_count" => min_count = Some(count(v)?),
                        _ => return Err(DataError::parse(line_no, format!("unknown key {k}"))),
                    }
                }
                ("words", [w, c]) => {
                    if words.get(w).is_some() {
                        return Err(DataError::parse(line_no, format!("duplicate word {w}")));
                    }
                    words.insert(w, count(c)?);
                }
                ("labels", [l, c]) => {
                    if labels.get(l).is_some() {
                        return Err(DataError::parse(line_no, format!("duplicate label {l}")));
                    }
                    labels.insert(l, count(c)?);
                }
                ("units", [w, l, c]) => units.push((w.to_string(), l.to_string(), count(c)?)),
                _ => return Err(DataError::parse(line_no, "malformed vocabulary line")),
            }
        }
        let word_form = word_form.ok_or_else(|| DataError::Vocabulary("missing form".into()))?;
        let min_count = min_count.ok_or_else(|| DataError::Vocabulary("missing min_count".into()))?;
        let reserved_ok = words.items.get(Self::UNK).map(String::as_str) == Some(UNK_WORD)
            && words.items.get(Self::EOS).map(String::as_str) == Some(EOS_WORD)
            && labels.items.get(Self::UNK).map(String::as_str) == Some(UNK_LABEL)
            && labels.items.get(Self::EOS).map(String::as_str) == Some(EOS_LABEL)
            && labels.items.get(Self::PRED_LABEL).map(String::as_str) == Some(PRED_LABEL);
        if !reserved_ok {
            return Err(DataError::Vocabulary("reserved entries missing or misplaced".into()));
        }
        let mut v = Vocabulary {
            words,
            labels,
            joint: Vec::new(),
            joint_index: HashMap::new(),
            joint_counts: Vec::new(),
            min_count,
            word_form,
        };
        for (w, l, c) in units {
            let wid = v
                .word_id(&w)
                .ok_or_else(|| DataError::Vocabulary(format!("unit {w}:{l} has unknown word")))?;
            let lid = v
                .label_id(&l)
                .ok_or_else(|| DataError::Vocabulary(format!("unit {w}:{l} has unknown label")))?;
            if v.joint_index.contains_key(&(wid, lid)) {
                return Err(DataError::Vocabulary(format!("duplicate unit {w}:{l}")));
            }
            v.push_joint(wid, lid, c);
        }
        if v.joint.first() != Some(&(Self::UNK, Self::UNK)) || v.joint.get(1) != Some(&(Self::EOS, Self::EOS)) {
            return Err(DataError::Vocabulary("reserved units missing or misplaced".into()));
        }
        Ok(v)
    }

    /// Hex SHA-256 prefix of [`Vocabulary::to_text`].
    pub fn checksum(&self) -> String {
        let digest = Sha256::digest(self.to_text().as_bytes());
        hex::encode(&digest[..16])
    }
}

/// Builds vocabularies from training frames.
///
/// Words and `word:label` units seen fewer than `min_count` times are
/// dropped; a dropped unit contributes to `UNK:label`. Labels are always
/// kept.
pub fn build_vocabularies(frames: &[FrameSequence], min_count: u64, word_form: WordForm) -> Vocabulary {
    let mut word_counts: HashMap<&str, u64> = HashMap::new();
    let mut label_counts: HashMap<&str, u64> = HashMap::new();
    let mut unit_counts: HashMap<(&str, &str), u64> = HashMap::new();
    for unit in frames.iter().flat_map(|f| f.units()).filter(|u| !u.is_eos()) {
        *word_counts.entry(&unit.word).or_default() += 1;
        *label_counts.entry(&unit.label).or_default() += 1;
        *unit_counts.entry((&unit.word, &unit.label)).or_default() += 1;
    }

    let mut vocab = Vocabulary::empty(min_count, word_form);
    let eos_count = frames.len() as u64;
    vocab.words.counts[Vocabulary::EOS] = eos_count;
    vocab.labels.counts[Vocabulary::EOS] = eos_count;
    vocab.joint_counts[Vocabulary::EOS] = eos_count;

    let by_count = |a: &(u64, Vec<&str>), b: &(u64, Vec<&str>)| b.0.cmp(&a.0).then_with(|| a.1.cmp(&b.1));

    let mut labels: Vec<(u64, Vec<&str>)> = label_counts.iter().map(|(l, &c)| (c, vec![*l])).collect();
    labels.sort_by(by_count);
    for (c, l) in labels {
        let id = vocab.labels.insert(l[0], c);
        vocab.labels.counts[id] = c;
    }

    let mut words: Vec<(u64, Vec<&str>)> = word_counts
        .iter()
        .filter(|(_, &c)| c >= min_count)
        .map(|(w, &c)| (c, vec![*w]))
        .collect();
    words.sort_by(by_count);
    let mut unk_words = 0;
    for (w, &c) in &word_counts {
        if c < min_count || *w == UNK_WORD || *w == EOS_WORD {
            unk_words += c;
        }
    }
    vocab.words.counts[Vocabulary::UNK] = unk_words;
    for (c, w) in words {
        if w[0] == UNK_WORD || w[0] == EOS_WORD {
            continue;
        }
        vocab.words.insert(w[0], c);
    }

    let mut kept: Vec<(u64, Vec<&str>)> = Vec::new();
    let mut rare: HashMap<&str, u64> = HashMap::new();
    for (&(w, l), &c) in &unit_counts {
        if c >= min_count && vocab.word_id(w).is_some_and(|id| id != Vocabulary::UNK) {
            kept.push((c, vec![w, l]));
        } else {
            *rare.entry(l).or_default() += c;
        }
    }
    kept.sort_by(by_count);
    for (c, wl) in kept {
        let w = vocab.word_id(wl[0]).expect("kept word");
        let l = vocab.label_id(wl[1]).expect("observed label");
        vocab.push_joint(w, l, c);
    }
    let mut rare: Vec<(&str, u64)> = rare.into_iter().collect();
    rare.sort();
    for (l, c) in rare {
        let lid = vocab.label_id(l).expect("observed label");
        vocab.push_joint(Vocabulary::UNK, lid, c);
    }
    vocab
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frame(pred: &str, args: &[(&str, &str)]) -> FrameSequence {
        FrameSequence::new("t", pred, args.iter().map(|(w, l)| ArgumentUnit::new(*w, *l)).collect()).unwrap()
    }

    fn fixture() -> Vec<FrameSequence> {
        vec![
            frame("swam", &[("Phelps", "A0"), ("Olympics", "AM-LOC")]),
            frame("swam", &[("Olympics", "AM-LOC")]),
        ]
    }

    #[test]
    fn min_count_replaces_rare_words() {
        let v = build_vocabularies(&fixture(), 2, WordForm::Surface);
        assert_eq!(v.word_id("Phelps"), None);
        assert_eq!(v.word_id_or_unk("Phelps"), Vocabulary::UNK);
        assert!(v.word_id("Olympics").is_some());
        assert!(v.label_id("A0").is_some(), "labels are never dropped");
        // Phelps:A0 became UNK:A0
        let unk_a0 = v.unit_id_or_unk("Phelps", "A0");
        assert_ne!(unk_a0, Vocabulary::UNK);
        assert_eq!(v.unit(unk_a0), ArgumentUnit::new(UNK_WORD, "A0"));
    }

    #[test]
    fn min_count_one_keeps_everything() {
        let v = build_vocabularies(&fixture(), 1, WordForm::Surface);
        for w in ["swam", "Phelps", "Olympics"] {
            assert!(v.word_id(w).is_some());
        }
    }

    #[test]
    fn joint_inventory_is_observed_pairs_plus_reserved() {
        // words: swam, Phelps, Olympics; labels: A0, AM-LOC (+PRED)
        let v = build_vocabularies(&fixture(), 1, WordForm::Surface);
        let mut units: Vec<String> = (0..v.num_units()).map(|i| v.unit(i).to_string()).collect();
        units.sort();
        let mut expected = vec![
            "<unk>:<unk>".to_string(),
            "EOS".to_string(),
            "Olympics:AM-LOC".to_string(),
            "Phelps:A0".to_string(),
            "swam:PRED".to_string(),
        ];
        expected.sort();
        assert_eq!(units, expected);
        assert_eq!(v.unit_count(v.unit_id("Olympics", "AM-LOC").unwrap()), 2);
    }

    #[test]
    fn unseen_label_pair_falls_back_to_global_unk() {
        let v = build_vocabularies(&fixture(), 1, WordForm::Surface);
        assert_eq!(v.unit_id_or_unk("Phelps", "AM-LOC"), Vocabulary::UNK);
        assert_eq!(v.unit_id_or_unk("Lake", "A7"), Vocabulary::UNK);
        assert_eq!(v.unit_id_or_unk("x", EOS_LABEL), Vocabulary::EOS);
    }

    #[test]
    fn text_round_trip_and_checksum() {
        let v = build_vocabularies(&fixture(), 1, WordForm::Lemma);
        let text = v.to_text();
        let back = Vocabulary::read(text.as_bytes()).unwrap();
        assert_eq!(back, v);
        assert_eq!(back.checksum(), v.checksum());
        let other = build_vocabularies(&fixture(), 2, WordForm::Lemma);
        assert_ne!(other.checksum(), v.checksum());
    }

    #[test]
    fn read_rejects_garbage() {
        assert!(Vocabulary::read("nope\n".as_bytes()).is_err());
        let v = build_vocabularies(&fixture(), 1, WordForm::Lemma);
        let text = v.to_text().replace("[units]\n", "[units]\nghost\tA0\t1\n");
        assert!(Vocabulary::read(text.as_bytes()).is_err());
    }

    #[test]
    fn predicate_words_listed() {
        let v = build_vocabularies(&fixture(), 1, WordForm::Surface);
        assert_eq!(v.predicate_words().collect::<Vec<_>>(), vec!["swam"]);
        assert!(v.predicate_unit("swam").is_some());
        assert!(v.predicate_unit("Phelps").is_none());
    }
}

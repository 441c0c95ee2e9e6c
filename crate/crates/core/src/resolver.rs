//! Implicit role resolution for nominal predicates.
//!
//! For a query (nominal instance `np`, missing label `l`) the resolver looks
//! at the query sentence and the sentences before it. If any instance of
//! `np` or one of its verbal forms there carries an explicit `l` argument, the
//! closest one is copied. Otherwise every candidate token is scored with the
//! nominal selectional preference, discounted by sentence distance
//! (`x - z + z * alpha^d`), and the best one is kept if it clears the
//! threshold.
//!
//! Documents are read as JSON lines, one sentence per line:
//!
//! ```text
//! {"doc":"d1","sentence":0,
//!  "tokens":[{"word":"Those","lemma":"those","pos":"DT"},{"word":"losses","lemma":"loss","pos":"NNS"}],
//!  "frames":[{"predicate":1,"args":[{"label":"A1","token":0}]}]}
//! ```
//!
//! Token positions are 0-based offsets into `tokens`; `lemma` and `pos` are
//! optional. Queries are `doc<TAB>sentence<TAB>token<TAB>np<TAB>label`.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frames::{VerbMap, WordForm};
use crate::prnsfm::ArgumentModel;
use crate::selpref::{PreferenceScorer, SelPrefConfig, SelPrefError};

#[derive(Debug, Error)]
pub enum ResolveError {
    #[error("document line {line}: {message}")]
    Document { line: usize, message: String },
    #[error("query line {line}: {message}")]
    QueryParse { line: usize, message: String },
    #[error("invalid query {key}: {message}")]
    InvalidQuery { key: String, message: String },
    #[error("invalid resolver settings: {0}")]
    Config(String),
    #[error(transparent)]
    SelPref(#[from] SelPrefError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub word: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lemma: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pos: Option<String>,
}

impl Token {
    pub fn new(word: &str, lemma: &str, pos: &str) -> Self {
        Token {
            word: word.to_owned(),
            lemma: Some(lemma.to_owned()),
            pos: Some(pos.to_owned()),
        }
    }

    /// Lemma, or the lowercased word when none is given.
    pub fn lemma_or_word(&self) -> String {
        self.lemma.clone().unwrap_or_else(|| self.word.to_lowercase())
    }

    pub fn form(&self, form: WordForm) -> String {
        match form {
            WordForm::Lemma => self.lemma_or_word(),
            WordForm::Surface => self.word.clone(),
        }
    }

    /// Noun or pronoun tag (Penn or universal tag set). Tokens without a tag
    /// count as nominal.
    pub fn is_nominal(&self) -> bool {
        match self.pos.as_deref() {
            None => true,
            Some(p) => p.starts_with("NN") || p.starts_with("PRP") || matches!(p, "NOUN" | "PROPN" | "PRON" | "WP"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExplicitArgument {
    pub label: String,
    pub token: usize,
}

/// One explicit SRL annotation in a sentence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExplicitFrame {
    pub predicate: usize,
    #[serde(default)]
    pub args: Vec<ExplicitArgument>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Sentence {
    pub tokens: Vec<Token>,
    #[serde(default)]
    pub frames: Vec<ExplicitFrame>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub id: String,
    pub sentences: Vec<Sentence>,
}

#[derive(Serialize, Deserialize)]
struct SentenceRecord {
    doc: String,
    sentence: usize,
    tokens: Vec<Token>,
    #[serde(default)]
    frames: Vec<ExplicitFrame>,
}

impl Document {
    /// Checks that every annotated position addresses a token.
    pub fn validate(&self) -> Result<(), String> {
        for (si, s) in self.sentences.iter().enumerate() {
            for f in &s.frames {
                if f.predicate >= s.tokens.len() {
                    return Err(format!(
                        "sentence {si}: predicate position {} out of range",
                        f.predicate
                    ));
                }
                if let Some(a) = f.args.iter().find(|a| a.token >= s.tokens.len()) {
                    return Err(format!("sentence {si}: argument position {} out of range", a.token));
                }
            }
        }
        Ok(())
    }

    /// Offset of the first token of each sentence in the whole document.
    fn sentence_offsets(&self) -> Vec<usize> {
        self.sentences
            .iter()
            .scan(0, |acc, s| {
                let start = *acc;
                *acc += s.tokens.len();
                Some(start)
            })
            .collect()
    }
}

/// Reads documents from JSON lines. Sentences of a document must be
/// contiguous and numbered from 0.
pub fn read_documents<R: BufRead>(reader: R) -> Result<Vec<Document>, ResolveError> {
    let mut docs: Vec<Document> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    for (no, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let err = |message: String| ResolveError::Document { line: no + 1, message };
        let rec: SentenceRecord = serde_json::from_str(&line).map_err(|e| err(e.to_string()))?;
        let slot = *index.entry(rec.doc.clone()).or_insert_with(|| {
            docs.push(Document {
                id: rec.doc.clone(),
                sentences: Vec::new(),
            });
            docs.len() - 1
        });
        let doc = &mut docs[slot];
        if rec.sentence != doc.sentences.len() {
            return Err(err(format!(
                "document {} expects sentence {}, found {}",
                doc.id,
                doc.sentences.len(),
                rec.sentence
            )));
        }
        doc.sentences.push(Sentence {
            tokens: rec.tokens,
            frames: rec.frames,
        });
        doc.validate().map_err(err)?;
    }
    Ok(docs)
}

pub fn write_documents<W: Write>(mut out: W, docs: &[Document]) -> Result<(), ResolveError> {
    for d in docs {
        for (i, s) in d.sentences.iter().enumerate() {
            let rec = SentenceRecord {
                doc: d.id.clone(),
                sentence: i,
                tokens: s.tokens.clone(),
                frames: s.frames.clone(),
            };
            let line = serde_json::to_string(&rec).map_err(|e| ResolveError::Io(e.into()))?;
            writeln!(out, "{line}")?;
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ResolverQuery {
    pub doc: String,
    pub sentence: usize,
    pub token: usize,
    /// Nominal predicate lemma.
    pub nominal: String,
    /// Missing role label.
    pub label: String,
}

impl ResolverQuery {
    /// `doc:sentence:token:nominal:label`, the key shared with gold files.
    pub fn key(&self) -> String {
        format!(
            "{}:{}:{}:{}:{}",
            self.doc, self.sentence, self.token, self.nominal, self.label
        )
    }
}

impl fmt::Display for ResolverQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.key())
    }
}

pub fn read_queries<R: BufRead>(reader: R) -> Result<Vec<ResolverQuery>, ResolveError> {
    let mut out = Vec::new();
    for (no, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |message: String| ResolveError::QueryParse { line: no + 1, message };
        let f: Vec<&str> = line.split('\t').map(str::trim).collect();
        let [doc, sentence, token, nominal, label] = f[..] else {
            return Err(err(format!("expected 5 tab-separated fields, found {}", f.len())));
        };
        out.push(ResolverQuery {
            doc: doc.to_owned(),
            sentence: sentence
                .parse()
                .map_err(|_| err(format!("bad sentence index {sentence:?}")))?,
            token: token.parse().map_err(|_| err(format!("bad token index {token:?}")))?,
            nominal: nominal.to_owned(),
            label: label.to_owned(),
        });
    }
    Ok(out)
}

pub fn write_queries<W: Write>(mut out: W, queries: &[ResolverQuery]) -> std::io::Result<()> {
    for q in queries {
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}",
            q.doc, q.sentence, q.token, q.nominal, q.label
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CandidateFilter {
    AllTokens,
    /// Nouns and pronouns; untagged tokens are kept.
    #[default]
    NominalHeads,
}

impl fmt::Display for CandidateFilter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CandidateFilter::AllTokens => "all_tokens",
            CandidateFilter::NominalHeads => "nominal_heads",
        })
    }
}

impl FromStr for CandidateFilter {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "all_tokens" | "all" => Ok(CandidateFilter::AllTokens),
            "nominal_heads" | "nominal" => Ok(CandidateFilter::NominalHeads),
            other => Err(format!("unknown candidate filter {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResolverConfig {
    /// Selection threshold on the adjusted score.
    pub threshold: f64,
    /// Recency magnitude `z`.
    pub recency_magnitude: f64,
    /// Recency decay `alpha`, in (0, 1).
    pub recency_decay: f64,
    /// Query sentence plus `window_size - 1` preceding sentences.
    pub window_size: usize,
    pub selpref: SelPrefConfig,
    /// Only the explicit fallback; no model scoring.
    pub baseline_only: bool,
    pub candidate_filter: CandidateFilter,
    /// Compare the raw score with the threshold instead of the adjusted one.
    pub threshold_on_raw: bool,
}

impl Default for ResolverConfig {
    fn default() -> Self {
        ResolverConfig {
            threshold: 0.0003,
            recency_magnitude: 0.00005,
            recency_decay: 0.5,
            window_size: 3,
            selpref: SelPrefConfig::default(),
            baseline_only: false,
            candidate_filter: CandidateFilter::NominalHeads,
            threshold_on_raw: false,
        }
    }
}

impl ResolverConfig {
    pub fn validate(&self) -> Result<(), ResolveError> {
        if self.threshold.is_nan() || self.threshold < 0.0 {
            return Err(ResolveError::Config(format!(
                "threshold must be >= 0, got {}",
                self.threshold
            )));
        }
        if !(self.recency_decay > 0.0 && self.recency_decay < 1.0) {
            return Err(ResolveError::Config(format!(
                "recency decay must be in (0, 1), got {}",
                self.recency_decay
            )));
        }
        if !(self.recency_magnitude >= 0.0 && self.recency_magnitude.is_finite()) {
            return Err(ResolveError::Config(format!(
                "recency magnitude must be finite and >= 0, got {}",
                self.recency_magnitude
            )));
        }
        if self.window_size == 0 {
            return Err(ResolveError::Config("window size must be at least 1".into()));
        }
        self.selpref.validate()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Fallback,
    Model,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provenance::Fallback => "fallback",
            Provenance::Model => "model",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FillerPrediction {
    pub sentence: usize,
    pub token: usize,
    pub word: String,
    /// Selectional preference score; `None` for fallback predictions.
    pub raw: Option<f64>,
    /// Recency-adjusted score; `None` for fallback predictions.
    pub adjusted: Option<f64>,
    pub provenance: Provenance,
    /// Sentences between the filler and the query.
    pub distance: usize,
}

/// Sentence indices of the query's context window, oldest first.
pub fn context_window(query_sentence: usize, window_size: usize) -> std::ops::RangeInclusive<usize> {
    let first = query_sentence.saturating_sub(window_size.saturating_sub(1));
    first..=query_sentence
}

/// `x - z + z * alpha^d`. Returns `x` itself at `d = 0`, where the
/// float evaluation of `x - z + z` could be off by an ulp.
pub fn recency_adjust(raw: f64, distance: usize, magnitude: f64, decay: f64) -> f64 {
    if distance == 0 {
        return raw;
    }
    let d = i32::try_from(distance).unwrap_or(i32::MAX);
    raw - magnitude + magnitude * decay.powi(d)
}

fn check_query(doc: &Document, query: &ResolverQuery) -> Result<(), ResolveError> {
    let invalid = |message: String| ResolveError::InvalidQuery {
        key: query.key(),
        message,
    };
    if doc.id != query.doc {
        return Err(invalid(format!(
            "query addresses document {}, got {}",
            query.doc, doc.id
        )));
    }
    let s = doc
        .sentences
        .get(query.sentence)
        .ok_or_else(|| invalid(format!("no sentence {}", query.sentence)))?;
    if query.token >= s.tokens.len() {
        return Err(invalid(format!(
            "no token {} in sentence {}",
            query.token, query.sentence
        )));
    }
    Ok(())
}

/// The explicit `label` argument of the instance of the nominal (or one of
/// its verbal forms) closest to the query in document token order. Ties go
/// to the leftmost instance. The query's own annotation is ignored.
pub fn explicit_fallback(
    doc: &Document,
    query: &ResolverQuery,
    verb_map: &VerbMap,
    window_size: usize,
) -> Result<Option<FillerPrediction>, ResolveError> {
    check_query(doc, query)?;
    let offsets = doc.sentence_offsets();
    let query_pos = offsets[query.sentence] + query.token;
    let mut best: Option<(usize, usize, FillerPrediction)> = None;
    for si in context_window(query.sentence, window_size) {
        let sentence = &doc.sentences[si];
        for frame in &sentence.frames {
            if si == query.sentence && frame.predicate == query.token {
                continue;
            }
            let lemma = sentence.tokens[frame.predicate].lemma_or_word();
            if !verb_map.matches(&query.nominal, &lemma) {
                continue;
            }
            let Some(arg) = frame
                .args
                .iter()
                .filter(|a| a.label == query.label)
                .min_by_key(|a| a.token)
            else {
                continue;
            };
            let pos = offsets[si] + frame.predicate;
            let dist = pos.abs_diff(query_pos);
            if best.as_ref().is_some_and(|(d, p, _)| (*d, *p) <= (dist, pos)) {
                continue;
            }
            let prediction = FillerPrediction {
                sentence: si,
                token: arg.token,
                word: sentence.tokens[arg.token].word.clone(),
                raw: None,
                adjusted: None,
                provenance: Provenance::Fallback,
                distance: query.sentence - si,
            };
            best = Some((dist, pos, prediction));
        }
    }
    Ok(best.map(|(_, _, p)| p))
}

/// Scores a candidate word as filler of a nominal's role.
pub trait CandidateScorer {
    /// Form of the token text the scorer expects.
    fn word_form(&self) -> WordForm;

    fn nominal_score(&self, nominal: &str, word: &str, label: &str, verb_map: &VerbMap) -> Result<f64, SelPrefError>;
}

impl<M: ArgumentModel + ?Sized> CandidateScorer for PreferenceScorer<'_, M> {
    fn word_form(&self) -> WordForm {
        self.model().vocabulary().word_form()
    }

    fn nominal_score(&self, nominal: &str, word: &str, label: &str, verb_map: &VerbMap) -> Result<f64, SelPrefError> {
        PreferenceScorer::nominal_score(self, nominal, word, label, verb_map)
    }
}

/// Fills one query. `scorer` may be `None` only in baseline mode.
pub fn resolve(
    doc: &Document,
    query: &ResolverQuery,
    scorer: Option<&dyn CandidateScorer>,
    verb_map: &VerbMap,
    config: &ResolverConfig,
) -> Result<Option<FillerPrediction>, ResolveError> {
    config.validate()?;
    if let Some(p) = explicit_fallback(doc, query, verb_map, config.window_size)? {
        return Ok(Some(p));
    }
    if config.baseline_only {
        return Ok(None);
    }
    let scorer =
        scorer.ok_or_else(|| ResolveError::Config("a model is required unless baseline_only is set".into()))?;
    let form = scorer.word_form();

    // (adjusted, raw, distance, sentence, token)
    let mut best: Option<(f64, f64, usize, usize, usize)> = None;
    let mut seen: HashSet<(usize, String)> = HashSet::new();
    for si in context_window(query.sentence, config.window_size) {
        let distance = query.sentence - si;
        for (ti, token) in doc.sentences[si].tokens.iter().enumerate() {
            if si == query.sentence && ti == query.token {
                continue;
            }
            if config.candidate_filter == CandidateFilter::NominalHeads && !token.is_nominal() {
                continue;
            }
            let word = token.form(form);
            if !seen.insert((si, word.clone())) {
                continue;
            }
            let raw = scorer.nominal_score(&query.nominal, &word, &query.label, verb_map)?;
            let adjusted = recency_adjust(raw, distance, config.recency_magnitude, config.recency_decay);
            let better = match best {
                None => true,
                Some((a, _, d, s, t)) => adjusted > a || (adjusted == a && (distance, si, ti) < (d, s, t)),
            };
            if better {
                best = Some((adjusted, raw, distance, si, ti));
            }
        }
    }
    let Some((adjusted, raw, distance, si, ti)) = best else {
        return Ok(None);
    };
    let selection = if config.threshold_on_raw { raw } else { adjusted };
    // Scores are non-negative; only the recency penalty can push one below 0.
    if selection.max(0.0) < config.threshold {
        return Ok(None);
    }
    Ok(Some(FillerPrediction {
        sentence: si,
        token: ti,
        word: doc.sentences[si].tokens[ti].word.clone(),
        raw: Some(raw),
        adjusted: Some(adjusted),
        provenance: Provenance::Model,
        distance,
    }))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Resolution {
    pub query: ResolverQuery,
    pub prediction: Option<FillerPrediction>,
}

/// Resolves every query, spreading them over `threads` workers. Output order
/// follows `queries`.
pub fn resolve_all(
    docs: &[Document],
    queries: &[ResolverQuery],
    scorer: Option<&(dyn CandidateScorer + Sync)>,
    verb_map: &VerbMap,
    config: &ResolverConfig,
    threads: usize,
) -> Result<Vec<Resolution>, ResolveError> {
    config.validate()?;
    let by_id: HashMap<&str, &Document> = docs.iter().map(|d| (d.id.as_str(), d)).collect();
    let one = |q: &ResolverQuery| -> Result<Resolution, ResolveError> {
        let doc = by_id.get(q.doc.as_str()).ok_or_else(|| ResolveError::InvalidQuery {
            key: q.key(),
            message: format!("unknown document {}", q.doc),
        })?;
        let scorer = scorer.map(|s| s as &dyn CandidateScorer);
        Ok(Resolution {
            query: q.clone(),
            prediction: resolve(doc, q, scorer, verb_map, config)?,
        })
    };
    let threads = threads.max(1);
    if threads == 1 || queries.len() < 2 {
        return queries.iter().map(one).collect();
    }
    let chunk = queries.len().div_ceil(threads);
    let results: Vec<Result<Vec<Resolution>, ResolveError>> = std::thread::scope(|s| {
        let handles: Vec<_> = queries
            .chunks(chunk)
            .map(|part| s.spawn(|| part.iter().map(one).collect::<Result<Vec<_>, _>>()))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("resolver worker panicked"))
            .collect()
    });
    let mut out = Vec::with_capacity(queries.len());
    for r in results {
        out.extend(r?);
    }
    Ok(out)
}

pub const UNFILLED: &str = "UNFILLED";

/// `key<TAB>doc:sentence:token|UNFILLED<TAB>word<TAB>raw<TAB>adjusted<TAB>provenance`,
/// with `-` for absent fields.
pub fn write_predictions<W: Write>(mut out: W, resolutions: &[Resolution]) -> std::io::Result<()> {
    let num = |x: Option<f64>| x.map_or_else(|| "-".to_string(), |v| format!("{v:.10}"));
    for r in resolutions {
        match &r.prediction {
            Some(p) => writeln!(
                out,
                "{}\t{}:{}:{}\t{}\t{}\t{}\t{}",
                r.query.key(),
                r.query.doc,
                p.sentence,
                p.token,
                p.word,
                num(p.raw),
                num(p.adjusted),
                p.provenance
            )?,
            None => writeln!(out, "{}\t{UNFILLED}\t-\t-\t-\tnone", r.query.key())?,
        }
    }
    Ok(())
}

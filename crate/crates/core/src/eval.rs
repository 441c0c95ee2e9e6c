//! Dice-based scoring of implicit argument predictions.
//!
//! A prediction earns the best Dice overlap it has with any annotated
//! filler of its position. Precision divides the summed credit by the number
//! of positions the system filled, recall by the number of positions filled
//! in the gold data.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt::Write as _;
use std::io::{BufRead, Write};

use serde::Serialize;
use thiserror::Error;

use crate::resolver::UNFILLED;

/// Document-global token address: (sentence, token).
pub type Position = (usize, usize);

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("Dice overlap of an empty set")]
    EmptySet,
    #[error("gold line {line}: {message}")]
    Gold { line: usize, message: String },
    #[error("prediction line {line}: {message}")]
    Prediction { line: usize, message: String },
    #[error("prediction for {0} has no gold entry")]
    UnknownKey(String),
    #[error("duplicate entry for {0}")]
    DuplicateKey(String),
    #[error("gold data has no filled positions")]
    NoGoldFilled,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// `2 |a ∩ b| / (|a| + |b|)`.
pub fn dice<T: Ord>(predicted: &BTreeSet<T>, truth: &BTreeSet<T>) -> Result<f64, EvalError> {
    if predicted.is_empty() || truth.is_empty() {
        return Err(EvalError::EmptySet);
    }
    let overlap = predicted.intersection(truth).count();
    Ok(2.0 * overlap as f64 / (predicted.len() + truth.len()) as f64)
}

/// Annotated fillers of one query position; empty when the gold leaves the
/// role unfilled.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GoldPosition {
    pub key: String,
    pub fillers: Vec<BTreeSet<Position>>,
}

impl GoldPosition {
    pub fn is_filled(&self) -> bool {
        !self.fillers.is_empty()
    }
}

/// Best Dice overlap with any filler; zero when there are none.
pub fn score_prediction(predicted: &BTreeSet<Position>, gold: &GoldPosition) -> Result<f64, EvalError> {
    let mut best = 0.0f64;
    for f in &gold.fillers {
        best = best.max(dice(predicted, f)?);
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Metrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub summed_scores: f64,
    pub n_predicted: usize,
    pub n_gold_filled: usize,
    /// Nothing was predicted; precision is reported as 0.
    pub no_predictions: bool,
}

impl Metrics {
    pub fn from_counts(summed_scores: f64, n_predicted: usize, n_gold_filled: usize) -> Self {
        let precision = if n_predicted == 0 {
            0.0
        } else {
            summed_scores / n_predicted as f64
        };
        let recall = if n_gold_filled == 0 {
            0.0
        } else {
            summed_scores / n_gold_filled as f64
        };
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        Metrics {
            precision,
            recall,
            f1,
            summed_scores,
            n_predicted,
            n_gold_filled,
            no_predictions: n_predicted == 0,
        }
    }
}

/// One system output: the filler tokens, or `None` when left unfilled.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredictedFiller {
    pub key: String,
    pub tokens: Option<BTreeSet<Position>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Evaluation {
    pub overall: Metrics,
    /// Keyed by nominal predicate.
    pub per_predicate: BTreeMap<String, Metrics>,
}

/// Nominal predicate of a `doc:sentence:token:np:label` key.
pub fn key_predicate(key: &str) -> &str {
    let mut parts = key.rsplitn(3, ':');
    let _label = parts.next();
    parts.next().unwrap_or(key)
}

pub fn evaluate(predictions: &[PredictedFiller], gold: &[GoldPosition]) -> Result<Evaluation, EvalError> {
    let by_key: BTreeMap<&str, &GoldPosition> = gold.iter().map(|g| (g.key.as_str(), g)).collect();
    if by_key.len() != gold.len() {
        let mut seen = HashSet::new();
        let dup = gold
            .iter()
            .find(|g| !seen.insert(g.key.as_str()))
            .expect("a duplicate exists");
        return Err(EvalError::DuplicateKey(dup.key.clone()));
    }

    // (summed, predicted, gold filled) per predicate, in key order
    let mut tallies: BTreeMap<String, (f64, usize, usize)> = BTreeMap::new();
    for g in gold {
        let t = tallies.entry(key_predicate(&g.key).to_owned()).or_default();
        if g.is_filled() {
            t.2 += 1;
        }
    }
    let mut seen = HashSet::new();
    for p in predictions {
        let g = by_key
            .get(p.key.as_str())
            .ok_or_else(|| EvalError::UnknownKey(p.key.clone()))?;
        if !seen.insert(p.key.as_str()) {
            return Err(EvalError::DuplicateKey(p.key.clone()));
        }
        let Some(tokens) = &p.tokens else { continue };
        let score = score_prediction(tokens, g)?;
        let t = tallies
            .get_mut(key_predicate(&p.key))
            .expect("gold predicates are tallied");
        t.0 += score;
        t.1 += 1;
    }

    let n_gold_filled: usize = tallies.values().map(|t| t.2).sum();
    if n_gold_filled == 0 {
        return Err(EvalError::NoGoldFilled);
    }
    let (mut summed, mut n_predicted) = (0.0, 0);
    for t in tallies.values() {
        summed += t.0;
        n_predicted += t.1;
    }
    let per_predicate = tallies
        .into_iter()
        .map(|(k, (s, p, g))| (k, Metrics::from_counts(s, p, g)))
        .collect();
    Ok(Evaluation {
        overall: Metrics::from_counts(summed, n_predicted, n_gold_filled),
        per_predicate,
    })
}

fn parse_position(s: &str) -> Option<Position> {
    let (a, b) = s.trim().split_once(':')?;
    Some((a.parse().ok()?, b.parse().ok()?))
}

/// Gold lines: `key<TAB>s:t,s:t;s:t` (fillers separated by `;`). An empty
/// or missing second field marks an unfilled position.
pub fn read_gold<R: BufRead>(reader: R) -> Result<Vec<GoldPosition>, EvalError> {
    let mut out = Vec::new();
    for (no, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |message: String| EvalError::Gold { line: no + 1, message };
        let (key, rest) = line.split_once('\t').unwrap_or((line.as_str(), ""));
        let mut fillers = Vec::new();
        for filler in rest.split(';').map(str::trim).filter(|f| !f.is_empty()) {
            let set = filler
                .split(',')
                .map(|p| parse_position(p).ok_or_else(|| err(format!("bad position {p:?}"))))
                .collect::<Result<BTreeSet<_>, _>>()?;
            fillers.push(set);
        }
        out.push(GoldPosition {
            key: key.trim().to_owned(),
            fillers,
        });
    }
    Ok(out)
}

pub fn write_gold<W: Write>(mut out: W, gold: &[GoldPosition]) -> std::io::Result<()> {
    for g in gold {
        let fillers: Vec<String> = g
            .fillers
            .iter()
            .map(|f| f.iter().map(|(s, t)| format!("{s}:{t}")).collect::<Vec<_>>().join(","))
            .collect();
        writeln!(out, "{}\t{}", g.key, fillers.join(";"))?;
    }
    Ok(())
}

/// Reads resolver output: `key<TAB>doc:sentence:token` or `key<TAB>UNFILLED`,
/// further columns ignored.
pub fn read_predictions<R: BufRead>(reader: R) -> Result<Vec<PredictedFiller>, EvalError> {
    let mut out = Vec::new();
    for (no, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |message: String| EvalError::Prediction { line: no + 1, message };
        let mut fields = line.split('\t');
        let key = fields.next().unwrap_or_default().trim().to_owned();
        let target = fields.next().ok_or_else(|| err("missing filler column".into()))?.trim();
        let tokens = if target == UNFILLED {
            None
        } else {
            let mut parts = target.rsplitn(3, ':');
            let token = parts.next().and_then(|t| t.parse().ok());
            let sentence = parts.next().and_then(|s| s.parse().ok());
            match (sentence, token, parts.next()) {
                (Some(s), Some(t), Some(_doc)) => Some(BTreeSet::from([(s, t)])),
                _ => return Err(err(format!("bad filler {target:?}"))),
            }
        };
        out.push(PredictedFiller { key, tokens });
    }
    Ok(out)
}

/// Aligned table: overall row then one row per predicate.
pub fn format_table(e: &Evaluation) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<16} {:>8} {:>8} {:>8} {:>6} {:>6}",
        "predicate", "P", "R", "F1", "#pred", "#gold"
    );
    let row = |s: &mut String, name: &str, m: &Metrics| {
        let _ = writeln!(
            s,
            "{:<16} {:>8.4} {:>8.4} {:>8.4} {:>6} {:>6}",
            name, m.precision, m.recall, m.f1, m.n_predicted, m.n_gold_filled
        );
    };
    for (name, m) in &e.per_predicate {
        row(&mut s, name, m);
    }
    row(&mut s, "overall", &e.overall);
    if e.overall.no_predictions {
        s.push_str("note: no positions were filled; precision reported as 0\n");
    }
    s
}

/// `scope.metric=value` lines, overall first.
pub fn format_key_values(e: &Evaluation) -> String {
    let mut s = String::new();
    let mut block = |scope: &str, m: &Metrics| {
        let _ = writeln!(s, "{scope}.precision={:.4}", m.precision);
        let _ = writeln!(s, "{scope}.recall={:.4}", m.recall);
        let _ = writeln!(s, "{scope}.f1={:.4}", m.f1);
        let _ = writeln!(s, "{scope}.n_predicted={}", m.n_predicted);
        let _ = writeln!(s, "{scope}.n_gold_filled={}", m.n_gold_filled);
        let _ = writeln!(s, "{scope}.no_predictions={}", m.no_predictions);
    };
    block("overall", &e.overall);
    for (name, m) in &e.per_predicate {
        block(&format!("predicate.{name}"), m);
    }
    s
}

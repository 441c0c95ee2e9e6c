//! Selectional preferences by tree marginalization.
//!
//! Starting from `[p:PRED]`, each prefix is expanded with its `k` most likely
//! non-EOS continuations down to `depth - 1` arguments. The preference for a
//! target unit is
//!
//! ```text
//! score(w:l | p) = sum over prefixes q in the tree of P(w:l | q) * P(q)
//! ```
//!
//! `P(q)` is accumulated in log space along each branch. The final sum runs
//! over terms sorted ascending, which keeps scores bit-for-bit
//! non-decreasing when the tree grows (larger `k` or `depth`). Scores are
//! summed over depths and so are not probabilities once `depth > 1`.

use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, RwLock};

use thiserror::Error;

use crate::frames::{ArgumentUnit, VerbMap, Vocabulary};
use crate::prnsfm::{ArgumentModel, ModelError};

/// Deepest tree [`SelPrefConfig`] accepts.
pub const MAX_DEPTH: usize = 8;
/// Output vocabulary limit of [`selectional_preference_exhaustive`].
pub const EXHAUSTIVE_MAX_OUTPUTS: usize = 16;
/// Depth limit of [`selectional_preference_exhaustive`].
pub const EXHAUSTIVE_MAX_DEPTH: usize = 4;

#[derive(Debug, Error)]
pub enum SelPrefError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("invalid selectional preference settings: {0}")]
    Config(String),
    #[error(
        "exhaustive enumeration refused for {outputs} outputs at depth {depth} \
         (limits: {EXHAUSTIVE_MAX_OUTPUTS} outputs, depth {EXHAUSTIVE_MAX_DEPTH})"
    )]
    CostGuard { outputs: usize, depth: usize },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SelPrefConfig {
    /// Branch width.
    pub k: usize,
    /// Maximum sequence length in arguments; prefixes of up to `depth - 1`
    /// arguments are scored.
    pub depth: usize,
    /// Let EOS compete for the `k` branch slots. An EOS branch is a dead end
    /// and adds no mass.
    pub expand_eos: bool,
}

impl Default for SelPrefConfig {
    fn default() -> Self {
        SelPrefConfig {
            k: 1,
            depth: 4,
            expand_eos: false,
        }
    }
}

impl SelPrefConfig {
    pub fn new(k: usize, depth: usize) -> Self {
        SelPrefConfig {
            k,
            depth,
            expand_eos: false,
        }
    }

    pub fn validate(&self) -> Result<(), SelPrefError> {
        if self.k == 0 {
            return Err(SelPrefError::Config("k must be at least 1".into()));
        }
        if self.depth == 0 || self.depth > MAX_DEPTH {
            return Err(SelPrefError::Config(format!(
                "depth must be in 1..={MAX_DEPTH}, got {}",
                self.depth
            )));
        }
        Ok(())
    }
}

/// A node of the expansion tree: unit ids starting with `p:PRED`.
#[derive(Debug, Clone, PartialEq)]
pub struct Prefix {
    pub units: Vec<usize>,
    /// `ln P(q)`: sum of the log-probabilities of the arguments in `units`.
    pub log_prob: f64,
}

impl Prefix {
    pub fn root(predicate_unit: usize) -> Self {
        Prefix {
            units: vec![predicate_unit],
            log_prob: 0.0,
        }
    }

    /// Number of arguments after the predicate.
    pub fn depth(&self) -> usize {
        self.units.len() - 1
    }
}

static CLAMP_WARNED: AtomicBool = AtomicBool::new(false);

/// The `k` most probable continuations in `dist`, highest first, ties by
/// ascending unit id. EOS is skipped unless `include_eos`. `k` beyond the
/// number of candidates is clamped.
pub fn top_k_next(dist: &[f64], k: usize, include_eos: bool) -> Vec<(usize, f64)> {
    let mut candidates: Vec<(usize, f64)> = dist
        .iter()
        .copied()
        .enumerate()
        .filter(|&(u, _)| include_eos || u != Vocabulary::EOS)
        .collect();
    if k > candidates.len() && !CLAMP_WARNED.swap(true, Ordering::Relaxed) {
        log::warn!("k={k} exceeds the {} expandable units; clamping", candidates.len());
    }
    let k = k.min(candidates.len());
    let order = |a: &(usize, f64), b: &(usize, f64)| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0));
    if k == 0 {
        return Vec::new();
    }
    if k < candidates.len() {
        candidates.select_nth_unstable_by(k - 1, order);
        candidates.truncate(k);
    }
    candidates.sort_by(order);
    candidates
}

/// Distributions at every scored prefix for one predicate; shared across
/// targets.
#[derive(Debug, Clone)]
pub struct PreferenceTree {
    nodes: Vec<(Prefix, Vec<f64>)>,
}

impl PreferenceTree {
    pub fn build<M: ArgumentModel + ?Sized>(
        model: &M,
        predicate_unit: usize,
        config: &SelPrefConfig,
    ) -> Result<Self, SelPrefError> {
        config.validate()?;
        let (state, dist) = model.advance(None, predicate_unit)?;
        let mut frontier = vec![(Prefix::root(predicate_unit), state, dist)];
        let mut nodes = Vec::new();
        for level in 0..config.depth {
            let mut next = Vec::new();
            for (prefix, state, dist) in frontier {
                if level + 1 < config.depth {
                    for (unit, p) in top_k_next(&dist, config.k, config.expand_eos) {
                        if unit == Vocabulary::EOS {
                            continue;
                        }
                        let (child_state, child_dist) = model.advance(Some(&state), unit)?;
                        let mut units = prefix.units.clone();
                        units.push(unit);
                        let child = Prefix {
                            units,
                            log_prob: prefix.log_prob + p.ln(),
                        };
                        next.push((child, child_state, child_dist));
                    }
                }
                nodes.push((prefix, dist));
            }
            frontier = next;
        }
        Ok(PreferenceTree { nodes })
    }

    pub fn prefixes(&self) -> impl Iterator<Item = &Prefix> {
        self.nodes.iter().map(|(p, _)| p)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn log_terms(&self, target: usize) -> Vec<f64> {
        self.nodes
            .iter()
            .map(|(q, dist)| q.log_prob + dist.get(target).copied().unwrap_or(0.0).ln())
            .filter(|t| *t > f64::NEG_INFINITY)
            .collect()
    }

    /// Preference score for joint unit `target`.
    pub fn score(&self, target: usize) -> f64 {
        let mut terms: Vec<f64> = self.log_terms(target).into_iter().map(f64::exp).collect();
        terms.sort_by(f64::total_cmp);
        terms.iter().fold(0.0, |acc, t| acc + t)
    }

    /// `ln` of [`PreferenceTree::score`] computed with a max shift, for
    /// scores below the `f64` range. `-inf` when the score is zero.
    pub fn log_score(&self, target: usize) -> f64 {
        let mut terms = self.log_terms(target);
        let Some(max) = terms.iter().copied().max_by(f64::total_cmp) else {
            return f64::NEG_INFINITY;
        };
        terms.iter_mut().for_each(|t| *t = (*t - max).exp());
        terms.sort_by(f64::total_cmp);
        max + terms.iter().fold(0.0, |acc, t| acc + t).ln()
    }
}

/// `score(target | predicate)`; zero when either is out of vocabulary.
pub fn selectional_preference<M: ArgumentModel + ?Sized>(
    model: &M,
    predicate: &str,
    target: &ArgumentUnit,
    config: &SelPrefConfig,
) -> Result<f64, SelPrefError> {
    config.validate()?;
    let vocab = model.vocabulary();
    let (Some(p), Some(t)) = (
        vocab.predicate_unit(predicate),
        vocab.unit_id(&target.word, &target.label),
    ) else {
        return Ok(0.0);
    };
    Ok(PreferenceTree::build(model, p, config)?.score(t))
}

/// The same sum without pruning: every non-EOS argument sequence of up to
/// `depth - 1` arguments, each prefix rescored from scratch in linear space.
pub fn selectional_preference_exhaustive<M: ArgumentModel + ?Sized>(
    model: &M,
    predicate: &str,
    target: &ArgumentUnit,
    depth: usize,
) -> Result<f64, SelPrefError> {
    let vocab = model.vocabulary();
    let outputs = vocab.num_units();
    if outputs > EXHAUSTIVE_MAX_OUTPUTS || depth > EXHAUSTIVE_MAX_DEPTH || depth == 0 {
        return Err(SelPrefError::CostGuard { outputs, depth });
    }
    let (Some(p), Some(t)) = (
        vocab.predicate_unit(predicate),
        vocab.unit_id(&target.word, &target.label),
    ) else {
        return Ok(0.0);
    };
    let arguments: Vec<usize> = (0..outputs).filter(|&u| u != Vocabulary::EOS).collect();
    let mut total = 0.0;
    let mut level: Vec<Vec<usize>> = vec![vec![p]];
    for _ in 0..depth {
        let mut next = Vec::new();
        for seq in &level {
            let mut prob = 1.0;
            for i in 1..seq.len() {
                prob *= model.distribution_after(&seq[..i])?[seq[i]];
            }
            total += model.distribution_after(seq)?[t] * prob;
            for &u in &arguments {
                let mut longer = seq.clone();
                longer.push(u);
                next.push(longer);
            }
        }
        level = next;
    }
    Ok(total)
}

/// `max` of the verbal scores over the forms of `nominal` that are
/// predicates of the model; zero when there are none.
pub fn nominal_selectional_preference<M: ArgumentModel + ?Sized>(
    model: &M,
    nominal: &str,
    target: &ArgumentUnit,
    verb_map: &VerbMap,
    config: &SelPrefConfig,
) -> Result<f64, SelPrefError> {
    let mut best = 0.0f64;
    for form in verb_map.forms(nominal) {
        if model.vocabulary().predicate_unit(&form.form).is_some() {
            best = best.max(selectional_preference(model, &form.form, target, config)?);
        }
    }
    Ok(best)
}

/// Batch scorer with one cached tree per predicate. Safe to share across
/// threads.
pub struct PreferenceScorer<'m, M: ?Sized> {
    model: &'m M,
    config: SelPrefConfig,
    trees: RwLock<HashMap<usize, Arc<PreferenceTree>>>,
}

impl<'m, M: ArgumentModel + ?Sized> PreferenceScorer<'m, M> {
    pub fn new(model: &'m M, config: SelPrefConfig) -> Result<Self, SelPrefError> {
        config.validate()?;
        Ok(PreferenceScorer {
            model,
            config,
            trees: RwLock::new(HashMap::new()),
        })
    }

    pub fn config(&self) -> &SelPrefConfig {
        &self.config
    }

    pub fn model(&self) -> &M {
        self.model
    }

    fn tree(&self, predicate_unit: usize) -> Result<Arc<PreferenceTree>, SelPrefError> {
        if let Some(t) = self.trees.read().expect("tree cache poisoned").get(&predicate_unit) {
            return Ok(Arc::clone(t));
        }
        let built = Arc::new(PreferenceTree::build(self.model, predicate_unit, &self.config)?);
        let mut cache = self.trees.write().expect("tree cache poisoned");
        Ok(Arc::clone(cache.entry(predicate_unit).or_insert(built)))
    }

    pub fn score(&self, predicate: &str, word: &str, label: &str) -> Result<f64, SelPrefError> {
        let vocab = self.model.vocabulary();
        let (Some(p), Some(t)) = (vocab.predicate_unit(predicate), vocab.unit_id(word, label)) else {
            return Ok(0.0);
        };
        Ok(self.tree(p)?.score(t))
    }

    pub fn nominal_score(
        &self,
        nominal: &str,
        word: &str,
        label: &str,
        verb_map: &VerbMap,
    ) -> Result<f64, SelPrefError> {
        let mut best = 0.0f64;
        for form in verb_map.forms(nominal) {
            best = best.max(self.score(&form.form, word, label)?);
        }
        Ok(best)
    }

    pub fn cached_predicates(&self) -> usize {
        self.trees.read().expect("tree cache poisoned").len()
    }
}

/// One `predicate<TAB>word<TAB>label` line of a batch file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Triple {
    pub predicate: String,
    pub word: String,
    pub label: String,
}

pub fn read_triples<R: BufRead>(reader: R) -> Result<Vec<Triple>, SelPrefError> {
    let mut out = Vec::new();
    for (no, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
        let [predicate, word, label] = fields[..] else {
            return Err(SelPrefError::Parse {
                line: no + 1,
                message: format!("expected 3 tab-separated fields, found {}", fields.len()),
            });
        };
        out.push(Triple {
            predicate: predicate.to_owned(),
            word: word.to_owned(),
            label: label.to_owned(),
        });
    }
    Ok(out)
}

/// Writes each triple with its scores appended, ten fractional digits each.
pub fn write_scored_triples<W: Write>(mut out: W, rows: &[(Triple, Vec<f64>)]) -> std::io::Result<()> {
    for (t, scores) in rows {
        write!(out, "{}\t{}\t{}", t.predicate, t.word, t.label)?;
        for s in scores {
            write!(out, "\t{s:.10}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frames::{build_vocabularies, FrameSequence, Lexicon, WordForm};
    use crate::prnsfm::{ModelConfig, PrnsfmModel};

    /// Distributions looked up by the last unit of the prefix, with a
    /// separate entry for the root.
    type Lookup = Box<dyn Fn(&[usize]) -> Vec<f64> + Send + Sync>;

    struct TableModel {
        vocab: Vocabulary,
        table: Lookup,
    }

    impl ArgumentModel for TableModel {
        type State = Vec<usize>;

        fn vocabulary(&self) -> &Vocabulary {
            &self.vocab
        }

        fn advance(&self, state: Option<&Vec<usize>>, unit: usize) -> Result<(Vec<usize>, Vec<f64>), ModelError> {
            let mut prefix = state.cloned().unwrap_or_default();
            prefix.push(unit);
            let dist = (self.table)(&prefix);
            Ok((prefix, dist))
        }
    }

    // unk, EOS, eat:PRED, kid:A0 in some order fixed by the vocabulary.
    fn four_unit_vocab() -> (Vocabulary, usize, usize) {
        let frames = vec![FrameSequence::new("f", "eat", vec![ArgumentUnit::new("kid", "A0")]).unwrap()];
        let v = build_vocabularies(&frames, 1, WordForm::Surface);
        assert_eq!(v.num_units(), 4);
        let p = v.predicate_unit("eat").unwrap();
        let k = v.unit_id("kid", "A0").unwrap();
        (v, p, k)
    }

    fn fixture() -> (TableModel, usize, usize) {
        let (vocab, p, k) = four_unit_vocab();
        let table = move |prefix: &[usize]| -> Vec<f64> {
            let mut d = vec![0.0; 4];
            let mut set = |unk: f64, eos: f64, pred: f64, kid: f64| {
                d[Vocabulary::UNK] = unk;
                d[Vocabulary::EOS] = eos;
                d[p] = pred;
                d[k] = kid;
            };
            match (prefix.len(), *prefix.last().unwrap()) {
                (1, _) => set(0.1, 0.3, 0.2, 0.4),
                (_, u) if u == Vocabulary::UNK => set(0.4, 0.3, 0.1, 0.2),
                (_, u) if u == p => set(0.1, 0.1, 0.1, 0.7),
                _ => set(0.2, 0.5, 0.2, 0.1),
            }
            d
        };
        (
            TableModel {
                vocab,
                table: Box::new(table),
            },
            p,
            k,
        )
    }

    fn kid() -> ArgumentUnit {
        ArgumentUnit::new("kid", "A0")
    }

    #[test]
    fn top_k_hand_ranked() {
        let (m, p, k) = fixture();
        let (_, d) = m.advance(None, p).unwrap();
        assert_eq!(top_k_next(&d, 2, false), vec![(k, 0.4), (p, 0.2)]);
        assert_eq!(top_k_next(&d, 2, true), vec![(k, 0.4), (Vocabulary::EOS, 0.3)]);
        let all = top_k_next(&d, 3, false);
        assert_eq!(all.len(), 3);
        assert!((all.iter().map(|x| x.1).sum::<f64>() - (1.0 - d[Vocabulary::EOS])).abs() < 1e-15);
        assert_eq!(top_k_next(&d, 99, false).len(), 3);
    }

    #[test]
    fn top_k_ties_by_index() {
        let d = vec![0.25; 4];
        assert_eq!(top_k_next(&d, 1, false), vec![(0, 0.25)]);
        assert_eq!(top_k_next(&d, 2, false), vec![(0, 0.25), (2, 0.25)]);
        let d = vec![0.1, 0.2, 0.35, 0.35];
        assert_eq!(top_k_next(&d, 1, false), vec![(2, 0.35)]);
    }

    #[test]
    fn hand_expanded_sums() {
        let (m, _, _) = fixture();
        let score = |k, depth| selectional_preference(&m, "eat", &kid(), &SelPrefConfig::new(k, depth)).unwrap();
        // depth 0 term, then one term per expanded first argument
        assert!((score(1, 1) - 0.4).abs() < 1e-15);
        assert!((score(1, 2) - (0.4 + 0.4 * 0.1)).abs() < 1e-15);
        assert!((score(2, 2) - (0.4 + 0.4 * 0.1 + 0.2 * 0.7)).abs() < 1e-15);
        let full = 0.4 + 0.1 * 0.2 + 0.2 * 0.7 + 0.4 * 0.1;
        assert!((score(3, 2) - full).abs() < 1e-15);
        let oracle = selectional_preference_exhaustive(&m, "eat", &kid(), 2).unwrap();
        assert!((oracle - full).abs() < 1e-15);

        let with_eos = SelPrefConfig {
            expand_eos: true,
            ..SelPrefConfig::new(2, 2)
        };
        let s = selectional_preference(&m, "eat", &kid(), &with_eos).unwrap();
        assert!((s - (0.4 + 0.4 * 0.1)).abs() < 1e-15);
    }

    #[test]
    fn eos_target_uses_the_same_formula() {
        let (m, _, _) = fixture();
        let s = selectional_preference(&m, "eat", &ArgumentUnit::eos(), &SelPrefConfig::new(1, 2)).unwrap();
        assert!((s - (0.3 + 0.4 * 0.5)).abs() < 1e-15);
    }

    #[test]
    fn out_of_vocabulary_scores_zero() {
        let (m, _, _) = fixture();
        let cfg = SelPrefConfig::default();
        assert_eq!(selectional_preference(&m, "drink", &kid(), &cfg).unwrap(), 0.0);
        assert_eq!(
            selectional_preference(&m, "eat", &ArgumentUnit::new("dog", "A0"), &cfg).unwrap(),
            0.0
        );
    }

    #[test]
    fn config_and_cost_guard() {
        let (m, _, _) = fixture();
        assert!(selectional_preference(&m, "eat", &kid(), &SelPrefConfig::new(0, 2)).is_err());
        assert!(selectional_preference(&m, "eat", &kid(), &SelPrefConfig::new(1, 9)).is_err());
        assert!(matches!(
            selectional_preference_exhaustive(&m, "eat", &kid(), 5),
            Err(SelPrefError::CostGuard { .. })
        ));
    }

    #[test]
    fn tree_prefix_invariants() {
        let (m, p, _) = fixture();
        let tree = PreferenceTree::build(&m, p, &SelPrefConfig::new(2, 3)).unwrap();
        assert_eq!(tree.len(), 1 + 2 + 4);
        let root = tree.prefixes().next().unwrap();
        assert_eq!(root.log_prob, 0.0);
        assert_eq!(root.units, vec![p]);
        for q in tree.prefixes() {
            assert_eq!(q.depth(), q.units.len() - 1);
            assert!(q.log_prob <= 0.0);
            assert!(q.depth() < 3);
        }
    }

    #[test]
    fn log_score_matches_score() {
        let (m, p, k) = fixture();
        let tree = PreferenceTree::build(&m, p, &SelPrefConfig::new(3, 3)).unwrap();
        assert!((tree.log_score(k).exp() - tree.score(k)).abs() < 1e-15);
    }

    #[test]
    fn nominal_takes_max_over_forms() {
        let frames = vec![
            FrameSequence::new("a", "fund", vec![ArgumentUnit::new("bank", "A0")]).unwrap(),
            FrameSequence::new("b", "funded", vec![ArgumentUnit::new("bank", "A0")]).unwrap(),
        ];
        let vocab = build_vocabularies(&frames, 1, WordForm::Surface);
        let fund = vocab.predicate_unit("fund").unwrap();
        let funded = vocab.predicate_unit("funded").unwrap();
        let bank = vocab.unit_id("bank", "A0").unwrap();
        let n = vocab.num_units();
        let model = TableModel {
            vocab,
            table: Box::new(move |prefix: &[usize]| {
                let mut d = vec![0.0; n];
                let target = if prefix[0] == fund {
                    0.002
                } else if prefix[0] == funded {
                    0.005
                } else {
                    0.0
                };
                d[bank] = target;
                d[Vocabulary::EOS] = 1.0 - target;
                d
            }),
        };
        let mut lex = Lexicon::default();
        lex.insert("funds", &["fund", "funded", "funding"]);
        lex.insert("grant", &["fund"]);
        let map = VerbMap::from_lexicon(&lex, ["fund", "funded"]);
        let target = ArgumentUnit::new("bank", "A0");
        let cfg = SelPrefConfig::new(1, 1);
        let close = |a: f64, b: f64| (a - b).abs() < 1e-15;
        assert!(close(
            nominal_selectional_preference(&model, "funds", &target, &map, &cfg).unwrap(),
            0.005
        ));
        assert!(close(
            nominal_selectional_preference(&model, "grant", &target, &map, &cfg).unwrap(),
            0.002
        ));
        assert_eq!(
            nominal_selectional_preference(&model, "loan", &target, &map, &cfg).unwrap(),
            0.0
        );

        let scorer = PreferenceScorer::new(&model, cfg).unwrap();
        assert!(close(scorer.nominal_score("funds", "bank", "A0", &map).unwrap(), 0.005));
        assert_eq!(scorer.cached_predicates(), 2);
    }

    fn random_model(seed: u64) -> PrnsfmModel {
        let frames = vec![
            FrameSequence::new(
                "a",
                "eat",
                vec![ArgumentUnit::new("kid", "A0"), ArgumentUnit::new("pie", "A1")],
            )
            .unwrap(),
            FrameSequence::new("b", "bake", vec![ArgumentUnit::new("pie", "A1")]).unwrap(),
        ];
        let vocab = build_vocabularies(&frames, 1, WordForm::Surface);
        PrnsfmModel::new(ModelConfig::joint(4).with_seed(seed).with_init_range(1.0), vocab, None).unwrap()
    }

    #[test]
    fn full_width_equals_exhaustive_on_lstm() {
        let m = random_model(3);
        let width = m.num_outputs() - 1;
        for depth in 1..=3 {
            for target in [ArgumentUnit::new("pie", "A1"), ArgumentUnit::new("kid", "A0")] {
                let pruned = selectional_preference(&m, "eat", &target, &SelPrefConfig::new(width, depth)).unwrap();
                let oracle = selectional_preference_exhaustive(&m, "eat", &target, depth).unwrap();
                assert!((pruned - oracle).abs() < 1e-10, "{pruned} vs {oracle}");
            }
        }
    }

    #[test]
    fn scores_at_depth_one_sum_to_one() {
        let m = random_model(5);
        let vocab = m.vocabulary().clone();
        let total: f64 = (0..vocab.num_units())
            .map(|u| selectional_preference(&m, "bake", &vocab.unit(u), &SelPrefConfig::new(1, 1)).unwrap())
            .sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn scorer_is_shareable_across_threads() {
        let m = random_model(9);
        let scorer = PreferenceScorer::new(&m, SelPrefConfig::new(2, 3)).unwrap();
        let direct = selectional_preference(&m, "eat", &ArgumentUnit::new("pie", "A1"), scorer.config()).unwrap();
        std::thread::scope(|s| {
            for _ in 0..4 {
                s.spawn(|| {
                    assert_eq!(scorer.score("eat", "pie", "A1").unwrap(), direct);
                });
            }
        });
        assert_eq!(scorer.cached_predicates(), 1);
    }

    #[test]
    fn triple_io() {
        let triples = read_triples("eat\tpie\tA1\n\n# c\nbake\tkid\tA0\n".as_bytes()).unwrap();
        assert_eq!(triples.len(), 2);
        assert!(read_triples("eat pie A1\n".as_bytes()).is_err());
        let mut out = Vec::new();
        write_scored_triples(&mut out, &[(triples[0].clone(), vec![0.25, 1.0 / 3.0])]).unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "eat\tpie\tA1\t0.2500000000\t0.3333333333\n"
        );
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(24))]

            #[test]
            fn monotone_in_k_and_depth(seed in 0u64..10_000, target in 0usize..7) {
                let m = random_model(seed);
                let n = m.num_outputs();
                let unit = m.vocabulary().unit(target % n);
                let mut previous_depth = vec![0.0; n];
                for depth in 1..=3 {
                    let mut previous_k = 0.0;
                    for (k, below) in previous_depth.iter_mut().enumerate().skip(1) {
                        let s = selectional_preference(&m, "eat", &unit, &SelPrefConfig::new(k, depth)).unwrap();
                        prop_assert!(s >= previous_k);
                        prop_assert!(s >= *below);
                        *below = s;
                        previous_k = s;
                    }
                    let oracle = selectional_preference_exhaustive(&m, "eat", &unit, depth).unwrap();
                    prop_assert!(previous_k <= oracle + 1e-10);
                    prop_assert!((previous_k - oracle).abs() < 1e-10);
                }
            }

            #[test]
            fn deterministic(seed in 0u64..10_000) {
                let m = random_model(seed);
                let t = ArgumentUnit::new("pie", "A1");
                let cfg = SelPrefConfig::new(2, 4);
                let a = selectional_preference(&m, "eat", &t, &cfg).unwrap();
                let b = selectional_preference(&m, "eat", &t, &cfg).unwrap();
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }
}

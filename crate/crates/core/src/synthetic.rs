//! Generated grammar corpora and discourse fixtures.
//!
//! Each predicate draws its arguments from its own role lexicons, and
//! arguments always appear in label order (`A0`, `A1`, then the optional
//! `AM-LOC`). Lexicons of different predicates are disjoint, so a word is
//! grammatical for exactly one (predicate, label) pair. That makes the
//! learnt preferences checkable: [`Grammar::probe_pairs`] pairs a
//! consistent filler with one taken from another predicate or role.
//!
//! [`Grammar::discourse`] builds short documents where a nominal form of a
//! predicate is missing a core role whose filler sits in the context window,
//! either as a bare noun (the model must find it) or as the explicit
//! argument of a verbal instance (the fallback must find it).

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::eval::GoldPosition;
use crate::frames::{ArgumentUnit, FrameSequence, Lexicon};
use crate::resolver::{Document, ExplicitArgument, ExplicitFrame, ResolverQuery, Sentence, Token};

const NAMED: [(&str, &str); 5] = [
    ("sell", "sale"),
    ("build", "construction"),
    ("teach", "lesson"),
    ("drive", "journey"),
    ("cook", "meal"),
];

const NOUNS: [&str; 60] = [
    "dealer", "broker", "agent", "house", "car", "stock", "market", "town", "shop", "builder", "crew", "firm",
    "bridge", "tower", "road", "valley", "coast", "island", "teacher", "tutor", "coach", "physics", "history", "music",
    "school", "campus", "library", "driver", "pilot", "courier", "truck", "bus", "van", "highway", "tunnel", "border",
    "chef", "baker", "cook", "soup", "bread", "pasta", "kitchen", "cafe", "garden", "lawyer", "doctor", "farmer",
    "apple", "letter", "engine", "harbor", "forest", "desert", "river", "castle", "village", "station", "factory",
    "museum",
];

/// Core labels, always present.
pub const CORE_LABELS: [&str; 2] = ["A0", "A1"];
/// The optional trailing label.
pub const OPTIONAL_LABEL: &str = "AM-LOC";

#[derive(Debug, Clone, PartialEq)]
pub struct GrammarConfig {
    pub predicates: usize,
    pub words_per_role: usize,
    /// Probability that a frame carries the optional role.
    pub optional_role_prob: f64,
}

impl Default for GrammarConfig {
    fn default() -> Self {
        GrammarConfig {
            predicates: 5,
            words_per_role: 3,
            optional_role_prob: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredicateSpec {
    pub verb: String,
    pub nominal: String,
    /// `(label, fillers)` in the order arguments are emitted.
    pub roles: Vec<(String, Vec<String>)>,
}

impl PredicateSpec {
    pub fn fillers(&self, label: &str) -> &[String] {
        self.roles
            .iter()
            .find(|(l, _)| l == label)
            .map(|(_, w)| w.as_slice())
            .unwrap_or(&[])
    }
}

/// A grammatical filler and an ungrammatical one for the same predicate.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbePair {
    pub predicate: String,
    pub consistent: ArgumentUnit,
    pub inconsistent: ArgumentUnit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscourseFixture {
    pub documents: Vec<Document>,
    pub queries: Vec<ResolverQuery>,
    pub gold: Vec<GoldPosition>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grammar {
    config: GrammarConfig,
    predicates: Vec<PredicateSpec>,
}

impl Grammar {
    pub fn new(config: GrammarConfig) -> Self {
        let labels: Vec<&str> = CORE_LABELS.iter().copied().chain([OPTIONAL_LABEL]).collect();
        let mut pool = (0..).map(|i: usize| match NOUNS.get(i) {
            Some(n) => n.to_string(),
            None => format!("thing{i}"),
        });
        let predicates = (0..config.predicates)
            .map(|i| {
                let (verb, nominal) = match NAMED.get(i) {
                    Some((v, n)) => (v.to_string(), n.to_string()),
                    None => (format!("act{i}"), format!("action{i}")),
                };
                let roles = labels
                    .iter()
                    .map(|l| (l.to_string(), pool.by_ref().take(config.words_per_role).collect()))
                    .collect();
                PredicateSpec { verb, nominal, roles }
            })
            .collect();
        Grammar { config, predicates }
    }

    pub fn config(&self) -> &GrammarConfig {
        &self.config
    }

    pub fn predicates(&self) -> &[PredicateSpec] {
        &self.predicates
    }

    pub fn is_consistent(&self, predicate: &str, unit: &ArgumentUnit) -> bool {
        self.predicates
            .iter()
            .any(|p| p.verb == predicate && p.fillers(&unit.label).contains(&unit.word))
    }

    /// Nominal → verb lexicon.
    pub fn lexicon(&self) -> Lexicon {
        let mut lex = Lexicon::default();
        for p in &self.predicates {
            lex.insert(&p.nominal, &[p.verb.as_str()]);
        }
        lex
    }

    /// Lexicon file text (`nominal<TAB>verb`).
    pub fn lexicon_text(&self) -> String {
        self.predicates
            .iter()
            .map(|p| format!("{}\t{}\n", p.nominal, p.verb))
            .collect()
    }

    /// `n` frames, predicates uniform, fillers uniform within each lexicon.
    pub fn sample_frames(&self, n: usize, seed: u64) -> Vec<FrameSequence> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|i| {
                let p = self.predicates.choose(&mut rng).expect("at least one predicate");
                let mut args = Vec::new();
                for (label, words) in &p.roles {
                    if label == OPTIONAL_LABEL && !rng.gen_bool(self.config.optional_role_prob) {
                        continue;
                    }
                    let w = words.choose(&mut rng).expect("non-empty lexicon");
                    args.push(ArgumentUnit::new(w.clone(), label.clone()));
                }
                FrameSequence::new(format!("syn{i}"), p.verb.clone(), args).expect("generated frames are valid")
            })
            .collect()
    }

    /// Pairs for a random predicate and core label: a filler of that slot
    /// against a filler of the same label for another predicate, or of
    /// another label for the same predicate (alternating).
    pub fn probe_pairs(&self, n: usize, seed: u64) -> Vec<ProbePair> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|i| {
                let pi = rng.gen_range(0..self.predicates.len());
                let p = &self.predicates[pi];
                let label = CORE_LABELS[rng.gen_range(0..CORE_LABELS.len())];
                let good = p.fillers(label).choose(&mut rng).expect("non-empty lexicon").clone();
                let bad = if i % 2 == 0 && self.predicates.len() > 1 {
                    let other = (pi + rng.gen_range(1..self.predicates.len())) % self.predicates.len();
                    ArgumentUnit::new(
                        self.predicates[other]
                            .fillers(label)
                            .choose(&mut rng)
                            .expect("non-empty")
                            .clone(),
                        label,
                    )
                } else {
                    let other_label = if label == CORE_LABELS[0] {
                        CORE_LABELS[1]
                    } else {
                        CORE_LABELS[0]
                    };
                    ArgumentUnit::new(
                        p.fillers(other_label).choose(&mut rng).expect("non-empty").clone(),
                        label,
                    )
                };
                ProbePair {
                    predicate: p.verb.clone(),
                    consistent: ArgumentUnit::new(good, label),
                    inconsistent: bad,
                }
            })
            .collect()
    }

    /// `n` three-sentence documents, each with one query in the last
    /// sentence. Every fifth document is resolvable by the explicit
    /// fallback; the others need the model.
    pub fn discourse(&self, n: usize, seed: u64) -> DiscourseFixture {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut fixture = DiscourseFixture {
            documents: Vec::with_capacity(n),
            queries: Vec::with_capacity(n),
            gold: Vec::with_capacity(n),
        };
        for i in 0..n {
            let pi = rng.gen_range(0..self.predicates.len());
            let p = &self.predicates[pi];
            let label = CORE_LABELS[rng.gen_range(0..CORE_LABELS.len())];
            let other_label = if label == CORE_LABELS[0] {
                CORE_LABELS[1]
            } else {
                CORE_LABELS[0]
            };
            let filler = p.fillers(label).choose(&mut rng).expect("non-empty").clone();
            let wrong_role = p.fillers(other_label).choose(&mut rng).expect("non-empty").clone();
            let other = &self.predicates[(pi + rng.gen_range(1..self.predicates.len().max(2))) % self.predicates.len()];
            let wrong_pred = other.fillers(label).choose(&mut rng).expect("non-empty").clone();

            let mut sentences = vec![Sentence::default(), Sentence::default(), Sentence::default()];
            let filler_at;
            if i % 5 == 0 {
                // explicit verbal instance with the filler as its argument
                let s = rng.gen_range(0..2);
                let (subject, object) = if label == "A1" {
                    (&wrong_role, &filler)
                } else {
                    (&filler, &wrong_role)
                };
                let tokens = vec![
                    Token::new("the", "the", "DT"),
                    Token::new(subject, subject, "NN"),
                    Token::new(&p.verb, &p.verb, "VBD"),
                    Token::new("the", "the", "DT"),
                    Token::new(object, object, "NN"),
                    Token::new(".", ".", "."),
                ];
                let (filler_pos, other_pos) = if label == "A1" { (4, 1) } else { (1, 4) };
                sentences[s] = Sentence {
                    tokens,
                    frames: vec![ExplicitFrame {
                        predicate: 2,
                        args: vec![
                            ExplicitArgument {
                                label: label.to_string(),
                                token: filler_pos,
                            },
                            ExplicitArgument {
                                label: other_label.to_string(),
                                token: other_pos,
                            },
                        ],
                    }],
                };
                filler_at = (s, filler_pos);
                let free = 1 - s;
                sentences[free] = noun_sentence(&wrong_pred);
            } else {
                let order: Vec<usize> = {
                    let mut o = vec![0, 1, 2];
                    o.shuffle(&mut rng);
                    o
                };
                // filler, role distractor and predicate distractor each get a sentence
                sentences[order[0]] = noun_sentence(&filler);
                sentences[order[1]] = noun_sentence(&wrong_role);
                sentences[order[2]] = noun_sentence(&wrong_pred);
                filler_at = (order[0], 1);
            }
            let query_sentence = &mut sentences[2];
            let query_token = query_sentence.tokens.len();
            query_sentence.tokens.extend([
                Token::new("the", "the", "DT"),
                Token::new(&p.nominal, &p.nominal, "NN"),
                Token::new("happened", "happen", "VBD"),
                Token::new(".", ".", "."),
            ]);
            let doc = Document {
                id: format!("syn{i:03}"),
                sentences,
            };
            let query = ResolverQuery {
                doc: doc.id.clone(),
                sentence: 2,
                token: query_token + 1,
                nominal: p.nominal.clone(),
                label: label.to_string(),
            };
            fixture.gold.push(GoldPosition {
                key: query.key(),
                fillers: vec![[filler_at].into()],
            });
            fixture.queries.push(query);
            fixture.documents.push(doc);
        }
        fixture
    }
}

fn noun_sentence(noun: &str) -> Sentence {
    Sentence {
        tokens: vec![
            Token::new("a", "a", "DT"),
            Token::new(noun, noun, "NN"),
            Token::new("was", "be", "VBD"),
            Token::new("there", "there", "RB"),
            Token::new(".", ".", "."),
        ],
        frames: Vec::new(),
    }
}

//! Time-aware negative sampling and training-set assembly.
//!
//! Every negative must not contain any of the query's answers and must differ
//! from the positive. On top of that the strategy applies a year predicate
//! relative to the positive passage's publication year. Sampling is uniform
//! without replacement, seeded per query id so the result does not depend on
//! the order in which queries are processed.

use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{AnswerMatcher, Passage, Query};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NegativeKind {
    Random,
    SameYear,
    #[serde(rename = "diff-year")]
    DifferentYear,
}

impl NegativeKind {
    fn admits(self, positive_year: i32, candidate_year: i32) -> bool {
        match self {
            Self::Random => true,
            Self::SameYear => candidate_year == positive_year,
            Self::DifferentYear => candidate_year != positive_year,
        }
    }
}

impl fmt::Display for NegativeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(match self {
            Self::Random => "random",
            Self::SameYear => "same-year",
            Self::DifferentYear => "diff-year",
        })
    }
}

impl FromStr for NegativeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(Self::Random),
            "same-year" => Ok(Self::SameYear),
            "diff-year" | "different-year" => Ok(Self::DifferentYear),
            other => Err(Error::InvalidArgument(format!("unknown negative strategy {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NegativeStrategy {
    pub kind: NegativeKind,
    pub n: usize,
    pub seed: u64,
}

impl NegativeStrategy {
    pub fn new(kind: NegativeKind, n: usize, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("number of negatives must be >= 1".into()));
        }
        Ok(Self { kind, n, seed })
    }

    /// Eligibility of a single pool passage as a negative.
    pub fn is_eligible(&self, answers: &AnswerMatcher, positive: &Passage, candidate: &Passage) -> bool {
        candidate.id != positive.id
            && self.kind.admits(positive.pub_date.year(), candidate.pub_date.year())
            && !answers.matches(candidate)
    }

    /// The RNG for one query: the strategy seed mixed with a hash of the query id.
    fn rng_for(&self, query_id: &str) -> ChaCha8Rng {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in query_id.bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        ChaCha8Rng::seed_from_u64(self.seed ^ h.rotate_left(17))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NegativeSample {
    pub passages: Vec<Passage>,
    /// Fewer than `n` eligible passages existed.
    pub undersized: bool,
}

pub fn sample_negatives(query: &Query, positive: &Passage, pool: &[Passage], strategy: &NegativeStrategy) -> Result<NegativeSample> {
    if pool.is_empty() {
        return Err(Error::InvalidArgument("negative pool is empty".into()));
    }
    let answers = AnswerMatcher::for_query(query);
    let eligible: Vec<&Passage> = pool
        .iter()
        .filter(|p| strategy.is_eligible(&answers, positive, p))
        .collect();
    if eligible.is_empty() {
        return Err(Error::NoEligibleNegatives(query.id.clone()));
    }
    let undersized = eligible.len() < strategy.n;
    if undersized {
        log::warn!(
            "query {:?}: only {} eligible negatives for n={}",
            query.id,
            eligible.len(),
            strategy.n
        );
    }
    let amount = strategy.n.min(eligible.len());
    let mut rng = strategy.rng_for(&query.id);
    let passages = index::sample(&mut rng, eligible.len(), amount)
        .into_iter()
        .map(|i| eligible[i].clone())
        .collect();
    Ok(NegativeSample { passages, undersized })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingExample {
    pub query: Query,
    pub positive: Passage,
    pub negatives: Vec<Passage>,
}

/// Row of the training-set JSONL file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingRecord {
    pub query_id: String,
    pub positive_id: String,
    pub negative_ids: Vec<String>,
}

impl From<&TrainingExample> for TrainingRecord {
    fn from(e: &TrainingExample) -> Self {
        Self {
            query_id: e.query.id.clone(),
            positive_id: e.positive.id.clone(),
            negative_ids: e.negatives.iter().map(|p| p.id.clone()).collect(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingSetStats {
    pub queries: usize,
    pub examples: usize,
    pub dropped_no_positive: usize,
    pub dropped_no_negatives: usize,
    pub undersized: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSet {
    pub examples: Vec<TrainingExample>,
    pub stats: TrainingSetStats,
}

/// One example per query that has at least one positive: the positive with
/// the smallest passage id, plus sampled negatives from the full passage list.
pub fn build_training_set(queries: &[Query], passages: &[Passage], strategy: &NegativeStrategy) -> Result<TrainingSet> {
    let mut stats = TrainingSetStats {
        queries: queries.len(),
        ..Default::default()
    };
    let mut examples = Vec::new();
    for q in queries {
        let answers = AnswerMatcher::for_query(q);
        let positive = passages
            .iter()
            .filter(|p| !answers.is_empty() && answers.matches(p))
            .min_by(|a, b| a.id.cmp(&b.id));
        let Some(positive) = positive else {
            stats.dropped_no_positive += 1;
            continue;
        };
        match sample_negatives(q, positive, passages, strategy) {
            Ok(sample) => {
                stats.undersized += sample.undersized as usize;
                examples.push(TrainingExample {
                    query: q.clone(),
                    positive: positive.clone(),
                    negatives: sample.passages,
                });
            }
            Err(Error::NoEligibleNegatives(_)) => stats.dropped_no_negatives += 1,
            Err(e) => return Err(e),
        }
    }
    stats.examples = examples.len();
    Ok(TrainingSet { examples, stats })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::date::CalendarDate;

    fn passage(id: &str, year: i32, text: &str) -> Passage {
        Passage {
            id: id.into(),
            doc_id: id.into(),
            ordinal: 0,
            title: String::new(),
            text: text.into(),
            pub_date: CalendarDate::year_only(year).unwrap(),
        }
    }

    fn query(answer: &str) -> Query {
        Query {
            id: "q1".into(),
            text: "who?".into(),
            explicit_date: None,
            answers: vec![answer.into()],
        }
    }

    #[test]
    fn forced_choice() {
        let pos = passage("p", 1990, "the answer is smith");
        let pool = vec![pos.clone(), passage("n", 1990, "nothing")];
        let s = NegativeStrategy::new(NegativeKind::SameYear, 1, 3).unwrap();
        let got = sample_negatives(&query("smith"), &pos, &pool, &s).unwrap();
        assert_eq!(got.passages.len(), 1);
        assert_eq!(got.passages[0].id, "n");
        assert!(!got.undersized);
    }

    #[test]
    fn different_year_with_single_year_pool_fails() {
        let pos = passage("p", 1990, "smith");
        let pool = vec![pos.clone(), passage("a", 1990, "x"), passage("b", 1990, "y")];
        let s = NegativeStrategy::new(NegativeKind::DifferentYear, 2, 0).unwrap();
        assert!(matches!(
            sample_negatives(&query("smith"), &pos, &pool, &s),
            Err(Error::NoEligibleNegatives(_))
        ));
    }

    #[test]
    fn undersized_pool_returns_fewer() {
        let pos = passage("p", 1990, "smith");
        let pool = vec![pos.clone(), passage("a", 1991, "x")];
        let s = NegativeStrategy::new(NegativeKind::Random, 4, 0).unwrap();
        let got = sample_negatives(&query("smith"), &pos, &pool, &s).unwrap();
        assert!(got.undersized);
        assert_eq!(got.passages.len(), 1);
    }

    #[test]
    fn zero_negatives_rejected() {
        assert!(NegativeStrategy::new(NegativeKind::Random, 0, 0).is_err());
    }

    #[test]
    fn build_one_example_with_four_negatives() {
        let mut passages = vec![passage("p", 1990, "smith was editor")];
        for i in 0..4 {
            passages.push(passage(&format!("n{i}"), 1991, "unrelated"));
        }
        let s = NegativeStrategy::new(NegativeKind::Random, 4, 9).unwrap();
        let set = build_training_set(&[query("smith")], &passages, &s).unwrap();
        assert_eq!(set.examples.len(), 1);
        let mut ids: Vec<_> = set.examples[0].negatives.iter().map(|p| p.id.clone()).collect();
        ids.sort();
        assert_eq!(ids, vec!["n0", "n1", "n2", "n3"]);
    }

    #[test]
    fn build_drops_and_counts() {
        let passages = vec![passage("b", 1990, "smith"), passage("a", 1991, "smith too")];
        let s = NegativeStrategy::new(NegativeKind::Random, 1, 0).unwrap();
        let mut q2 = query("nobody");
        q2.id = "q2".into();
        let set = build_training_set(&[query("smith"), q2], &passages, &s).unwrap();
        assert!(set.examples.is_empty());
        assert_eq!(set.stats.dropped_no_negatives, 1);
        assert_eq!(set.stats.dropped_no_positive, 1);
        assert_eq!(set.stats.queries, 2);
    }

    #[test]
    fn first_positive_by_id() {
        let passages = vec![passage("z", 1990, "smith"), passage("m", 1991, "smith"), passage("n", 1992, "other")];
        let s = NegativeStrategy::new(NegativeKind::Random, 1, 0).unwrap();
        let set = build_training_set(&[query("smith")], &passages, &s).unwrap();
        assert_eq!(set.examples[0].positive.id, "m");
        assert_eq!(set.examples[0].negatives[0].id, "n");
    }

    #[test]
    fn seeded_and_order_independent() {
        let mut passages = vec![];
        for i in 0..30 {
            passages.push(passage(&format!("p{i:02}"), 1990 + i % 5, &format!("text {i}")));
        }
        let mut qs = vec![];
        for i in 0..6 {
            qs.push(Query {
                id: format!("q{i}"),
                text: String::new(),
                explicit_date: None,
                answers: vec![format!("text {i}")],
            });
        }
        let s = NegativeStrategy::new(NegativeKind::SameYear, 3, 42).unwrap();
        let a = build_training_set(&qs, &passages, &s).unwrap();
        let b = build_training_set(&qs, &passages, &s).unwrap();
        assert_eq!(a, b);
        let mut rev = qs.clone();
        rev.reverse();
        let c = build_training_set(&rev, &passages, &s).unwrap();
        let mut c_examples = c.examples.clone();
        c_examples.reverse();
        assert_eq!(a.examples, c_examples);
    }
}

//! Top-k accuracy, nDCG@k and MAP@k with binary relevance.
//!
//! A passage is relevant to a query when its text contains one of the
//! query's answers. nDCG uses `log2(rank + 1)` discounts and an ideal ranking
//! of `min(k, #relevant)` relevant items; AP@k divides by `min(k, #relevant)`.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::corpus::{AnswerMatcher, Passage, Query};
use crate::error::{Error, Result};

/// The cutoffs reported by [`evaluate`].
pub const K_GRID: [usize; 6] = [1, 5, 10, 20, 50, 100];

/// Ranked passage ids for one query, best first. Row of the results JSONL.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedList {
    pub query_id: String,
    pub ranked_ids: Vec<String>,
}

impl RankedList {
    pub fn from_search(query_id: impl Into<String>, result: &crate::index::SearchResult) -> Self {
        Self {
            query_id: query_id.into(),
            ranked_ids: result.ids().map(str::to_string).collect(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Judgments {
    relevant: HashMap<String, HashSet<String>>,
}

impl Judgments {
    pub fn new() -> Self {
        Self::default()
    }

    /// Records the relevant set for a query; the set must be nonempty.
    pub fn insert<I, S>(&mut self, query_id: impl Into<String>, relevant: I) -> Result<()>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let query_id = query_id.into();
        let set: HashSet<String> = relevant.into_iter().map(Into::into).collect();
        if set.is_empty() {
            return Err(Error::InvalidArgument(format!("query {query_id:?} has no relevant passages")));
        }
        self.relevant.insert(query_id, set);
        Ok(())
    }

    /// Answer-containment judgments; queries with no relevant passage are
    /// skipped and returned separately.
    pub fn from_answers(queries: &[Query], passages: &[Passage]) -> (Self, Vec<String>) {
        let mut out = Self::new();
        let mut skipped = Vec::new();
        for q in queries {
            let m = AnswerMatcher::for_query(q);
            let rel: Vec<&str> = if m.is_empty() {
                Vec::new()
            } else {
                passages.iter().filter(|p| m.matches(p)).map(|p| p.id.as_str()).collect()
            };
            if rel.is_empty() {
                skipped.push(q.id.clone());
            } else {
                out.insert(q.id.clone(), rel).expect("nonempty");
            }
        }
        (out, skipped)
    }

    pub fn get(&self, query_id: &str) -> Result<&HashSet<String>> {
        self.relevant
            .get(query_id)
            .ok_or_else(|| Error::MissingJudgment(query_id.to_string()))
    }

    pub fn len(&self) -> usize {
        self.relevant.len()
    }

    pub fn is_empty(&self) -> bool {
        self.relevant.is_empty()
    }
}

fn check_k(k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be >= 1".into()));
    }
    Ok(())
}

fn hits<'a>(ranked: &'a [String], relevant: &'a HashSet<String>, k: usize) -> impl Iterator<Item = (usize, bool)> + 'a {
    ranked.iter().take(k).map(|id| relevant.contains(id)).enumerate()
}

/// Percentage of queries with at least one relevant passage in the top k.
pub fn topk_accuracy(results: &[RankedList], judgments: &Judgments, k: usize) -> Result<f64> {
    check_k(k)?;
    if results.is_empty() {
        return Err(Error::NoData);
    }
    let mut found = 0usize;
    for r in results {
        let rel = judgments.get(&r.query_id)?;
        if hits(&r.ranked_ids, rel, k).any(|(_, h)| h) {
            found += 1;
        }
    }
    Ok(100.0 * found as f64 / results.len() as f64)
}

pub fn ndcg_at_k(ranked: &[String], relevant: &HashSet<String>, k: usize) -> Result<f64> {
    check_k(k)?;
    if relevant.is_empty() {
        return Err(Error::InvalidArgument("empty relevant set".into()));
    }
    let discount = |i: usize| 1.0 / ((i + 2) as f64).log2();
    let dcg = hits(ranked, relevant, k)
        .filter(|&(_, h)| h)
        .fold(0.0, |acc, (i, _)| acc + discount(i));
    let idcg: f64 = (0..k.min(relevant.len())).map(discount).sum();
    Ok(dcg / idcg)
}

pub fn average_precision_at_k(ranked: &[String], relevant: &HashSet<String>, k: usize) -> Result<f64> {
    check_k(k)?;
    if relevant.is_empty() {
        return Err(Error::InvalidArgument("empty relevant set".into()));
    }
    let mut seen = 0usize;
    let mut sum = 0.0;
    for (i, hit) in hits(ranked, relevant, k) {
        if hit {
            seen += 1;
            sum += seen as f64 / (i + 1) as f64;
        }
    }
    Ok(sum / k.min(relevant.len()) as f64)
}

fn mean_over(results: &[RankedList], judgments: &Judgments, f: impl Fn(&[String], &HashSet<String>) -> Result<f64>) -> Result<f64> {
    if results.is_empty() {
        return Err(Error::NoData);
    }
    let mut total = 0.0;
    for r in results {
        total += f(&r.ranked_ids, judgments.get(&r.query_id)?)?;
    }
    Ok(total / results.len() as f64)
}

/// Mean nDCG@k over queries, in [0, 1].
pub fn mean_ndcg_at_k(results: &[RankedList], judgments: &Judgments, k: usize) -> Result<f64> {
    mean_over(results, judgments, |r, j| ndcg_at_k(r, j, k))
}

/// MAP@k over queries, in [0, 1].
pub fn map_at_k(results: &[RankedList], judgments: &Judgments, k: usize) -> Result<f64> {
    mean_over(results, judgments, |r, j| average_precision_at_k(r, j, k))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryScores {
    pub query_id: String,
    pub first_relevant_rank: Option<usize>,
    pub ndcg: BTreeMap<usize, f64>,
    pub ap: BTreeMap<usize, f64>,
}

/// All metrics on a k-grid, as percentages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub queries: usize,
    pub top_k: BTreeMap<usize, f64>,
    pub ndcg: BTreeMap<usize, f64>,
    pub map: BTreeMap<usize, f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub per_query: Vec<QueryScores>,
}

pub fn evaluate(results: &[RankedList], judgments: &Judgments, ks: &[usize], per_query: bool) -> Result<EvalReport> {
    let mut report = EvalReport {
        queries: results.len(),
        top_k: BTreeMap::new(),
        ndcg: BTreeMap::new(),
        map: BTreeMap::new(),
        per_query: Vec::new(),
    };
    for &k in ks {
        report.top_k.insert(k, topk_accuracy(results, judgments, k)?);
        report.ndcg.insert(k, 100.0 * mean_ndcg_at_k(results, judgments, k)?);
        report.map.insert(k, 100.0 * map_at_k(results, judgments, k)?);
    }
    if per_query {
        for r in results {
            let rel = judgments.get(&r.query_id)?;
            let mut q = QueryScores {
                query_id: r.query_id.clone(),
                first_relevant_rank: r.ranked_ids.iter().position(|id| rel.contains(id)).map(|i| i + 1),
                ndcg: BTreeMap::new(),
                ap: BTreeMap::new(),
            };
            for &k in ks {
                q.ndcg.insert(k, ndcg_at_k(&r.ranked_ids, rel, k)?);
                q.ap.insert(k, average_precision_at_k(&r.ranked_ids, rel, k)?);
            }
            report.per_query.push(q);
        }
    }
    Ok(report)
}

impl EvalReport {
    /// Aligned text table, one column per cutoff.
    pub fn to_table(&self) -> String {
        let ks: Vec<usize> = self.top_k.keys().copied().collect();
        let mut out = String::new();
        let _ = write!(out, "{:<8}", "metric");
        for k in &ks {
            let _ = write!(out, "{:>9}", format!("@{k}"));
        }
        out.push('\n');
        for (name, map) in [("top-k", &self.top_k), ("nDCG", &self.ndcg), ("MAP", &self.map)] {
            let _ = write!(out, "{name:<8}");
            for k in &ks {
                let _ = write!(out, "{:>9.2}", map.get(k).copied().unwrap_or(f64::NAN));
            }
            out.push('\n');
        }
        let _ = writeln!(out, "queries: {}", self.queries);
        out
    }

    /// `query_id,first_relevant_rank,ndcg@k...,ap@k...` for external significance tests.
    pub fn per_query_csv(&self) -> String {
        let ks: Vec<usize> = self.top_k.keys().copied().collect();
        let mut out = String::from("query_id,first_relevant_rank");
        for k in &ks {
            let _ = write!(out, ",ndcg@{k}");
        }
        for k in &ks {
            let _ = write!(out, ",ap@{k}");
        }
        out.push('\n');
        for q in &self.per_query {
            out.push_str(&q.query_id);
            let _ = write!(out, ",{}", q.first_relevant_rank.map(|r| r.to_string()).unwrap_or_default());
            for k in &ks {
                let _ = write!(out, ",{}", q.ndcg[k]);
            }
            for k in &ks {
                let _ = write!(out, ",{}", q.ap[k]);
            }
            out.push('\n');
        }
        out
    }
}

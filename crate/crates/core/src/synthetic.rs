//! A small corpus where relevance depends on time.
//!
//! Each of `events` recurring events is reported once per year for `years`
//! consecutive years. Reports of the same event share all their words except
//! a unique answer code, so text alone cannot tell the years apart. Queries
//! name the event and the year; the year is also set as the query date.
//! Event/year pairs are split between training and held-out queries, and the
//! two sides use different question templates.

use crate::corpus::{chunk_document, Document, Passage, Query, DEFAULT_CHUNK_SIZE};
use crate::date::CalendarDate;
use crate::embeddings::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::eval::{RankedList, Judgments};
use crate::fusion::FusionKind;
use crate::index::{search_fused, DenseIndex};
use crate::temporal::{KeyGranularity, TemporalTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SyntheticConfig {
    pub events: usize,
    pub years: usize,
    pub start_year: i32,
    pub semantic_dim: usize,
    pub encoder_seed: u64,
    /// Every `holdout_every`-th event/year pair (by `event + year` index) is held out.
    pub holdout_every: usize,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            events: 20,
            years: 20,
            start_year: 1980,
            semantic_dim: 128,
            encoder_seed: 0,
            holdout_every: 4,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub passages: Vec<Passage>,
    pub train_queries: Vec<Query>,
    pub test_queries: Vec<Query>,
    pub passage_embeddings: EmbeddingMatrix,
    pub query_embeddings: EmbeddingMatrix,
}

pub fn answer_code(event: usize, year: i32) -> String {
    format!("code{event}x{year}")
}

fn event_words(e: usize) -> [String; 4] {
    [format!("ev{e}a"), format!("ev{e}b"), format!("ev{e}c"), format!("ev{e}d")]
}

pub fn generate(cfg: &SyntheticConfig) -> Result<SyntheticCorpus> {
    let mut passages = Vec::new();
    let mut train_queries = Vec::new();
    let mut test_queries = Vec::new();
    for e in 0..cfg.events {
        let [a, b, c, d] = event_words(e);
        for yi in 0..cfg.years {
            let year = cfg.start_year + yi as i32;
            let date = CalendarDate::year_only(year)?;
            let code = answer_code(e, year);
            let doc = Document {
                id: format!("e{e:02}y{year}"),
                title: format!("{a} {b}"),
                body: format!("{a} {b} {c} {d} report {code}"),
                pub_date: date,
            };
            passages.extend(chunk_document(&doc, DEFAULT_CHUNK_SIZE)?);
            let held_out = (e + yi) % cfg.holdout_every == 0;
            let text = if held_out {
                format!("{c} {d} during {year}")
            } else {
                format!("{a} {b} in {year}")
            };
            let q = Query {
                id: format!("q{e:02}y{year}"),
                text,
                explicit_date: Some(date),
                answers: vec![code],
            };
            if held_out {
                test_queries.push(q);
            } else {
                train_queries.push(q);
            }
        }
    }
    let passage_embeddings = EmbeddingMatrix::toy(
        passages.iter().map(|p| (p.id.as_str(), p.text.as_str())),
        cfg.semantic_dim,
        cfg.encoder_seed,
    )?;
    let query_embeddings = EmbeddingMatrix::toy(
        train_queries
            .iter()
            .chain(&test_queries)
            .map(|q| (q.id.as_str(), q.text.as_str())),
        cfg.semantic_dim,
        cfg.encoder_seed,
    )?;
    Ok(SyntheticCorpus {
        passages,
        train_queries,
        test_queries,
        passage_embeddings,
        query_embeddings,
    })
}

impl SyntheticCorpus {
    /// Ranks passages for `queries` with a fused index built from `table`.
    pub fn retrieve_fused(&self, queries: &[Query], table: &TemporalTable, kind: FusionKind, k: usize) -> Result<Vec<RankedList>> {
        let index = DenseIndex::build(&self.passages, &self.passage_embeddings, table, kind)?;
        queries
            .iter()
            .map(|q| {
                let date = q.explicit_date.ok_or_else(|| Error::MissingQueryDate(q.id.clone()))?;
                let res = search_fused(&index, table, self.query_embeddings.require(&q.id)?, &date, k)?;
                Ok(RankedList::from_search(&q.id, &res))
            })
            .collect()
    }

    /// Date-blind ranking from semantic vectors alone.
    pub fn retrieve_plain(&self, queries: &[Query], k: usize) -> Result<Vec<RankedList>> {
        let index = DenseIndex::build_plain(&self.passages, &self.passage_embeddings, KeyGranularity::Year)?;
        queries
            .iter()
            .map(|q| {
                let res = index.search_raw(self.query_embeddings.require(&q.id)?, k)?;
                Ok(RankedList::from_search(&q.id, &res))
            })
            .collect()
    }

    pub fn judgments(&self, queries: &[Query]) -> Judgments {
        Judgments::from_answers(queries, &self.passages).0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::select_positives;

    #[test]
    fn shape_and_unique_positives() {
        let cfg = SyntheticConfig::default();
        let c = generate(&cfg).unwrap();
        assert_eq!(c.passages.len(), 400);
        assert_eq!(c.train_queries.len() + c.test_queries.len(), 400);
        assert_eq!(c.test_queries.len(), 100);
        for q in c.train_queries.iter().chain(&c.test_queries) {
            let pos = select_positives(q, &c.passages);
            assert_eq!(pos.len(), 1, "{}", q.id);
            assert_eq!(pos[0].pub_date, q.explicit_date.unwrap());
        }
    }
}

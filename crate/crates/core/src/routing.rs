//! Query routing: explicit dates go to fused retrieval, implicit temporal
//! queries get a predicted year first, everything else uses plain semantic
//! search.

use std::collections::HashMap;
use std::ops::Range;
use std::sync::OnceLock;

use regex::{Captures, Regex};
use serde::{Deserialize, Serialize};

use crate::corpus::Query;
use crate::date::CalendarDate;
use crate::embeddings::tokenize;
use crate::error::{Error, Result};
use crate::fusion::fuse;
use crate::index::{DenseIndex, SearchResult};
use crate::temporal::TemporalTable;

const MONTHS: &str = "january|february|march|april|may|june|july|august|september|october|november|december\
|jan|feb|mar|apr|jun|jul|aug|sept|sep|oct|nov|dec";
const YEAR: &str = r"(?:1\d{3}|2\d{3})";

fn date_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        let alternatives = [
            format!(r"(?P<iy>{YEAR})-(?P<im>\d{{2}})-(?P<id>\d{{2}})\b"),
            format!(r"(?P<am>{MONTHS})\.?\s+(?P<ad>\d{{1,2}})(?:st|nd|rd|th)?,?\s+(?P<ay>{YEAR})\b"),
            format!(r"(?P<bd>\d{{1,2}})(?:st|nd|rd|th)?\s+(?:of\s+)?(?P<bm>{MONTHS})\.?,?\s+(?P<by>{YEAR})\b"),
            format!(r"(?P<cm>{MONTHS})\.?,?\s+(?:of\s+)?(?P<cy>{YEAR})\b"),
            format!(r"(?P<jy>{YEAR})-(?P<jm>\d{{2}})\b"),
            format!(r"(?P<y>{YEAR})\b"),
        ];
        let pattern = format!(r"(?i)\b(?:{})", alternatives.join("|"));
        Regex::new(&pattern).expect("date pattern compiles")
    })
}

fn month_number(name: &str) -> u8 {
    let n = name.to_ascii_lowercase();
    const NAMES: [&str; 12] = ["jan", "feb", "mar", "apr", "may", "jun", "jul", "aug", "sep", "oct", "nov", "dec"];
    NAMES.iter().position(|m| n.starts_with(m)).map(|i| i as u8 + 1).unwrap_or(1)
}

/// A date found in free text, with its byte span.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DateMention {
    pub date: CalendarDate,
    pub span: Range<usize>,
}

fn mention_from(c: &Captures<'_>) -> Option<CalendarDate> {
    let num = |name: &str| c.name(name).and_then(|m| m.as_str().parse::<u32>().ok());
    let text = |name: &str| c.name(name).map(|m| m.as_str());
    // Fall back to coarser granularity when the finer fields are invalid.
    let best = |y: u32, m: Option<u8>, d: Option<u8>| {
        CalendarDate::new(y as i32, m, d)
            .or_else(|_| CalendarDate::new(y as i32, m, None))
            .or_else(|_| CalendarDate::year_only(y as i32))
            .ok()
    };
    if let Some(y) = num("iy") {
        return best(y, num("im").map(|v| v as u8), num("id").map(|v| v as u8));
    }
    if let Some(y) = num("ay") {
        return best(y, text("am").map(month_number), num("ad").map(|v| v as u8));
    }
    if let Some(y) = num("by") {
        return best(y, text("bm").map(month_number), num("bd").map(|v| v as u8));
    }
    if let Some(y) = num("cy") {
        return best(y, text("cm").map(month_number), None);
    }
    if let Some(y) = num("jy") {
        return best(y, num("jm").map(|v| v as u8), None);
    }
    num("y").and_then(|y| best(y, None, None))
}

/// Explicit date mentions, left to right, non-overlapping. Recognizes full
/// ISO dates, month-name dates with or without a day, ISO year-month, and
/// bare four-digit years in 1000..=2999.
pub fn find_date_mentions(text: &str) -> Vec<DateMention> {
    date_regex()
        .captures_iter(text)
        .filter_map(|c| {
            let m = c.get(0)?;
            Some(DateMention {
                date: mention_from(&c)?,
                span: m.range(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum QueryClass {
    Explicit(DateMention),
    Implicit,
    NonTemporal,
}

impl QueryClass {
    pub fn label(&self) -> &'static str {
        match self {
            Self::Explicit(_) => "explicit",
            Self::Implicit => "implicit",
            Self::NonTemporal => "non-temporal",
        }
    }
}

/// Explicit when the text mentions a date (the first one wins if several);
/// otherwise implicit on a temporal corpus and non-temporal elsewhere.
pub fn classify(q: &Query, corpus_is_temporal: bool) -> QueryClass {
    let mentions = find_date_mentions(&q.text);
    if mentions.len() > 1 {
        log::warn!("query {:?} mentions {} dates; using the first", q.id, mentions.len());
    }
    match mentions.into_iter().next() {
        Some(m) => QueryClass::Explicit(m),
        None if corpus_is_temporal => QueryClass::Implicit,
        None => QueryClass::NonTemporal,
    }
}

/// Predicts the year a piece of text refers to.
pub trait DatePredictor {
    fn predict_year(&self, text: &str) -> i32;
    fn year_range(&self) -> (i32, i32);
}

/// Multinomial naive Bayes over years with add-one smoothing.
#[derive(Debug, Clone, PartialEq)]
pub struct NaiveBayesDatePredictor {
    years: Vec<i32>,
    log_prior: Vec<f64>,
    log_likelihood: HashMap<String, Vec<f64>>,
}

impl NaiveBayesDatePredictor {
    pub fn train<S: AsRef<str>>(labeled: &[(S, i32)]) -> Result<Self> {
        if labeled.is_empty() {
            return Err(Error::NoData);
        }
        let mut years: Vec<i32> = labeled.iter().map(|(_, y)| *y).collect();
        years.sort_unstable();
        years.dedup();
        let slot: HashMap<i32, usize> = years.iter().enumerate().map(|(i, &y)| (y, i)).collect();
        let mut docs = vec![0usize; years.len()];
        let mut token_totals = vec![0usize; years.len()];
        let mut counts: HashMap<String, Vec<usize>> = HashMap::new();
        for (text, year) in labeled {
            let s = slot[year];
            docs[s] += 1;
            for tok in tokenize(text.as_ref()) {
                counts.entry(tok).or_insert_with(|| vec![0; years.len()])[s] += 1;
                token_totals[s] += 1;
            }
        }
        let vocab = counts.len() as f64;
        let n = labeled.len() as f64;
        let log_prior = docs.iter().map(|&d| (d as f64 / n).ln()).collect();
        let log_likelihood = counts
            .into_iter()
            .map(|(tok, c)| {
                let ll = c
                    .iter()
                    .zip(&token_totals)
                    .map(|(&cnt, &total)| ((cnt as f64 + 1.0) / (total as f64 + vocab)).ln())
                    .collect();
                (tok, ll)
            })
            .collect();
        Ok(Self {
            years,
            log_prior,
            log_likelihood,
        })
    }

    pub fn years(&self) -> &[i32] {
        &self.years
    }

    /// Unnormalized log posterior per year; tokens outside the vocabulary are ignored.
    pub fn log_posterior(&self, text: &str) -> Vec<f64> {
        let mut scores = self.log_prior.clone();
        for tok in tokenize(text) {
            if let Some(ll) = self.log_likelihood.get(&tok) {
                for (s, l) in scores.iter_mut().zip(ll) {
                    *s += l;
                }
            }
        }
        scores
    }
}

impl DatePredictor for NaiveBayesDatePredictor {
    fn predict_year(&self, text: &str) -> i32 {
        let scores = self.log_posterior(text);
        let mut best = 0;
        for (i, &s) in scores.iter().enumerate() {
            if s > scores[best] {
                best = i;
            }
        }
        self.years[best]
    }

    fn year_range(&self) -> (i32, i32) {
        (self.years[0], *self.years.last().unwrap())
    }
}

/// Mean absolute error, mean squared error (both in years) and accuracy in percent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictorReport {
    pub n: usize,
    pub mae: f64,
    pub mse: f64,
    pub accuracy: f64,
}

pub fn evaluate_predictor<P: DatePredictor + ?Sized, S: AsRef<str>>(pred: &P, labeled: &[(S, i32)]) -> Result<PredictorReport> {
    if labeled.is_empty() {
        return Err(Error::NoData);
    }
    let (lo, hi) = pred.year_range();
    let (mut abs, mut sq, mut hit) = (0.0, 0.0, 0usize);
    for (text, year) in labeled {
        let p = pred.predict_year(text.as_ref()).clamp(lo, hi);
        let e = (p - year) as f64;
        abs += e.abs();
        sq += e * e;
        hit += (p == *year) as usize;
    }
    let n = labeled.len() as f64;
    Ok(PredictorReport {
        n: labeled.len(),
        mae: abs / n,
        mse: sq / n,
        accuracy: 100.0 * hit as f64 / n,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RouterConfig {
    /// Undated queries are implicit-temporal rather than non-temporal.
    pub corpus_is_temporal: bool,
    pub k: usize,
}

pub struct Retrievers<'a> {
    pub fused: &'a DenseIndex,
    pub semantic: &'a DenseIndex,
    pub table: &'a TemporalTable,
    pub predictor: &'a dyn DatePredictor,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoutedResult {
    pub class: QueryClass,
    /// The date whose temporal row built the query vector, after clamping.
    pub date_used: Option<CalendarDate>,
    pub result: SearchResult,
}

/// Row of the `route` JSONL output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouteRecord {
    pub query_id: String,
    pub class: String,
    pub date: Option<CalendarDate>,
}

impl RouteRecord {
    pub fn new(q: &Query, class: &QueryClass, predicted: Option<CalendarDate>) -> Self {
        Self {
            query_id: q.id.clone(),
            class: class.label().to_string(),
            date: match class {
                QueryClass::Explicit(m) => Some(m.date),
                _ => predicted,
            },
        }
    }
}

fn fused_search(date: &CalendarDate, query_vec: &[f32], r: &Retrievers<'_>, k: usize) -> Result<(CalendarDate, SearchResult)> {
    let kind = r
        .fused
        .kind()
        .ok_or_else(|| Error::InvalidArgument("fused retriever was built without a fusion kind".into()))?;
    let key = r.table.clamp_key(r.table.key_of(date));
    let used = r.table.granularity().date_of(key)?;
    let q = fuse(query_vec, r.table.row(key)?, kind)?;
    Ok((used, r.fused.search(&q, k)?))
}

pub fn route_and_search(q: &Query, query_vec: &[f32], cfg: &RouterConfig, r: &Retrievers<'_>) -> Result<RoutedResult> {
    let class = classify(q, cfg.corpus_is_temporal);
    let (date_used, result) = match &class {
        QueryClass::Explicit(m) => {
            let (d, res) = fused_search(&m.date, query_vec, r, cfg.k)?;
            (Some(d), res)
        }
        QueryClass::Implicit => {
            let (lo, hi) = r.predictor.year_range();
            let year = r.predictor.predict_year(&q.text).clamp(lo, hi);
            let (d, res) = fused_search(&CalendarDate::year_only(year)?, query_vec, r, cfg.k)?;
            (Some(d), res)
        }
        QueryClass::NonTemporal => (None, r.semantic.search_raw(query_vec, cfg.k)?),
    };
    Ok(RoutedResult { class, date_used, result })
}

//! Exact top-k inner-product search over fused passage vectors.
//!
//! TIDX layout, little-endian:
//!
//! ```text
//! "TIDX" | u32 version=1 | u8 kind | u32 count | u32 dim
//! | id block (as TEMB) | count x dim f32, row-major
//! | count x i64 date keys | u8 key granularity
//! ```
//!
//! `kind` is 0..=3 for vs/re/ewi/fs and 4 for a plain semantic index built
//! without any temporal component.

use std::cmp::Ordering;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::binfmt::{check_finite, count_u32, Reader, Writer};
use crate::corpus::Passage;
use crate::date::CalendarDate;
use crate::embeddings::EmbeddingMatrix;
use crate::error::{Error, FormatError, Result};
use crate::fusion::{dot, fuse, FusedVector, FusionKind};
use crate::temporal::{key_of, KeyGranularity, TemporalTable};

const MAGIC: &[u8; 4] = b"TIDX";
const VERSION: u32 = 1;
const PLAIN_CODE: u8 = 4;

/// Rows per parallel scoring shard.
const SHARD_ROWS: usize = 4096;

#[derive(Debug, Clone, PartialEq)]
pub struct DenseIndex {
    passage_ids: Vec<String>,
    dim: usize,
    vectors: Vec<f32>,
    kind: Option<FusionKind>,
    date_keys: Vec<i64>,
    granularity: KeyGranularity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchHit {
    pub passage_id: String,
    pub score: f32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub k: usize,
    pub entries: Vec<SearchHit>,
}

impl SearchResult {
    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|h| h.passage_id.as_str())
    }
}

/// Descending score, then ascending id.
fn rank_order(a: (f32, &str), b: (f32, &str)) -> Ordering {
    b.0.total_cmp(&a.0).then_with(|| a.1.cmp(b.1))
}

impl DenseIndex {
    /// Each row is `fuse(E_p(p), E_t(t_p), kind)`.
    pub fn build(passages: &[Passage], semantic: &EmbeddingMatrix, table: &TemporalTable, kind: FusionKind) -> Result<Self> {
        let dim = kind.fused_dim(semantic.dim(), table.dim())?;
        let mut vectors = Vec::with_capacity(passages.len() * dim);
        let mut date_keys = Vec::with_capacity(passages.len());
        let mut ids = Vec::with_capacity(passages.len());
        for p in passages {
            let build_err = |reason: String| Error::Build { id: p.id.clone(), reason };
            let x = semantic.get(&p.id).ok_or_else(|| build_err("no semantic embedding".into()))?;
            let key = table.key_of(&p.pub_date);
            let t = table.row(key).map_err(|e| build_err(e.to_string()))?;
            vectors.extend_from_slice(fuse(x, t, kind).map_err(|e| build_err(e.to_string()))?.values());
            date_keys.push(key);
            ids.push(p.id.clone());
        }
        Self::from_parts(ids, dim, vectors, Some(kind), date_keys, table.granularity())
    }

    /// Semantic vectors only; used for date-blind retrieval.
    pub fn build_plain(passages: &[Passage], semantic: &EmbeddingMatrix, granularity: KeyGranularity) -> Result<Self> {
        let dim = semantic.dim();
        let mut vectors = Vec::with_capacity(passages.len() * dim);
        let mut ids = Vec::with_capacity(passages.len());
        for p in passages {
            let x = semantic.get(&p.id).ok_or_else(|| Error::Build {
                id: p.id.clone(),
                reason: "no semantic embedding".into(),
            })?;
            vectors.extend_from_slice(x);
            ids.push(p.id.clone());
        }
        let keys = passages.iter().map(|p| key_of(&p.pub_date, granularity)).collect();
        Self::from_parts(ids, dim, vectors, None, keys, granularity)
    }

    pub fn from_parts(
        passage_ids: Vec<String>,
        dim: usize,
        vectors: Vec<f32>,
        kind: Option<FusionKind>,
        date_keys: Vec<i64>,
        granularity: KeyGranularity,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("index dim must be >= 1".into()));
        }
        if vectors.len() != passage_ids.len() * dim || date_keys.len() != passage_ids.len() {
            return Err(Error::DimMismatch("index parts disagree on row count".into()));
        }
        let mut seen = std::collections::HashSet::with_capacity(passage_ids.len());
        for id in &passage_ids {
            if !seen.insert(id.as_str()) {
                return Err(FormatError::DuplicateId(id.clone()).into());
            }
        }
        check_finite(&vectors, dim)?;
        Ok(Self {
            passage_ids,
            dim,
            vectors,
            kind,
            date_keys,
            granularity,
        })
    }

    pub fn len(&self) -> usize {
        self.passage_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.passage_ids.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> Option<FusionKind> {
        self.kind
    }

    pub fn passage_ids(&self) -> &[String] {
        &self.passage_ids
    }

    pub fn vector(&self, i: usize) -> &[f32] {
        &self.vectors[i * self.dim..(i + 1) * self.dim]
    }

    pub fn date_key(&self, i: usize) -> i64 {
        self.date_keys[i]
    }

    pub fn date(&self, i: usize) -> Result<CalendarDate> {
        self.granularity.date_of(self.date_keys[i])
    }

    /// Search with a fused query vector; its kind must match the index.
    pub fn search(&self, query: &FusedVector, k: usize) -> Result<SearchResult> {
        if self.kind != Some(query.kind()) {
            return Err(Error::DimMismatch(format!(
                "query kind {} against index kind {:?}",
                query.kind(),
                self.kind
            )));
        }
        self.search_raw(query.values(), k)
    }

    /// Search with a raw vector (plain semantic indices take unfused queries).
    pub fn search_raw(&self, query: &[f32], k: usize) -> Result<SearchResult> {
        let scores = self.check_and_score(query, k, true)?;
        Ok(self.top_k(scores, k))
    }

    /// Single-threaded scan; must agree exactly with [`DenseIndex::search_raw`].
    pub fn search_serial(&self, query: &[f32], k: usize) -> Result<SearchResult> {
        let scores = self.check_and_score(query, k, false)?;
        Ok(self.top_k(scores, k))
    }

    fn check_and_score(&self, query: &[f32], k: usize, parallel: bool) -> Result<Vec<f32>> {
        if k == 0 {
            return Err(Error::InvalidArgument("k must be >= 1".into()));
        }
        if query.len() != self.dim {
            return Err(Error::DimMismatch(format!("query dim {} vs index dim {}", query.len(), self.dim)));
        }
        let score_rows = |rows: &[f32]| rows.chunks_exact(self.dim).map(|r| dot(query, r)).collect::<Vec<_>>();
        Ok(if parallel && self.len() > SHARD_ROWS {
            self.vectors
                .par_chunks(SHARD_ROWS * self.dim)
                .flat_map_iter(score_rows)
                .collect()
        } else {
            score_rows(&self.vectors)
        })
    }

    fn top_k(&self, scores: Vec<f32>, k: usize) -> SearchResult {
        let mut order: Vec<usize> = (0..scores.len()).collect();
        let cmp = |&a: &usize, &b: &usize| {
            rank_order(
                (scores[a], self.passage_ids[a].as_str()),
                (scores[b], self.passage_ids[b].as_str()),
            )
        };
        let take = k.min(order.len());
        if take < order.len() {
            order.select_nth_unstable_by(take, cmp);
            order.truncate(take);
        }
        order.sort_unstable_by(cmp);
        SearchResult {
            k,
            entries: order
                .into_iter()
                .map(|i| SearchHit {
                    passage_id: self.passage_ids[i].clone(),
                    score: scores[i],
                })
                .collect(),
        }
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut w = Writer::default();
        w.bytes(MAGIC);
        w.u32(VERSION);
        w.u8(self.kind.map_or(PLAIN_CODE, FusionKind::code));
        w.u32(count_u32(self.len(), "count")?);
        w.u32(count_u32(self.dim, "dim")?);
        w.ids(&self.passage_ids)?;
        w.f32s(&self.vectors);
        for &k in &self.date_keys {
            w.i64(k);
        }
        w.u8(self.granularity.code());
        Ok(w.buf)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes);
        r.magic(MAGIC)?;
        r.version(VERSION)?;
        let kind = match r.u8()? {
            PLAIN_CODE => None,
            c => Some(FusionKind::from_code(c).ok_or_else(|| FormatError::InvalidField(format!("fusion kind code {c}")))?),
        };
        let count = r.u32()? as usize;
        let dim = r.u32()? as usize;
        if dim == 0 {
            return Err(FormatError::InvalidField("dim 0".into()).into());
        }
        let ids = r.ids(count)?;
        let vectors = r.f32s(count * dim)?;
        let keys = (0..count).map(|_| r.i64()).collect::<Result<Vec<_>, _>>()?;
        let granularity = KeyGranularity::from_code(r.u8()?)?;
        r.finish()?;
        Self::from_parts(ids, dim, vectors, kind, keys, granularity)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_bytes()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}

/// Fuses a query's semantic vector with the temporal row for `date` and
/// searches a fused index.
pub fn search_fused(
    index: &DenseIndex,
    table: &TemporalTable,
    query_semantic: &[f32],
    date: &CalendarDate,
    k: usize,
) -> Result<SearchResult> {
    let kind = index
        .kind()
        .ok_or_else(|| Error::InvalidArgument("plain index has no fusion kind".into()))?;
    let q = fuse(query_semantic, table.encode(date)?, kind)?;
    index.search(&q, k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::date::CalendarDate;

    fn passage(id: &str, year: i32) -> Passage {
        Passage {
            id: id.into(),
            doc_id: id.into(),
            ordinal: 0,
            title: String::new(),
            text: "x".into(),
            pub_date: CalendarDate::year_only(year).unwrap(),
        }
    }

    fn setup() -> (Vec<Passage>, EmbeddingMatrix, TemporalTable) {
        let ps = vec![passage("a", 1990), passage("b", 1991), passage("c", 1990)];
        let sem = EmbeddingMatrix::from_rows(
            2,
            [("a", vec![1.0, 0.0]), ("b", vec![0.0, 1.0]), ("c", vec![0.6, 0.8])],
        )
        .unwrap();
        let table = TemporalTable::init(KeyGranularity::Year, 1990, 1991, 2, 5, 0.3).unwrap();
        (ps, sem, table)
    }

    #[test]
    fn fs_index_dim_is_sum() {
        let (ps, sem, table) = setup();
        let idx = DenseIndex::build(&ps, &sem, &table, FusionKind::Fs).unwrap();
        assert_eq!(idx.dim(), 4);
        assert_eq!(idx.date_key(1), 1991);
    }

    #[test]
    fn zero_table_vs_equals_semantic() {
        let (ps, sem, _) = setup();
        let zero = TemporalTable::zeros(KeyGranularity::Year, 1990, 1991, 2).unwrap();
        let idx = DenseIndex::build(&ps, &sem, &zero, FusionKind::Vs).unwrap();
        for (i, p) in ps.iter().enumerate() {
            assert_eq!(idx.vector(i), sem.get(&p.id).unwrap());
        }
    }

    #[test]
    fn rebuild_is_bitwise_equal() {
        let (ps, sem, table) = setup();
        let a = DenseIndex::build(&ps, &sem, &table, FusionKind::Ewi).unwrap();
        let b = DenseIndex::build(&ps, &sem, &table, FusionKind::Ewi).unwrap();
        assert_eq!(a.to_bytes().unwrap(), b.to_bytes().unwrap());
    }

    #[test]
    fn build_errors_name_the_passage() {
        let (mut ps, sem, table) = setup();
        ps.push(passage("zz", 1990));
        match DenseIndex::build(&ps, &sem, &table, FusionKind::Vs) {
            Err(Error::Build { id, .. }) => assert_eq!(id, "zz"),
            other => panic!("{other:?}"),
        }
        let (mut ps, sem, table) = setup();
        ps[1].pub_date = CalendarDate::year_only(2020).unwrap();
        match DenseIndex::build(&ps, &sem, &table, FusionKind::Vs) {
            Err(Error::Build { id, .. }) => assert_eq!(id, "b"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn single_passage_and_large_k() {
        let idx = DenseIndex::from_parts(vec!["only".into()], 2, vec![0.1, -0.2], None, vec![1900], KeyGranularity::Year).unwrap();
        let r = idx.search_raw(&[-5.0, 3.0], 10).unwrap();
        assert_eq!(r.entries.len(), 1);
        assert_eq!(r.entries[0].passage_id, "only");
        assert!(matches!(idx.search_raw(&[1.0], 1), Err(Error::DimMismatch(_))));
        assert!(matches!(idx.search_raw(&[1.0, 1.0], 0), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn ties_break_by_id() {
        let idx = DenseIndex::from_parts(
            vec!["b".into(), "a".into(), "c".into()],
            1,
            vec![1.0, 1.0, 0.5],
            None,
            vec![0, 0, 0],
            KeyGranularity::Year,
        )
        .unwrap();
        let r = idx.search_raw(&[2.0], 2).unwrap();
        assert_eq!(r.ids().collect::<Vec<_>>(), vec!["a", "b"]);
    }

    #[test]
    fn kind_mismatch_rejected() {
        let (ps, sem, table) = setup();
        let idx = DenseIndex::build(&ps, &sem, &table, FusionKind::Vs).unwrap();
        let q = fuse(&[1.0, 0.0], &[0.0, 0.0], FusionKind::Re).unwrap();
        assert!(idx.search(&q, 1).is_err());
        let q = fuse(&[1.0, 0.0], &[0.0, 0.0], FusionKind::Vs).unwrap();
        assert_eq!(idx.search(&q, 1).unwrap().entries[0].passage_id, "a");
    }

    #[test]
    fn file_round_trip() {
        let (ps, sem, table) = setup();
        for idx in [
            DenseIndex::build(&ps, &sem, &table, FusionKind::Fs).unwrap(),
            DenseIndex::build_plain(&ps, &sem, KeyGranularity::Month).unwrap(),
        ] {
            let bytes = idx.to_bytes().unwrap();
            let back = DenseIndex::from_bytes(&bytes).unwrap();
            assert_eq!(back, idx);
            assert_eq!(back.to_bytes().unwrap(), bytes);
            assert!(DenseIndex::from_bytes(&bytes[..bytes.len() - 1]).is_err());
        }
    }
}

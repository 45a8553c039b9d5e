//! Contrastive training of the temporal table.
//!
//! Semantic embeddings are frozen; only rows of the [`TemporalTable`] move.
//! For a batch of `B` examples the logits are `sim(f_q, f_p)` over each
//! query's candidate columns (its own positive and hard negatives, plus every
//! other example's passages when in-batch negatives are on). The loss is the
//! batch mean of `-log softmax(logits)[gold]`.
//!
//! Gradients are derived by hand. With `w = (softmax - onehot) / B` and a
//! score `s = f_q . f_p`, `ds/df_q = f_p` and `ds/df_p = f_q`; the fusion
//! backward step maps those onto the temporal slot (identity for VS, negated
//! for RE, scaled by the partner semantic vector for EWI, the trailing block
//! for FS). Contributions to the same key are summed.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::embeddings::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::fusion::{backprop_temporal, fuse_f64, FusionKind};
use crate::sampling::TrainingExample;
use crate::temporal::{key_of, KeyGranularity, TemporalTable};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f32,
    pub warmup_ratio: f32,
    pub n_negatives: usize,
    pub fusion: FusionKind,
    pub in_batch: bool,
    pub seed: u64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
}

impl TrainConfig {
    pub fn new(fusion: FusionKind) -> Self {
        Self {
            epochs: 5,
            batch_size: 32,
            lr: 1e-5,
            warmup_ratio: 0.1,
            n_negatives: 4,
            fusion,
            in_batch: true,
            seed: 0,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.to_string()));
        if self.epochs == 0 {
            return bad("epochs must be >= 1");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be >= 1");
        }
        if !(self.lr >= 0.0 && self.lr.is_finite()) {
            return bad("lr must be finite and non-negative");
        }
        if !(0.0..=1.0).contains(&self.warmup_ratio) {
            return bad("warmup_ratio must lie in [0, 1]");
        }
        if !(0.0..1.0).contains(&self.adam_beta1) || !(0.0..1.0).contains(&self.adam_beta2) || self.adam_eps <= 0.0 {
            return bad("invalid Adam hyperparameters");
        }
        Ok(())
    }
}

/// Frozen semantic vectors for queries and passages, looked up by id.
#[derive(Debug, Clone, Copy)]
pub struct Semantics<'a> {
    pub queries: &'a EmbeddingMatrix,
    pub passages: &'a EmbeddingMatrix,
}

/// Read access to temporal rows in f64. Implemented by the f32 training
/// table and by [`ShadowTable`], an f64 copy used for finite differences.
pub trait TemporalParams {
    fn granularity(&self) -> KeyGranularity;
    fn dim(&self) -> usize;
    fn row_f64(&self, key: i64) -> Result<Vec<f64>>;
}

impl TemporalParams for TemporalTable {
    fn granularity(&self) -> KeyGranularity {
        TemporalTable::granularity(self)
    }

    fn dim(&self) -> usize {
        TemporalTable::dim(self)
    }

    fn row_f64(&self, key: i64) -> Result<Vec<f64>> {
        Ok(self.row(key)?.iter().map(|&v| v as f64).collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShadowTable {
    granularity: KeyGranularity,
    min_key: i64,
    max_key: i64,
    dim: usize,
    pub weights: Vec<f64>,
}

impl ShadowTable {
    pub fn from_table(t: &TemporalTable) -> Self {
        Self {
            granularity: t.granularity(),
            min_key: t.min_key(),
            max_key: t.max_key(),
            dim: t.dim(),
            weights: t.weights().iter().map(|&w| w as f64).collect(),
        }
    }

    /// Offset of `(key, j)` in `weights`.
    pub fn offset(&self, key: i64, j: usize) -> Option<usize> {
        (self.min_key..=self.max_key)
            .contains(&key)
            .then(|| (key - self.min_key) as usize * self.dim + j)
    }
}

impl TemporalParams for ShadowTable {
    fn granularity(&self) -> KeyGranularity {
        self.granularity
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn row_f64(&self, key: i64) -> Result<Vec<f64>> {
        let start = self.offset(key, 0).ok_or(Error::UnknownTimestamp {
            key,
            min: self.min_key,
            max: self.max_key,
        })?;
        Ok(self.weights[start..start + self.dim].to_vec())
    }
}

/// Logits of one batch with each row's gold column.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchScores {
    pub logits: Vec<Vec<f64>>,
    pub gold: Vec<usize>,
}

/// Gradient rows keyed by temporal key.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SparseGrad {
    pub rows: BTreeMap<i64, Vec<f64>>,
}

impl SparseGrad {
    pub fn row(&self, key: i64) -> Option<&[f64]> {
        self.rows.get(&key).map(Vec::as_slice)
    }
}

/// Mean-free softmax cross-entropy for one row: returns `(loss, softmax - onehot)`.
/// Uses max subtraction, so adding a constant to every logit changes nothing.
pub fn softmax_cross_entropy(logits: &[f64], gold: usize) -> (f64, Vec<f64>) {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&l| (l - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    let loss = sum.ln() - (logits[gold] - max);
    let mut grad: Vec<f64> = exps.iter().map(|e| e / sum).collect();
    grad[gold] -= 1.0;
    (loss, grad)
}

struct Column {
    semantic: Vec<f64>,
    key: i64,
    fused: Vec<f64>,
}

struct Row<'e> {
    example: &'e TrainingExample,
    semantic: Vec<f64>,
    key: i64,
    fused: Vec<f64>,
    /// First column of this example's own block.
    offset: usize,
    width: usize,
}

struct Prepared<'e> {
    rows: Vec<Row<'e>>,
    columns: Vec<Column>,
    in_batch: bool,
}

impl Prepared<'_> {
    fn columns_of(&self, r: usize) -> std::ops::Range<usize> {
        let row = &self.rows[r];
        if self.in_batch {
            0..self.columns.len()
        } else {
            row.offset..row.offset + row.width
        }
    }

    fn gold_of(&self, r: usize) -> usize {
        if self.in_batch {
            self.rows[r].offset
        } else {
            0
        }
    }
}

fn to_f64(v: &[f32]) -> Vec<f64> {
    v.iter().map(|&x| x as f64).collect()
}

fn prepare<'e, P: TemporalParams + ?Sized>(
    batch: &[&'e TrainingExample],
    params: &P,
    sem: Semantics<'_>,
    fusion: FusionKind,
    in_batch: bool,
) -> Result<Prepared<'e>> {
    if batch.is_empty() {
        return Err(Error::NoData);
    }
    if sem.queries.dim() != sem.passages.dim() {
        return Err(Error::DimMismatch(format!(
            "query embeddings dim {} vs passage embeddings dim {}",
            sem.queries.dim(),
            sem.passages.dim()
        )));
    }
    fusion.fused_dim(sem.passages.dim(), params.dim())?;
    let g = params.granularity();
    let mut rows = Vec::with_capacity(batch.len());
    let mut columns = Vec::new();
    for ex in batch {
        let date = ex.query.explicit_date.ok_or_else(|| Error::MissingQueryDate(ex.query.id.clone()))?;
        let semantic = to_f64(sem.queries.require(&ex.query.id)?);
        let key = key_of(&date, g);
        let mut fused = Vec::new();
        fuse_f64(&semantic, &params.row_f64(key)?, fusion, &mut fused);
        let offset = columns.len();
        for p in std::iter::once(&ex.positive).chain(&ex.negatives) {
            let semantic = to_f64(sem.passages.require(&p.id)?);
            let key = key_of(&p.pub_date, g);
            let mut fused = Vec::new();
            fuse_f64(&semantic, &params.row_f64(key)?, fusion, &mut fused);
            columns.push(Column { semantic, key, fused });
        }
        rows.push(Row {
            example: ex,
            semantic,
            key,
            fused,
            offset,
            width: 1 + ex.negatives.len(),
        });
    }
    Ok(Prepared { rows, columns, in_batch })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn scores_of(prep: &Prepared<'_>) -> Result<BatchScores> {
    let mut logits = Vec::with_capacity(prep.rows.len());
    let mut gold = Vec::with_capacity(prep.rows.len());
    for (r, row) in prep.rows.iter().enumerate() {
        let l: Vec<f64> = prep.columns_of(r).map(|c| dot(&row.fused, &prep.columns[c].fused)).collect();
        if l.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical(row.example.query.id.clone()));
        }
        logits.push(l);
        gold.push(prep.gold_of(r));
    }
    Ok(BatchScores { logits, gold })
}

pub fn batch_scores<P: TemporalParams + ?Sized>(
    batch: &[TrainingExample],
    params: &P,
    sem: Semantics<'_>,
    fusion: FusionKind,
    in_batch: bool,
) -> Result<BatchScores> {
    let refs: Vec<&TrainingExample> = batch.iter().collect();
    scores_of(&prepare(&refs, params, sem, fusion, in_batch)?)
}

fn loss_and_grad_refs<P: TemporalParams + ?Sized>(
    batch: &[&TrainingExample],
    params: &P,
    sem: Semantics<'_>,
    fusion: FusionKind,
    in_batch: bool,
) -> Result<(f64, SparseGrad)> {
    let prep = prepare(batch, params, sem, fusion, in_batch)?;
    let scores = scores_of(&prep)?;
    let dim = params.dim();
    let inv_b = 1.0 / prep.rows.len() as f64;
    let mut loss = 0.0;
    let mut grad = SparseGrad::default();
    for (r, row) in prep.rows.iter().enumerate() {
        let (l, dl) = softmax_cross_entropy(&scores.logits[r], scores.gold[r]);
        loss += l * inv_b;
        for (c, d) in prep.columns_of(r).zip(dl) {
            let w = d * inv_b;
            if w == 0.0 {
                continue;
            }
            let col = &prep.columns[c];
            let gq = grad.rows.entry(row.key).or_insert_with(|| vec![0.0; dim]);
            backprop_temporal(fusion, &col.fused, &row.semantic, w, gq);
            let gp = grad.rows.entry(col.key).or_insert_with(|| vec![0.0; dim]);
            backprop_temporal(fusion, &row.fused, &col.semantic, w, gp);
        }
    }
    Ok((loss, grad))
}

/// Mean batch loss and its gradient with respect to every touched temporal row.
pub fn loss_and_grad<P: TemporalParams + ?Sized>(
    batch: &[TrainingExample],
    params: &P,
    sem: Semantics<'_>,
    cfg: &TrainConfig,
) -> Result<(f64, SparseGrad)> {
    let refs: Vec<&TrainingExample> = batch.iter().collect();
    loss_and_grad_refs(&refs, params, sem, cfg.fusion, cfg.in_batch)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub steps_per_epoch: usize,
    pub loss: Vec<f64>,
}

impl TrainHistory {
    pub fn epoch_means(&self) -> Vec<f64> {
        self.loss
            .chunks(self.steps_per_epoch.max(1))
            .map(|c| c.iter().sum::<f64>() / c.len() as f64)
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct TrainedModel {
    pub table: TemporalTable,
    pub history: TrainHistory,
}

/// Linear warmup from 0 to `lr` over the first `warmup_steps`, then constant.
pub fn learning_rate(lr: f64, step: usize, warmup_steps: usize) -> f64 {
    if step < warmup_steps {
        lr * (step + 1) as f64 / warmup_steps as f64
    } else {
        lr
    }
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    fn step(&mut self, table: &mut TemporalTable, grad: &SparseGrad, lr: f64, cfg: &TrainConfig) -> Result<()> {
        self.t += 1;
        let bc1 = 1.0 - cfg.adam_beta1.powi(self.t);
        let bc2 = 1.0 - cfg.adam_beta2.powi(self.t);
        let dim = table.dim();
        for (&key, g) in &grad.rows {
            if g.iter().all(|&x| x == 0.0) {
                continue;
            }
            let base = table.row_index(key)? * dim;
            let row = table.row_mut(key)?;
            for (j, (w, &gj)) in row.iter_mut().zip(g).enumerate() {
                let m = &mut self.m[base + j];
                let v = &mut self.v[base + j];
                *m = cfg.adam_beta1 * *m + (1.0 - cfg.adam_beta1) * gj;
                *v = cfg.adam_beta2 * *v + (1.0 - cfg.adam_beta2) * gj * gj;
                let update = lr * (*m / bc1) / ((*v / bc2).sqrt() + cfg.adam_eps);
                *w = (*w as f64 - update) as f32;
            }
        }
        Ok(())
    }
}

/// Seeded mini-batch Adam over the temporal table. Returns the updated
/// table and the per-step loss history.
pub fn train(examples: &[TrainingExample], table: &TemporalTable, sem: Semantics<'_>, cfg: &TrainConfig) -> Result<TrainedModel> {
    cfg.validate()?;
    if examples.is_empty() {
        return Err(Error::NoData);
    }
    let mut table = table.clone();
    let steps_per_epoch = examples.len().div_ceil(cfg.batch_size);
    let total_steps = steps_per_epoch * cfg.epochs;
    let warmup_steps = (cfg.warmup_ratio as f64 * total_steps as f64).ceil() as usize;
    let mut adam = Adam {
        m: vec![0.0; table.weights().len()],
        v: vec![0.0; table.weights().len()],
        t: 0,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut loss_history = Vec::with_capacity(total_steps);
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(cfg.batch_size) {
            let batch: Vec<&TrainingExample> = chunk.iter().map(|&i| &examples[i]).collect();
            let (loss, grad) = loss_and_grad_refs(&batch, &table, sem, cfg.fusion, cfg.in_batch)?;
            let lr = learning_rate(cfg.lr as f64, loss_history.len(), warmup_steps);
            adam.step(&mut table, &grad, lr, cfg)?;
            loss_history.push(loss);
        }
        log::debug!(
            "epoch {epoch}: mean loss {:.6}",
            loss_history[epoch * steps_per_epoch..].iter().sum::<f64>() / steps_per_epoch as f64
        );
    }
    if table.weights().iter().any(|w| !w.is_finite()) {
        return Err(Error::NonFinite("temporal table after training"));
    }
    Ok(TrainedModel {
        table,
        history: TrainHistory {
            steps_per_epoch,
            loss: loss_history,
        },
    })
}

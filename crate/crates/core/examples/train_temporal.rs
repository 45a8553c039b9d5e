//! Trains a year table on the synthetic corpus and compares held-out Top-1
//! against date-blind retrieval.
//!
//! cargo run --release --example train_temporal -- [fusion] [dim] [strategy]

use std::time::Instant;

use tempret::eval::topk_accuracy;
use tempret::synthetic::{generate, SyntheticConfig};
use tempret::{build_training_set, train, FusionKind, KeyGranularity, NegativeKind, NegativeStrategy, Semantics, TemporalTable, TrainConfig};

fn main() -> tempret::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let fusion: FusionKind = args.get(1).map_or(Ok(FusionKind::Fs), |s| s.parse())?;
    let dim: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(16);
    let kind: NegativeKind = args.get(3).map_or(Ok(NegativeKind::DifferentYear), |s| s.parse())?;

    let corpus = generate(&SyntheticConfig::default())?;
    let judg = corpus.judgments(&corpus.test_queries);

    let blind = corpus.retrieve_plain(&corpus.test_queries, 10)?;
    println!("date-blind top-1: {:.1}%", topk_accuracy(&blind, &judg, 1)?);

    let strategy = NegativeStrategy::new(kind, 4, 7)?;
    let set = build_training_set(&corpus.train_queries, &corpus.passages, &strategy)?;
    println!("training examples: {} ({:?})", set.examples.len(), set.stats);

    let table = TemporalTable::covering(corpus.passages.iter().map(|p| &p.pub_date), KeyGranularity::Year, dim, 1, 0.02)?;
    let mut cfg = TrainConfig::new(fusion);
    cfg.epochs = 20;
    cfg.lr = 0.05;
    let sem = Semantics {
        queries: &corpus.query_embeddings,
        passages: &corpus.passage_embeddings,
    };
    let t0 = Instant::now();
    let model = train(&set.examples, &table, sem, &cfg)?;
    let means = model.history.epoch_means();
    println!(
        "trained {fusion} d_t={dim} in {:.2?}; loss {:.4} -> {:.4}",
        t0.elapsed(),
        means[0],
        means[means.len() - 1]
    );

    let ranked = corpus.retrieve_fused(&corpus.test_queries, &model.table, fusion, 10)?;
    println!("held-out top-1 ({kind} negatives): {:.1}%", topk_accuracy(&ranked, &judg, 1)?);
    Ok(())
}

//! Ranks the synthetic test queries three ways and prints the metric tables.

use tempret::eval::{evaluate, K_GRID};
use tempret::synthetic::{generate, SyntheticConfig};
use tempret::{FusionKind, KeyGranularity, TemporalTable};

fn main() -> tempret::Result<()> {
    let cfg = SyntheticConfig::default();
    let corpus = generate(&cfg)?;
    let queries = &corpus.test_queries;
    let judgments = corpus.judgments(queries);
    let dates = corpus.passages.iter().map(|p| &p.pub_date);

    let plain = corpus.retrieve_plain(queries, 100)?;
    println!("semantic only\n{}", evaluate(&plain, &judgments, &K_GRID, false)?.to_table());

    let random = TemporalTable::covering(dates.clone(), KeyGranularity::Year, 16, 3, 0.02)?;
    let fused = corpus.retrieve_fused(queries, &random, FusionKind::Fs, 100)?;
    println!("FS, untrained table\n{}", evaluate(&fused, &judgments, &K_GRID, false)?.to_table());

    // An idealized table: one orthogonal direction per year.
    let mut oracle = TemporalTable::covering(dates, KeyGranularity::Year, cfg.years, 0, 0.0)?;
    for (i, key) in (oracle.min_key()..=oracle.max_key()).enumerate() {
        let mut row = vec![0.0; cfg.years];
        row[i] = 1.0;
        oracle.set_row(key, &row)?;
    }
    let fused = corpus.retrieve_fused(queries, &oracle, FusionKind::Fs, 100)?;
    let report = evaluate(&fused, &judgments, &K_GRID, true)?;
    println!("FS, one-hot years\n{}", report.to_table());
    print!("{}", report.per_query_csv().lines().take(4).collect::<Vec<_>>().join("\n"));
    println!();
    Ok(())
}

//! Builds training sets with each negative strategy and summarizes them.

use tempret::sampling::{build_training_set, NegativeKind, NegativeStrategy};
use tempret::synthetic::{generate, SyntheticConfig};

fn main() -> tempret::Result<()> {
    let corpus = generate(&SyntheticConfig::default())?;
    let year_of = |id: &str| corpus.passages.iter().find(|p| p.id == id).map(|p| p.pub_date.year());
    for kind in [NegativeKind::Random, NegativeKind::SameYear, NegativeKind::DifferentYear] {
        let set = build_training_set(&corpus.train_queries, &corpus.passages, &NegativeStrategy::new(kind, 4, 1)?)?;
        let same_year = set
            .examples
            .iter()
            .flat_map(|ex| ex.negatives.iter().map(move |n| (ex.positive.id.as_str(), n.id.as_str())))
            .filter(|(p, n)| year_of(p) == year_of(n))
            .count();
        let total: usize = set.examples.iter().map(|ex| ex.negatives.len()).sum();
        let ex = &set.examples[0];
        println!(
            "{kind:<10} {} examples, {same_year}/{total} negatives share the positive's year; e.g. {} -> {} vs {:?}",
            set.stats.examples,
            ex.query.id,
            ex.positive.id,
            ex.negatives.iter().map(|n| n.id.as_str()).collect::<Vec<_>>()
        );
    }
    Ok(())
}

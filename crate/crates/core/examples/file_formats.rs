//! Writes and reads back the three binary formats.

use tempret::embeddings::{load_embeddings, save_embeddings, EmbeddingMatrix};
use tempret::synthetic::{generate, SyntheticConfig};
use tempret::{DenseIndex, FusionKind, KeyGranularity, TemporalTable};

fn main() -> tempret::Result<()> {
    let dir = std::env::temp_dir().join(format!("tempret-formats-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;
    let corpus = generate(&SyntheticConfig {
        events: 3,
        years: 4,
        ..Default::default()
    })?;

    let temb = dir.join("passages.temb");
    save_embeddings(&corpus.passage_embeddings, &temb)?;
    let emb: EmbeddingMatrix = load_embeddings(&temb)?;
    println!("TEMB {} rows x {} dims, {} bytes", emb.len(), emb.dim(), std::fs::metadata(&temb)?.len());

    let table = TemporalTable::covering(corpus.passages.iter().map(|p| &p.pub_date), KeyGranularity::Month, 8, 1, 0.02)?;
    let ttbl = dir.join("table.ttbl");
    table.save(&ttbl)?;
    let back = TemporalTable::load(&ttbl)?;
    println!("TTBL keys {}..={} ({} rows), identical: {}", back.min_key(), back.max_key(), back.rows(), back == table);

    let index = DenseIndex::build(&corpus.passages, &emb, &back, FusionKind::Fs)?;
    let tidx = dir.join("fs.tidx");
    index.save(&tidx)?;
    let back = DenseIndex::load(&tidx)?;
    println!("TIDX {:?}, {} rows x {} dims, first dated {}", back.kind(), back.len(), back.dim(), back.date(0)?);

    let mut bytes = std::fs::read(&tidx)?;
    bytes.truncate(bytes.len() - 3);
    println!("truncated file: {}", DenseIndex::from_bytes(&bytes).unwrap_err());
    std::fs::remove_dir_all(&dir)?;
    Ok(())
}

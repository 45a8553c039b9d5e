//! The four ways of combining a semantic vector with a timestamp embedding.

use tempret::fusion::{dot, fuse, score, FusionKind};

fn main() -> tempret::Result<()> {
    let query_text = [0.6, 0.8, 0.0, 0.0];
    let passage_text = [0.6, 0.0, 0.8, 0.0];
    let year_1969 = [0.5, -0.5, 0.5, 0.5];
    let year_1987 = [-0.5, 0.5, 0.5, 0.5];

    println!("semantic only: {:.3}", dot(&query_text, &passage_text));
    for kind in FusionKind::ALL {
        let q = fuse(&query_text, &year_1969, kind)?;
        let same = score(&q, &fuse(&passage_text, &year_1969, kind)?)?;
        let other = score(&q, &fuse(&passage_text, &year_1987, kind)?)?;
        println!("{kind:<3}  dim {:>2}  same year {same:>6.3}  other year {other:>6.3}", q.dim());
    }
    Ok(())
}

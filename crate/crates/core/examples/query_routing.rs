//! Routes explicit, implicit and non-temporal queries.

use tempret::corpus::{Passage, Query};
use tempret::embeddings::{toy_encode, EmbeddingMatrix};
use tempret::routing::{classify, evaluate_predictor, route_and_search, DatePredictor, NaiveBayesDatePredictor, Retrievers, RouterConfig};
use tempret::{CalendarDate, DenseIndex, FusionKind, KeyGranularity, TemporalTable};

const DIM: usize = 32;

fn main() -> tempret::Result<()> {
    let stories = [
        (1969, "apollo lunar module lands astronauts walk"),
        (1969, "woodstock festival draws crowds to farm"),
        (1989, "berlin wall opens crowds cross checkpoint"),
        (1989, "tiananmen square protests students"),
        (2001, "twin towers attack new york"),
        (2001, "enron collapse energy trading scandal"),
    ];
    let passages: Vec<Passage> = stories
        .iter()
        .enumerate()
        .map(|(i, (y, text))| Passage {
            id: format!("s{i}"),
            doc_id: format!("s{i}"),
            ordinal: 0,
            title: String::new(),
            text: text.to_string(),
            pub_date: CalendarDate::year_only(*y).unwrap(),
        })
        .collect();
    let sem = EmbeddingMatrix::toy(passages.iter().map(|p| (p.id.as_str(), p.text.as_str())), DIM, 0)?;
    let table = TemporalTable::covering(passages.iter().map(|p| &p.pub_date), KeyGranularity::Year, DIM, 9, 0.3)?;
    let fused = DenseIndex::build(&passages, &sem, &table, FusionKind::Vs)?;
    let plain = DenseIndex::build_plain(&passages, &sem, KeyGranularity::Year)?;

    let labeled: Vec<(&str, i32)> = stories.iter().map(|(y, t)| (*t, *y)).collect();
    let predictor = NaiveBayesDatePredictor::train(&labeled)?;
    println!("predictor on its training texts: {:?}", evaluate_predictor(&predictor, &labeled)?);

    let cfg = RouterConfig {
        corpus_is_temporal: true,
        k: 3,
    };
    let retrievers = Retrievers {
        fused: &fused,
        semantic: &plain,
        table: &table,
        predictor: &predictor,
    };
    for text in ["crowds in july 1969", "crowds at the wall checkpoint", "crowds"] {
        let q = Query {
            id: text.into(),
            text: text.into(),
            explicit_date: None,
            answers: vec![],
        };
        let routed = route_and_search(&q, &toy_encode(text, DIM, 0), &cfg, &retrievers)?;
        println!(
            "{text:<32} {:<13} date {:<8} top {:?}",
            routed.class.label(),
            routed.date_used.map(|d| d.to_string()).unwrap_or_default(),
            routed.result.ids().collect::<Vec<_>>()
        );
    }
    let q = Query {
        id: "n".into(),
        text: "crowds".into(),
        explicit_date: None,
        answers: vec![],
    };
    println!(
        "on a non-temporal corpus the undated query is {}; the predictor would have said {}",
        classify(&q, false).label(),
        predictor.predict_year(&q.text)
    );
    Ok(())
}

//! Date-as-text baselines: tag and token injection for queries and passages.

use tempret::corpus::{Passage, Query};
use tempret::textdate::{inject_passage, inject_query, strip_query_injection, InjectionMode};

fn main() -> tempret::Result<()> {
    let q = Query {
        id: "q1".into(),
        text: "Who won the election of November 1960?".into(),
        explicit_date: Some("1960-11".parse()?),
        answers: vec!["Kennedy".into()],
    };
    let p = Passage {
        id: "d#0".into(),
        doc_id: "d".into(),
        ordinal: 0,
        title: "Kennedy Elected".into(),
        text: "Senator Kennedy won a narrow victory.".into(),
        pub_date: "1960-11-09".parse()?,
    };
    for mode in [InjectionMode::None, InjectionMode::Tag, InjectionMode::Token] {
        let qi = inject_query(&q, mode)?;
        println!("{mode:<5} query:   {qi}");
        println!("{mode:<5} passage: {}", inject_passage(&p, mode)?);
        assert_eq!(strip_query_injection(&qi, mode), q.text);
    }
    let twice = Query {
        text: inject_query(&q, InjectionMode::Tag)?,
        ..q.clone()
    };
    println!("injecting twice: {}", inject_query(&twice, InjectionMode::Tag).unwrap_err());
    Ok(())
}

//! Splits documents into fixed-size passages and shows the encoder input.

use tempret::corpus::{chunk_corpus, render_passage_input, Document};
use tempret::CalendarDate;

fn main() -> tempret::Result<()> {
    let body: String = (1..=250).map(|i| format!("w{i} ")).collect();
    let docs = vec![
        Document {
            id: "nyt-1969-07-21".into(),
            title: "Men Walk on Moon".into(),
            body: "Astronauts land on plain; collect rocks, plant flag.".into(),
            pub_date: "1969-07-21".parse()?,
        },
        Document {
            id: "long".into(),
            title: "A long report".into(),
            body,
            pub_date: CalendarDate::year_month(1987, 10)?,
        },
    ];
    for p in chunk_corpus(&docs, 100)? {
        let words = p.text.split_whitespace().count();
        let input = render_passage_input(&p);
        let shown: String = input.chars().take(60).collect();
        println!("{:<18} {:<10} {:>3} words  {shown}...", p.id, p.pub_date, words);
    }
    Ok(())
}

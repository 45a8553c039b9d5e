//! Documents, passages and queries; chunking and answer-containment positives.

use serde::{Deserialize, Serialize};

use crate::date::CalendarDate;
use crate::error::{Error, Result};

/// Separator placed between a passage's title and its text.
pub const SEP_TOKEN: &str = "[SEP]";

/// Default passage length in whitespace-delimited words.
pub const DEFAULT_CHUNK_SIZE: usize = 100;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub title: String,
    pub body: String,
    pub pub_date: CalendarDate,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Passage {
    pub id: String,
    pub doc_id: String,
    pub ordinal: usize,
    pub title: String,
    pub text: String,
    pub pub_date: CalendarDate,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Query {
    pub id: String,
    pub text: String,
    #[serde(rename = "date", default, skip_serializing_if = "Option::is_none")]
    pub explicit_date: Option<CalendarDate>,
    #[serde(default)]
    pub answers: Vec<String>,
}

pub fn passage_id(doc_id: &str, ordinal: usize) -> String {
    format!("{doc_id}#{ordinal}")
}

/// Splits a document body into consecutive, disjoint blocks of `chunk_size`
/// words. Words are maximal runs of non-whitespace; the last block may be
/// shorter. The title is not counted toward block length.
pub fn chunk_document(doc: &Document, chunk_size: usize) -> Result<Vec<Passage>> {
    if chunk_size == 0 {
        return Err(Error::InvalidArgument("chunk_size must be >= 1".into()));
    }
    let words: Vec<&str> = doc.body.split_whitespace().collect();
    if words.is_empty() {
        return Err(Error::EmptyDocument(doc.id.clone()));
    }
    Ok(words
        .chunks(chunk_size)
        .enumerate()
        .map(|(ordinal, block)| Passage {
            id: passage_id(&doc.id, ordinal),
            doc_id: doc.id.clone(),
            ordinal,
            title: doc.title.clone(),
            text: block.join(" "),
            pub_date: doc.pub_date,
        })
        .collect())
}

/// Chunks every document in order. Document ids must be unique.
pub fn chunk_corpus(docs: &[Document], chunk_size: usize) -> Result<Vec<Passage>> {
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::new();
    for doc in docs {
        if doc.id.is_empty() {
            return Err(Error::InvalidArgument("document id is empty".into()));
        }
        if !seen.insert(doc.id.as_str()) {
            return Err(Error::InvalidArgument(format!("duplicate document id {:?}", doc.id)));
        }
        out.extend(chunk_document(doc, chunk_size)?);
    }
    Ok(out)
}

/// `title [SEP] text`, the string handed to the passage encoder.
pub fn render_passage_input(p: &Passage) -> String {
    format!("{} {SEP_TOKEN} {}", p.title, p.text)
}

/// Lowercase and collapse whitespace runs to single spaces.
pub fn normalize_text(s: &str) -> String {
    s.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

/// Pre-normalized answer strings for repeated containment tests.
#[derive(Debug, Clone)]
pub struct AnswerMatcher {
    answers: Vec<String>,
}

impl AnswerMatcher {
    pub fn new<S: AsRef<str>>(answers: &[S]) -> Self {
        let answers = answers
            .iter()
            .map(|a| normalize_text(a.as_ref()))
            .filter(|a| !a.is_empty())
            .collect();
        Self { answers }
    }

    pub fn for_query(q: &Query) -> Self {
        Self::new(&q.answers)
    }

    pub fn is_empty(&self) -> bool {
        self.answers.is_empty()
    }

    pub fn matches_text(&self, text: &str) -> bool {
        let text = normalize_text(text);
        self.answers.iter().any(|a| text.contains(a.as_str()))
    }

    pub fn matches(&self, p: &Passage) -> bool {
        self.matches_text(&p.text)
    }
}

/// Every candidate whose text contains one of the query's answers.
/// An empty result is not an error; callers drop such queries.
pub fn select_positives<'a>(query: &Query, candidates: &'a [Passage]) -> Vec<&'a Passage> {
    let matcher = AnswerMatcher::for_query(query);
    candidates.iter().filter(|p| matcher.matches(p)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn doc(body: &str) -> Document {
        Document {
            id: "d".into(),
            title: "T".into(),
            body: body.into(),
            pub_date: CalendarDate::year_only(1905).unwrap(),
        }
    }

    fn words(n: usize) -> String {
        (0..n).map(|i| format!("w{i}")).collect::<Vec<_>>().join(" ")
    }

    fn passage(id: &str, text: &str) -> Passage {
        Passage {
            id: id.into(),
            doc_id: "d".into(),
            ordinal: 0,
            title: String::new(),
            text: text.into(),
            pub_date: CalendarDate::year_only(1971).unwrap(),
        }
    }

    fn query(answers: &[&str]) -> Query {
        Query {
            id: "q".into(),
            text: "?".into(),
            explicit_date: None,
            answers: answers.iter().map(|s| s.to_string()).collect(),
        }
    }

    #[test]
    fn chunk_sizes_250_words() {
        let ps = chunk_document(&doc(&words(250)), 100).unwrap();
        let counts: Vec<usize> = ps.iter().map(|p| p.text.split_whitespace().count()).collect();
        assert_eq!(counts, vec![100, 100, 50]);
        assert_eq!(ps[2].ordinal, 2);
        assert!(ps.iter().all(|p| p.title == "T" && p.pub_date.year() == 1905));
    }

    #[test]
    fn chunk_exact_block_is_identity() {
        let body = words(100);
        let ps = chunk_document(&doc(&body), 100).unwrap();
        assert_eq!(ps.len(), 1);
        assert_eq!(ps[0].text, body);
    }

    #[test]
    fn chunk_errors() {
        assert!(matches!(chunk_document(&doc(" \n\t "), 100), Err(Error::EmptyDocument(_))));
        assert!(matches!(chunk_document(&doc("a"), 0), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn render_uses_literal_separator() {
        let mut p = passage("p", "b c");
        p.title = "A".into();
        assert_eq!(render_passage_input(&p), "A [SEP] b c");
        p.title = String::new();
        p.text = "b".into();
        assert_eq!(render_passage_input(&p), " [SEP] b");
    }

    #[test]
    fn positives_by_containment() {
        let ps = vec![passage("a", "in 1971 he left"), passage("b", "in 1972 she came")];
        let got = select_positives(&query(&["1971"]), &ps);
        assert_eq!(got.len(), 1);
        assert_eq!(got[0].id, "a");
    }

    #[test]
    fn all_passages_of_a_document_containing_the_answer_are_positive() {
        let ps = vec![
            passage("d#0", "the editor was Smith"),
            passage("d#1", "later smith resigned"),
            passage("d#2", "nothing here"),
        ];
        let ids: Vec<_> = select_positives(&query(&["Smith"]), &ps).iter().map(|p| p.id.clone()).collect();
        assert_eq!(ids, vec!["d#0", "d#1"]);
    }

    #[test]
    fn case_and_whitespace_insensitive() {
        let ps = vec![passage("a", "the city of   paris\nwas"), passage("b", "london")];
        let got = select_positives(&query(&["Paris"]), &ps);
        // naive independent scan
        let naive: Vec<_> = ps
            .iter()
            .filter(|p| p.text.to_lowercase().contains("paris"))
            .map(|p| p.id.as_str())
            .collect();
        assert_eq!(got.iter().map(|p| p.id.as_str()).collect::<Vec<_>>(), naive);
        assert!(select_positives(&query(&["city of paris"]), &ps).len() == 1);
    }

    proptest! {
        #[test]
        fn render_splits_back(title in "[a-zA-Z0-9 ]{0,20}", text in "[a-zA-Z0-9 ]{0,40}") {
            let mut p = passage("p", &text);
            p.title = title.clone();
            let rendered = render_passage_input(&p);
            let (t, x) = rendered.split_once(" [SEP] ").unwrap();
            prop_assert_eq!(t, title.as_str());
            prop_assert_eq!(x, text.as_str());
        }

        #[test]
        fn chunks_partition_the_body(body in "[a-z \n\t]{1,400}", size in 1usize..30) {
            let d = doc(&body);
            let normalized: Vec<&str> = body.split_whitespace().collect();
            match chunk_document(&d, size) {
                Err(Error::EmptyDocument(_)) => prop_assert!(normalized.is_empty()),
                Err(e) => prop_assert!(false, "{e}"),
                Ok(ps) => {
                    let total: usize = ps.iter().map(|p| p.text.split_whitespace().count()).sum();
                    prop_assert_eq!(total, normalized.len());
                    for (i, p) in ps.iter().enumerate() {
                        prop_assert_eq!(p.ordinal, i);
                        let n = p.text.split_whitespace().count();
                        if i + 1 < ps.len() { prop_assert_eq!(n, size); } else { prop_assert!(n >= 1 && n <= size); }
                    }
                    let joined = ps.iter().map(|p| p.text.as_str()).collect::<Vec<_>>().join(" ");
                    prop_assert_eq!(joined, normalized.join(" "));
                }
            }
        }

        #[test]
        fn positives_match_exhaustive_rescan(texts in prop::collection::vec("[a-c ]{0,12}", 1..10), ans in "[a-c]{1,3}") {
            let ps: Vec<Passage> = texts.iter().enumerate().map(|(i, t)| passage(&format!("p{i}"), t)).collect();
            let q = query(&[ans.as_str()]);
            let got: std::collections::HashSet<_> = select_positives(&q, &ps).iter().map(|p| p.id.clone()).collect();
            for p in &ps {
                let hit = normalize_text(&p.text).contains(&ans);
                prop_assert_eq!(hit, got.contains(&p.id));
            }
        }
    }
}

//! JSON-lines readers and writers for corpora, queries, passages and results.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};

/// Parses one value per non-blank line.
pub fn read_jsonl<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<Vec<T>> {
    parse_jsonl(BufReader::new(File::open(path)?))
}

pub fn parse_jsonl<T: DeserializeOwned, R: BufRead>(reader: R) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|source| Error::Json { line: i + 1, source })?);
    }
    Ok(out)
}

pub fn write_jsonl<T: Serialize>(path: impl AsRef<Path>, items: &[T]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for item in items {
        serde_json::to_writer(&mut w, item).map_err(|source| Error::Json { line: 0, source })?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value).map_err(|source| Error::Json { line: 0, source })?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Document, Query};

    #[test]
    fn parses_corpus_and_query_lines() {
        let docs = "{\"id\":\"d1\",\"title\":\"T\",\"body\":\"a b\",\"pub_date\":\"1905\"}\n\n\
                    {\"id\":\"d2\",\"title\":\"U\",\"body\":\"c\",\"pub_date\":\"1905-07-21\"}\n";
        let docs: Vec<Document> = parse_jsonl(docs.as_bytes()).unwrap();
        assert_eq!(docs.len(), 2);
        assert_eq!(docs[1].pub_date.day(), Some(21));

        let qs = "{\"id\":\"q\",\"text\":\"who?\",\"answers\":[\"x\"]}\n{\"id\":\"r\",\"text\":\"t\",\"date\":\"1971\",\"answers\":[]}";
        let qs: Vec<Query> = parse_jsonl(qs.as_bytes()).unwrap();
        assert!(qs[0].explicit_date.is_none());
        assert_eq!(qs[1].explicit_date.unwrap().year(), 1971);
    }

    #[test]
    fn reports_bad_line_number() {
        let bad = "{\"id\":\"d1\",\"title\":\"T\",\"body\":\"a\",\"pub_date\":\"1905\"}\n{\"id\":\"d2\",\"pub_date\":\"19x5\"}";
        match parse_jsonl::<Document, _>(bad.as_bytes()) {
            Err(Error::Json { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }
}

use std::collections::{HashMap, HashSet};
use std::path::Path;
use std::process::Command;

use serde_json::{json, Value};
use tempret::embeddings::{toy_encode, EmbeddingMatrix};
use tempret::{DenseIndex, FusionKind, TemporalTable};

fn tempret(dir: &Path, args: &[&str]) -> String {
    let out = Command::new(env!("CARGO_BIN_EXE_tempret"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("spawn tempret");
    assert!(
        out.status.success(),
        "tempret {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn read_lines(path: &Path) -> Vec<Value> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

fn write_lines(path: &Path, rows: &[Value]) {
    let text: String = rows.iter().map(|r| format!("{r}\n")).collect();
    std::fs::write(path, text).unwrap();
}

const TOPICS: [&str; 4] = ["harbor", "railway", "senate", "orchard"];

fn fixture(dir: &Path) {
    let mut docs = Vec::new();
    let mut queries = Vec::new();
    for (t, topic) in TOPICS.iter().enumerate() {
        for y in 1990..1996 {
            let filler = (0..30).map(|i| format!("{topic}{}", i % 7)).collect::<Vec<_>>().join(" ");
            docs.push(json!({
                "id": format!("{topic}-{y}"),
                "title": format!("{topic} news"),
                "body": format!("{filler} the {topic} ledger notes item{t}x{y} {filler}"),
                "pub_date": format!("{y}-0{}", 1 + t),
            }));
            queries.push(json!({
                "id": format!("q-{topic}-{y}"),
                "text": format!("what did the {topic} report in {y}"),
                "date": y.to_string(),
                "answers": [format!("item{t}x{y}")],
            }));
        }
    }
    queries.push(json!({"id": "q-undated", "text": "harbor ledger", "answers": ["item0x1990"]}));
    write_lines(&dir.join("corpus.jsonl"), &docs);
    write_lines(&dir.join("queries.jsonl"), &queries);
}

/// Re-checks a training-set file from scratch against the passages and queries.
fn validate_training_set(records: &[Value], passages: &[Value], queries: &[Value], n: usize, strategy: &str) {
    let by_id: HashMap<&str, &Value> = passages.iter().map(|p| (p["id"].as_str().unwrap(), p)).collect();
    let qs: HashMap<&str, &Value> = queries.iter().map(|q| (q["id"].as_str().unwrap(), q)).collect();
    let year = |p: &Value| p["pub_date"].as_str().unwrap()[..4].to_string();
    let contains = |p: &Value, answers: &[String]| {
        let text = p["text"].as_str().unwrap().to_lowercase();
        answers.iter().any(|a| text.contains(&a.to_lowercase()))
    };
    for r in records {
        let q = qs[r["query_id"].as_str().unwrap()];
        let answers: Vec<String> = q["answers"].as_array().unwrap().iter().map(|a| a.as_str().unwrap().to_string()).collect();
        let pos = by_id[r["positive_id"].as_str().unwrap()];
        assert!(contains(pos, &answers), "positive lacks the answer: {r}");
        let first_positive = passages
            .iter()
            .filter(|p| contains(p, &answers))
            .map(|p| p["id"].as_str().unwrap())
            .min()
            .unwrap();
        assert_eq!(pos["id"].as_str().unwrap(), first_positive);
        let negs: Vec<&str> = r["negative_ids"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
        assert_eq!(negs.len(), n);
        assert_eq!(negs.iter().collect::<HashSet<_>>().len(), n, "repeated negative in {r}");
        for id in negs {
            let neg = by_id[id];
            assert_ne!(id, pos["id"].as_str().unwrap());
            assert!(!contains(neg, &answers), "negative {id} contains the answer");
            match strategy {
                "same-year" => assert_eq!(year(neg), year(pos)),
                "diff-year" => assert_ne!(year(neg), year(pos)),
                _ => {}
            }
        }
    }
}

#[test]
fn full_pipeline_through_files() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    fixture(dir);

    tempret(dir, &[
        "chunk", "--input", "corpus.jsonl", "--out", "passages.jsonl", "--chunk-size", "40",
        "--inject", "token", "--queries", "queries.jsonl", "--queries-out", "queries.rendered.jsonl",
    ]);
    let passages = read_lines(&dir.join("passages.jsonl"));
    assert_eq!(passages.len(), 24 * 2);
    for p in &passages {
        let rendered = p["text_rendered"].as_str().unwrap();
        let want = format!(
            "{} [SEP] {} [SEP] {}",
            p["title"].as_str().unwrap(),
            p["text"].as_str().unwrap(),
            p["pub_date"].as_str().unwrap()
        );
        assert_eq!(rendered, want);
        for field in ["id", "doc_id", "ordinal", "title", "text", "pub_date"] {
            assert!(p.get(field).is_some(), "missing {field}");
        }
    }
    let rq = read_lines(&dir.join("queries.rendered.jsonl"));
    assert_eq!(rq[0]["text_rendered"], "what did the harbor report in 1990 [SEP] 1990");

    let queries = read_lines(&dir.join("queries.jsonl"));
    for strategy in ["random", "same-year", "diff-year"] {
        let out = format!("train.{strategy}.jsonl");
        tempret(dir, &[
            "sample", "--queries", "queries.jsonl", "--passages", "passages.jsonl", "--out", &out,
            "--strategy", strategy, "--negatives", "3", "--seed", "5",
        ]);
        let records = read_lines(&dir.join(&out));
        assert_eq!(records.len(), queries.len());
        validate_training_set(&records, &passages, &queries, 3, strategy);
        let stats: Value = serde_json::from_str(&std::fs::read_to_string(dir.join(format!("{out}.stats.json"))).unwrap()).unwrap();
        assert_eq!(stats["examples"], records.len());
        assert_eq!(stats["dropped_no_positive"], 0);
    }

    // The undated query cannot train; drop it from the training file.
    let records: Vec<Value> = read_lines(&dir.join("train.diff-year.jsonl"))
        .into_iter()
        .filter(|r| r["query_id"] != "q-undated")
        .collect();
    write_lines(&dir.join("train.jsonl"), &records);
    let stdout = tempret(dir, &[
        "train", "--train", "train.jsonl", "--queries", "queries.jsonl", "--passages", "passages.jsonl",
        "--toy-dim", "32", "--fusion", "fs", "--temporal-dim", "8", "--epochs", "3", "--batch-size", "8",
        "--lr", "0.05", "--warmup-ratio", "0.1", "--negatives", "3", "--strategy", "diff-year",
        "--seed", "1", "--in-batch", "on", "--out", "table.ttbl",
    ]);
    assert_eq!(stdout.lines().count(), 3);
    let table = TemporalTable::load(dir.join("table.ttbl")).unwrap();
    assert_eq!((table.min_key(), table.max_key(), table.dim()), (1990, 1995, 8));
    let history: Value = serde_json::from_str(&std::fs::read_to_string(dir.join("table.ttbl.history.json")).unwrap()).unwrap();
    assert_eq!(history["loss"].as_array().unwrap().len(), 3 * 3);

    tempret(dir, &[
        "index", "--passages", "passages.jsonl", "--toy-dim", "32", "--table", "table.ttbl", "--fusion", "fs", "--out", "fs.tidx",
    ]);
    let idx = DenseIndex::load(dir.join("fs.tidx")).unwrap();
    assert_eq!((idx.len(), idx.dim(), idx.kind()), (48, 40, Some(FusionKind::Fs)));
    tempret(dir, &[
        "search", "--index", "fs.tidx", "--queries", "queries.jsonl", "--toy-dim", "32", "--table", "table.ttbl",
        "--k", "10", "--out", "results.jsonl",
    ]);
    let results = read_lines(&dir.join("results.jsonl"));
    // The undated query has no date in its text either and is skipped.
    assert_eq!(results.len(), 24);
    assert!(results.iter().all(|r| r["ranked_ids"].as_array().unwrap().len() == 10));

    let table_text = tempret(dir, &[
        "eval", "--results", "results.jsonl", "--queries", "queries.jsonl", "--passages", "passages.jsonl",
        "--out", "report.json", "--per-query", "per_query.csv",
    ]);
    let header: Vec<&str> = table_text.lines().next().unwrap().split_whitespace().collect();
    assert_eq!(header, ["metric", "@1", "@5", "@10", "@20", "@50", "@100"]);
    assert!(table_text.contains("queries: 24"), "{table_text}");
    let report: Value = serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["queries"], 24);
    let csv = std::fs::read_to_string(dir.join("per_query.csv")).unwrap();
    assert_eq!(csv.lines().count(), 25);

    tempret(dir, &["index", "--passages", "passages.jsonl", "--toy-dim", "32", "--out", "plain.tidx"]);
    tempret(dir, &[
        "search", "--index", "plain.tidx", "--queries", "queries.jsonl", "--toy-dim", "32", "--k", "5", "--out", "plain.jsonl",
    ]);
    assert_eq!(read_lines(&dir.join("plain.jsonl")).len(), 25);

    tempret(dir, &["route", "--queries", "queries.jsonl", "--out", "route.jsonl"]);
    let routes = read_lines(&dir.join("route.jsonl"));
    assert_eq!(routes[0], json!({"query_id": "q-harbor-1990", "class": "explicit", "date": "1990"}));
    assert_eq!(routes[24], json!({"query_id": "q-undated", "class": "non-temporal", "date": null}));
    tempret(dir, &[
        "route", "--queries", "queries.jsonl", "--passages", "passages.jsonl", "--temporal-corpus", "--out", "route2.jsonl",
    ]);
    let routes = read_lines(&dir.join("route2.jsonl"));
    assert_eq!(routes[24]["class"], "implicit");
    assert!(routes[24]["date"].is_string());

    let stdout = tempret(dir, &["predict-date", "--train", "passages.jsonl", "--out", "predictor.json"]);
    let report: Value = serde_json::from_str(stdout.trim()).unwrap();
    for field in ["mae", "mse", "accuracy"] {
        assert!(report[field].is_number(), "{field} missing from {report}");
    }
    assert!(dir.join("predictor.json").exists());
}

#[test]
fn train_and_search_from_temb_files() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    fixture(dir);
    tempret(dir, &["chunk", "--input", "corpus.jsonl", "--out", "passages.jsonl"]);
    let passages = read_lines(&dir.join("passages.jsonl"));
    let queries = read_lines(&dir.join("queries.jsonl"));
    let encode = |rows: &[Value], field: &str| {
        EmbeddingMatrix::from_rows(
            16,
            rows.iter()
                .map(|r| (r["id"].as_str().unwrap().to_string(), toy_encode(r[field].as_str().unwrap(), 16, 3)))
                .collect::<Vec<_>>(),
        )
        .unwrap()
    };
    encode(&passages, "text_rendered").save(dir.join("p.temb")).unwrap();
    encode(&queries, "text").save(dir.join("q.temb")).unwrap();
    tempret(dir, &[
        "sample", "--queries", "queries.jsonl", "--passages", "passages.jsonl", "--out", "train.jsonl",
    ]);
    let records: Vec<Value> = read_lines(&dir.join("train.jsonl"))
        .into_iter()
        .filter(|r| r["query_id"] != "q-undated")
        .collect();
    write_lines(&dir.join("train.jsonl"), &records);
    tempret(dir, &[
        "train", "--train", "train.jsonl", "--queries", "queries.jsonl", "--passages", "passages.jsonl",
        "--query-emb", "q.temb", "--passage-emb", "p.temb", "--fusion", "re", "--epochs", "1",
        "--in-batch", "off", "--granularity", "month", "--out", "t.ttbl",
    ]);
    let table = TemporalTable::load(dir.join("t.ttbl")).unwrap();
    assert_eq!(table.dim(), 16);
    tempret(dir, &[
        "index", "--passages", "passages.jsonl", "--passage-emb", "p.temb", "--table", "t.ttbl", "--fusion", "re", "--out", "re.tidx",
    ]);
    tempret(dir, &[
        "search", "--index", "re.tidx", "--queries", "queries.jsonl", "--query-emb", "q.temb", "--table", "t.ttbl",
        "--out", "r.jsonl",
    ]);
    assert_eq!(read_lines(&dir.join("r.jsonl")).len(), 24);
}

#[test]
fn bad_inputs_exit_nonzero() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    std::fs::write(dir.join("bad.jsonl"), "{\"id\": \"a\"}\nnot json\n").unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_tempret"))
        .current_dir(dir)
        .args(["chunk", "--input", "bad.jsonl", "--out", "o.jsonl"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    let out = Command::new(env!("CARGO_BIN_EXE_tempret"))
        .args(["train", "--strategy", "sideways"])
        .output()
        .unwrap();
    assert!(!out.status.success());
}

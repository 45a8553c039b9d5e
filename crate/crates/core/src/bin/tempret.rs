use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use tempret::corpus::{chunk_corpus, render_passage_input, Document, Passage, Query, DEFAULT_CHUNK_SIZE};
use tempret::embeddings::{toy_encode, EmbeddingMatrix};
use tempret::eval::{evaluate, Judgments, RankedList, K_GRID};
use tempret::index::{search_fused, DenseIndex};
use tempret::io::{read_jsonl, write_json, write_jsonl};
use tempret::routing::{classify, evaluate_predictor, find_date_mentions, DatePredictor, NaiveBayesDatePredictor, QueryClass, RouteRecord};
use tempret::sampling::{build_training_set, NegativeKind, NegativeStrategy, TrainingExample, TrainingRecord};
use tempret::temporal::{KeyGranularity, TemporalTable, DEFAULT_INIT_SCALE};
use tempret::textdate::{inject_passage, inject_query, InjectionMode};
use tempret::trainer::{train, Semantics, TrainConfig};
use tempret::{CalendarDate, FusionKind};

#[derive(Parser)]
#[command(name = "tempret", version, about = "Temporal dense passage retrieval")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Split documents into passages and render encoder input text.
    Chunk(ChunkArgs),
    /// Pick positives and sample negatives for every training query.
    Sample(SampleArgs),
    /// Train the temporal table with frozen semantic embeddings.
    Train(TrainArgs),
    /// Build a fused (or plain semantic) passage index.
    Index(IndexArgs),
    /// Top-k search for a query file.
    Search(SearchArgs),
    /// Score a results file against answer-containment judgments.
    Eval(EvalArgs),
    /// Classify queries as explicit, implicit or non-temporal.
    Route(RouteArgs),
    /// Train and evaluate the naive Bayes year predictor.
    PredictDate(PredictArgs),
}

#[derive(Args)]
struct ChunkArgs {
    /// Corpus JSONL: id, title, body, pub_date.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_CHUNK_SIZE)]
    chunk_size: usize,
    #[arg(long, default_value = "none")]
    inject: InjectionMode,
    /// Also render a queries file with the same injection mode.
    #[arg(long, requires = "queries_out")]
    queries: Option<PathBuf>,
    #[arg(long)]
    queries_out: Option<PathBuf>,
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long)]
    queries: PathBuf,
    #[arg(long)]
    passages: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Stats sidecar; defaults to `<out>.stats.json`.
    #[arg(long)]
    stats: Option<PathBuf>,
    #[arg(long, default_value = "random")]
    strategy: NegativeKind,
    #[arg(long, default_value_t = 4)]
    negatives: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

/// Where semantic vectors come from.
#[derive(Args, Clone)]
struct Encoders {
    #[arg(long, conflicts_with = "toy_dim")]
    query_emb: Option<PathBuf>,
    #[arg(long, conflicts_with = "toy_dim")]
    passage_emb: Option<PathBuf>,
    /// Encode on the fly with the hashing toy encoder of this dimension.
    #[arg(long)]
    toy_dim: Option<usize>,
    #[arg(long, default_value_t = 0)]
    toy_seed: u64,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OnOff {
    On,
    Off,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Granularity {
    Year,
    Month,
}

impl From<Granularity> for KeyGranularity {
    fn from(g: Granularity) -> Self {
        match g {
            Granularity::Year => KeyGranularity::Year,
            Granularity::Month => KeyGranularity::Month,
        }
    }
}

#[derive(Args)]
struct TrainArgs {
    /// Training-set JSONL written by `sample`.
    #[arg(long)]
    train: PathBuf,
    #[arg(long)]
    queries: PathBuf,
    #[arg(long)]
    passages: PathBuf,
    #[command(flatten)]
    enc: Encoders,
    #[arg(long, default_value = "vs")]
    fusion: FusionKind,
    /// Table width; defaults to the semantic width (required for vs/re/ewi).
    #[arg(long)]
    temporal_dim: Option<usize>,
    #[arg(long, value_enum, default_value = "year")]
    granularity: Granularity,
    #[arg(long, default_value_t = DEFAULT_INIT_SCALE)]
    init_scale: f32,
    #[arg(long, default_value_t = 5)]
    epochs: usize,
    #[arg(long, default_value_t = 32)]
    batch_size: usize,
    #[arg(long, default_value_t = 1e-5)]
    lr: f32,
    #[arg(long, default_value_t = 0.1)]
    warmup_ratio: f32,
    /// Negatives per example to use from the training set.
    #[arg(long, default_value_t = 4)]
    negatives: usize,
    /// Accepted for symmetry with `sample`; negatives are taken from the training set.
    #[arg(long)]
    strategy: Option<NegativeKind>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "on")]
    in_batch: OnOff,
    /// Output TTBL table.
    #[arg(long)]
    out: PathBuf,
    /// Per-step loss history; defaults to `<out>.history.json`.
    #[arg(long)]
    history: Option<PathBuf>,
}

#[derive(Args)]
struct IndexArgs {
    #[arg(long)]
    passages: PathBuf,
    #[command(flatten)]
    enc: Encoders,
    /// Omit for a plain semantic index.
    #[arg(long, requires = "fusion")]
    table: Option<PathBuf>,
    #[arg(long, requires = "table")]
    fusion: Option<FusionKind>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SearchArgs {
    #[arg(long)]
    index: PathBuf,
    #[arg(long)]
    queries: PathBuf,
    #[command(flatten)]
    enc: Encoders,
    /// Required for fused indices.
    #[arg(long)]
    table: Option<PathBuf>,
    #[arg(long, default_value_t = 100)]
    k: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    results: PathBuf,
    #[arg(long)]
    queries: PathBuf,
    #[arg(long)]
    passages: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    per_query: Option<PathBuf>,
}

#[derive(Args)]
struct RouteArgs {
    #[arg(long)]
    queries: PathBuf,
    /// Passages used to train the year predictor for undated queries on a temporal corpus.
    #[arg(long)]
    passages: Option<PathBuf>,
    /// Treat undated queries as implicitly temporal.
    #[arg(long)]
    temporal_corpus: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PredictArgs {
    /// Passages whose text is labeled with its publication year.
    #[arg(long)]
    train: PathBuf,
    /// Queries with a `date` label; the training passages are scored when omitted.
    #[arg(long)]
    eval: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Serialize)]
struct RenderedPassage<'a> {
    #[serde(flatten)]
    passage: &'a Passage,
    text_rendered: String,
}

#[derive(Serialize)]
struct RenderedQuery<'a> {
    #[serde(flatten)]
    query: &'a Query,
    text_rendered: String,
}

fn with_suffix(p: &Path, suffix: &str) -> PathBuf {
    let mut s = p.as_os_str().to_owned();
    s.push(suffix);
    s.into()
}

fn load_semantics(enc: &Encoders, queries: &[Query], passages: &[Passage]) -> Result<(EmbeddingMatrix, EmbeddingMatrix)> {
    if let Some(dim) = enc.toy_dim {
        let q = EmbeddingMatrix::from_rows(dim, queries.iter().map(|q| (q.id.clone(), toy_encode(&q.text, dim, enc.toy_seed))))?;
        let p = EmbeddingMatrix::from_rows(
            dim,
            passages
                .iter()
                .map(|p| (p.id.clone(), toy_encode(&render_passage_input(p), dim, enc.toy_seed))),
        )?;
        return Ok((q, p));
    }
    let load = |path: &Option<PathBuf>, what: &str| -> Result<EmbeddingMatrix> {
        match path {
            Some(p) => EmbeddingMatrix::load(p).with_context(|| format!("loading {what} embeddings {}", p.display())),
            None if what == "query" && queries.is_empty() => Ok(EmbeddingMatrix::new(vec![], 1, vec![])?),
            None if what == "passage" && passages.is_empty() => Ok(EmbeddingMatrix::new(vec![], 1, vec![])?),
            None => bail!("--{what}-emb or --toy-dim is required"),
        }
    };
    Ok((load(&enc.query_emb, "query")?, load(&enc.passage_emb, "passage")?))
}

fn chunk(a: ChunkArgs) -> Result<()> {
    let docs: Vec<Document> = read_jsonl(&a.input)?;
    let passages = chunk_corpus(&docs, a.chunk_size)?;
    let rendered = passages
        .iter()
        .map(|p| {
            Ok(RenderedPassage {
                passage: p,
                text_rendered: inject_passage(p, a.inject)?,
            })
        })
        .collect::<tempret::Result<Vec<_>>>()?;
    write_jsonl(&a.out, &rendered)?;
    log::info!("{} documents -> {} passages", docs.len(), passages.len());
    if let (Some(input), Some(out)) = (a.queries, a.queries_out) {
        let queries: Vec<Query> = read_jsonl(&input)?;
        let rendered = queries
            .iter()
            .map(|q| {
                let text_rendered = if q.explicit_date.is_none() && a.inject != InjectionMode::None {
                    log::warn!("query {:?} has no date; left uninjected", q.id);
                    q.text.clone()
                } else {
                    inject_query(q, a.inject)?
                };
                Ok(RenderedQuery { query: q, text_rendered })
            })
            .collect::<tempret::Result<Vec<_>>>()?;
        write_jsonl(&out, &rendered)?;
    }
    Ok(())
}

fn sample(a: SampleArgs) -> Result<()> {
    let queries: Vec<Query> = read_jsonl(&a.queries)?;
    let passages: Vec<Passage> = read_jsonl(&a.passages)?;
    let strategy = NegativeStrategy::new(a.strategy, a.negatives, a.seed)?;
    let set = build_training_set(&queries, &passages, &strategy)?;
    let records: Vec<TrainingRecord> = set.examples.iter().map(TrainingRecord::from).collect();
    write_jsonl(&a.out, &records)?;
    write_json(a.stats.unwrap_or_else(|| with_suffix(&a.out, ".stats.json")), &set.stats)?;
    println!("{}", serde_json::to_string(&set.stats)?);
    Ok(())
}

fn resolve_examples(records: &[TrainingRecord], queries: &[Query], passages: &[Passage], n: usize) -> Result<Vec<TrainingExample>> {
    let qs: HashMap<&str, &Query> = queries.iter().map(|q| (q.id.as_str(), q)).collect();
    let ps: HashMap<&str, &Passage> = passages.iter().map(|p| (p.id.as_str(), p)).collect();
    let passage = |id: &str| ps.get(id).map(|p| (*p).clone()).with_context(|| format!("unknown passage {id:?}"));
    records
        .iter()
        .map(|r| {
            Ok(TrainingExample {
                query: (*qs.get(r.query_id.as_str()).with_context(|| format!("unknown query {:?}", r.query_id))?).clone(),
                positive: passage(&r.positive_id)?,
                negatives: r.negative_ids.iter().take(n).map(|id| passage(id)).collect::<Result<_>>()?,
            })
        })
        .collect()
}

fn run_train(a: TrainArgs) -> Result<()> {
    let records: Vec<TrainingRecord> = read_jsonl(&a.train)?;
    let queries: Vec<Query> = read_jsonl(&a.queries)?;
    let passages: Vec<Passage> = read_jsonl(&a.passages)?;
    let examples = resolve_examples(&records, &queries, &passages, a.negatives)?;
    if let Some(s) = a.strategy {
        log::info!("training set was sampled with the {s} strategy");
    }
    let (qm, pm) = load_semantics(&a.enc, &queries, &passages)?;
    let dim = a.temporal_dim.unwrap_or(pm.dim());
    let dates = passages.iter().map(|p| &p.pub_date).chain(queries.iter().filter_map(|q| q.explicit_date.as_ref()));
    let table = TemporalTable::covering(dates, a.granularity.into(), dim, a.seed, a.init_scale)?;
    let cfg = TrainConfig {
        epochs: a.epochs,
        batch_size: a.batch_size,
        lr: a.lr,
        warmup_ratio: a.warmup_ratio,
        n_negatives: a.negatives,
        fusion: a.fusion,
        in_batch: a.in_batch == OnOff::On,
        seed: a.seed,
        ..TrainConfig::new(a.fusion)
    };
    let model = train(
        &examples,
        &table,
        Semantics {
            queries: &qm,
            passages: &pm,
        },
        &cfg,
    )?;
    model.table.save(&a.out)?;
    write_json(a.history.unwrap_or_else(|| with_suffix(&a.out, ".history.json")), &model.history)?;
    for (e, l) in model.history.epoch_means().iter().enumerate() {
        println!("epoch {} mean loss {l:.6}", e + 1);
    }
    Ok(())
}

fn index(a: IndexArgs) -> Result<()> {
    let passages: Vec<Passage> = read_jsonl(&a.passages)?;
    let (_, pm) = load_semantics(&a.enc, &[], &passages)?;
    let idx = match (a.table, a.fusion) {
        (Some(t), Some(kind)) => DenseIndex::build(&passages, &pm, &TemporalTable::load(t)?, kind)?,
        _ => DenseIndex::build_plain(&passages, &pm, KeyGranularity::Year)?,
    };
    idx.save(&a.out)?;
    log::info!("indexed {} passages, dim {}", idx.len(), idx.dim());
    Ok(())
}

fn query_date(q: &Query) -> Option<CalendarDate> {
    q.explicit_date.or_else(|| find_date_mentions(&q.text).first().map(|m| m.date))
}

fn search(a: SearchArgs) -> Result<()> {
    let idx = DenseIndex::load(&a.index)?;
    let queries: Vec<Query> = read_jsonl(&a.queries)?;
    let (qm, _) = load_semantics(&a.enc, &queries, &[])?;
    let table = a.table.map(TemporalTable::load).transpose()?;
    let mut out = Vec::new();
    for q in &queries {
        let v = qm.require(&q.id)?;
        let res = match (idx.kind(), &table) {
            (None, _) => idx.search_raw(v, a.k)?,
            (Some(_), None) => bail!("--table is required for a fused index"),
            (Some(_), Some(t)) => match query_date(q) {
                Some(d) => search_fused(&idx, t, v, &t.granularity().date_of(t.clamp_key(t.key_of(&d)))?, a.k)?,
                None => {
                    log::warn!("query {:?} has no date; skipped", q.id);
                    continue;
                }
            },
        };
        out.push(RankedList::from_search(&q.id, &res));
    }
    write_jsonl(&a.out, &out)?;
    Ok(())
}

fn eval(a: EvalArgs) -> Result<()> {
    let results: Vec<RankedList> = read_jsonl(&a.results)?;
    let queries: Vec<Query> = read_jsonl(&a.queries)?;
    let passages: Vec<Passage> = read_jsonl(&a.passages)?;
    let (judgments, skipped) = Judgments::from_answers(&queries, &passages);
    if !skipped.is_empty() {
        log::warn!("{} queries have no relevant passage and are not scored", skipped.len());
    }
    let scored: Vec<RankedList> = results.into_iter().filter(|r| !skipped.contains(&r.query_id)).collect();
    let report = evaluate(&scored, &judgments, &K_GRID, a.per_query.is_some())?;
    write_json(&a.out, &report)?;
    if let Some(p) = a.per_query {
        fs::write(p, report.per_query_csv())?;
    }
    print!("{}", report.to_table());
    Ok(())
}

fn passage_years(passages: &[Passage]) -> Vec<(String, i32)> {
    passages.iter().map(|p| (render_passage_input(p), p.pub_date.year())).collect()
}

fn route(a: RouteArgs) -> Result<()> {
    let queries: Vec<Query> = read_jsonl(&a.queries)?;
    let predictor = match &a.passages {
        Some(p) => Some(NaiveBayesDatePredictor::train(&passage_years(&read_jsonl(p)?))?),
        None => None,
    };
    let records: Vec<RouteRecord> = queries
        .iter()
        .map(|q| {
            let class = classify(q, a.temporal_corpus);
            let predicted = match (&class, &predictor) {
                (QueryClass::Implicit, Some(pr)) => Some(CalendarDate::year_only(pr.predict_year(&q.text))?),
                _ => None,
            };
            Ok(RouteRecord::new(q, &class, predicted))
        })
        .collect::<tempret::Result<_>>()?;
    write_jsonl(&a.out, &records)?;
    Ok(())
}

fn predict_date(a: PredictArgs) -> Result<()> {
    let train_set = passage_years(&read_jsonl(&a.train)?);
    let predictor = NaiveBayesDatePredictor::train(&train_set)?;
    let labeled = match &a.eval {
        Some(p) => {
            let queries: Vec<Query> = read_jsonl(p)?;
            queries
                .into_iter()
                .filter_map(|q| q.explicit_date.map(|d| (q.text, d.year())))
                .collect()
        }
        None => train_set,
    };
    let report = evaluate_predictor(&predictor, &labeled)?;
    if let Some(out) = a.out {
        write_json(out, &report)?;
    }
    println!("{}", serde_json::to_string(&report)?);
    Ok(())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match Cli::parse().command {
        Command::Chunk(a) => chunk(a),
        Command::Sample(a) => sample(a),
        Command::Train(a) => run_train(a),
        Command::Index(a) => index(a),
        Command::Search(a) => search(a),
        Command::Eval(a) => eval(a),
        Command::Route(a) => route(a),
        Command::PredictDate(a) => predict_date(a),
    }
}

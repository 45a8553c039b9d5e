//! Temporal dense passage retrieval.
//!
//! Passages and queries carry a semantic vector from a frozen text encoder
//! and a timestamp. A learnable [`TemporalTable`] maps timestamps to vectors,
//! a [`FusionKind`] combines the two, and retrieval ranks passages by the
//! inner product of fused vectors. The table is trained with a softmax
//! contrastive loss over time-aware hard negatives and in-batch negatives.
//!
//! Module map:
//!
//! - [`corpus`]: documents, 100-word passages, answer-containment positives
//! - [`temporal`]: the timestamp embedding table and its TTBL file
//! - [`fusion`]: VS / RE / EWI / FS fusion and dot-product scoring
//! - [`embeddings`]: TEMB files and a hashing toy encoder
//! - [`index`]: exact top-k search and the TIDX file
//! - [`sampling`]: Random / Same-Year / Different-Year negatives
//! - [`trainer`]: loss, analytic gradients, Adam with warmup
//! - [`eval`]: Top-k accuracy, nDCG@k, MAP@k
//! - [`textdate`]: date-as-tag and date-as-token text baselines
//! - [`routing`]: explicit / implicit / non-temporal query routing and year prediction
//!
//! See the `examples/` directory of this crate for one runnable program per capability.

pub mod corpus;
pub mod date;
pub mod embeddings;
pub mod error;
pub mod eval;
pub mod fusion;
pub mod index;
pub mod io;
pub mod routing;
pub mod sampling;
pub mod synthetic;
pub mod temporal;
pub mod textdate;
pub mod trainer;

mod binfmt;

pub use corpus::{chunk_document, render_passage_input, select_positives, Document, Passage, Query};
pub use date::{CalendarDate, DateGranularity};
pub use embeddings::{load_embeddings, save_embeddings, toy_encode, EmbeddingMatrix};
pub use error::{Error, FormatError, Result};
pub use eval::{evaluate, EvalReport, Judgments, RankedList};
pub use fusion::{fuse, score, FusedVector, FusionKind};
pub use index::{DenseIndex, SearchHit, SearchResult};
pub use routing::{classify, route_and_search, DatePredictor, NaiveBayesDatePredictor, QueryClass};
pub use sampling::{build_training_set, sample_negatives, NegativeKind, NegativeStrategy, TrainingExample};
pub use temporal::{key_of, KeyGranularity, TemporalTable};
pub use textdate::{inject_passage, inject_query, InjectionMode};
pub use trainer::{loss_and_grad, train, Semantics, TrainConfig, TrainedModel};

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Failures while decoding one of the binary files (TEMB, TTBL, TIDX).
#[derive(Debug, Error, PartialEq, Eq)]
pub enum FormatError {
    #[error("bad magic: expected {expected:?}, found {found:?}")]
    BadMagic { expected: [u8; 4], found: [u8; 4] },
    #[error("unsupported version {0}")]
    UnsupportedVersion(u32),
    #[error("truncated payload: needed {needed} more bytes at offset {offset}")]
    Truncated { offset: usize, needed: usize },
    #[error("{0} trailing bytes after payload")]
    TrailingBytes(usize),
    #[error("duplicate id {0:?}")]
    DuplicateId(String),
    #[error("invalid utf-8 in id block")]
    InvalidUtf8,
    #[error("id longer than 65535 bytes: {0:?}")]
    IdTooLong(String),
    #[error("invalid field: {0}")]
    InvalidField(String),
    #[error("non-finite value at row {row}")]
    NonFinite { row: usize },
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("document {0:?} has an empty body")]
    EmptyDocument(String),
    #[error("invalid date {0:?}")]
    InvalidDate(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("dimension mismatch: {0}")]
    DimMismatch(String),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("timestamp key {key} outside table range [{min}, {max}]")]
    UnknownTimestamp { key: i64, min: i64, max: i64 },
    #[error("invalid key range: min {min} > max {max}")]
    InvalidRange { min: i64, max: i64 },
    #[error("cannot build index for passage {id:?}: {reason}")]
    Build { id: String, reason: String },
    #[error("no eligible negatives for query {0:?}")]
    NoEligibleNegatives(String),
    #[error("numerical error in example {0:?}: non-finite logits")]
    Numerical(String),
    #[error("query {0:?} has no date; temporal fusion needs one")]
    MissingQueryDate(String),
    #[error("missing embedding for {0:?}")]
    MissingEmbedding(String),
    #[error("no data")]
    NoData,
    #[error("no relevance judgment for query {0:?}")]
    MissingJudgment(String),
    #[error("text already contains date-injection markers: {0:?}")]
    AlreadyInjected(String),
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("json error at line {line}: {source}")]
    Json {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
}

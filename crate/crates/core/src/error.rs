use std::path::PathBuf;

/// Crate-wide error type. Variants map onto the failure surfaces of the
/// pipeline stages: ingestion, index construction, scoring, model fitting
/// and study orchestration.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}:{line}: parse error: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("duplicate paper id {0:?}")]
    DuplicatePaper(String),

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("unknown tag {name:?}; valid tags: {valid}")]
    UnknownTag { name: String, valid: String },

    #[error("invalid value: {0}")]
    Invalid(String),

    #[error("year {year} outside corpus range {start}..={end}")]
    YearOutOfRange { year: i32, start: i32, end: i32 },

    #[error("commonness undefined: journal {journal:?} has no co-citations in year {year}")]
    UndefinedCommonness { journal: String, year: i32 },

    #[error("no citations in window {0}..={1}")]
    EmptyWindow(i32, i32),

    #[error("undefined score: {0}")]
    UndefinedScore(String),

    #[error("design matrix error: {0}")]
    Design(String),

    #[error("collinear columns: {0:?}")]
    Collinear(Vec<String>),

    #[error("model did not converge: {0}")]
    NonConvergence(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("stratum ({year}, {doc_type}) has {available} papers, {requested} requested")]
    StratumShortage {
        year: i32,
        doc_type: String,
        available: usize,
        requested: usize,
    },

    #[error("only {rows} rows after join; at least {min} required")]
    SmallSample { rows: usize, min: usize },

    #[error("snapshot format error: {0}")]
    Snapshot(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

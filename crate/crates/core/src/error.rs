use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// Zero-norm input where a nonzero signal is required.
    #[error("degenerate signal: input has zero norm")]
    DegenerateSignal,

    /// Non-finite entries or otherwise malformed numeric input.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Constant signal where a PRDN (variance-normalized) quantity is needed.
    #[error("zero-variance signal: PRDN is undefined for constant inputs")]
    ZeroVariance,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("atom index {index} out of range for dictionary with {m} atoms")]
    AtomIndexOutOfRange { index: usize, m: usize },

    /// Gram matrix of the coefficients is numerically singular.
    #[error("rank-deficient coefficients: condition estimate {cond:.3e} exceeds limit")]
    RankDeficient { cond: f64 },

    #[error("all atoms unused: every dictionary column would be pruned")]
    AllAtomsUnused,

    /// Sparse coding of one training beat failed; provenance attached.
    #[error("coding beat from record {record} at sample {sample_index} failed: {source}")]
    BeatCoding {
        record: String,
        sample_index: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("empty input: {0}")]
    EmptyInput(String),

    /// One run of a multi-seed experiment failed.
    #[error("seed {seed}: {source}")]
    Seeded {
        seed: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("class {0} has no beats")]
    ClassAbsent(String),

    /// Malformed binary data at a known byte offset.
    #[error("malformed {what} at byte {offset}: {detail}")]
    Malformed {
        what: &'static str,
        offset: usize,
        detail: String,
    },

    /// Malformed text data at a known line.
    #[error("parse error at line {line}: {detail}")]
    ParseLine { line: usize, detail: String },

    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),

    #[error("model error: {0}")]
    Model(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

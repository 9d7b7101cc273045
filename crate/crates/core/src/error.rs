use crate::model::Setting;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("need at least 2 servers, got {0}")]
    TooFewServers(usize),
    #[error("need at least 2 files, got {0}")]
    TooFewFiles(usize),
    #[error("strength {strength} must lie in [1, {max}] for {n_servers} servers")]
    StrengthOutOfRange {
        strength: usize,
        n_servers: usize,
        max: usize,
    },
    #[error("replicated storage requires strength 1, got {0}")]
    ReplicatedStrength(usize),
    #[error("distribution has length {got}, expected {expected}")]
    DistributionLength { expected: usize, got: usize },
    #[error("probability at index {index} is negative or not finite: {value}")]
    InvalidProbability { index: usize, value: f64 },
    #[error("probabilities sum to {sum}, not 1")]
    NotNormalized { sum: f64 },
    #[error("leakage budget must be finite and non-negative, got {0}")]
    InvalidBudget(f64),
    #[error("{what} out of range: {detail}")]
    OutOfRange { what: &'static str, detail: String },
    #[error("exponent {a} is below the hypothesis bound {min}")]
    LemmaHypothesis { a: f64, min: f64 },
    #[error("unsupported setting {0:?}: only replicated storage is executable")]
    UnsupportedSetting(Setting),
    #[error("request names file {file} chunk {chunk}, outside the store")]
    ChunkOutOfRange { file: usize, chunk: u32 },
    #[error("decoding failed: {0}")]
    Decode(String),
    #[error("instance too large for {mode} enumeration ({work} states, limit {limit})")]
    InstanceTooLarge {
        mode: &'static str,
        work: f64,
        limit: f64,
    },
    #[error("malformed transcript: {0}")]
    Transcript(String),
}

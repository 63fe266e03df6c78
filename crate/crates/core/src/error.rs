use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("index or coordinate out of range: {0}")]
    OutOfRange(String),

    #[error("numeric domain error: {0}")]
    NumericDomain(String),

    /// A level set that is empty or covers the whole grid has no two-cell ground state.
    #[error("degenerate partition: a = {a}")]
    DegeneratePartition { a: f64 },

    #[error("infeasible schedule: {0}")]
    InfeasibleSchedule(String),

    #[error("no resonance found: peak population {peak:.3e} vs baseline {baseline:.3e}")]
    NoResonanceFound { peak: f64, baseline: f64 },

    #[error("Rabi fit failed: rms residual {residual:.3e}")]
    FitFailed { residual: f64 },

    #[error("step {step} failed after {repeats} repeats (empirical p0 = {p0_empirical:.3e})")]
    StepFailed {
        step: usize,
        repeats: u32,
        p0_empirical: f64,
    },

    #[error("rejection sampling too slow: acceptance rate {rate:.3e}")]
    SamplingTooSlow { rate: f64 },

    #[error("dense oracle refused: size {size} exceeds cap {cap}")]
    SizeCapExceeded { size: usize, cap: usize },

    #[error("matrix is not Hermitian (max deviation {0:.3e})")]
    NonHermitian(f64),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

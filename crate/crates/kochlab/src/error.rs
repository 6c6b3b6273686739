use thiserror::Error;

/// Errors shared by all modules of the crate.
#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    #[error("alpha is rational: continued fraction terminates at term {index}")]
    RationalAlpha { index: usize },

    #[error("alpha must lie in (0,1), got {value}")]
    AlphaOutOfRange { value: f64 },

    #[error("depth must be at least 1")]
    ZeroDepth,

    #[error("requested convergent index {requested} but only {stored} are stored")]
    ConvergentRange { requested: usize, stored: usize },

    #[error("convergent denominators overflow 128-bit storage at term {index}")]
    ConvergentOverflow { index: usize },

    #[error("|n| = {n} exceeds the orbit precision budget {budget}")]
    PrecisionBudget { n: i64, budget: i64 },

    #[error("gamma must lie in (-1,0), got {value}")]
    GammaOutOfRange { value: f64 },

    #[error("orbit hits the singularity at step {step}")]
    SingularityContact { step: i64 },

    #[error("vertical coordinate {value} outside [0, {roof}) for base point")]
    VerticalInvariant { value: f64, roof: f64 },

    #[error("words have different lengths: {a} vs {b}")]
    LengthMismatch { a: usize, b: usize },

    #[error("words must be nonempty")]
    EmptyWord,

    #[error("exhaustive matching enumeration capped at length {cap}, got {len}")]
    ExhaustiveCap { cap: usize, len: usize },

    #[error("partition parameter m must be at least 2, got {m}")]
    PartitionParameter { m: u32 },

    #[error("partition atom count {count} exceeds cap {cap}")]
    AtomCountCap { count: usize, cap: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("malformed word file: {0}")]
    WordFormat(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

use alloc::boxed::Box;
use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("design dimensions must be even and at least 2 (got {g_count} GEOs x {b_count} brands)")]
    OddDimension { g_count: usize, b_count: usize },

    #[error("design entries must be +1 or -1 (found {0})")]
    InvalidEntry(i8),

    #[error("expected {expected} values, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("indices must be distinct")]
    RepeatedIndex,

    #[error("design is not balanced: every row and column must sum to zero")]
    Unbalanced,

    #[error("growth requires a collision-free design ({rows} row and {columns} column collisions)")]
    Collisions { rows: usize, columns: usize },

    #[error("need at least {needed} observations, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("degenerate design: normal equations are singular")]
    DegenerateDesign,

    #[error("model is not identified along {0}")]
    Identifiability(String),

    #[error("{0} must be strictly positive")]
    NonPositive(&'static str),

    #[error("invalid configuration: {0}")]
    InvalidConfig(&'static str),

    #[error("need at least {needed} retained draws, got {got}")]
    TooFewDraws { needed: usize, got: usize },

    #[error("empty input")]
    Empty,

    #[error("brand {brand}: {source}")]
    Brand { brand: usize, source: Box<Error> },

    #[error("replicate {replicate}: {source}")]
    Replicate { replicate: u64, source: Box<Error> },
}

impl Error {
    pub fn for_brand(self, brand: usize) -> Self {
        Error::Brand {
            brand,
            source: Box::new(self),
        }
    }

    pub fn for_replicate(self, replicate: u64) -> Self {
        Error::Replicate {
            replicate,
            source: Box::new(self),
        }
    }
}

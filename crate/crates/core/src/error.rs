use thiserror::Error;

use crate::perron::RadiusEnclosure;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("transition matrix has no states")]
    EmptyMatrix,
    #[error("transition matrix is not square: row {row} has {len} entries, expected {expected}")]
    NotSquare { row: usize, len: usize, expected: usize },
    #[error("row {0} has no nonzero entry")]
    ZeroRow(usize),
    #[error("column {0} has no nonzero entry")]
    ZeroColumn(usize),
    #[error("entry ({0}, {1}) is not 0 or 1")]
    NonBinaryEntry(usize, usize),
    #[error("state {index} is out of range for {states} states")]
    StateOutOfRange { index: usize, states: usize },
    #[error("no essential states")]
    NoEssentialStates,
    #[error("word depth {depth} exceeds the cap {cap}")]
    DepthCapExceeded { depth: usize, cap: usize },
    #[error("word {0:?} is not admissible")]
    InadmissibleWord(Vec<usize>),
    #[error("no value given for admissible word {0:?}")]
    MissingWord(Vec<usize>),
    #[error("cannot parse word {0:?}")]
    BadWord(String),
    #[error("cylinder functions live on different transition matrices")]
    MatrixMismatch,
    #[error("depth must be at least 1")]
    ZeroDepth,
    #[error("logarithm of negative value {value} on word {word:?}")]
    DomainError { word: Vec<usize>, value: f64 },
    #[error("cocycle sum over preimages of {word:?} is {sum}, expected 1")]
    NotNormalized { word: Vec<usize>, sum: f64 },
    #[error("cocycle value {value} on word {word:?} is outside [0, 1]")]
    OutOfRange { word: Vec<usize>, value: f64 },
    #[error("weight {value} on word {word:?} is not a finite nonnegative number")]
    NegativeWeight { word: Vec<usize>, value: f64 },
    #[error("matrix is not irreducible")]
    NotIrreducible,
    #[error("edge {0:?} carries a zero weight")]
    ZeroEdgeWeight(Vec<usize>),
    #[error("power iteration stopped after {iterations} iterations with enclosure width {width}")]
    MaxIterations { iterations: usize, width: f64, enclosure: RadiusEnclosure },
    #[error("matrix is not row-stochastic: row {row} sums to {sum}")]
    NotStochastic { row: usize, sum: f64 },
    #[error("transition ({0}, {1}) has positive probability but is not an edge")]
    OffSupport(usize, usize),
    #[error("vector is not stationary (residual {0})")]
    NotStationary(f64),
    #[error("potential is -inf on every cycle, no invariant measure has finite value")]
    NoAdmissibleSupport,
    #[error("invalid tree system: {0}")]
    InvalidTree(String),
    #[error("weight sequence has an empty period")]
    NonPeriodicWeights,
    #[error("grid too coarse: {radii} radii x {angles} angles (need at least 32 x 16)")]
    GridTooCoarse { radii: usize, angles: usize },
    #[error("grid radius {radius} is below 1.1 x sup|weight| = {required}")]
    GridTooSmall { radius: f64, required: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("config error: {0}")]
    Config(String),
}

impl Error {
    /// Short machine-readable code used by the command line front end.
    pub fn code(&self) -> &'static str {
        match self {
            Error::EmptyMatrix => "EmptyMatrix",
            Error::NotSquare { .. } => "NotSquare",
            Error::ZeroRow(_) => "ZeroRow",
            Error::ZeroColumn(_) => "ZeroColumn",
            Error::NonBinaryEntry(..) => "NonBinaryEntry",
            Error::StateOutOfRange { .. } => "StateOutOfRange",
            Error::NoEssentialStates => "NoEssentialStates",
            Error::DepthCapExceeded { .. } => "DepthCapExceeded",
            Error::InadmissibleWord(_) => "InadmissibleWord",
            Error::MissingWord(_) => "MissingWord",
            Error::BadWord(_) => "BadWord",
            Error::MatrixMismatch => "MatrixMismatch",
            Error::ZeroDepth => "ZeroDepth",
            Error::DomainError { .. } => "DomainError",
            Error::NotNormalized { .. } => "NotNormalized",
            Error::OutOfRange { .. } => "OutOfRange",
            Error::NegativeWeight { .. } => "NegativeWeight",
            Error::NotIrreducible => "NotIrreducible",
            Error::ZeroEdgeWeight(_) => "ZeroEdgeWeight",
            Error::MaxIterations { .. } => "MaxIterations",
            Error::NotStochastic { .. } => "NotStochastic",
            Error::OffSupport(..) => "OffSupport",
            Error::NotStationary(_) => "NotStationary",
            Error::NoAdmissibleSupport => "NoAdmissibleSupport",
            Error::InvalidTree(_) => "InvalidTree",
            Error::NonPeriodicWeights => "NonPeriodicWeights",
            Error::GridTooCoarse { .. } => "GridTooCoarse",
            Error::GridTooSmall { .. } => "GridTooSmall",
            Error::InvalidParameter(_) => "InvalidParameter",
            Error::Config(_) => "Config",
        }
    }

    /// True for errors caused by numerical non-convergence rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::MaxIterations { .. })
    }
}

use thiserror::Error;

/// Errors raised across the pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not symmetric (relative asymmetry {asymmetry:.3e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("matrix is not positive definite: pivot {pivot} is {value:.3e}")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("eigensolver did not converge within {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error("eigenbasis is defective or numerically singular")]
    DefectiveEigenbasis,

    #[error("rank {rank} out of range (allowed {min}..={max})")]
    RankOutOfRange { rank: usize, min: usize, max: usize },

    #[error("matrix is singular to working precision (reciprocal condition estimate {rcond:.3e})")]
    Singular { rcond: f64 },

    #[error("equilibrium undefined at mu = {mu}: operator is singular")]
    EquilibriumUndefined { mu: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("mu = {mu} lies outside [{lo}, {hi}]")]
    OutOfDomain { mu: f64, lo: f64, hi: f64 },

    #[error("database must be {0} before this operation")]
    DatabaseState(&'static str),

    #[error("energy fraction undefined: all singular values are zero")]
    UndefinedEnergy,

    #[error("reference vector has zero norm")]
    ZeroNorm,

    #[error("mu = {mu} is not a sampled parameter")]
    NotSampled { mu: f64 },

    #[error("missing EDM basis for mode {mode}")]
    MissingBasis { mode: usize },

    #[error("eigensolve failed at mu = {mu}: {message}")]
    SampleFailed { mu: f64, message: String },

    #[error("time grids do not match")]
    GridMismatch,
}

pub type Result<T> = std::result::Result<T, Error>;

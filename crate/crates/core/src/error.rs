use thiserror::Error;

/// Errors produced by grid construction, solvers and the reconstruction
/// pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("grids cover different domains")]
    DomainMismatch,

    #[error("field contains a non-finite value at node {index}")]
    NonFiniteValue { index: usize },

    #[error("field length {got} does not match grid size {expected}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("{name} must be positive everywhere (min = {min})")]
    NonPositiveField { name: &'static str, min: f64 },

    #[error("{name} must be nonnegative everywhere (min = {min})")]
    NegativeField { name: &'static str, min: f64 },

    #[error("reference field is identically zero")]
    ZeroReference,

    #[error("linear solver did not converge within {iterations} iterations (relative residual {residual})")]
    SolverDiverged { iterations: usize, residual: f64 },

    #[error("fixed-point iteration {iteration}: {source}")]
    PicardStep {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("fixed-point iteration did not converge (update norm {update_norm} after {iterations} iterations)")]
    PicardDiverged { iterations: usize, update_norm: f64 },

    #[error("photon density went negative (min = {min}); the quadratic absorption model requires u >= 0")]
    NegativePhotonDensity { min: f64 },

    #[error("invalid box bounds: require 0 < lo < hi, got [{lo}, {hi}]")]
    InvalidBounds { lo: f64, hi: f64 },

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("invalid optimizer configuration: {0}")]
    InvalidConfig(String),

    #[error("backtracking exhausted after {trials} trials (Lipschitz estimate {lipschitz}); gradient and objective are inconsistent")]
    BacktrackExhausted { trials: u32, lipschitz: f64 },

    #[error("optimizer iteration {iteration}: {source}")]
    OptimizerStep {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("objective is not finite at iteration {iteration}")]
    NonFiniteObjective { iteration: usize },

    #[error("invalid synthesis spec: {0}")]
    InvalidSynthSpec(String),

    #[error("field file: {0}")]
    FieldFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Wrap an error with the iteration index of the loop it occurred in.
    pub fn at_picard_iteration(self, iteration: usize) -> Self {
        Error::PicardStep {
            iteration,
            source: Box::new(self),
        }
    }

    pub fn at_optimizer_iteration(self, iteration: usize) -> Self {
        Error::OptimizerStep {
            iteration,
            source: Box::new(self),
        }
    }
}

use thiserror::Error;

/// Errors raised anywhere in the discretize / solve / recover pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("mesh resolution too coarse: {0}")]
    UnresolvedInterface(String),

    #[error("no sign change of the level set on segment ({ax}, {ay})-({bx}, {by})")]
    NoSignChange { ax: f64, ay: f64, bx: f64, by: f64 },

    #[error("root finding did not converge within {0} iterations")]
    RootNotConverged(usize),

    #[error("point ({x}, {y}) lies outside the element")]
    OutsideElement { x: f64, y: f64 },

    #[error("singular immersed basis system on element {element} (condition estimate {condition:.3e})")]
    SingularBasis { element: usize, condition: f64 },

    #[error("no immersed basis available for interface element {0}")]
    MissingBasis(usize),

    #[error("unsupported quadrature degree {0} (supported: 1..=6)")]
    UnsupportedDegree(usize),

    #[error("linear solver failure: {0}")]
    Solver(String),

    #[error("recovery patch around node {node} failed: {reason}")]
    Patch { node: usize, reason: String },

    #[error("problem has no exact solution")]
    MissingExactSolution,

    #[error("unknown benchmark problem `{0}`")]
    UnknownProblem(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

//! Benchmark interface problems, error norms and convergence studies.

pub mod norms;
pub mod problems;
pub mod study;

pub use norms::{compute_norms, fitted_interpolant, interpolant, recovered_gradient_error, ErrorNorms};
pub use problems::{make_problem, BenchmarkProblem, ProblemName, ProblemParams};
pub use study::{
    convergence_study, fit_slope, run_level, validate_levels, ConvergenceTable, LevelOutput, LevelResult, Metric, RunOptions,
    TableRow, DEFAULT_MAX_N,
};

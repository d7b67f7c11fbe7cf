//! Fixtures shared by the timing benchmarks.

use ifegr_core::benchmark::{make_problem, BenchmarkProblem, ProblemName, ProblemParams};
use ifegr_core::geometry::DEFAULT_EPS_SNAP;
use ifegr_core::system::{apply_dirichlet, assemble, solve, DofVector, EdgeTermSign, Method, DEFAULT_REL_TOL};
use ifegr_core::Discretization;

/// Mesh sizes timed by default.
pub const SIZES: [usize; 3] = [32, 64, 128];

pub fn problem(name: ProblemName) -> BenchmarkProblem {
    make_problem(name, ProblemParams::default()).expect("default parameters are valid")
}

pub fn discretize(problem: &BenchmarkProblem, n: usize) -> Discretization {
    Discretization::new(n, &problem.data, DEFAULT_EPS_SNAP).expect("benchmark mesh")
}

/// Discrete solution used as input to the recovery benchmarks.
pub fn solution(problem: &BenchmarkProblem, disc: &Discretization, method: Method) -> DofVector {
    let data = &problem.data;
    let system = assemble(disc, data, method, EdgeTermSign::Minus).expect("assembly");
    let system = apply_dirichlet(system, &disc.mesh, |p| data.boundary_value(p));
    solve(&system, DEFAULT_REL_TOL).expect("solve").0
}

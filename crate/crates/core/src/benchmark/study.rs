use std::fmt;
use std::time::{Duration, Instant};

use crate::benchmark::norms::{compute_norms, fitted_interpolant, recovered_gradient_error, ErrorNorms};
use crate::benchmark::problems::BenchmarkProblem;
use crate::discretization::Discretization;
use crate::error::{Error, Result};
use crate::geometry::DEFAULT_EPS_SNAP;
use crate::recovery::{enrich, error_estimator, RecoveredGradient, RecoveryOperator};
use crate::solver::SolveReport;
use crate::system::{apply_dirichlet, assemble, solve, AssembledSystem, DofVector, EdgeTermSign, Method, DEFAULT_REL_TOL};

/// Largest mesh size run without an explicit opt-in.
pub const DEFAULT_MAX_N: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub method: Method,
    pub edge_sign: EdgeTermSign,
    pub rel_tol: f64,
    pub eps_snap: f64,
}

impl RunOptions {
    pub fn new(method: Method) -> Self {
        Self {
            method,
            edge_sign: EdgeTermSign::Minus,
            rel_tol: DEFAULT_REL_TOL,
            eps_snap: DEFAULT_EPS_SNAP,
        }
    }
}

/// Summary of one mesh level.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelResult {
    pub n: usize,
    pub h: f64,
    pub norms: ErrorNorms,
    /// `‖∇u − R_h u_I‖₀` with `u_I` the linear interpolant on the fitted mesh.
    pub interpolant_recovery_error: f64,
    pub estimator: f64,
    pub solve: SolveReport,
    pub interface_elements: usize,
    pub angle_fallbacks: usize,
    pub elapsed: Duration,
}

impl LevelResult {
    /// Estimator over the energy norm of the error.
    pub fn effectivity(&self) -> f64 {
        self.estimator / self.norms.energy
    }
}

/// Everything computed on one mesh level, for callers that need the fields.
#[derive(Debug, Clone)]
pub struct LevelOutput {
    pub result: LevelResult,
    pub disc: Discretization,
    pub system: AssembledSystem,
    pub solution: DofVector,
    pub recovered: RecoveredGradient,
}

/// Mesh → classification → fitted mesh → bases → assembly → solve →
/// recovery → norms.
pub fn run_level(problem: &BenchmarkProblem, n: usize, opts: &RunOptions) -> Result<LevelOutput> {
    let start = Instant::now();
    let data = &problem.data;
    let disc = Discretization::new(n, data, opts.eps_snap)?;
    let system = assemble(&disc, data, opts.method, opts.edge_sign)?;
    let system = apply_dirichlet(system, &disc.mesh, |p| data.boundary_value(p));
    let (solution, report) = solve(&system, opts.rel_tol)?;
    let op = RecoveryOperator::new(&disc.fitted)?;
    let recovered = op.apply(&enrich(&disc, &solution));
    let norms = compute_norms(&disc, data, &solution, &recovered)?;
    let u_i = fitted_interpolant(&disc, data)?;
    let interpolant_recovery_error = recovered_gradient_error(&disc, data, &op.apply(&u_i))?;
    let estimator = error_estimator(&disc, data, &solution, &recovered)?.global;
    let result = LevelResult {
        n,
        h: disc.h(),
        norms,
        interpolant_recovery_error,
        estimator,
        solve: report,
        interface_elements: disc.classification.num_interface_elements(),
        angle_fallbacks: disc.fitted.angle_fallbacks,
        elapsed: start.elapsed(),
    };
    Ok(LevelOutput {
        result,
        disc,
        system,
        solution,
        recovered,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TableRow {
    pub n: usize,
    pub de: f64,
    pub die: f64,
    pub dre: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    De,
    Die,
    Dre,
}

impl TableRow {
    pub fn get(&self, metric: Metric) -> f64 {
        match metric {
            Metric::De => self.de,
            Metric::Die => self.die,
            Metric::Dre => self.dre,
        }
    }
}

/// Errors per mesh level with observed orders `log₂(e_n / e_{2n})`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConvergenceTable {
    pub rows: Vec<TableRow>,
}

impl ConvergenceTable {
    /// Order between row `k - 1` and row `k`; `None` for the first row.
    pub fn order(&self, k: usize, metric: Metric) -> Option<f64> {
        if k == 0 || k >= self.rows.len() {
            return None;
        }
        let (prev, cur) = (&self.rows[k - 1], &self.rows[k]);
        let ratio = prev.n as f64 / cur.n as f64;
        Some((cur.get(metric) / prev.get(metric)).ln() / ratio.ln())
    }

    /// Least-squares slope of `log e` against `log h` over all rows.
    pub fn slope(&self, metric: Metric) -> f64 {
        let h: Vec<f64> = self.rows.iter().map(|r| 2.0 / r.n as f64).collect();
        let e: Vec<f64> = self.rows.iter().map(|r| r.get(metric)).collect();
        fit_slope(&h, &e)
    }
}

impl fmt::Display for ConvergenceTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:>6} {:>11} {:>6} {:>11} {:>6} {:>11} {:>6}", "n", "De", "order", "Die", "order", "Dre", "order")?;
        for (k, row) in self.rows.iter().enumerate() {
            let ord = |m| self.order(k, m).map(|o| format!("{o:.2}")).unwrap_or_else(|| "--".into());
            writeln!(
                f,
                "{:>6} {:>11.3e} {:>6} {:>11.3e} {:>6} {:>11.3e} {:>6}",
                row.n,
                row.de,
                ord(Metric::De),
                row.die,
                ord(Metric::Die),
                row.dre,
                ord(Metric::Dre)
            )?;
        }
        Ok(())
    }
}

/// Least-squares slope of `log y` against `log x`.
pub fn fit_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let m = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / m, ly.iter().sum::<f64>() / m);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Checks that `n_list` is strictly increasing and within the size limit.
pub fn validate_levels(n_list: &[usize], allow_large: bool) -> Result<()> {
    if n_list.is_empty() {
        return Err(Error::InvalidArgument("no mesh sizes given".into()));
    }
    if n_list.contains(&0) {
        return Err(Error::InvalidArgument("mesh sizes must be positive".into()));
    }
    if n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("mesh sizes must be strictly increasing".into()));
    }
    if let Some(&n) = n_list.iter().find(|&&n| n > DEFAULT_MAX_N && !allow_large) {
        return Err(Error::InvalidArgument(format!(
            "n = {n} exceeds {DEFAULT_MAX_N}; large runs must be requested explicitly"
        )));
    }
    Ok(())
}

pub fn convergence_study(problem: &BenchmarkProblem, n_list: &[usize], opts: &RunOptions) -> Result<(ConvergenceTable, Vec<LevelResult>)> {
    validate_levels(n_list, true)?;
    let mut table = ConvergenceTable::default();
    let mut levels = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let out = run_level(problem, n, opts)?;
        let r = out.result;
        table.rows.push(TableRow {
            n,
            de: r.norms.de,
            die: r.norms.die,
            dre: r.norms.dre,
        });
        levels.push(r);
    }
    Ok((table, levels))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchmark::problems::{make_problem, ProblemName, ProblemParams};

    #[test]
    fn slope_of_power_law() {
        let h = [0.1, 0.05, 0.025, 0.0125];
        let e: Vec<f64> = h.iter().map(|h: &f64| 3.0 * h.powf(1.5)).collect();
        assert!((fit_slope(&h, &e) - 1.5).abs() < 1e-12);
    }

    #[test]
    fn orders_use_consecutive_rows() {
        let table = ConvergenceTable {
            rows: vec![
                TableRow { n: 32, de: 4.0, die: 1.0, dre: 1.0 },
                TableRow { n: 64, de: 2.0, die: 0.25, dre: 0.5 },
            ],
        };
        assert_eq!(table.order(0, Metric::De), None);
        assert!((table.order(1, Metric::De).unwrap() - 1.0).abs() < 1e-14);
        assert!((table.order(1, Metric::Die).unwrap() - 2.0).abs() < 1e-14);
        assert!((table.slope(Metric::Dre) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn level_validation() {
        assert!(validate_levels(&[32, 64], false).is_ok());
        assert!(validate_levels(&[64, 32], false).is_err());
        assert!(validate_levels(&[], false).is_err());
        assert!(validate_levels(&[1024], false).is_err());
        assert!(validate_levels(&[1024], true).is_ok());
    }

    #[test]
    fn errors_decrease_with_refinement() {
        let problem = make_problem(ProblemName::Ex1, ProblemParams::default()).unwrap();
        for method in [Method::Scifem, Method::Pgifem] {
            let (table, levels) = convergence_study(&problem, &[8, 16, 32], &RunOptions::new(method)).unwrap();
            assert!(table.rows.windows(2).all(|w| w[1].de < w[0].de), "{method}\n{table}");
            assert!(levels.iter().all(|l| l.solve.relative_residual <= DEFAULT_REL_TOL));
            assert!(levels.iter().all(|l| l.norms.de > 0.0 && l.norms.die > 0.0 && l.norms.dre > 0.0));
        }
    }
}

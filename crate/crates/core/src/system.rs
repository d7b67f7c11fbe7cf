//! Assembly and solution of the symmetric-consistent (SCIFEM) and
//! Petrov-Galerkin (PGIFEM) immersed finite element systems.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::Deref;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::{Point2, Vector2};
use rayon::prelude::*;

use crate::discretization::Discretization;
use crate::error::{Error, Result};
use crate::geometry::{ElementClass, LevelSet, ScalarFn, Side};
use crate::ife::hat_pieces;
use crate::mesh::{signed_area, UniformMesh};
use crate::quadrature::{quad_rule, GAUSS_2};
use crate::solver::{conjugate_gradient, norm2, residual_norm, sparse_lu_solve, SolveReport, SolverMethod};
use crate::sparse::CsrMatrix;

pub const DEFAULT_REL_TOL: f64 = 1e-10;

/// Stiffness quadrature degree (β sampled at the quadrature points).
pub const STIFFNESS_DEGREE: usize = 2;
/// Load vector and error norm quadrature degree.
pub const LOAD_DEGREE: usize = 4;

pub type SidedScalarFn = Arc<dyn Fn(Point2<f64>, Side) -> f64 + Send + Sync>;
pub type SidedVectorFn = Arc<dyn Fn(Point2<f64>, Side) -> Vector2<f64> + Send + Sync>;

/// Coefficients, source and (optionally) exact solution of
/// `-∇·(β∇u) = f` with homogeneous jump conditions on `Γ`.
///
/// Side-dependent data is evaluated on the side of the element part being
/// integrated, so every piece is extended smoothly up to `Γ_h`.
#[derive(Clone)]
pub struct ProblemData {
    pub level_set: LevelSet,
    pub beta_minus: ScalarFn,
    pub beta_plus: ScalarFn,
    pub f: SidedScalarFn,
    pub exact_u: Option<SidedScalarFn>,
    pub exact_grad: Option<SidedVectorFn>,
}

impl ProblemData {
    pub fn beta(&self, p: Point2<f64>, side: Side) -> f64 {
        match side {
            Side::Minus => (self.beta_minus)(p),
            Side::Plus => (self.beta_plus)(p),
        }
    }

    /// Exact solution on the true side of `p`, zero without an exact solution.
    pub fn boundary_value(&self, p: Point2<f64>) -> f64 {
        self.exact_u
            .as_ref()
            .map(|u| u(p, self.level_set.side(p)))
            .unwrap_or(0.0)
    }
}

impl fmt::Debug for ProblemData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemData")
            .field("level_set", &self.level_set)
            .field("has_exact_u", &self.exact_u.is_some())
            .field("has_exact_grad", &self.exact_grad.is_some())
            .finish()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Scifem,
    Pgifem,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Scifem => "scifem",
            Method::Pgifem => "pgifem",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "scifem" | "sc" => Ok(Method::Scifem),
            "pgifem" | "pg" => Ok(Method::Pgifem),
            other => Err(Error::InvalidArgument(format!("unknown method `{other}`"))),
        }
    }
}

/// Sign in front of the interface-edge terms of the SCIFEM bilinear form.
///
/// `Minus` gives the consistent form
/// `Σ_T ∫ β∇u·∇v − Σ_e ∫_e ({β∇u}·n[v] + {β∇v}·n[u])`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EdgeTermSign {
    #[default]
    Minus,
    Plus,
}

impl EdgeTermSign {
    fn factor(self) -> f64 {
        match self {
            EdgeTermSign::Minus => -1.0,
            EdgeTermSign::Plus => 1.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct AssembledSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    /// Prescribed values, filled in by [`apply_dirichlet`].
    pub dirichlet: BTreeMap<usize, f64>,
    pub symmetric: bool,
}

/// Nodal values over the mesh vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct DofVector(pub Vec<f64>);

impl Deref for DofVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

struct LocalContribution {
    rows: [usize; 3],
    cols: [usize; 3],
    /// `matrix[r][c]`.
    matrix: [[f64; 3]; 3],
    load: [f64; 3],
}

fn check_bases(disc: &Discretization) -> Result<()> {
    for (t, class) in disc.classification.elements.iter().enumerate() {
        if matches!(class, ElementClass::Interface(_)) && disc.bases.get(t).is_none() {
            return Err(Error::MissingBasis(t));
        }
    }
    Ok(())
}

/// Volume terms over all fitted sub-triangles. With `petrov_galerkin` the
/// test functions are the standard hats of the parent element.
fn volume_contributions(disc: &Discretization, problem: &ProblemData, petrov_galerkin: bool) -> Result<Vec<LocalContribution>> {
    let stiff_rule = quad_rule(STIFFNESS_DEGREE)?;
    let load_rule = quad_rule(LOAD_DEGREE)?;
    let fitted = &disc.fitted;
    Ok((0..fitted.sub_triangles.len())
        .into_par_iter()
        .map(|s| {
            let st = fitted.sub_triangles[s];
            let pts = fitted.points(s);
            let area = signed_area(&pts);
            let tri = disc.mesh.triangle(st.parent);
            let trial = disc.pieces(st.parent, st.side);
            let test = if petrov_galerkin {
                hat_pieces(&disc.mesh.triangle_points(st.parent))
            } else {
                trial
            };
            let beta_integral: f64 = stiff_rule
                .iter()
                .map(|q| q.weight * problem.beta(q.map(&pts), st.side))
                .sum::<f64>()
                * area;
            let mut matrix = [[0.0; 3]; 3];
            for (r, row) in matrix.iter_mut().enumerate() {
                for (c, entry) in row.iter_mut().enumerate() {
                    *entry = beta_integral * test[r].gradient().dot(&trial[c].gradient());
                }
            }
            let mut load = [0.0; 3];
            for q in load_rule {
                let z = q.map(&pts);
                let fz = (problem.f)(z, st.side) * q.weight * area;
                for (r, l) in load.iter_mut().enumerate() {
                    *l += fz * test[r].value(z);
                }
            }
            LocalContribution {
                rows: tri,
                cols: tri,
                matrix,
                load,
            }
        })
        .collect())
}

/// Edge penalty contributions of one interface edge as (row, col, value).
fn edge_contributions(disc: &Discretization, problem: &ProblemData, e: usize, sign: EdgeTermSign) -> Vec<(usize, usize, f64)> {
    let mesh = &disc.mesh;
    let cls = &disc.classification;
    let edge = mesh.edge(e);
    let (Some(t1), Some(t2)) = (edge.triangles[0], edge.triangles[1]) else {
        return Vec::new();
    };
    let Some(p) = cls.edge_cuts[e] else {
        return Vec::new();
    };
    let n = edge.normal;

    let mut dofs: Vec<usize> = mesh.triangle(t1).to_vec();
    for v in mesh.triangle(t2) {
        if !dofs.contains(&v) {
            dofs.push(v);
        }
    }
    let slot = |t: usize| mesh.triangle(t).map(|v| dofs.iter().position(|&d| d == v).unwrap());
    let (slots1, slots2) = (slot(t1), slot(t2));

    let mut local = vec![vec![0.0; dofs.len()]; dofs.len()];
    for endpoint in edge.vertices {
        let a = mesh.vertex(endpoint);
        let side = cls.vertex_side(endpoint);
        let len = (p - a).norm();
        let mid = Point2::from((a.coords + p.coords) * 0.5);
        let beta = problem.beta(mid, side);
        let pieces1 = disc.pieces(t1, side);
        let pieces2 = disc.pieces(t2, side);
        for (t, w) in GAUSS_2 {
            let z = a + (p - a) * t;
            let mut jump = vec![0.0; dofs.len()];
            let mut flux = vec![0.0; dofs.len()];
            for k in 0..3 {
                jump[slots1[k]] += pieces1[k].value(z);
                jump[slots2[k]] -= pieces2[k].value(z);
                flux[slots1[k]] += 0.5 * beta * pieces1[k].gradient().dot(&n);
                flux[slots2[k]] += 0.5 * beta * pieces2[k].gradient().dot(&n);
            }
            let scale = sign.factor() * w * len;
            for (r, row) in local.iter_mut().enumerate() {
                for (c, entry) in row.iter_mut().enumerate() {
                    // Row r is the test function v, column c the trial u.
                    *entry += scale * (flux[c] * jump[r] + flux[r] * jump[c]);
                }
            }
        }
    }
    let mut out = Vec::with_capacity(dofs.len() * dofs.len());
    for (r, row) in local.iter().enumerate() {
        for (c, v) in row.iter().enumerate() {
            out.push((dofs[r], dofs[c], *v));
        }
    }
    out
}

fn into_system(
    mesh: &UniformMesh,
    volume: Vec<LocalContribution>,
    extra: Vec<(usize, usize, f64)>,
    symmetric: bool,
) -> AssembledSystem {
    let nv = mesh.num_vertices();
    let mut triplets = Vec::with_capacity(9 * volume.len() + extra.len());
    let mut rhs = vec![0.0; nv];
    for lc in &volume {
        for r in 0..3 {
            rhs[lc.rows[r]] += lc.load[r];
            for c in 0..3 {
                triplets.push((lc.rows[r], lc.cols[c], lc.matrix[r][c]));
            }
        }
    }
    triplets.extend(extra);
    AssembledSystem {
        matrix: CsrMatrix::from_triplets(nv, nv, &triplets),
        rhs,
        dirichlet: BTreeMap::new(),
        symmetric,
    }
}

/// Symmetric and consistent immersed FEM: immersed trial and test spaces
/// plus average/jump terms on every interior edge crossed by the interface.
pub fn assemble_scifem(disc: &Discretization, problem: &ProblemData, sign: EdgeTermSign) -> Result<AssembledSystem> {
    check_bases(disc)?;
    let volume = volume_contributions(disc, problem, false)?;
    let cut_edges: Vec<usize> = (0..disc.mesh.num_edges())
        .filter(|&e| disc.classification.edge_cuts[e].is_some() && !disc.mesh.edge(e).is_boundary())
        .collect();
    let extra: Vec<_> = cut_edges
        .par_iter()
        .map(|&e| edge_contributions(disc, problem, e, sign))
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect();
    Ok(into_system(&disc.mesh, volume, extra, true))
}

/// Petrov-Galerkin immersed FEM: immersed trial functions tested against
/// the standard continuous hats. Row = test node, column = trial node.
pub fn assemble_pgifem(disc: &Discretization, problem: &ProblemData) -> Result<AssembledSystem> {
    check_bases(disc)?;
    let volume = volume_contributions(disc, problem, true)?;
    Ok(into_system(&disc.mesh, volume, Vec::new(), false))
}

pub fn assemble(disc: &Discretization, problem: &ProblemData, method: Method, sign: EdgeTermSign) -> Result<AssembledSystem> {
    match method {
        Method::Scifem => assemble_scifem(disc, problem, sign),
        Method::Pgifem => assemble_pgifem(disc, problem),
    }
}

/// Imposes `u = g` at the boundary vertices by row replacement. Symmetric
/// systems also move the boundary columns to the right-hand side.
pub fn apply_dirichlet(mut system: AssembledSystem, mesh: &UniformMesh, g: impl Fn(Point2<f64>) -> f64) -> AssembledSystem {
    let mut prescribed = vec![None; mesh.num_vertices()];
    for &v in mesh.boundary_vertices() {
        prescribed[v] = Some(g(mesh.vertex(v)));
    }
    if system.symmetric {
        for (i, rhs) in system.rhs.iter_mut().enumerate() {
            if prescribed[i].is_none() {
                let (cols, vals) = system.matrix.row(i);
                *rhs -= cols
                    .iter()
                    .zip(vals)
                    .filter_map(|(&j, &a)| prescribed[j].map(|x| a * x))
                    .sum::<f64>();
            }
        }
    }
    for &v in mesh.boundary_vertices() {
        system.matrix.set_identity_row(v);
        system.rhs[v] = prescribed[v].unwrap();
    }
    let symmetric = system.symmetric;
    system.matrix.retain(|i, j, _| match (prescribed[i], prescribed[j]) {
        (Some(_), _) => i == j,
        (None, Some(_)) => !symmetric,
        (None, None) => true,
    });
    system
        .dirichlet
        .extend(mesh.boundary_vertices().iter().map(|&v| (v, prescribed[v].unwrap())));
    system
}

/// Removes round-off from the prescribed entries.
fn pin_prescribed(system: &AssembledSystem, x: &mut [f64]) {
    for (&v, &g) in &system.dirichlet {
        x[v] = g;
    }
}

/// Solves a constrained system to `‖Ax − b‖₂ ≤ rel_tol ‖b‖₂`.
///
/// Symmetric systems use Jacobi-preconditioned CG and fall back to sparse
/// LU if CG breaks down or stagnates; nonsymmetric systems use sparse LU.
pub fn solve(system: &AssembledSystem, rel_tol: f64) -> Result<(DofVector, SolveReport)> {
    let a = &system.matrix;
    let b = &system.rhs;
    let bnorm = norm2(b);
    let report = |method, iterations, x: &[f64]| SolveReport {
        method,
        iterations,
        relative_residual: if bnorm > 0.0 { residual_norm(a, x, b) / bnorm } else { 0.0 },
    };
    if system.symmetric {
        let max_iter = 20 * a.nrows() + 100;
        if let Ok((mut x, it)) = conjugate_gradient(a, b, rel_tol, max_iter) {
            pin_prescribed(system, &mut x);
            let r = report(SolverMethod::ConjugateGradient, it, &x);
            return Ok((DofVector(x), r));
        }
    }
    let (mut x, it) = sparse_lu_solve(a, b, rel_tol)?;
    pin_prescribed(system, &mut x);
    let r = report(SolverMethod::SparseLu, it, &x);
    Ok((DofVector(x), r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::DEFAULT_EPS_SNAP;

    fn constant(v: f64) -> ScalarFn {
        Arc::new(move |_| v)
    }

    fn circle_problem(beta_minus: f64, beta_plus: f64) -> ProblemData {
        ProblemData {
            level_set: LevelSet::new(|p| p.x * p.x + p.y * p.y - 0.36),
            beta_minus: constant(beta_minus),
            beta_plus: constant(beta_plus),
            f: Arc::new(|_, _| 1.0),
            exact_u: None,
            exact_grad: None,
        }
    }

    /// Standard P1 stiffness matrix assembled directly from hats.
    fn standard_stiffness(mesh: &UniformMesh, beta: f64) -> CsrMatrix {
        let mut t = Vec::new();
        for k in 0..mesh.num_triangles() {
            let p = mesh.triangle_points(k);
            let hats = hat_pieces(&p);
            let area = signed_area(&p);
            let tri = mesh.triangle(k);
            for r in 0..3 {
                for c in 0..3 {
                    t.push((tri[r], tri[c], beta * area * hats[r].gradient().dot(&hats[c].gradient())));
                }
            }
        }
        CsrMatrix::from_triplets(mesh.num_vertices(), mesh.num_vertices(), &t)
    }

    fn max_diff(a: &CsrMatrix, b: &CsrMatrix) -> f64 {
        let d1 = a.iter().map(|(i, j, v)| (v - b.get(i, j)).abs()).fold(0.0, f64::max);
        let d2 = b.iter().map(|(i, j, v)| (v - a.get(i, j)).abs()).fold(0.0, f64::max);
        d1.max(d2)
    }

    #[test]
    fn constant_coefficient_reduces_to_standard_stiffness() {
        let problem = circle_problem(1.0, 1.0);
        let disc = Discretization::new(16, &problem, DEFAULT_EPS_SNAP).unwrap();
        assert!(disc.classification.num_interface_elements() > 0);
        let reference = standard_stiffness(&disc.mesh, 1.0);
        let sc = assemble_scifem(&disc, &problem, EdgeTermSign::Minus).unwrap();
        let pg = assemble_pgifem(&disc, &problem).unwrap();
        assert!(max_diff(&sc.matrix, &reference) < 1e-10);
        assert!(max_diff(&pg.matrix, &reference) < 1e-10);
    }

    #[test]
    fn load_vector_mass() {
        let problem = circle_problem(1.0, 10.0);
        let disc = Discretization::new(16, &problem, DEFAULT_EPS_SNAP).unwrap();
        for method in [Method::Scifem, Method::Pgifem] {
            let sys = assemble(&disc, &problem, method, EdgeTermSign::Minus).unwrap();
            let total: f64 = sys.rhs.iter().sum();
            assert!((total - 4.0).abs() < 1e-10, "{method}: {total}");
        }
    }

    #[test]
    fn symmetry_structure() {
        let problem = circle_problem(1.0, 10.0);
        let disc = Discretization::new(16, &problem, DEFAULT_EPS_SNAP).unwrap();
        let sc = assemble_scifem(&disc, &problem, EdgeTermSign::Minus).unwrap();
        assert!(sc.symmetric);
        assert!(sc.matrix.max_asymmetry() <= 1e-10 * sc.matrix.max_abs());

        let pg = assemble_pgifem(&disc, &problem).unwrap();
        assert!(!pg.symmetric);
        assert!(pg.matrix.max_asymmetry() > 0.0);
        let mut interface_nodes = vec![false; disc.mesh.num_vertices()];
        for (t, _) in disc.classification.interface_elements() {
            for v in disc.mesh.triangle(t) {
                interface_nodes[v] = true;
            }
        }
        for r in pg.matrix.asymmetric_rows(1e-12 * pg.matrix.max_abs()) {
            assert!(interface_nodes[r], "row {r} is asymmetric but not an interface node");
        }

        let sc = apply_dirichlet(sc, &disc.mesh, |p| p.x + 2.0 * p.y);
        assert!(sc.matrix.max_asymmetry() <= 1e-10 * sc.matrix.max_abs());
    }

    #[test]
    fn homogeneous_dirichlet() {
        let problem = circle_problem(1.0, 10.0);
        let disc = Discretization::new(8, &problem, DEFAULT_EPS_SNAP).unwrap();
        for method in [Method::Scifem, Method::Pgifem] {
            let sys = assemble(&disc, &problem, method, EdgeTermSign::Minus).unwrap();
            let sys = apply_dirichlet(sys, &disc.mesh, |_| 0.0);
            for &v in disc.mesh.boundary_vertices() {
                let (cols, vals) = sys.matrix.row(v);
                assert_eq!(cols, &[v]);
                assert_eq!(vals, &[1.0]);
            }
            let (u, report) = solve(&sys, DEFAULT_REL_TOL).unwrap();
            assert!(report.relative_residual <= DEFAULT_REL_TOL);
            for &v in disc.mesh.boundary_vertices() {
                assert_eq!(u[v], 0.0);
            }
            assert!(u.iter().any(|&x| x > 0.0));
        }
    }

    #[test]
    fn missing_basis_is_reported() {
        let problem = circle_problem(1.0, 10.0);
        let mut disc = Discretization::new(8, &problem, DEFAULT_EPS_SNAP).unwrap();
        let flat = crate::geometry::classify_elements(&disc.mesh, &LevelSet::new(|p| p.x + 2.0), DEFAULT_EPS_SNAP).unwrap();
        disc.bases = crate::ife::ElementBases::build(&disc.mesh, &flat, &problem.beta_minus, &problem.beta_plus).unwrap();
        assert!(matches!(assemble_scifem(&disc, &problem, EdgeTermSign::Minus), Err(Error::MissingBasis(_))));
        assert!(matches!(assemble_pgifem(&disc, &problem), Err(Error::MissingBasis(_))));
    }

    /// `u = (x - 0.3) / β` on each side of the line `x = 0.3`.
    fn line_problem(beta_minus: f64, beta_plus: f64) -> ProblemData {
        ProblemData {
            level_set: LevelSet::new(|p| p.x - 0.3),
            beta_minus: constant(beta_minus),
            beta_plus: constant(beta_plus),
            f: Arc::new(|_, _| 0.0),
            exact_u: Some(Arc::new(move |p, side| {
                let beta = if side == Side::Minus { beta_minus } else { beta_plus };
                (p.x - 0.3) / beta
            })),
            exact_grad: None,
        }
    }

    #[test]
    fn straight_interface_patch_test() {
        for (bm, bp) in [(1.0, 10.0), (1000.0, 1.0)] {
            let problem = line_problem(bm, bp);
            for n in [8, 16] {
                let disc = Discretization::new(n, &problem, DEFAULT_EPS_SNAP).unwrap();
                for method in [Method::Scifem, Method::Pgifem] {
                    let sys = assemble(&disc, &problem, method, EdgeTermSign::Minus).unwrap();
                    let sys = apply_dirichlet(sys, &disc.mesh, |p| problem.boundary_value(p));
                    let (u, _) = solve(&sys, 1e-13).unwrap();
                    let err = (0..disc.mesh.num_vertices())
                        .map(|v| (u[v] - problem.boundary_value(disc.mesh.vertex(v))).abs())
                        .fold(0.0, f64::max);
                    assert!(err < 1e-9, "{method} n={n} β=({bm},{bp}): {err:e}");
                }
            }
        }
    }

    #[test]
    fn method_parsing() {
        assert_eq!("scifem".parse::<Method>().unwrap(), Method::Scifem);
        assert_eq!("PGIFEM".parse::<Method>().unwrap(), Method::Pgifem);
        assert!("fem".parse::<Method>().is_err());
    }
}

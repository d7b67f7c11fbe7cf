//! Linear solvers: Jacobi-preconditioned conjugate gradients and a sparse
//! direct LU factorization backed by `faer`.

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

pub fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `‖b - A x‖₂`.
pub fn residual_norm(a: &CsrMatrix, x: &[f64], b: &[f64]) -> f64 {
    let ax = a.mul_vec(x);
    ax.iter().zip(b).map(|(p, q)| (q - p) * (q - p)).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverMethod {
    ConjugateGradient,
    SparseLu,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveReport {
    pub method: SolverMethod,
    pub iterations: usize,
    /// `‖b - A x‖₂ / ‖b‖₂`.
    pub relative_residual: f64,
}

/// Preconditioned CG from a zero initial guess. Fails on breakdown
/// (non-positive curvature) or when `max_iter` is exhausted.
pub fn conjugate_gradient(a: &CsrMatrix, b: &[f64], rel_tol: f64, max_iter: usize) -> Result<(Vec<f64>, usize)> {
    let n = b.len();
    let bnorm = norm2(b);
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok((x, 0));
    }
    let inv_diag: Vec<f64> = a
        .diagonal()
        .into_iter()
        .map(|d| if d > 0.0 { 1.0 / d } else { 1.0 })
        .collect();
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    for it in 1..=max_iter {
        a.mul_vec_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::Solver(format!("conjugate gradient breakdown at iteration {it} (pᵀAp = {pap:e})")));
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        if norm2(&r) <= rel_tol * bnorm {
            // Guard against drift of the recursive residual.
            if residual_norm(a, &x, b) <= rel_tol * bnorm {
                return Ok((x, it));
            }
            r = a.mul_vec(&x).iter().zip(b).map(|(ax, b)| b - ax).collect();
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::Solver(format!("conjugate gradient stagnated after {max_iter} iterations")))
}

/// Sparse LU with partial pivoting plus up to three steps of iterative
/// refinement.
pub fn sparse_lu_solve(a: &CsrMatrix, b: &[f64], rel_tol: f64) -> Result<(Vec<f64>, usize)> {
    let n = a.nrows();
    let triplets: Vec<Triplet<usize, usize, f64>> = a.iter().map(|(i, j, v)| Triplet::new(i, j, v)).collect();
    let mat = SparseColMat::<usize, f64>::try_new_from_triplets(n, a.ncols(), &triplets)
        .map_err(|e| Error::Solver(format!("cannot build sparse matrix: {e:?}")))?;
    let diagnostics = || format!("n = {n}, nnz = {}, max |a| = {:e}", a.nnz(), a.max_abs());
    // faer panics on an exactly zero numerical pivot instead of reporting it.
    let lu = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| mat.sp_lu()))
        .map_err(|_| Error::Solver(format!("sparse LU hit a zero pivot ({})", diagnostics())))?
        .map_err(|e| Error::Solver(format!("sparse LU failed: {e:?} ({})", diagnostics())))?;
    let bnorm = norm2(b);
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    for step in 0..4 {
        let rhs = faer::Col::<f64>::from_fn(n, |i| r[i]);
        let dx = lu.solve(&rhs);
        for i in 0..n {
            x[i] += dx[i];
        }
        r = a.mul_vec(&x).iter().zip(b).map(|(ax, b)| b - ax).collect();
        let res = norm2(&r);
        if !res.is_finite() {
            return Err(Error::Solver(format!("sparse LU produced non-finite values (n = {n})")));
        }
        if res <= rel_tol * bnorm {
            return Ok((x, step + 1));
        }
    }
    Err(Error::Solver(format!(
        "sparse LU residual {:e} exceeds tolerance {:e} (n = {n}, nnz = {})",
        norm2(&r) / bnorm.max(f64::MIN_POSITIVE),
        rel_tol,
        a.nnz()
    )))
}

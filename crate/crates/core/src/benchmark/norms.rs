use nalgebra::Vector2;
use rayon::prelude::*;

use crate::discretization::Discretization;
use crate::error::{Error, Result};
use crate::mesh::signed_area;
use crate::quadrature::quad_rule;
use crate::recovery::{EnrichedField, RecoveredGradient};
use crate::system::{ProblemData, LOAD_DEGREE};

/// Error measures of one discrete solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorNorms {
    /// Broken `H¹` norm `‖u − u_h‖_{1,h}`.
    pub de: f64,
    /// `‖∇u_I − ∇u_h‖₀` with `u_I` the immersed interpolant.
    pub die: f64,
    /// `‖∇u − R_h u_h‖₀`.
    pub dre: f64,
    /// Broken `H¹` seminorm of the error.
    pub h1_seminorm: f64,
    /// `‖β^{1/2}(∇u − ∇u_h)‖₀`.
    pub energy: f64,
    /// `|u_h|_{1,h}`.
    pub uh_seminorm: f64,
    /// `‖R_h u_h‖₀`.
    pub recovered_l2: f64,
}

/// Nodal values of the exact solution, which define the immersed interpolant.
pub fn interpolant(disc: &Discretization, problem: &ProblemData) -> Result<Vec<f64>> {
    let u = problem.exact_u.as_ref().ok_or(Error::MissingExactSolution)?;
    Ok((0..disc.mesh.num_vertices())
        .map(|v| u(disc.mesh.vertex(v), disc.classification.vertex_side(v)))
        .collect())
}

/// Exact solution at every fitted node: the linear interpolant on the
/// body-fitted mesh. Intersection nodes lie on Γ, where both sides agree.
pub fn fitted_interpolant(disc: &Discretization, problem: &ProblemData) -> Result<EnrichedField> {
    let u = problem.exact_u.as_ref().ok_or(Error::MissingExactSolution)?;
    let fitted = &disc.fitted;
    Ok(EnrichedField(
        fitted
            .vertices
            .iter()
            .enumerate()
            .map(|(v, &p)| {
                let side = if fitted.is_intersection_node(v) {
                    problem.level_set.side(p)
                } else {
                    disc.classification.vertex_side(v)
                };
                u(p, side)
            })
            .collect(),
    ))
}

#[derive(Default, Clone, Copy)]
struct Sums {
    l2: f64,
    grad: f64,
    energy: f64,
    inter: f64,
    rec: f64,
    uh: f64,
    rec_l2: f64,
}

impl std::ops::Add for Sums {
    type Output = Sums;

    fn add(self, o: Sums) -> Sums {
        Sums {
            l2: self.l2 + o.l2,
            grad: self.grad + o.grad,
            energy: self.energy + o.energy,
            inter: self.inter + o.inter,
            rec: self.rec + o.rec,
            uh: self.uh + o.uh,
            rec_l2: self.rec_l2 + o.rec_l2,
        }
    }
}

/// All integrals use the degree-4 rule on the fitted sub-triangles, with the
/// exact solution taken from the side of each sub-triangle. Contributions
/// are summed sequentially so results do not depend on the thread count.
pub fn compute_norms(disc: &Discretization, problem: &ProblemData, u_h: &[f64], rec: &RecoveredGradient) -> Result<ErrorNorms> {
    let exact_u = problem.exact_u.as_ref().ok_or(Error::MissingExactSolution)?;
    let exact_grad = problem.exact_grad.as_ref().ok_or(Error::MissingExactSolution)?;
    let u_i = interpolant(disc, problem)?;
    let diff: Vec<f64> = u_i.iter().zip(u_h).map(|(a, b)| a - b).collect();
    let rule = quad_rule(LOAD_DEGREE)?;
    let fitted = &disc.fitted;
    let sums = (0..fitted.sub_triangles.len())
        .into_par_iter()
        .map(|s| {
            let side = fitted.sub_triangles[s].side;
            let pts = fitted.points(s);
            let area = signed_area(&pts);
            let local = disc.sub_function(u_h, s);
            let grad_h = local.gradient();
            let grad_diff = disc.gradient_on(&diff, s);
            let nodal = rec.on_sub_triangle(fitted, s);
            let mut acc = Sums {
                inter: grad_diff.norm_squared() * area,
                uh: grad_h.norm_squared() * area,
                ..Default::default()
            };
            for q in rule {
                let z = q.map(&pts);
                let w = q.weight * area;
                let g = exact_grad(z, side);
                let r: Vector2<f64> = nodal[0] * q.bary[0] + nodal[1] * q.bary[1] + nodal[2] * q.bary[2];
                let e = (g - grad_h).norm_squared();
                acc.l2 += w * (exact_u(z, side) - local.value(z)).powi(2);
                acc.grad += w * e;
                acc.energy += w * problem.beta(z, side) * e;
                acc.rec += w * (g - r).norm_squared();
                acc.rec_l2 += w * r.norm_squared();
            }
            acc
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(Sums::default(), |a, b| a + b);
    Ok(ErrorNorms {
        de: (sums.l2 + sums.grad).sqrt(),
        die: sums.inter.sqrt(),
        dre: sums.rec.sqrt(),
        h1_seminorm: sums.grad.sqrt(),
        energy: sums.energy.sqrt(),
        uh_seminorm: sums.uh.sqrt(),
        recovered_l2: sums.rec_l2.sqrt(),
    })
}

/// `‖∇u − G‖₀` for any recovered field `G`.
pub fn recovered_gradient_error(disc: &Discretization, problem: &ProblemData, rec: &RecoveredGradient) -> Result<f64> {
    let exact_grad = problem.exact_grad.as_ref().ok_or(Error::MissingExactSolution)?;
    let rule = quad_rule(LOAD_DEGREE)?;
    let fitted = &disc.fitted;
    let sum: f64 = (0..fitted.sub_triangles.len())
        .into_par_iter()
        .map(|s| {
            let side = fitted.sub_triangles[s].side;
            let pts = fitted.points(s);
            let area = signed_area(&pts);
            let nodal = rec.on_sub_triangle(fitted, s);
            rule.iter()
                .map(|q| {
                    let r = nodal[0] * q.bary[0] + nodal[1] * q.bary[1] + nodal[2] * q.bary[2];
                    q.weight * area * (exact_grad(q.map(&pts), side) - r).norm_squared()
                })
                .sum::<f64>()
        })
        .collect::<Vec<_>>()
        .iter()
        .sum();
    Ok(sum.sqrt())
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use nalgebra::Point2;

    use super::*;
    use crate::geometry::{LevelSet, DEFAULT_EPS_SNAP};
    use crate::recovery::recover;

    #[test]
    fn linear_solution_has_zero_error() {
        let problem = ProblemData {
            level_set: LevelSet::new(|p| p.x * p.x + p.y * p.y - 0.36),
            beta_minus: Arc::new(|_| 2.0),
            beta_plus: Arc::new(|_| 2.0),
            f: Arc::new(|_, _| 0.0),
            exact_u: Some(Arc::new(|p, _| 1.0 + 2.0 * p.x - p.y)),
            exact_grad: Some(Arc::new(|_, _| Vector2::new(2.0, -1.0))),
        };
        let disc = Discretization::new(16, &problem, DEFAULT_EPS_SNAP).unwrap();
        let u = interpolant(&disc, &problem).unwrap();
        let rec = recover(&disc, &u).unwrap();
        let norms = compute_norms(&disc, &problem, &u, &rec).unwrap();
        assert!(norms.de <= 1e-10 && norms.die <= 1e-10 && norms.dre <= 1e-10, "{norms:?}");
        assert!((norms.uh_seminorm - 20f64.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn missing_exact_solution() {
        let problem = ProblemData {
            level_set: LevelSet::new(|p: Point2<f64>| p.x - 0.3),
            beta_minus: Arc::new(|_| 1.0),
            beta_plus: Arc::new(|_| 1.0),
            f: Arc::new(|_, _| 0.0),
            exact_u: None,
            exact_grad: None,
        };
        let disc = Discretization::new(4, &problem, DEFAULT_EPS_SNAP).unwrap();
        assert!(matches!(interpolant(&disc, &problem), Err(Error::MissingExactSolution)));
    }
}

//! Gradient recovery for immersed finite element functions: enrichment onto
//! the body-fitted mesh followed by one-sided polynomial preserving
//! recovery, and the resulting a posteriori error estimator.

use std::collections::BTreeSet;

use nalgebra::{Matrix6, Point2, SymmetricEigen, Vector2, Vector6};
use rayon::prelude::*;

use crate::discretization::Discretization;
use crate::error::{Error, Result};
use crate::geometry::{FittedMesh, Side};
use crate::mesh::{barycentric, signed_area};
use crate::quadrature::quad_rule;
use crate::system::{ProblemData, LOAD_DEGREE};

/// Minimum patch size for a quadratic fit.
pub const MIN_PATCH_NODES: usize = 6;
/// Largest accepted condition number of the scaled normal equations.
pub const MAX_PATCH_CONDITION: f64 = 1e8;

/// Continuous piecewise linear field on the fitted mesh, one value per node.
#[derive(Debug, Clone, PartialEq)]
pub struct EnrichedField(pub Vec<f64>);

/// Maps an immersed finite element function to the fitted mesh. Mesh
/// vertices keep their nodal value; each intersection node gets the average
/// of the traces of all sub-triangles sharing it.
pub fn enrich(disc: &Discretization, u: &[f64]) -> EnrichedField {
    let fitted = &disc.fitted;
    let nm = fitted.num_mesh_vertices;
    let mut values = vec![0.0; fitted.num_nodes()];
    values[..nm].copy_from_slice(&u[..nm]);
    let mut counts = vec![0usize; fitted.num_nodes()];
    for (s, st) in fitted.sub_triangles.iter().enumerate() {
        if st.vertices.iter().all(|&v| v < nm) {
            continue;
        }
        let local = disc.sub_function(u, s);
        for &v in st.vertices.iter().filter(|&&v| v >= nm) {
            values[v] += local.value(fitted.vertices[v]);
            counts[v] += 1;
        }
    }
    for v in nm..values.len() {
        if counts[v] > 0 {
            values[v] /= counts[v] as f64;
        }
    }
    EnrichedField(values)
}

/// Nodes used for the quadratic fit at one node of a one-sided mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryPatch {
    pub center: usize,
    pub side: Side,
    /// Sorted node indices, center included.
    pub nodes: Vec<usize>,
    pub rings: usize,
    pub condition: f64,
}

#[derive(Debug, Clone)]
struct PatchWeights {
    patch: RecoveryPatch,
    wx: Vec<f64>,
    wy: Vec<f64>,
}

fn monomials(x: f64, y: f64) -> Vector6<f64> {
    Vector6::new(1.0, x, y, x * x, x * y, y * y)
}

/// Least-squares quadratic fit around `center`. Returns the weights that map
/// the node values to the gradient of the fit at the center, and the
/// condition number of the scaled normal matrix.
fn fit_weights(points: &[Point2<f64>], center: Point2<f64>) -> Option<(Vec<f64>, Vec<f64>, f64)> {
    let radius = points.iter().map(|p| (p - center).norm()).fold(0.0, f64::max);
    if radius <= 0.0 {
        return None;
    }
    let rows: Vec<Vector6<f64>> = points
        .iter()
        .map(|p| {
            let d = (p - center) / radius;
            monomials(d.x, d.y)
        })
        .collect();
    let mut normal = Matrix6::<f64>::zeros();
    for r in &rows {
        normal += r * r.transpose();
    }
    let eig = SymmetricEigen::new(normal).eigenvalues;
    let (lo, hi) = eig.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &l| (lo.min(l), hi.max(l)));
    let condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    if !(condition < MAX_PATCH_CONDITION) {
        return Some((Vec::new(), Vec::new(), condition));
    }
    let inverse = normal.cholesky()?.inverse();
    let (gx, gy) = (inverse.row(1), inverse.row(2));
    let wx = rows.iter().map(|r| gx.dot(&r.transpose()) / radius).collect();
    let wy = rows.iter().map(|r| gy.dot(&r.transpose()) / radius).collect();
    Some((wx, wy, condition))
}

/// Sub-triangles of `side` incident to each fitted node.
fn node_triangles(fitted: &FittedMesh, side: Side) -> Vec<Vec<usize>> {
    let mut incident = vec![Vec::new(); fitted.num_nodes()];
    for &s in fitted.side_tris(side) {
        for v in fitted.sub_triangles[s].vertices {
            incident[v].push(s);
        }
    }
    incident
}

fn build_patch(fitted: &FittedMesh, incident: &[Vec<usize>], center: usize, side: Side) -> Result<PatchWeights> {
    let mut members: BTreeSet<usize> = BTreeSet::from([center]);
    let mut rings = 0;
    loop {
        let grown: BTreeSet<usize> = members
            .iter()
            .flat_map(|&v| incident[v].iter())
            .flat_map(|&s| fitted.sub_triangles[s].vertices)
            .chain(members.iter().copied())
            .collect();
        if grown.len() == members.len() {
            return Err(Error::Patch {
                node: center,
                reason: if members.len() < MIN_PATCH_NODES {
                    format!("only {} nodes reachable on the {side:?} side", members.len())
                } else {
                    "quadratic fit is ill-conditioned on the whole subdomain".into()
                },
            });
        }
        members = grown;
        rings += 1;
        if members.len() < MIN_PATCH_NODES {
            continue;
        }
        let nodes: Vec<usize> = members.iter().copied().collect();
        let points: Vec<Point2<f64>> = nodes.iter().map(|&v| fitted.vertices[v]).collect();
        if let Some((wx, wy, condition)) = fit_weights(&points, fitted.vertices[center]) {
            if condition < MAX_PATCH_CONDITION {
                return Ok(PatchWeights {
                    patch: RecoveryPatch {
                        center,
                        side,
                        nodes,
                        rings,
                        condition,
                    },
                    wx,
                    wy,
                });
            }
        }
    }
}

fn side_weights(fitted: &FittedMesh, side: Side) -> Result<Vec<Option<PatchWeights>>> {
    let incident = node_triangles(fitted, side);
    (0..fitted.num_nodes())
        .into_par_iter()
        .map(|v| {
            if incident[v].is_empty() {
                Ok(None)
            } else {
                build_patch(fitted, &incident, v, side).map(Some)
            }
        })
        .collect()
}

/// Patches of every node of the `side` sub-mesh, in node order.
pub fn build_patches(fitted: &FittedMesh, side: Side) -> Result<Vec<RecoveryPatch>> {
    if fitted.side_tris(side).is_empty() {
        return Err(Error::InvalidArgument(format!("the {side:?} subdomain mesh is empty")));
    }
    Ok(side_weights(fitted, side)?.into_iter().flatten().map(|w| w.patch).collect())
}

/// Precomputed linear map from enriched fields to recovered gradients.
#[derive(Debug, Clone)]
pub struct RecoveryOperator {
    weights: [Vec<Option<PatchWeights>>; 2],
}

impl RecoveryOperator {
    pub fn new(fitted: &FittedMesh) -> Result<Self> {
        let minus = side_weights(fitted, Side::Minus)?;
        let plus = side_weights(fitted, Side::Plus)?;
        let mut weights = [Vec::new(), Vec::new()];
        weights[Side::Minus.index()] = minus;
        weights[Side::Plus.index()] = plus;
        Ok(Self { weights })
    }

    pub fn patch(&self, node: usize, side: Side) -> Option<&RecoveryPatch> {
        self.weights[side.index()].get(node)?.as_ref().map(|w| &w.patch)
    }

    pub fn patches(&self, side: Side) -> impl Iterator<Item = &RecoveryPatch> {
        self.weights[side.index()].iter().flatten().map(|w| &w.patch)
    }

    pub fn apply(&self, field: &EnrichedField) -> RecoveredGradient {
        let apply_side = |side: Side| -> Vec<Option<Vector2<f64>>> {
            self.weights[side.index()]
                .iter()
                .map(|w| {
                    w.as_ref().map(|w| {
                        let mut g = Vector2::zeros();
                        for (k, &v) in w.patch.nodes.iter().enumerate() {
                            g.x += w.wx[k] * field.0[v];
                            g.y += w.wy[k] * field.0[v];
                        }
                        g
                    })
                })
                .collect()
        };
        RecoveredGradient {
            minus: apply_side(Side::Minus),
            plus: apply_side(Side::Plus),
        }
    }
}

/// Nodal gradients on each one-sided fitted mesh. Nodes on Γ_h carry one
/// value per side.
#[derive(Debug, Clone, PartialEq)]
pub struct RecoveredGradient {
    pub minus: Vec<Option<Vector2<f64>>>,
    pub plus: Vec<Option<Vector2<f64>>>,
}

impl RecoveredGradient {
    pub fn get(&self, node: usize, side: Side) -> Option<Vector2<f64>> {
        match side {
            Side::Minus => self.minus[node],
            Side::Plus => self.plus[node],
        }
    }

    /// Nodal values at the vertices of sub-triangle `s`.
    pub fn on_sub_triangle(&self, fitted: &FittedMesh, s: usize) -> [Vector2<f64>; 3] {
        let st = fitted.sub_triangles[s];
        st.vertices.map(|v| {
            self.get(v, st.side)
                .expect("every node of a one-sided mesh has a recovered value")
        })
    }

    /// Linear interpolant of the nodal values inside sub-triangle `s`.
    pub fn eval(&self, fitted: &FittedMesh, s: usize, z: Point2<f64>) -> Vector2<f64> {
        let g = self.on_sub_triangle(fitted, s);
        let l = barycentric(&fitted.points(s), z);
        g[0] * l[0] + g[1] * l[1] + g[2] * l[2]
    }
}

pub fn ippr_recover(field: &EnrichedField, fitted: &FittedMesh) -> Result<RecoveredGradient> {
    Ok(RecoveryOperator::new(fitted)?.apply(field))
}

/// Enrichment followed by one-sided recovery.
pub fn recover(disc: &Discretization, u: &[f64]) -> Result<RecoveredGradient> {
    ippr_recover(&enrich(disc, u), &disc.fitted)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorEstimate {
    /// Local indicator of every mesh triangle.
    pub per_element: Vec<f64>,
    pub global: f64,
}

/// `η_T = ‖β^{1/2}(R_h u_h − ∇u_h)‖_{0,T}` and `η_h = (Σ η_T²)^{1/2}`.
pub fn error_estimator(disc: &Discretization, problem: &ProblemData, u: &[f64], rec: &RecoveredGradient) -> Result<ErrorEstimate> {
    let rule = quad_rule(LOAD_DEGREE)?;
    let fitted = &disc.fitted;
    let per_element: Vec<f64> = (0..disc.mesh.num_triangles())
        .into_par_iter()
        .map(|t| {
            fitted.parent_range[t]
                .clone()
                .map(|s| {
                    let side = fitted.sub_triangles[s].side;
                    let pts = fitted.points(s);
                    let grad = disc.gradient_on(u, s);
                    let nodal = rec.on_sub_triangle(fitted, s);
                    let area = signed_area(&pts);
                    rule.iter()
                        .map(|q| {
                            let z = q.map(&pts);
                            let r = nodal[0] * q.bary[0] + nodal[1] * q.bary[1] + nodal[2] * q.bary[2];
                            q.weight * problem.beta(z, side) * (r - grad).norm_squared()
                        })
                        .sum::<f64>()
                        * area
                })
                .sum::<f64>()
                .sqrt()
        })
        .collect();
    let global = per_element.iter().map(|e| e * e).sum::<f64>().sqrt();
    Ok(ErrorEstimate { per_element, global })
}

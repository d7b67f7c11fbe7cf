use nalgebra::{Point2, Vector2};

use crate::error::Result;
use crate::geometry::{build_fitted_mesh, classify_elements, Classification, FittedMesh, Side};
use crate::ife::{ElementBases, LinearPiece};
use crate::mesh::UniformMesh;
use crate::system::ProblemData;

/// Everything derived from the mesh and the interface before assembly.
#[derive(Debug, Clone)]
pub struct Discretization {
    pub mesh: UniformMesh,
    pub classification: Classification,
    pub fitted: FittedMesh,
    pub bases: ElementBases,
}

impl Discretization {
    pub fn new(n: usize, problem: &ProblemData, eps_snap: f64) -> Result<Self> {
        let mesh = UniformMesh::new(n)?;
        let classification = classify_elements(&mesh, &problem.level_set, eps_snap)?;
        let fitted = build_fitted_mesh(&mesh, &classification);
        let bases = ElementBases::build(&mesh, &classification, &problem.beta_minus, &problem.beta_plus)?;
        Ok(Self {
            mesh,
            classification,
            fitted,
            bases,
        })
    }

    pub fn h(&self) -> f64 {
        self.mesh.h()
    }

    /// Trial-space pieces of element `t` on `side`.
    pub fn pieces(&self, t: usize, side: Side) -> [LinearPiece; 3] {
        self.bases.pieces(&self.mesh, t, side)
    }

    /// Restriction of the finite element function with nodal values `u` to
    /// the `side` part of element `t`, as one linear polynomial.
    pub fn local_function(&self, u: &[f64], t: usize, side: Side) -> LinearPiece {
        let tri = self.mesh.triangle(t);
        let pieces = self.pieces(t, side);
        (0..3).fold(LinearPiece::default(), |acc, i| acc.add(&pieces[i].scaled(u[tri[i]])))
    }

    /// Same as [`Self::local_function`] for the parent and side of a fitted
    /// sub-triangle.
    pub fn sub_function(&self, u: &[f64], s: usize) -> LinearPiece {
        let st = &self.fitted.sub_triangles[s];
        self.local_function(u, st.parent, st.side)
    }

    pub fn value_at(&self, u: &[f64], t: usize, side: Side, z: Point2<f64>) -> f64 {
        self.local_function(u, t, side).value(z)
    }

    pub fn gradient_on(&self, u: &[f64], s: usize) -> Vector2<f64> {
        self.sub_function(u, s).gradient()
    }
}

//! Immersed finite element methods for the elliptic interface problem
//! `-∇·(β∇u) = f` on `[-1, 1]²` with a level-set interface, together with
//! superconvergent gradient recovery and a recovery-based error estimator.
//!
//! The pipeline on one mesh level is
//! [`Discretization::new`] → [`system::assemble`] → [`system::apply_dirichlet`]
//! → [`system::solve`] → [`recovery::recover`] → [`benchmark::compute_norms`].

pub mod benchmark;
pub mod discretization;
pub mod error;
pub mod geometry;
pub mod ife;
pub mod mesh;
pub mod quadrature;
pub mod recovery;
pub mod solver;
pub mod sparse;
pub mod system;

pub use discretization::Discretization;
pub use error::{Error, Result};
pub use geometry::{Classification, ElementClass, FittedMesh, LevelSet, Side, SubTriangle};
pub use ife::{ElementBases, IfeElementBasis, LinearPiece};
pub use mesh::UniformMesh;
pub use recovery::{EnrichedField, ErrorEstimate, RecoveredGradient, RecoveryOperator, RecoveryPatch};
pub use sparse::CsrMatrix;
pub use system::{AssembledSystem, DofVector, EdgeTermSign, Method, ProblemData};

//! Piecewise-linear immersed basis functions on interface elements.
//!
//! On an interface element each basis function is a pair of linear
//! polynomials, one per side of the segment `p4 p5`. The six coefficients
//! are fixed by the three nodal values, continuity at `p4` and `p5`, and
//! continuity of the normal flux `β ∂ₙφ` across the segment.

use nalgebra::{Matrix6, Point2, Vector2, Vector6};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{Classification, ElementClass, ScalarFn, Side};
use crate::mesh::{barycentric, cross, UniformMesh};

/// Systems with a larger 1-norm condition estimate are rejected.
pub const MAX_BASIS_CONDITION: f64 = 1e14;

/// `a + b x + c y`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LinearPiece {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl LinearPiece {
    pub fn value(&self, p: Point2<f64>) -> f64 {
        self.a + self.b * p.x + self.c * p.y
    }

    pub fn gradient(&self) -> Vector2<f64> {
        Vector2::new(self.b, self.c)
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { a: self.a * s, b: self.b * s, c: self.c * s }
    }

    pub fn add(&self, o: &Self) -> Self {
        Self { a: self.a + o.a, b: self.b + o.b, c: self.c + o.c }
    }
}

/// Standard linear nodal basis of a (nondegenerate) triangle.
pub fn hat_pieces(p: &[Point2<f64>; 3]) -> [LinearPiece; 3] {
    let det = cross(p[1] - p[0], p[2] - p[0]);
    std::array::from_fn(|i| {
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        // Vanishes on edge (j, k), equals one at vertex i.
        let b = (p[j].y - p[k].y) / det;
        let c = (p[k].x - p[j].x) / det;
        let a = (p[j].x * p[k].y - p[k].x * p[j].y) / det;
        LinearPiece { a, b, c }
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct IfeElementBasis {
    pub vertices: [Point2<f64>; 3],
    /// `pieces[i][side.index()]` is the piece of basis function `i` on `side`.
    pub pieces: [[LinearPiece; 2]; 3],
    pub p4: Point2<f64>,
    pub p5: Point2<f64>,
    /// `+1` if points left of `p4 → p5` are on the plus side, `-1` otherwise.
    plus_orientation: f64,
    pub beta_minus_eff: f64,
    pub beta_plus_eff: f64,
    /// 1-norm condition estimate of the (scaled) 6×6 system.
    pub condition: f64,
}

impl IfeElementBasis {
    pub fn piece(&self, i: usize, side: Side) -> LinearPiece {
        self.pieces[i][side.index()]
    }

    pub fn side_pieces(&self, side: Side) -> [LinearPiece; 3] {
        std::array::from_fn(|i| self.pieces[i][side.index()])
    }

    /// Side of `z` relative to the segment; points on the segment are `Minus`.
    pub fn side_of(&self, z: Point2<f64>) -> Side {
        let o = cross(self.p5 - self.p4, z - self.p4) * self.plus_orientation;
        let scale = (self.p5 - self.p4).norm() * (z - self.p4).norm();
        if o > 1e-14 * scale {
            Side::Plus
        } else {
            Side::Minus
        }
    }

    /// Unit normal of the segment, pointing into the plus side.
    pub fn normal(&self) -> Vector2<f64> {
        let d = (self.p5 - self.p4).normalize();
        Vector2::new(-d.y, d.x) * self.plus_orientation
    }
}

/// Builds the immersed basis of one element from the side of the lone vertex.
///
/// The lone vertex is the one separated from the other two by the line
/// through `p4` and `p5`. Cuts passing through a vertex need per-vertex sides,
/// see [`build_ife_basis_with_sides`].
pub fn build_ife_basis(
    vertices: [Point2<f64>; 3],
    p4: Point2<f64>,
    p5: Point2<f64>,
    beta_minus: f64,
    beta_plus: f64,
    lone_side: Side,
) -> Result<IfeElementBasis> {
    let d = p5 - p4;
    let scale = d.norm() * (vertices[1] - vertices[0]).norm();
    let orient = vertices.map(|z| {
        let o = cross(d, z - p4);
        if o.abs() <= 1e-12 * scale {
            0.0
        } else {
            o.signum()
        }
    });
    if orient.contains(&0.0) {
        return Err(Error::InvalidArgument("interface segment passes through a vertex".into()));
    }
    let lone = (0..3)
        .find(|&k| orient[k] != orient[(k + 1) % 3] && orient[k] != orient[(k + 2) % 3])
        .ok_or_else(|| Error::InvalidArgument("segment does not separate a vertex".into()))?;
    let sides = std::array::from_fn(|k| Some(if k == lone { lone_side } else { lone_side.opposite() }));
    build_ife_basis_with_sides(vertices, p4, p5, beta_minus, beta_plus, sides, usize::MAX)
}

/// Builds the immersed basis given the side of every vertex (`None` for a
/// vertex on the interface, which must then coincide with `p4`).
///
/// `element` is only used to label errors.
pub fn build_ife_basis_with_sides(
    vertices: [Point2<f64>; 3],
    p4: Point2<f64>,
    p5: Point2<f64>,
    beta_minus: f64,
    beta_plus: f64,
    sides: [Option<Side>; 3],
    element: usize,
) -> Result<IfeElementBasis> {
    if !(beta_minus > 0.0 && beta_plus > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "diffusion coefficients must be positive (got {beta_minus}, {beta_plus})"
        )));
    }
    let reference = sides
        .iter()
        .position(|s| s.is_some())
        .ok_or_else(|| Error::InvalidArgument("no vertex off the interface".into()))?;

    // Local coordinates: translate to vertex 0, scale by the longest edge.
    let origin = vertices[0];
    let len = (0..3)
        .map(|k| (vertices[(k + 1) % 3] - vertices[k]).norm())
        .fold(0.0, f64::max);
    let local = |p: Point2<f64>| (p - origin) / len;

    let normal = {
        let d = (p5 - p4).normalize();
        Vector2::new(-d.y, d.x)
    };
    let beta_max = beta_minus.max(beta_plus);

    // Unknowns: [a⁺, b⁺, c⁺, a⁻, b⁻, c⁻].
    let mut m = Matrix6::<f64>::zeros();
    for (row, (z, side)) in vertices.iter().zip(sides).enumerate() {
        let q = local(*z);
        let off = match side.unwrap_or(Side::Minus) {
            Side::Plus => 0,
            Side::Minus => 3,
        };
        m[(row, off)] = 1.0;
        m[(row, off + 1)] = q.x;
        m[(row, off + 2)] = q.y;
    }
    for (row, p) in [(3, p4), (4, p5)] {
        let q = local(p);
        for (col, v) in [1.0, q.x, q.y].into_iter().enumerate() {
            m[(row, col)] = v;
            m[(row, col + 3)] = -v;
        }
    }
    m[(5, 1)] = beta_plus / beta_max * normal.x;
    m[(5, 2)] = beta_plus / beta_max * normal.y;
    m[(5, 4)] = -beta_minus / beta_max * normal.x;
    m[(5, 5)] = -beta_minus / beta_max * normal.y;

    let lu = m.lu();
    let singular = || Error::SingularBasis { element, condition: f64::INFINITY };
    let inverse = lu.try_inverse().ok_or_else(singular)?;
    let norm1 = |a: &Matrix6<f64>| {
        (0..6)
            .map(|j| (0..6).map(|i| a[(i, j)].abs()).sum::<f64>())
            .fold(0.0, f64::max)
    };
    let condition = norm1(&m) * norm1(&inverse);
    if !condition.is_finite() || condition > MAX_BASIS_CONDITION {
        return Err(Error::SingularBasis { element, condition });
    }

    let mut pieces = [[LinearPiece::default(); 2]; 3];
    for (i, slot) in pieces.iter_mut().enumerate() {
        let mut rhs = Vector6::zeros();
        rhs[i] = 1.0;
        let x = lu.solve(&rhs).ok_or_else(singular)?;
        let to_global = |a: f64, b: f64, c: f64| LinearPiece {
            a: a - (b * origin.x + c * origin.y) / len,
            b: b / len,
            c: c / len,
        };
        slot[Side::Plus.index()] = to_global(x[0], x[1], x[2]);
        slot[Side::Minus.index()] = to_global(x[3], x[4], x[5]);
    }

    let z = vertices[reference];
    let o = cross(p5 - p4, z - p4).signum();
    let plus_orientation = if sides[reference] == Some(Side::Plus) { o } else { -o };

    Ok(IfeElementBasis {
        vertices,
        pieces,
        p4,
        p5,
        plus_orientation,
        beta_minus_eff: beta_minus,
        beta_plus_eff: beta_plus,
        condition,
    })
}

/// Value and gradient of basis function `i` (0-based) at `z`.
pub fn eval_ife(basis: &IfeElementBasis, i: usize, z: Point2<f64>) -> Result<(f64, Vector2<f64>)> {
    if i > 2 {
        return Err(Error::InvalidArgument(format!("basis index {i} out of range")));
    }
    let bary = barycentric(&basis.vertices, z);
    if bary.iter().any(|&l| l < -1e-12) {
        return Err(Error::OutsideElement { x: z.x, y: z.y });
    }
    let piece = basis.piece(i, basis.side_of(z));
    Ok((piece.value(z), piece.gradient()))
}

/// Immersed bases of every interface element of a mesh.
#[derive(Debug, Clone)]
pub struct ElementBases {
    bases: Vec<Option<IfeElementBasis>>,
}

impl ElementBases {
    /// Coefficients are sampled at the midpoint of each element's segment.
    pub fn build(
        mesh: &UniformMesh,
        cls: &Classification,
        beta_minus: &ScalarFn,
        beta_plus: &ScalarFn,
    ) -> Result<Self> {
        let bases = cls
            .elements
            .par_iter()
            .enumerate()
            .map(|(t, class)| match class {
                ElementClass::Regular(_) => Ok(None),
                ElementClass::Interface(cut) => {
                    let mid = Point2::from((cut.p4.coords + cut.p5.coords) * 0.5);
                    build_ife_basis_with_sides(
                        mesh.triangle_points(t),
                        cut.p4,
                        cut.p5,
                        beta_minus(mid),
                        beta_plus(mid),
                        cut.vertex_sides,
                        t,
                    )
                    .map(Some)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { bases })
    }

    pub fn get(&self, t: usize) -> Option<&IfeElementBasis> {
        self.bases.get(t).and_then(Option::as_ref)
    }

    pub fn len(&self) -> usize {
        self.bases.iter().filter(|b| b.is_some()).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Local trial functions of element `t` restricted to `side`: the
    /// immersed pieces on interface elements, the hats elsewhere.
    pub fn pieces(&self, mesh: &UniformMesh, t: usize, side: Side) -> [LinearPiece; 3] {
        match self.get(t) {
            Some(b) => b.side_pieces(side),
            None => hat_pieces(&mesh.triangle_points(t)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_triangle() -> [Point2<f64>; 3] {
        [Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(0.0, 1.0)]
    }

    /// Plain Gaussian elimination with partial pivoting on a dense system.
    fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
        let n = b.len();
        for k in 0..n {
            let p = (k..n).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs())).unwrap();
            a.swap(k, p);
            b.swap(k, p);
            for i in k + 1..n {
                let f = a[i][k] / a[k][k];
                for j in k..n {
                    a[i][j] -= f * a[k][j];
                }
                b[i] -= f * b[k];
            }
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|j| a[i][j] * x[j]).sum();
            x[i] = (b[i] - s) / a[i][i];
        }
        x
    }

    #[test]
    fn equal_coefficients_reduce_to_hats() {
        let tri = unit_triangle();
        let basis = build_ife_basis(tri, Point2::new(0.4, 0.0), Point2::new(0.0, 0.7), 2.5, 2.5, Side::Plus).unwrap();
        let hats = hat_pieces(&tri);
        for i in 0..3 {
            for side in Side::BOTH {
                let p = basis.piece(i, side);
                assert!((p.a - hats[i].a).abs() < 1e-12);
                assert!((p.b - hats[i].b).abs() < 1e-12);
                assert!((p.c - hats[i].c).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn matches_dense_oracle() {
        let tri = unit_triangle();
        let (p4, p5) = (Point2::new(0.5, 0.0), Point2::new(0.0, 0.5));
        let (bm, bp) = (1.0, 10.0);
        let basis = build_ife_basis(tri, p4, p5, bm, bp, Side::Minus).unwrap();
        // Unknowns [a⁻, b⁻, c⁻, a⁺, b⁺, c⁺]; origin on the minus side.
        let n = {
            let d = (p5 - p4).normalize();
            [-d.y, d.x]
        };
        let row = |minus: [f64; 3], plus: [f64; 3]| [minus, plus].concat();
        let a = vec![
            row([1.0, 0.0, 0.0], [0.0; 3]),
            row([0.0; 3], [1.0, 1.0, 0.0]),
            row([0.0; 3], [1.0, 0.0, 1.0]),
            row([1.0, 0.5, 0.0], [-1.0, -0.5, 0.0]),
            row([1.0, 0.0, 0.5], [-1.0, 0.0, -0.5]),
            row([0.0, bm * n[0], bm * n[1]], [0.0, -bp * n[0], -bp * n[1]]),
        ];
        for i in 0..3 {
            let mut rhs = vec![0.0; 6];
            rhs[i] = 1.0;
            let x = gauss_solve(a.clone(), rhs);
            let m = basis.piece(i, Side::Minus);
            let p = basis.piece(i, Side::Plus);
            let got = [m.a, m.b, m.c, p.a, p.b, p.c];
            for k in 0..6 {
                assert!((got[k] - x[k]).abs() < 1e-12, "i={i} k={k}: {} vs {}", got[k], x[k]);
            }
        }
        // Frozen values: φ₀⁻ = 1 - (20/11)(x + y), φ₀⁺ = (1 - x - y) · 2/11.
        let m = basis.piece(0, Side::Minus);
        assert!((m.a - 1.0).abs() < 1e-12 && (m.b + 20.0 / 11.0).abs() < 1e-12);
        let p = basis.piece(0, Side::Plus);
        assert!((p.a - 2.0 / 11.0).abs() < 1e-12 && (p.c + 2.0 / 11.0).abs() < 1e-12);
    }

    #[test]
    fn evaluation() {
        let tri = unit_triangle();
        let (p4, p5) = (Point2::new(0.5, 0.0), Point2::new(0.0, 0.5));
        let basis = build_ife_basis(tri, p4, p5, 1.0, 10.0, Side::Minus).unwrap();
        let (v, _) = eval_ife(&basis, 0, tri[0]).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
        for i in 0..3 {
            for p in [p4, p5] {
                let a = basis.piece(i, Side::Minus).value(p);
                let b = basis.piece(i, Side::Plus).value(p);
                assert!((a - b).abs() < 1e-10);
            }
            let n = basis.normal();
            let fm = 1.0 * basis.piece(i, Side::Minus).gradient().dot(&n);
            let fp = 10.0 * basis.piece(i, Side::Plus).gradient().dot(&n);
            assert!((fm - fp).abs() <= 1e-10 * fm.abs().max(fp.abs()).max(1.0));
        }
        assert_eq!(basis.side_of(Point2::new(0.1, 0.1)), Side::Minus);
        assert_eq!(basis.side_of(Point2::new(0.4, 0.4)), Side::Plus);
        assert_eq!(basis.side_of(Point2::new(0.25, 0.25)), Side::Minus);
        assert!(matches!(eval_ife(&basis, 0, Point2::new(1.0, 1.0)), Err(Error::OutsideElement { .. })));
    }

    #[test]
    fn vertex_cut_basis() {
        // Segment from vertex 2 to the midpoint of the opposite edge.
        let tri = unit_triangle();
        let sides = [Some(Side::Minus), Some(Side::Plus), None];
        let basis =
            build_ife_basis_with_sides(tri, tri[2], Point2::new(0.5, 0.0), 1.0, 100.0, sides, 0).unwrap();
        for i in 0..3 {
            for (j, z) in tri.iter().enumerate() {
                let side = sides[j].unwrap_or(Side::Minus);
                let v = basis.piece(i, side).value(*z);
                assert!((v - if i == j { 1.0 } else { 0.0 }).abs() < 1e-12);
            }
            let top_m = basis.piece(i, Side::Minus).value(tri[2]);
            let top_p = basis.piece(i, Side::Plus).value(tri[2]);
            assert!((top_m - top_p).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_nonpositive_beta() {
        let tri = unit_triangle();
        let r = build_ife_basis(tri, Point2::new(0.5, 0.0), Point2::new(0.0, 0.5), 0.0, 1.0, Side::Minus);
        assert!(matches!(r, Err(Error::InvalidArgument(_))));
    }
}

//! Level-set interface geometry: element classification, edge-interface
//! intersections and the local body-fitted refinement of interface elements.

use std::collections::BTreeSet;
use std::fmt;
use std::ops::Range;
use std::sync::Arc;

use nalgebra::{Point2, Vector2};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mesh::{centroid, signed_area, UniformMesh};

/// Default vertex snapping tolerance, relative to `h`.
pub const DEFAULT_EPS_SNAP: f64 = 1e-10;

const MAX_ROOT_ITERATIONS: usize = 200;

/// Which subdomain a point, element or value belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    Minus,
    Plus,
}

impl Side {
    pub const BOTH: [Side; 2] = [Side::Minus, Side::Plus];

    pub fn index(self) -> usize {
        match self {
            Side::Minus => 0,
            Side::Plus => 1,
        }
    }

    pub fn opposite(self) -> Side {
        match self {
            Side::Minus => Side::Plus,
            Side::Plus => Side::Minus,
        }
    }

    /// `-1` or `+1`.
    pub fn sign(self) -> i8 {
        match self {
            Side::Minus => -1,
            Side::Plus => 1,
        }
    }

    /// Side of a level-set value; zero counts as `Minus`.
    pub fn of(phi: f64) -> Side {
        if phi > 0.0 {
            Side::Plus
        } else {
            Side::Minus
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Minus => "-",
            Side::Plus => "+",
        })
    }
}

pub type ScalarFn = Arc<dyn Fn(Point2<f64>) -> f64 + Send + Sync>;
pub type VectorFn = Arc<dyn Fn(Point2<f64>) -> Vector2<f64> + Send + Sync>;

/// Interface `Γ = {phi = 0}` with `Ω⁻ = {phi < 0}` and `Ω⁺ = {phi > 0}`.
#[derive(Clone)]
pub struct LevelSet {
    phi: ScalarFn,
    grad: Option<VectorFn>,
}

impl LevelSet {
    pub fn new(phi: impl Fn(Point2<f64>) -> f64 + Send + Sync + 'static) -> Self {
        Self { phi: Arc::new(phi), grad: None }
    }

    pub fn with_gradient(mut self, grad: impl Fn(Point2<f64>) -> Vector2<f64> + Send + Sync + 'static) -> Self {
        self.grad = Some(Arc::new(grad));
        self
    }

    pub fn phi(&self, p: Point2<f64>) -> f64 {
        (self.phi)(p)
    }

    pub fn gradient(&self, p: Point2<f64>) -> Option<Vector2<f64>> {
        self.grad.as_ref().map(|g| g(p))
    }

    pub fn side(&self, p: Point2<f64>) -> Side {
        Side::of(self.phi(p))
    }
}

impl fmt::Debug for LevelSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LevelSet").field("has_gradient", &self.grad.is_some()).finish()
    }
}

/// Point on segment `[a, b]` where the level set vanishes.
///
/// Secant steps inside a shrinking bracket, with a forced bisection every
/// third step so the bracket at least halves regularly.
pub fn edge_intersection(a: Point2<f64>, b: Point2<f64>, ls: &LevelSet) -> Result<Point2<f64>> {
    let at = |t: f64| a + (b - a) * t;
    let g0 = ls.phi(a);
    let g1 = ls.phi(b);
    if g0 == 0.0 {
        return Ok(a);
    }
    if g1 == 0.0 {
        return Ok(b);
    }
    if g0.signum() == g1.signum() || !g0.is_finite() || !g1.is_finite() {
        return Err(Error::NoSignChange { ax: a.x, ay: a.y, bx: b.x, by: b.y });
    }
    let tol = 1e-12 * (1.0 + g0.abs() + g1.abs());
    let (mut lo, mut hi, mut glo, mut ghi) = (0.0_f64, 1.0_f64, g0, g1);
    for it in 0..MAX_ROOT_ITERATIONS {
        let secant = lo - glo * (hi - lo) / (ghi - glo);
        let t = if it % 3 == 2 || !(secant > lo && secant < hi) {
            0.5 * (lo + hi)
        } else {
            secant
        };
        let gt = ls.phi(at(t));
        if gt.abs() <= tol {
            return Ok(at(t));
        }
        if gt.signum() == glo.signum() {
            lo = t;
            glo = gt;
        } else {
            hi = t;
            ghi = gt;
        }
        if hi - lo <= 4.0 * f64::EPSILON {
            let t = if glo.abs() <= ghi.abs() { lo } else { hi };
            return Ok(at(t));
        }
    }
    Err(Error::RootNotConverged(MAX_ROOT_ITERATIONS))
}

/// Where an endpoint of the interface segment `p4 p5` sits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CutLocation {
    /// Interior point of a mesh edge.
    Edge(usize),
    /// A mesh vertex snapped onto the interface.
    Vertex(usize),
}

/// How the interface segment cuts an element. Local vertex indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CutTopology {
    /// The segment separates vertex `lone` from the other two. `p4` lies on
    /// the edge to local vertex `lone + 1`, `p5` on the edge to `lone + 2`.
    Corner { lone: usize, lone_side: Side },
    /// The segment runs from vertex `through`, which lies on the interface,
    /// to the opposite edge. `p4` is the vertex, `p5` the edge point.
    Vertex { through: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct InterfaceCut {
    pub p4: Point2<f64>,
    pub p5: Point2<f64>,
    pub p4_at: CutLocation,
    pub p5_at: CutLocation,
    pub topology: CutTopology,
    /// Side of each local vertex; `None` for a vertex snapped onto Γ.
    pub vertex_sides: [Option<Side>; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub enum ElementClass {
    Regular(Side),
    Interface(InterfaceCut),
}

impl ElementClass {
    pub fn is_interface(&self) -> bool {
        matches!(self, ElementClass::Interface(_))
    }

    pub fn cut(&self) -> Option<&InterfaceCut> {
        match self {
            ElementClass::Interface(c) => Some(c),
            ElementClass::Regular(_) => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Classification {
    /// Level-set value at each mesh vertex.
    pub vertex_phi: Vec<f64>,
    /// Snapped vertex sign: -1, 0 or +1.
    pub vertex_sign: Vec<i8>,
    /// Intersection point of every edge whose endpoints have strictly
    /// opposite snapped signs.
    pub edge_cuts: Vec<Option<Point2<f64>>>,
    pub elements: Vec<ElementClass>,
    pub eps_snap: f64,
}

impl Classification {
    pub fn num_interface_elements(&self) -> usize {
        self.elements.iter().filter(|e| e.is_interface()).count()
    }

    pub fn interface_elements(&self) -> impl Iterator<Item = (usize, &InterfaceCut)> {
        self.elements.iter().enumerate().filter_map(|(t, e)| e.cut().map(|c| (t, c)))
    }

    /// Side of a mesh vertex; vertices on Γ report `Minus`.
    pub fn vertex_side(&self, v: usize) -> Side {
        if self.vertex_sign[v] > 0 {
            Side::Plus
        } else {
            Side::Minus
        }
    }
}

/// Interior sample fractions used to detect edges crossed more than once.
const EDGE_PROBES: [f64; 3] = [0.25, 0.5, 0.75];

fn snapped_sign(phi: f64, snap: f64) -> i8 {
    if phi.abs() < snap {
        0
    } else if phi > 0.0 {
        1
    } else {
        -1
    }
}

/// Classifies every triangle of `mesh` against the level set.
///
/// Vertex values with `|phi| < eps_snap · h` are snapped to zero. Fails if an
/// edge appears to be crossed more than once or if the level set vanishes
/// along a whole edge.
pub fn classify_elements(mesh: &UniformMesh, ls: &LevelSet, eps_snap: f64) -> Result<Classification> {
    let snap = eps_snap * mesh.h();
    let vertex_phi: Vec<f64> = mesh.vertices().par_iter().map(|&p| ls.phi(p)).collect();
    if let Some(v) = vertex_phi.iter().position(|p| !p.is_finite()) {
        return Err(Error::InvalidArgument(format!("level set is not finite at vertex {v}")));
    }
    let vertex_sign: Vec<i8> = vertex_phi.iter().map(|&p| snapped_sign(p, snap)).collect();

    let edge_cuts = mesh
        .edges()
        .par_iter()
        .enumerate()
        .map(|(e, edge)| -> Result<Option<Point2<f64>>> {
            let [va, vb] = edge.vertices;
            let (a, b) = (mesh.vertex(va), mesh.vertex(vb));
            let (sa, sb) = (vertex_sign[va], vertex_sign[vb]);
            let probes = EDGE_PROBES.map(|t| snapped_sign(ls.phi(a + (b - a) * t), snap));
            if sa == 0 && sb == 0 {
                if probes[1] == 0 {
                    return Err(Error::UnresolvedInterface(format!(
                        "level set vanishes along edge {e}"
                    )));
                }
                return Ok(None);
            }
            if sa * sb < 0 {
                // One crossing: probes must change sign exactly once.
                let mut changes = 0;
                let mut prev = sa;
                for s in probes.into_iter().chain([sb]) {
                    if s != 0 && s != prev {
                        changes += 1;
                        prev = s;
                    }
                }
                if changes != 1 {
                    return Err(Error::UnresolvedInterface(format!("edge {e} is crossed more than once")));
                }
                return edge_intersection(a, b, ls).map(Some);
            }
            let s = if sa != 0 { sa } else { sb };
            if probes.iter().any(|&p| p == -s) {
                return Err(Error::UnresolvedInterface(format!("edge {e} is crossed more than once")));
            }
            Ok(None)
        })
        .collect::<Result<Vec<_>>>()?;

    let elements = (0..mesh.num_triangles())
        .into_par_iter()
        .map(|t| classify_one(mesh, t, &vertex_sign, &edge_cuts))
        .collect::<Result<Vec<_>>>()?;

    Ok(Classification {
        vertex_phi,
        vertex_sign,
        edge_cuts,
        elements,
        eps_snap,
    })
}

fn side_from_sign(s: i8) -> Option<Side> {
    match s {
        s if s > 0 => Some(Side::Plus),
        s if s < 0 => Some(Side::Minus),
        _ => None,
    }
}

fn classify_one(
    mesh: &UniformMesh,
    t: usize,
    vertex_sign: &[i8],
    edge_cuts: &[Option<Point2<f64>>],
) -> Result<ElementClass> {
    let tri = mesh.triangle(t);
    let edges = mesh.triangle_edges(t);
    let signs = tri.map(|v| vertex_sign[v]);
    let neg = signs.iter().filter(|&&s| s < 0).count();
    let pos = signs.iter().filter(|&&s| s > 0).count();
    let vertex_sides = signs.map(side_from_sign);

    if neg == 0 || pos == 0 {
        return match (neg, pos) {
            (0, 0) => Err(Error::UnresolvedInterface(format!(
                "all vertices of triangle {t} lie on the interface"
            ))),
            (_, 0) => Ok(ElementClass::Regular(Side::Minus)),
            _ => Ok(ElementClass::Regular(Side::Plus)),
        };
    }

    let cut_point = |local_edge: usize| -> Result<(Point2<f64>, CutLocation)> {
        let e = edges[local_edge];
        edge_cuts[e]
            .map(|p| (p, CutLocation::Edge(e)))
            .ok_or_else(|| Error::UnresolvedInterface(format!("edge {e} of triangle {t} has no intersection")))
    };

    if neg + pos == 3 {
        let lone = if neg == 1 {
            signs.iter().position(|&s| s < 0).unwrap()
        } else {
            signs.iter().position(|&s| s > 0).unwrap()
        };
        // Local edge k is opposite local vertex k.
        let (p4, p4_at) = cut_point((lone + 2) % 3)?;
        let (p5, p5_at) = cut_point((lone + 1) % 3)?;
        return Ok(ElementClass::Interface(InterfaceCut {
            p4,
            p5,
            p4_at,
            p5_at,
            topology: CutTopology::Corner {
                lone,
                lone_side: vertex_sides[lone].unwrap(),
            },
            vertex_sides,
        }));
    }

    // One vertex on Γ, the other two on opposite sides.
    let through = signs.iter().position(|&s| s == 0).unwrap();
    let (p5, p5_at) = cut_point(through)?;
    Ok(ElementClass::Interface(InterfaceCut {
        p4: mesh.vertex(tri[through]),
        p5,
        p4_at: CutLocation::Vertex(tri[through]),
        p5_at,
        topology: CutTopology::Vertex { through },
        vertex_sides,
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SubTriangle {
    /// Counterclockwise fitted-mesh node indices.
    pub vertices: [usize; 3],
    pub parent: usize,
    pub side: Side,
}

/// Local body-fitted refinement of the uniform mesh.
///
/// Nodes `0..num_mesh_vertices` coincide with the mesh vertices; intersection
/// nodes follow, ordered by the index of the edge they lie on.
#[derive(Debug, Clone)]
pub struct FittedMesh {
    pub vertices: Vec<Point2<f64>>,
    pub num_mesh_vertices: usize,
    pub sub_triangles: Vec<SubTriangle>,
    /// Sub-triangles of each parent element, contiguous.
    pub parent_range: Vec<Range<usize>>,
    /// Fitted node created on each mesh edge, if any.
    pub edge_node: Vec<Option<usize>>,
    /// Nodes on Γ_h: intersection nodes and vertices snapped onto Γ.
    pub gamma_nodes: Vec<usize>,
    pub minus_tris: Vec<usize>,
    pub plus_tris: Vec<usize>,
    /// Quadrilateral splits where neither diagonal met the angle rule.
    pub angle_fallbacks: usize,
}

impl FittedMesh {
    pub fn num_nodes(&self) -> usize {
        self.vertices.len()
    }

    pub fn points(&self, s: usize) -> [Point2<f64>; 3] {
        self.sub_triangles[s].vertices.map(|v| self.vertices[v])
    }

    pub fn sub_triangles_of(&self, parent: usize) -> &[SubTriangle] {
        &self.sub_triangles[self.parent_range[parent].clone()]
    }

    pub fn side_tris(&self, side: Side) -> &[usize] {
        match side {
            Side::Minus => &self.minus_tris,
            Side::Plus => &self.plus_tris,
        }
    }

    pub fn is_intersection_node(&self, node: usize) -> bool {
        node >= self.num_mesh_vertices
    }
}

/// Interior angles of a triangle.
pub fn angles(p: &[Point2<f64>; 3]) -> [f64; 3] {
    let angle_at = |k: usize| {
        let a = p[(k + 1) % 3] - p[k];
        let b = p[(k + 2) % 3] - p[k];
        (a.dot(&b) / (a.norm() * b.norm())).clamp(-1.0, 1.0).acos()
    };
    [angle_at(0), angle_at(1), angle_at(2)]
}

fn meets_angle_rule(p: &[Point2<f64>; 3]) -> bool {
    use std::f64::consts::FRAC_PI_4;
    angles(p).iter().any(|&a| (FRAC_PI_4..=3.0 * FRAC_PI_4).contains(&a))
}

fn min_angle(p: &[Point2<f64>; 3]) -> f64 {
    angles(p).into_iter().fold(f64::INFINITY, f64::min)
}

fn ccw(mut v: [usize; 3], nodes: &[Point2<f64>]) -> [usize; 3] {
    if signed_area(&v.map(|i| nodes[i])) < 0.0 {
        v.swap(1, 2);
    }
    v
}

/// Builds the local body-fitted mesh `T̂_h`.
///
/// Regular elements are kept. A corner cut yields the lone-vertex triangle
/// plus the quadrilateral split by whichever diagonal satisfies the angle
/// rule (largest minimum angle if both do). A vertex cut yields two triangles.
pub fn build_fitted_mesh(mesh: &UniformMesh, cls: &Classification) -> FittedMesh {
    let mut vertices = mesh.vertices().to_vec();
    let num_mesh_vertices = vertices.len();
    let mut edge_node = vec![None; mesh.num_edges()];
    for (e, cut) in cls.edge_cuts.iter().enumerate() {
        if let Some(p) = cut {
            edge_node[e] = Some(vertices.len());
            vertices.push(*p);
        }
    }
    let node_of = |loc: CutLocation| match loc {
        CutLocation::Edge(e) => edge_node[e].expect("intersection node exists"),
        CutLocation::Vertex(v) => v,
    };

    let mut sub_triangles = Vec::with_capacity(mesh.num_triangles() + 2 * cls.num_interface_elements());
    let mut parent_range = Vec::with_capacity(mesh.num_triangles());
    let mut angle_fallbacks = 0;
    for (t, class) in cls.elements.iter().enumerate() {
        let start = sub_triangles.len();
        let tri = mesh.triangle(t);
        match class {
            ElementClass::Regular(side) => sub_triangles.push(SubTriangle {
                vertices: tri,
                parent: t,
                side: *side,
            }),
            ElementClass::Interface(cut) => {
                let n4 = node_of(cut.p4_at);
                let n5 = node_of(cut.p5_at);
                match cut.topology {
                    CutTopology::Corner { lone, lone_side } => {
                        let l = tri[lone];
                        let a = tri[(lone + 1) % 3];
                        let b = tri[(lone + 2) % 3];
                        let other = lone_side.opposite();
                        sub_triangles.push(SubTriangle {
                            vertices: ccw([l, n4, n5], &vertices),
                            parent: t,
                            side: lone_side,
                        });
                        let split_a = [[a, b, n5], [a, n5, n4]];
                        let split_b = [[a, b, n4], [b, n5, n4]];
                        let quality = |split: &[[usize; 3]; 2]| {
                            let pts = split.map(|s| s.map(|i| vertices[i]));
                            let ok = pts.iter().all(meets_angle_rule);
                            let worst = pts.iter().map(min_angle).fold(f64::INFINITY, f64::min);
                            (ok, worst)
                        };
                        let (ok_a, min_a) = quality(&split_a);
                        let (ok_b, min_b) = quality(&split_b);
                        let chosen = match (ok_a, ok_b) {
                            (true, false) => split_a,
                            (false, true) => split_b,
                            _ => {
                                if !ok_a {
                                    angle_fallbacks += 1;
                                }
                                if min_a >= min_b {
                                    split_a
                                } else {
                                    split_b
                                }
                            }
                        };
                        for s in chosen {
                            sub_triangles.push(SubTriangle {
                                vertices: ccw(s, &vertices),
                                parent: t,
                                side: other,
                            });
                        }
                    }
                    CutTopology::Vertex { through } => {
                        let a = (through + 1) % 3;
                        let b = (through + 2) % 3;
                        for (k, other) in [(a, tri[a]), (b, tri[b])] {
                            sub_triangles.push(SubTriangle {
                                vertices: ccw([n4, other, n5], &vertices),
                                parent: t,
                                side: cut.vertex_sides[k].expect("off-interface vertex"),
                            });
                        }
                    }
                }
            }
        }
        parent_range.push(start..sub_triangles.len());
    }

    let mut gamma: BTreeSet<usize> = (num_mesh_vertices..vertices.len()).collect();
    gamma.extend((0..num_mesh_vertices).filter(|&v| cls.vertex_sign[v] == 0));

    let mut minus_tris = Vec::new();
    let mut plus_tris = Vec::new();
    for (s, st) in sub_triangles.iter().enumerate() {
        match st.side {
            Side::Minus => minus_tris.push(s),
            Side::Plus => plus_tris.push(s),
        }
    }

    FittedMesh {
        vertices,
        num_mesh_vertices,
        sub_triangles,
        parent_range,
        edge_node,
        gamma_nodes: gamma.into_iter().collect(),
        minus_tris,
        plus_tris,
        angle_fallbacks,
    }
}

/// Centroid of sub-triangle `s`.
pub fn sub_centroid(fitted: &FittedMesh, s: usize) -> Point2<f64> {
    centroid(&fitted.points(s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::cross;

    fn line(c: f64) -> LevelSet {
        LevelSet::new(move |p| p.x - c)
    }

    fn circle(r: f64) -> LevelSet {
        LevelSet::new(move |p| p.x * p.x + p.y * p.y - r * r)
    }

    fn cardioid() -> LevelSet {
        LevelSet::new(|p| {
            let s = 3.0 * (p.x * p.x + p.y * p.y) - p.x;
            s * s - p.x * p.x - p.y * p.y
        })
    }

    /// Counts triangles whose dense sample set contains both signs.
    fn sampled_interface_count(mesh: &UniformMesh, ls: &LevelSet, samples_per_axis: usize) -> usize {
        (0..mesh.num_triangles())
            .filter(|&t| {
                let p = mesh.triangle_points(t);
                let (mut neg, mut pos) = (false, false);
                for i in 0..=samples_per_axis {
                    for j in 0..=(samples_per_axis - i) {
                        let (a, b) = (i as f64 / samples_per_axis as f64, j as f64 / samples_per_axis as f64);
                        let z = p[0] + (p[1] - p[0]) * a + (p[2] - p[0]) * b;
                        let v = ls.phi(z);
                        neg |= v < 0.0;
                        pos |= v > 0.0;
                    }
                }
                neg && pos
            })
            .count()
    }

    #[test]
    fn straight_line_classification_matches_sampling() {
        let mesh = UniformMesh::new(4).unwrap();
        let ls = line(0.3);
        let cls = classify_elements(&mesh, &ls, DEFAULT_EPS_SNAP).unwrap();
        assert_eq!(cls.num_interface_elements(), sampled_interface_count(&mesh, &ls, 40));
        // x = 0.3 crosses the column of subsquares 0 <= x <= 0.5: 4 squares, both triangles.
        assert_eq!(cls.num_interface_elements(), 8);
    }

    #[test]
    fn circle_classification_matches_dense_sampling() {
        let mesh = UniformMesh::new(32).unwrap();
        let ls = circle(0.6);
        let cls = classify_elements(&mesh, &ls, DEFAULT_EPS_SNAP).unwrap();
        // ~10⁴ samples per triangle.
        assert_eq!(cls.num_interface_elements(), sampled_interface_count(&mesh, &ls, 140));
    }

    #[test]
    fn one_signed_level_set_is_all_regular_plus() {
        let mesh = UniformMesh::new(6).unwrap();
        let ls = LevelSet::new(|p| 5.0 + p.x);
        let cls = classify_elements(&mesh, &ls, DEFAULT_EPS_SNAP).unwrap();
        assert!(cls.elements.iter().all(|e| *e == ElementClass::Regular(Side::Plus)));
        let fitted = build_fitted_mesh(&mesh, &cls);
        assert_eq!(fitted.num_nodes(), mesh.num_vertices());
        assert_eq!(fitted.sub_triangles.len(), mesh.num_triangles());
        for (t, st) in fitted.sub_triangles.iter().enumerate() {
            assert_eq!(st.vertices, mesh.triangle(t));
        }
        assert!(fitted.gamma_nodes.is_empty());
        assert!(fitted.minus_tris.is_empty());
    }

    #[test]
    fn roots() {
        let p = edge_intersection(Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), &line(0.3)).unwrap();
        assert!((p.x - 0.3).abs() < 1e-14 && p.y == 0.0);
        let ls = circle(0.6);
        let p = edge_intersection(Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), &ls).unwrap();
        assert!(ls.phi(p).abs() <= 1e-12 * (1.0 + 0.36 + 0.64));
        assert!((p.x - 0.6).abs() < 1e-11 && p.y == 0.0);
        let err = edge_intersection(Point2::new(0.0, 0.0), Point2::new(0.1, 0.0), &circle(0.6));
        assert!(matches!(err, Err(Error::NoSignChange { .. })));
    }

    #[test]
    fn cardioid_root_matches_bisection_oracle() {
        let ls = cardioid();
        let a = Point2::new(0.5, 0.0);
        let b = Point2::new(0.9, 0.1);
        assert!(ls.phi(a) < 0.0 && ls.phi(b) > 0.0);
        let p = edge_intersection(a, b, &ls).unwrap();
        // Plain bisection down to a 1e-12 bracket.
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        while hi - lo > 1e-12 {
            let mid = 0.5 * (lo + hi);
            if ls.phi(a + (b - a) * mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let oracle = a + (b - a) * (0.5 * (lo + hi));
        assert!((p - oracle).norm() < 1e-11);
        assert!(ls.phi(p).abs() <= 1e-12 * (1.0 + ls.phi(a).abs() + ls.phi(b).abs()));
    }

    #[test]
    fn double_crossing_rejected() {
        // A thin bump crossing the edge (0,0)-(h,0) twice on a 2x2 mesh.
        let mesh = UniformMesh::new(2).unwrap();
        let ls = LevelSet::new(|p| (p.x - 0.5).abs() - 0.1 + 10.0 * p.y.abs());
        assert!(matches!(
            classify_elements(&mesh, &ls, DEFAULT_EPS_SNAP),
            Err(Error::UnresolvedInterface(_))
        ));
    }

    #[test]
    fn level_set_along_edge_rejected() {
        let mesh = UniformMesh::new(4).unwrap();
        let ls = line(0.0);
        assert!(matches!(
            classify_elements(&mesh, &ls, DEFAULT_EPS_SNAP),
            Err(Error::UnresolvedInterface(_))
        ));
    }

    fn check_fitted(mesh: &UniformMesh, cls: &Classification, fitted: &FittedMesh, ls: &LevelSet) {
        let snap = cls.eps_snap * mesh.h();
        let total: f64 = (0..fitted.sub_triangles.len()).map(|s| signed_area(&fitted.points(s))).sum();
        assert!((total - 4.0).abs() < 1e-12);
        for t in 0..mesh.num_triangles() {
            let parent = signed_area(&mesh.triangle_points(t));
            let subs: f64 = fitted.parent_range[t].clone().map(|s| signed_area(&fitted.points(s))).sum();
            assert!((parent - subs).abs() < 1e-12 * parent.max(1.0));
            for s in fitted.parent_range[t].clone() {
                assert!(signed_area(&fitted.points(s)) > 0.0);
            }
            if let ElementClass::Interface(cut) = &cls.elements[t] {
                let d = cut.p5 - cut.p4;
                let plus_orient = {
                    let k = cut.vertex_sides.iter().position(|s| s.is_some()).unwrap();
                    let z = mesh.vertex(mesh.triangle(t)[k]);
                    let o = cross(d, z - cut.p4).signum();
                    if cut.vertex_sides[k] == Some(Side::Plus) { o } else { -o }
                };
                for s in fitted.parent_range[t].clone() {
                    let c = sub_centroid(fitted, s);
                    let side = if cross(d, c - cut.p4) * plus_orient > 0.0 { Side::Plus } else { Side::Minus };
                    assert_eq!(side, fitted.sub_triangles[s].side, "side purity t={t}");
                }
            }
        }
        for (s, st) in fitted.sub_triangles.iter().enumerate() {
            for &v in &st.vertices {
                if v < fitted.num_mesh_vertices {
                    let phi = cls.vertex_phi[v];
                    match st.side {
                        Side::Minus => assert!(phi <= snap, "sub {s}"),
                        Side::Plus => assert!(phi >= -snap, "sub {s}"),
                    }
                }
            }
        }
        for &g in &fitted.gamma_nodes {
            let phi = ls.phi(fitted.vertices[g]);
            assert!(phi.abs() <= 1e-10 || cls.vertex_sign.get(g) == Some(&0));
        }
    }

    #[test]
    fn fitted_mesh_invariants() {
        let cases: Vec<(usize, LevelSet)> = vec![
            (4, line(0.3)),
            (16, line(0.3)),
            (32, circle(0.6)),
            (64, circle(0.6)),
            (32, cardioid()),
            (64, cardioid()),
            (32, LevelSet::new(|p| 4.0 * p.x * p.x + 16.0 * p.y * p.y - 1.0)),
        ];
        for (n, ls) in cases {
            let mesh = UniformMesh::new(n).unwrap();
            let cls = classify_elements(&mesh, &ls, DEFAULT_EPS_SNAP).unwrap();
            let fitted = build_fitted_mesh(&mesh, &cls);
            check_fitted(&mesh, &cls, &fitted, &ls);
        }
    }

    #[test]
    fn straight_cut_sub_triangles_are_one_sided() {
        let mesh = UniformMesh::new(4).unwrap();
        let ls = line(0.3);
        let cls = classify_elements(&mesh, &ls, DEFAULT_EPS_SNAP).unwrap();
        let fitted = build_fitted_mesh(&mesh, &cls);
        for (t, _) in cls.interface_elements() {
            assert_eq!(fitted.parent_range[t].len(), 3);
            for s in fitted.parent_range[t].clone() {
                let c = sub_centroid(&fitted, s);
                assert_eq!(Side::of(c.x - 0.3), fitted.sub_triangles[s].side);
            }
        }
        assert_eq!(fitted.angle_fallbacks, 0);
    }

    #[test]
    fn cut_near_vertex_conserves_area() {
        // Cut passing very close to vertex (0.5, 0) of an n = 4 mesh.
        let mesh = UniformMesh::new(4).unwrap();
        let ls = line(0.5 - 1e-6);
        let cls = classify_elements(&mesh, &ls, DEFAULT_EPS_SNAP).unwrap();
        let fitted = build_fitted_mesh(&mesh, &cls);
        let h = mesh.h();
        for (t, _) in cls.interface_elements() {
            let area: f64 = fitted.parent_range[t].clone().map(|s| signed_area(&fitted.points(s))).sum();
            assert!((area - 0.5 * h * h).abs() < 1e-15);
        }
    }

    #[test]
    fn vertex_cut_through_snapped_vertex() {
        // Interface through the mesh vertex at the origin, crossing diagonals.
        let mesh = UniformMesh::new(4).unwrap();
        let ls = LevelSet::new(|p| p.x + 0.5 * p.y);
        let cls = classify_elements(&mesh, &ls, DEFAULT_EPS_SNAP).unwrap();
        let vertex_cuts = cls
            .interface_elements()
            .filter(|(_, c)| matches!(c.topology, CutTopology::Vertex { .. }))
            .count();
        assert!(vertex_cuts > 0);
        let fitted = build_fitted_mesh(&mesh, &cls);
        check_fitted(&mesh, &cls, &fitted, &ls);
        let origin = 2 * 5 + 2;
        assert!(fitted.gamma_nodes.contains(&origin));
    }
}

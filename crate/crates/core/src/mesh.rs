//! Uniform right-triangle mesh of the square `[-1, 1]²`.
//!
//! Vertices are numbered row by row, `v(i, j) = j (n + 1) + i` with
//! `x = -1 + i h`, `y = -1 + j h` and `h = 2 / n`. Subsquares are numbered
//! row-major as `k = j n + i`; subsquare `k` owns triangle `2k` (the lower
//! triangle `v00, v10, v11`) and triangle `2k + 1` (the upper triangle
//! `v00, v11, v01`). Every subsquare is split along its lower-left to
//! upper-right diagonal and all triangles are counterclockwise.
//!
//! Edges are numbered in order of first appearance while walking the
//! triangles in index order and, within a triangle, its local edges
//! `0, 1, 2` (local edge `k` is the one opposite local vertex `k`).

use std::collections::HashMap;

use nalgebra::{Point2, Vector2};

use crate::error::{Error, Result};

/// An edge of the mesh with its one or two incident triangles.
#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    /// Endpoint vertex indices, smaller index first.
    pub vertices: [usize; 2],
    /// Incident triangles, lower index first. Boundary edges have one.
    pub triangles: [Option<usize>; 2],
    /// Unit normal. For interior edges it points from `triangles[0]` into
    /// `triangles[1]`; for boundary edges it is the outward normal.
    pub normal: Vector2<f64>,
}

impl Edge {
    pub fn is_boundary(&self) -> bool {
        self.triangles[1].is_none()
    }

    pub fn other_triangle(&self, t: usize) -> Option<usize> {
        match self.triangles {
            [Some(a), Some(b)] if a == t => Some(b),
            [Some(a), Some(b)] if b == t => Some(a),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct UniformMesh {
    n: usize,
    h: f64,
    vertices: Vec<Point2<f64>>,
    triangles: Vec<[usize; 3]>,
    edges: Vec<Edge>,
    triangle_edges: Vec<[usize; 3]>,
    boundary_vertices: Vec<usize>,
    is_boundary: Vec<bool>,
}

impl UniformMesh {
    /// Builds the `n × n` mesh; `n = 0` is rejected.
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("mesh subdivision count must be positive".into()));
        }
        let h = 2.0 / n as f64;
        let np = n + 1;
        let mut vertices = Vec::with_capacity(np * np);
        for j in 0..np {
            for i in 0..np {
                // Exact endpoints at i = n / j = n.
                let x = if i == n { 1.0 } else { -1.0 + i as f64 * h };
                let y = if j == n { 1.0 } else { -1.0 + j as f64 * h };
                vertices.push(Point2::new(x, y));
            }
        }

        let mut triangles = Vec::with_capacity(2 * n * n);
        for j in 0..n {
            for i in 0..n {
                let v00 = j * np + i;
                let v10 = v00 + 1;
                let v01 = v00 + np;
                let v11 = v01 + 1;
                triangles.push([v00, v10, v11]);
                triangles.push([v00, v11, v01]);
            }
        }

        let mut edge_index: HashMap<(usize, usize), usize> = HashMap::with_capacity(3 * n * n + 2 * n);
        let mut edges: Vec<Edge> = Vec::with_capacity(3 * n * n + 2 * n);
        let mut triangle_edges = Vec::with_capacity(triangles.len());
        for (t, tri) in triangles.iter().enumerate() {
            let mut local = [0; 3];
            for (k, slot) in local.iter_mut().enumerate() {
                let a = tri[(k + 1) % 3];
                let b = tri[(k + 2) % 3];
                let key = (a.min(b), a.max(b));
                let e = *edge_index.entry(key).or_insert_with(|| {
                    edges.push(Edge {
                        vertices: [key.0, key.1],
                        triangles: [None, None],
                        normal: Vector2::zeros(),
                    });
                    edges.len() - 1
                });
                let edge = &mut edges[e];
                if edge.triangles[0].is_none() {
                    edge.triangles[0] = Some(t);
                } else {
                    edge.triangles[1] = Some(t);
                }
                *slot = e;
            }
            triangle_edges.push(local);
        }

        for edge in &mut edges {
            let a = vertices[edge.vertices[0]];
            let b = vertices[edge.vertices[1]];
            let d = (b - a).normalize();
            let mut normal = Vector2::new(d.y, -d.x);
            // Orient away from the first incident triangle.
            let t0 = edge.triangles[0].expect("every edge has a triangle");
            let c = centroid(&triangles[t0].map(|v| vertices[v]));
            if normal.dot(&(a - c)) < 0.0 {
                normal = -normal;
            }
            edge.normal = normal;
        }

        let mut is_boundary = vec![false; vertices.len()];
        let mut boundary_vertices = Vec::new();
        for j in 0..np {
            for i in 0..np {
                if i == 0 || j == 0 || i == n || j == n {
                    let v = j * np + i;
                    is_boundary[v] = true;
                    boundary_vertices.push(v);
                }
            }
        }

        Ok(Self {
            n,
            h,
            vertices,
            triangles,
            edges,
            triangle_edges,
            boundary_vertices,
            is_boundary,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Leg length of the right triangles, `2 / n`.
    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn vertices(&self) -> &[Point2<f64>] {
        &self.vertices
    }

    pub fn vertex(&self, v: usize) -> Point2<f64> {
        self.vertices[v]
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn triangle(&self, t: usize) -> [usize; 3] {
        self.triangles[t]
    }

    pub fn triangle_points(&self, t: usize) -> [Point2<f64>; 3] {
        self.triangles[t].map(|v| self.vertices[v])
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, e: usize) -> &Edge {
        &self.edges[e]
    }

    /// Edge indices of triangle `t`; entry `k` is opposite local vertex `k`.
    pub fn triangle_edges(&self, t: usize) -> [usize; 3] {
        self.triangle_edges[t]
    }

    pub fn boundary_vertices(&self) -> &[usize] {
        &self.boundary_vertices
    }

    pub fn is_boundary_vertex(&self, v: usize) -> bool {
        self.is_boundary[v]
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// The edge shared by `t1` and `t2`, if they are distinct neighbours.
    pub fn edge_of(&self, t1: usize, t2: usize) -> Option<usize> {
        if t1 == t2 || t1 >= self.triangles.len() || t2 >= self.triangles.len() {
            return None;
        }
        self.triangle_edges[t1]
            .into_iter()
            .find(|&e| self.edges[e].other_triangle(t1) == Some(t2))
    }
}

pub fn centroid(p: &[Point2<f64>; 3]) -> Point2<f64> {
    Point2::from((p[0].coords + p[1].coords + p[2].coords) / 3.0)
}

/// Signed area, positive for counterclockwise vertices.
pub fn signed_area(p: &[Point2<f64>; 3]) -> f64 {
    0.5 * cross(p[1] - p[0], p[2] - p[0])
}

pub fn cross(a: Vector2<f64>, b: Vector2<f64>) -> f64 {
    a.x * b.y - a.y * b.x
}

/// Barycentric coordinates of `z` with respect to the triangle `p`.
pub fn barycentric(p: &[Point2<f64>; 3], z: Point2<f64>) -> [f64; 3] {
    let area = signed_area(p);
    let l0 = signed_area(&[z, p[1], p[2]]) / area;
    let l1 = signed_area(&[p[0], z, p[2]]) / area;
    [l0, l1, 1.0 - l0 - l1]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_counts() {
        let m = UniformMesh::new(1).unwrap();
        assert_eq!((m.num_vertices(), m.num_triangles(), m.num_edges()), (4, 2, 5));
        let m = UniformMesh::new(2).unwrap();
        assert_eq!((m.num_vertices(), m.num_triangles(), m.num_edges()), (9, 8, 16));
        let m = UniformMesh::new(32).unwrap();
        assert_eq!((m.num_vertices(), m.num_triangles()), (1089, 2048));
    }

    #[test]
    fn zero_subdivisions_rejected() {
        assert!(matches!(UniformMesh::new(0), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn closed_forms_and_areas() {
        for n in 1..=64 {
            let m = UniformMesh::new(n).unwrap();
            assert_eq!(m.num_vertices(), (n + 1) * (n + 1));
            assert_eq!(m.num_triangles(), 2 * n * n);
            assert_eq!(m.num_edges(), 3 * n * n + 2 * n);
            let (v, e, t) = (m.num_vertices() as i64, m.num_edges() as i64, m.num_triangles() as i64);
            assert_eq!(v - e + t, 1);
            let h = m.h();
            let mut total = 0.0;
            for t in 0..m.num_triangles() {
                let a = signed_area(&m.triangle_points(t));
                assert!((a - 0.5 * h * h).abs() < 1e-14, "n={n} t={t} area={a}");
                total += a;
            }
            assert!((total - 4.0).abs() < 1e-12);
            assert_eq!(m.boundary_vertices().len(), 4 * n);
        }
    }

    #[test]
    fn edge_incidence() {
        let m = UniformMesh::new(5).unwrap();
        let mut boundary = 0;
        for edge in m.edges() {
            if edge.is_boundary() {
                boundary += 1;
                let [a, b] = edge.vertices;
                assert!(m.is_boundary_vertex(a) && m.is_boundary_vertex(b));
                continue;
            }
            for t in edge.triangles.iter().flatten() {
                let tri = m.triangle(*t);
                assert!(edge.vertices.iter().all(|v| tri.contains(v)));
            }
            let [t1, t2] = [edge.triangles[0].unwrap(), edge.triangles[1].unwrap()];
            assert!(t1 < t2);
            let c1 = centroid(&m.triangle_points(t1));
            let c2 = centroid(&m.triangle_points(t2));
            assert!(edge.normal.dot(&(c2 - c1)) > 0.0);
            assert!((edge.normal.norm() - 1.0).abs() < 1e-14);
        }
        assert_eq!(boundary, 4 * 5);
    }

    #[test]
    fn shared_edges() {
        let m = UniformMesh::new(3).unwrap();
        let diag = m.edge_of(0, 1).expect("subsquare diagonal");
        let e = m.edge(diag);
        assert_eq!(e.vertices, [0, 5]);
        assert_eq!(m.edge_of(1, 0), Some(diag));
        assert_eq!(m.edge_of(0, 10), None);
        assert_eq!(m.edge_of(4, 4), None);
    }
}

//! Indexed triangle surfaces.
//!
//! A [`TriMesh`] is a closed, consistently oriented 2-manifold stored as a
//! vertex array and a face array. Building one validates the topology and
//! derives the flat adjacency tables the solvers need: the edge table
//! (edge to its two faces) and the counter-clockwise one-ring of every vertex.

use std::collections::HashMap;

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};

pub mod io;
pub mod shapes;
mod torus;

pub use torus::{generate_torus, TorusMeshParams};

pub type Vec3 = Vector3<f64>;

/// Faces with `area < DEGENERACY_RATIO * longest_edge^2` are rejected.
pub const DEGENERACY_RATIO: f64 = 1e-14;

/// One undirected edge and its two incident faces.
///
/// `vertices[0] < vertices[1]`; `faces[0]` traverses the edge as
/// `vertices[0] -> vertices[1]`, `faces[1]` in the opposite direction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Edge {
    pub vertices: [usize; 2],
    pub faces: [usize; 2],
}

#[derive(Clone, Debug)]
pub struct TriMesh {
    vertices: Vec<Vec3>,
    faces: Vec<[usize; 3]>,
    edges: Vec<Edge>,
    /// `face_edges[f][k]` is the edge between corners `k` and `k + 1`.
    face_edges: Vec<[usize; 3]>,
    normals: Vec<Vec3>,
    areas: Vec<f64>,
    /// CCW neighbour cycle of every vertex.
    rings: Vec<Vec<usize>>,
    /// `ring_faces[v][k]` is the face `(v, rings[v][k], rings[v][k + 1])`.
    ring_faces: Vec<Vec<usize>>,
}

/// Per-face constant geometry.
#[derive(Clone, Copy, Debug)]
pub struct FaceFrame {
    pub normal: Vec3,
    pub area: f64,
    /// Tangent projector `I - n n^T`.
    pub projector: Matrix3<f64>,
}

/// Geometry attached to an edge: length and the two exterior co-normals.
#[derive(Clone, Copy, Debug)]
pub struct EdgeAdjacency {
    pub vertices: [usize; 2],
    pub faces: [usize; 2],
    pub length: f64,
    /// Unit vectors orthogonal to the edge, in the plane of `faces[k]`,
    /// pointing away from that face.
    pub conormals: [Vec3; 2],
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MeshSizeMode {
    /// `h = 1 / sqrt(N_v)`.
    VertexCount,
    /// `h = sum_K sqrt(A_K) / N_e`.
    MeanRootArea,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeshSize {
    pub mode: MeshSizeMode,
    pub value: f64,
}

impl TriMesh {
    /// Validates the input and builds the adjacency tables.
    pub fn new(vertices: Vec<Vec3>, faces: Vec<[usize; 3]>) -> Result<Self> {
        if vertices.is_empty() || faces.is_empty() {
            return Err(Error::EmptyMesh);
        }
        let nv = vertices.len();
        for (f, face) in faces.iter().enumerate() {
            for &index in face {
                if index >= nv {
                    return Err(Error::IndexOutOfRange {
                        face: f,
                        index,
                        count: nv,
                    });
                }
            }
            if face[0] == face[1] || face[1] == face[2] || face[0] == face[2] {
                return Err(Error::DegenerateFace(f));
            }
        }

        // Undirected edge -> list of (face, local edge, traversed low->high).
        let mut lookup: HashMap<(usize, usize), usize> = HashMap::with_capacity(faces.len() * 2);
        let mut incidences: Vec<Vec<(usize, usize, bool)>> = Vec::with_capacity(faces.len() * 3 / 2);
        let mut order: Vec<(usize, usize)> = Vec::with_capacity(faces.len() * 3 / 2);
        for (f, face) in faces.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (face[k], face[(k + 1) % 3]);
                let key = (a.min(b), a.max(b));
                let slot = *lookup.entry(key).or_insert_with(|| {
                    incidences.push(Vec::with_capacity(2));
                    order.push(key);
                    incidences.len() - 1
                });
                incidences[slot].push((f, k, a < b));
            }
        }

        let mut edges = Vec::with_capacity(order.len());
        let mut face_edges = vec![[usize::MAX; 3]; faces.len()];
        for (slot, (key, inc)) in order.iter().zip(&incidences).enumerate() {
            if inc.len() != 2 {
                return Err(Error::NonManifoldEdge(key.0, key.1, inc.len()));
            }
            if inc[0].2 == inc[1].2 {
                return Err(Error::InconsistentOrientation(key.0, key.1));
            }
            let (fwd, bwd) = if inc[0].2 { (inc[0], inc[1]) } else { (inc[1], inc[0]) };
            edges.push(Edge {
                vertices: [key.0, key.1],
                faces: [fwd.0, bwd.0],
            });
            face_edges[fwd.0][fwd.1] = slot;
            face_edges[bwd.0][bwd.1] = slot;
        }

        let mut normals = Vec::with_capacity(faces.len());
        let mut areas = Vec::with_capacity(faces.len());
        for (f, face) in faces.iter().enumerate() {
            let [p0, p1, p2] = face.map(|i| vertices[i]);
            let cross = (p1 - p0).cross(&(p2 - p0));
            let area = 0.5 * cross.norm();
            let longest = (p1 - p0)
                .norm_squared()
                .max((p2 - p1).norm_squared())
                .max((p0 - p2).norm_squared());
            if !(area >= DEGENERACY_RATIO * longest) || area == 0.0 {
                return Err(Error::DegenerateFace(f));
            }
            normals.push(cross / (2.0 * area));
            areas.push(area);
        }

        let (rings, ring_faces) = build_rings(nv, &faces)?;

        Ok(Self {
            vertices,
            faces,
            edges,
            face_edges,
            normals,
            areas,
            rings,
            ring_faces,
        })
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn face_edges(&self) -> &[[usize; 3]] {
        &self.face_edges
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Unit face normals (right-hand rule on the stored corner order).
    pub fn face_normals(&self) -> &[Vec3] {
        &self.normals
    }

    pub fn face_areas(&self) -> &[f64] {
        &self.areas
    }

    pub fn total_area(&self) -> f64 {
        self.areas.iter().sum()
    }

    pub fn corners(&self, face: usize) -> [Vec3; 3] {
        self.faces[face].map(|i| self.vertices[i])
    }

    /// Neighbours of `v` in counter-clockwise order around the outward normal.
    pub fn ring(&self, v: usize) -> &[usize] {
        &self.rings[v]
    }

    /// Faces of the one-ring, `ring_faces(v)[k] = (v, ring[k], ring[k+1])`.
    pub fn ring_faces(&self, v: usize) -> &[usize] {
        &self.ring_faces[v]
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.vertices.len() as i64 - self.edges.len() as i64 + self.faces.len() as i64
    }

    /// Enclosed volume by the divergence theorem; positive for outward faces.
    pub fn signed_volume(&self) -> f64 {
        self.faces
            .iter()
            .map(|f| {
                let [a, b, c] = f.map(|i| self.vertices[i]);
                a.dot(&b.cross(&c)) / 6.0
            })
            .sum()
    }

    /// Smallest interior angle over all faces, in radians.
    pub fn min_angle(&self) -> f64 {
        (0..self.faces.len())
            .flat_map(|f| triangle_angles(&self.corners(f)))
            .fold(f64::INFINITY, f64::min)
    }

    /// Rebuilds the mesh with the same connectivity and moved vertices.
    pub fn with_vertices(&self, vertices: Vec<Vec3>) -> Result<Self> {
        Self::new(vertices, self.faces.clone())
    }

    /// Applies `map` to every vertex position.
    pub fn transformed(&self, map: impl Fn(&Vec3) -> Vec3) -> Result<Self> {
        self.with_vertices(self.vertices.iter().map(map).collect())
    }

    /// Mean length of the edges incident to `v`.
    pub fn local_edge_length(&self, v: usize) -> f64 {
        let ring = &self.rings[v];
        ring.iter()
            .map(|&j| (self.vertices[j] - self.vertices[v]).norm())
            .sum::<f64>()
            / ring.len() as f64
    }
}

fn build_rings(nv: usize, faces: &[[usize; 3]]) -> Result<(Vec<Vec<usize>>, Vec<Vec<usize>>)> {
    let mut incident: Vec<Vec<usize>> = vec![Vec::new(); nv];
    for (f, face) in faces.iter().enumerate() {
        for &v in face {
            incident[v].push(f);
        }
    }
    let mut rings = Vec::with_capacity(nv);
    let mut ring_faces = Vec::with_capacity(nv);
    for (v, inc) in incident.iter().enumerate() {
        if inc.is_empty() {
            return Err(Error::NonManifoldVertex(v));
        }
        // Wedges (v, a, b) keyed by a; each a appears once in a closed fan.
        let wedge = |f: usize| {
            let face = faces[f];
            let k = face.iter().position(|&x| x == v).unwrap();
            (face[(k + 1) % 3], face[(k + 2) % 3])
        };
        let next: HashMap<usize, (usize, usize)> = inc
            .iter()
            .map(|&f| {
                let (a, b) = wedge(f);
                (a, (b, f))
            })
            .collect();
        let (start, _) = wedge(inc[0]);
        let mut ring = Vec::with_capacity(inc.len());
        let mut rfaces = Vec::with_capacity(inc.len());
        let mut cur = start;
        loop {
            let Some(&(b, f)) = next.get(&cur) else {
                return Err(Error::NonManifoldVertex(v));
            };
            ring.push(cur);
            rfaces.push(f);
            cur = b;
            if cur == start || ring.len() > inc.len() {
                break;
            }
        }
        if ring.len() != inc.len() || cur != start {
            return Err(Error::NonManifoldVertex(v));
        }
        rings.push(ring);
        ring_faces.push(rfaces);
    }
    Ok((rings, ring_faces))
}

/// The three interior angles of a triangle, at corners 0, 1, 2.
pub fn triangle_angles(p: &[Vec3; 3]) -> [f64; 3] {
    let angle = |a: Vec3, b: Vec3| a.angle(&b);
    [
        angle(p[1] - p[0], p[2] - p[0]),
        angle(p[2] - p[1], p[0] - p[1]),
        angle(p[0] - p[2], p[1] - p[2]),
    ]
}

/// Per-face normal, area, and tangent projector.
pub fn face_frames(mesh: &TriMesh) -> Vec<FaceFrame> {
    mesh.normals
        .iter()
        .zip(&mesh.areas)
        .map(|(n, &area)| FaceFrame {
            normal: *n,
            area,
            projector: Matrix3::identity() - n * n.transpose(),
        })
        .collect()
}

/// Edge lengths and exterior co-normals, one entry per undirected edge.
pub fn edge_adjacency(mesh: &TriMesh) -> Vec<EdgeAdjacency> {
    mesh.edges
        .iter()
        .map(|e| {
            let [i, j] = e.vertices;
            let dir = mesh.vertices[j] - mesh.vertices[i];
            let length = dir.norm();
            // faces[0] walks i -> j, so its exterior side is dir x n.
            let t0 = dir.cross(&mesh.normals[e.faces[0]]) / length;
            let t1 = (-dir).cross(&mesh.normals[e.faces[1]]) / length;
            EdgeAdjacency {
                vertices: e.vertices,
                faces: e.faces,
                length,
                conormals: [t0.normalize(), t1.normalize()],
            }
        })
        .collect()
}

pub fn mesh_size(mesh: &TriMesh, mode: MeshSizeMode) -> MeshSize {
    let value = match mode {
        MeshSizeMode::VertexCount => 1.0 / (mesh.num_vertices() as f64).sqrt(),
        MeshSizeMode::MeanRootArea => mesh.areas.iter().map(|a| a.sqrt()).sum::<f64>() / mesh.num_faces() as f64,
    };
    MeshSize { mode, value }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    pub(crate) fn tetrahedron() -> TriMesh {
        shapes::tetrahedron()
    }

    #[test]
    fn tetrahedron_and_octahedron_topology() {
        let tet = tetrahedron();
        assert_eq!(tet.num_edges(), 6);
        assert_eq!(tet.euler_characteristic(), 2);
        assert!(tet.signed_volume() > 0.0);
        let oct = shapes::octahedron();
        assert_eq!(oct.num_edges(), 12);
        assert_eq!(oct.euler_characteristic(), 2);
    }

    #[test]
    fn flipped_face_is_rejected() {
        let tet = tetrahedron();
        let mut faces = tet.faces().to_vec();
        faces[2].swap(1, 2);
        let err = TriMesh::new(tet.vertices().to_vec(), faces).unwrap_err();
        assert!(matches!(err, Error::InconsistentOrientation(..)), "{err}");
    }

    #[test]
    fn open_and_out_of_range_meshes_are_rejected() {
        let tet = tetrahedron();
        let faces = tet.faces()[..3].to_vec();
        let err = TriMesh::new(tet.vertices().to_vec(), faces).unwrap_err();
        assert!(matches!(err, Error::NonManifoldEdge(_, _, 1)));

        let mut faces = tet.faces().to_vec();
        faces[0][0] = 9;
        let err = TriMesh::new(tet.vertices().to_vec(), faces).unwrap_err();
        assert!(matches!(err, Error::IndexOutOfRange { index: 9, .. }));

        assert!(matches!(TriMesh::new(vec![], vec![]), Err(Error::EmptyMesh)));
    }

    #[test]
    fn collapsed_face_is_degenerate() {
        let tet = tetrahedron();
        let mut v = tet.vertices().to_vec();
        // Put vertex 3 on the segment 0-1: faces touching 0, 1, 3 collapse.
        v[3] = 0.5 * (v[0] + v[1]);
        let err = TriMesh::new(v, tet.faces().to_vec()).unwrap_err();
        assert!(matches!(err, Error::DegenerateFace(_)));
    }

    #[test]
    fn face_frame_of_axis_aligned_triangle() {
        let p = [Vec3::zeros(), Vec3::x(), Vec3::y()];
        let n = (p[1] - p[0]).cross(&(p[2] - p[0]));
        assert_relative_eq!(n.normalize(), Vec3::z());
        let swapped = (p[2] - p[0]).cross(&(p[1] - p[0]));
        assert_relative_eq!(swapped.normalize(), -Vec3::z());

        let oct = shapes::octahedron();
        for fr in face_frames(&oct) {
            assert_relative_eq!(fr.normal.norm(), 1.0, epsilon = 1e-14);
            let p = fr.projector;
            assert!((p * p - p).norm() < 1e-12);
            assert!((p - p.transpose()).norm() == 0.0);
            assert!((p * fr.normal).norm() < 1e-14);
        }
    }

    #[test]
    fn icosahedron_normals_point_outward() {
        let ico = shapes::icosphere(1.0, 0);
        for f in 0..ico.num_faces() {
            let c = ico.corners(f).iter().sum::<Vec3>() / 3.0;
            assert!(ico.face_normals()[f].dot(&c) > 0.0);
        }
    }

    #[test]
    fn conormals_on_flat_and_creased_edges() {
        let flat = shapes::flat_square(1, 1).unwrap();
        // Closed double-sided patch: interior diagonal edges are coplanar.
        let adj = edge_adjacency(&flat);
        let diag = adj
            .iter()
            .find(|e| {
                let d = flat.vertices()[e.vertices[1]] - flat.vertices()[e.vertices[0]];
                d.x.abs() > 0.0
                    && d.y.abs() > 0.0
                    && d.z == 0.0
                    && flat.face_normals()[e.faces[0]].z == flat.face_normals()[e.faces[1]].z
            })
            .expect("diagonal edge");
        assert!((diag.conormals[0] + diag.conormals[1]).norm() < 1e-12);

        let cube = shapes::cube();
        let mut crease = 0;
        for e in edge_adjacency(&cube) {
            let [n0, n1] = e.faces.map(|f| cube.face_normals()[f]);
            if n0.dot(&n1).abs() < 1e-12 {
                crease += 1;
                assert!(e.conormals[0].dot(&e.conormals[1]).abs() < 1e-12);
            }
        }
        assert_eq!(crease, 12);
    }

    #[test]
    fn conormal_exteriority_and_face_counts() {
        let tet = tetrahedron();
        let adj = edge_adjacency(&tet);
        assert_eq!(adj.len(), 6);
        let mut count = vec![0; tet.num_faces()];
        for e in &adj {
            let mid = 0.5 * (tet.vertices()[e.vertices[0]] + tet.vertices()[e.vertices[1]]);
            let dir = tet.vertices()[e.vertices[1]] - tet.vertices()[e.vertices[0]];
            for k in 0..2 {
                let f = e.faces[k];
                count[f] += 1;
                let opp = tet.faces()[f]
                    .iter()
                    .copied()
                    .find(|v| !e.vertices.contains(v))
                    .unwrap();
                let t = e.conormals[k];
                assert_relative_eq!(t.norm(), 1.0, epsilon = 1e-14);
                assert!(t.dot(&dir).abs() < 1e-12);
                assert!(t.dot(&tet.face_normals()[f]).abs() < 1e-12);
                assert!(t.dot(&(tet.vertices()[opp] - mid)) < 0.0);
            }
        }
        assert!(count.iter().all(|&c| c == 3));
    }

    #[test]
    fn mesh_size_formulas() {
        // 400 vertices: the value only depends on the count.
        let torus = generate_torus(&TorusMeshParams::new(1.0, 0.5, 1.0, 20, 20)).unwrap();
        assert_eq!(torus.num_vertices(), 400);
        assert_relative_eq!(mesh_size(&torus, MeshSizeMode::VertexCount).value, 0.05);

        // Scale a tetrahedron so every face has unit area.
        let tet = tetrahedron();
        let s = 1.0 / tet.face_areas()[0].sqrt();
        let tet = tet.transformed(|p| p * s).unwrap();
        assert_relative_eq!(mesh_size(&tet, MeshSizeMode::MeanRootArea).value, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn rings_are_ccw_cycles() {
        let ico = shapes::icosphere(1.0, 1);
        for v in 0..ico.num_vertices() {
            let ring = ico.ring(v);
            let faces = ico.ring_faces(v);
            assert_eq!(ring.len(), faces.len());
            for k in 0..ring.len() {
                let f = ico.faces()[faces[k]];
                let pos = f.iter().position(|&x| x == v).unwrap();
                assert_eq!(f[(pos + 1) % 3], ring[k]);
                assert_eq!(f[(pos + 2) % 3], ring[(k + 1) % ring.len()]);
            }
        }
    }
}

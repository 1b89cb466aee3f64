//! Piecewise linear finite element operators on a triangulated surface.
//!
//! Vector unknowns (curvature vector, normal) are solved one Cartesian
//! component at a time with the scalar operators below. The block operator
//! built from the vector basis is `op (x) I_3`, so this is the same system.
//!
//! * `M` mass, `A_K / 12 [[2,1,1],[1,2,1],[1,1,2]]` per face.
//! * `S` stiffness, `A_K grad phi_i . grad phi_j` with tangential gradients.
//! * `J` edge-jump stabilisation,
//!   `sum_E |E| * |E| * j j^T` where `j_i` is the jump of the co-normal
//!   derivative of `phi_i` across `E`.
//!
//! The curvature vector solves `(M + gamma_H J) H = S x`, the recovered
//! normal `(M + gamma_n J) n = b` with `b_i = sum_{K ni i} A_K n_K / 3`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mesh::{edge_adjacency, TriMesh, Vec3};

mod sparse;

pub use sparse::{
    conjugate_gradient, CgSettings, CgSolution, IncompleteCholesky, Preconditioner, SparseSpd,
    DEFAULT_ITERATION_FACTOR, MIN_DEFAULT_ITERATIONS,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FieldKind {
    CurvatureVector,
    Normal,
    Other,
}

/// Per-vertex vectors of a piecewise linear field.
#[derive(Clone, Debug, PartialEq)]
pub struct NodalField3 {
    pub kind: FieldKind,
    pub values: Vec<Vec3>,
}

impl NodalField3 {
    pub fn new(kind: FieldKind, values: Vec<Vec3>) -> Self {
        Self { kind, values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn component(&self, c: usize) -> Vec<f64> {
        self.values.iter().map(|v| v[c]).collect()
    }

    fn from_components(kind: FieldKind, c: [Vec<f64>; 3]) -> Self {
        let values = (0..c[0].len()).map(|i| Vec3::new(c[0][i], c[1][i], c[2][i])).collect();
        Self { kind, values }
    }

    /// Normalises every nodal vector; fails if one has norm below `1e-14`.
    pub fn normalized(mut self) -> Result<Self> {
        for (i, v) in self.values.iter_mut().enumerate() {
            let n = v.norm();
            if !(n >= 1e-14) {
                return Err(Error::ZeroNodalVector(i));
            }
            *v /= n;
        }
        Ok(self)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StabilizationParams {
    pub gamma_h: f64,
    pub gamma_n: f64,
    pub cg: CgSettings,
}

impl Default for StabilizationParams {
    fn default() -> Self {
        Self {
            gamma_h: 0.05,
            gamma_n: 0.05,
            cg: CgSettings::default(),
        }
    }
}

impl StabilizationParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma_h >= 0.0 && self.gamma_n >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "stabilisation factors must be non-negative (gamma_H={}, gamma_n={})",
                self.gamma_h, self.gamma_n
            )));
        }
        if !(self.cg.tol > 0.0 && self.cg.tol < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "cg tolerance {} not in (0, 1)",
                self.cg.tol
            )));
        }
        if self.cg.max_iterations == Some(0) {
            return Err(Error::InvalidParameter("cg_maxit must be at least 1".into()));
        }
        Ok(())
    }
}

/// Tangential gradients of the three barycentric hat functions on each face.
pub fn basis_gradients(mesh: &TriMesh) -> Vec<[Vec3; 3]> {
    (0..mesh.num_faces())
        .into_par_iter()
        .map(|f| {
            let p = mesh.corners(f);
            let n = mesh.face_normals()[f];
            let two_a = 2.0 * mesh.face_areas()[f];
            [0, 1, 2].map(|k| n.cross(&(p[(k + 2) % 3] - p[(k + 1) % 3])) / two_a)
        })
        .collect()
}

fn push_symmetric(t: &mut Vec<(usize, usize, f64)>, idx: &[usize], local: &[f64], size: usize) {
    for a in 0..size {
        t.push((idx[a], idx[a], local[a * size + a]));
        for b in (a + 1)..size {
            let v = local[a * size + b];
            t.push((idx[a], idx[b], v));
            t.push((idx[b], idx[a], v));
        }
    }
}

pub fn assemble_mass(mesh: &TriMesh) -> SparseSpd {
    let mut t = Vec::with_capacity(9 * mesh.num_faces());
    for (face, &area) in mesh.faces().iter().zip(mesh.face_areas()) {
        let d = area / 6.0;
        let o = area / 12.0;
        push_symmetric(&mut t, face, &[d, o, o, o, d, o, o, o, d], 3);
    }
    SparseSpd::from_triplets(mesh.num_vertices(), t)
}

pub fn assemble_stiffness(mesh: &TriMesh) -> SparseSpd {
    let grads = basis_gradients(mesh);
    let locals: Vec<[f64; 9]> = grads
        .par_iter()
        .zip(mesh.face_areas().par_iter())
        .map(|(g, &area)| {
            let mut k = [0.0; 9];
            for a in 0..3 {
                for b in 0..3 {
                    k[a * 3 + b] = area * g[a].dot(&g[b]);
                }
            }
            k
        })
        .collect();
    let mut t = Vec::with_capacity(9 * mesh.num_faces());
    for (face, k) in mesh.faces().iter().zip(&locals) {
        push_symmetric(&mut t, face, k, 3);
    }
    SparseSpd::from_triplets(mesh.num_vertices(), t)
}

/// Edge patch vertex list and jump row for one edge.
pub fn edge_jumps(mesh: &TriMesh, grads: &[[Vec3; 3]]) -> Vec<([usize; 4], [f64; 4], f64)> {
    edge_adjacency(mesh)
        .par_iter()
        .map(|e| {
            let [i, j] = e.vertices;
            let opposite = |f: usize| {
                mesh.faces()[f]
                    .iter()
                    .copied()
                    .find(|&v| v != i && v != j)
                    .expect("triangle has a third vertex")
            };
            let patch = [i, j, opposite(e.faces[0]), opposite(e.faces[1])];
            let mut jump = [0.0; 4];
            for side in 0..2 {
                let f = e.faces[side];
                let t = e.conormals[side];
                for (corner, &v) in mesh.faces()[f].iter().enumerate() {
                    let slot = patch.iter().position(|&p| p == v).unwrap();
                    jump[slot] += t.dot(&grads[f][corner]);
                }
            }
            (patch, jump, e.length)
        })
        .collect()
}

pub fn assemble_stabilization(mesh: &TriMesh) -> SparseSpd {
    let grads = basis_gradients(mesh);
    let jumps = edge_jumps(mesh, &grads);
    let mut t = Vec::with_capacity(16 * jumps.len());
    for (patch, jump, len) in &jumps {
        // h_E * integral over E of the (constant) jump product.
        let w = len * len;
        let mut local = [0.0; 16];
        for a in 0..4 {
            for b in 0..4 {
                local[a * 4 + b] = w * jump[a] * jump[b];
            }
        }
        push_symmetric(&mut t, patch, &local, 4);
    }
    SparseSpd::from_triplets(mesh.num_vertices(), t)
}

/// Right-hand side of the normal projection, `b_i = sum_K A_K n_K / 3`.
pub fn normal_load(mesh: &TriMesh) -> Vec<Vec3> {
    let mut b = vec![Vec3::zeros(); mesh.num_vertices()];
    for ((face, n), &area) in mesh.faces().iter().zip(mesh.face_normals()).zip(mesh.face_areas()) {
        for &v in face {
            b[v] += n * (area / 3.0);
        }
    }
    b
}

/// Assembled `M`, `S`, `J` for one mesh; `gamma` only enters at solve time.
#[derive(Clone, Debug)]
pub struct SurfaceOperators {
    pub mass: SparseSpd,
    pub stiffness: SparseSpd,
    pub stabilization: SparseSpd,
    /// `S x`, one column per coordinate.
    curvature_load: [Vec<f64>; 3],
    normal_load: [Vec<f64>; 3],
}

impl SurfaceOperators {
    pub fn assemble(mesh: &TriMesh) -> Self {
        let mass = assemble_mass(mesh);
        let stiffness = assemble_stiffness(mesh);
        let stabilization = assemble_stabilization(mesh);
        let curvature_load = [0, 1, 2].map(|c| {
            let x: Vec<f64> = mesh.vertices().iter().map(|p| p[c]).collect();
            stiffness.mul_vec(&x)
        });
        let b = normal_load(mesh);
        let normal_load = [0, 1, 2].map(|c| b.iter().map(|v| v[c]).collect());
        Self {
            mass,
            stiffness,
            stabilization,
            curvature_load,
            normal_load,
        }
    }

    /// `M + gamma J`.
    pub fn system(&self, gamma: f64) -> SparseSpd {
        if gamma == 0.0 {
            self.mass.clone()
        } else {
            self.mass.linear_combination(1.0, &self.stabilization, gamma)
        }
    }

    fn solve3(&self, gamma: f64, rhs: &[Vec<f64>; 3], cg: &CgSettings, kind: FieldKind) -> Result<NodalField3> {
        if !(gamma >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "stabilisation factor {gamma} is negative"
            )));
        }
        let a = self.system(gamma);
        let cols: Vec<Result<CgSolution>> = rhs.par_iter().map(|b| conjugate_gradient(&a, b, cg)).collect();
        let mut out: [Vec<f64>; 3] = Default::default();
        for (slot, sol) in out.iter_mut().zip(cols) {
            *slot = sol?.x;
        }
        Ok(NodalField3::from_components(kind, out))
    }

    /// Stabilised discrete mean curvature vector (magnitude `k1 + k2`).
    pub fn curvature_vector(&self, gamma_h: f64, cg: &CgSettings) -> Result<NodalField3> {
        self.solve3(gamma_h, &self.curvature_load, cg, FieldKind::CurvatureVector)
    }

    /// Stabilised L2-projected normals before nodal normalisation.
    pub fn raw_normals(&self, gamma_n: f64, cg: &CgSettings) -> Result<NodalField3> {
        self.solve3(gamma_n, &self.normal_load, cg, FieldKind::Normal)
    }

    /// Stabilised L2-projected normals, normalised at the vertices.
    pub fn normals(&self, gamma_n: f64, cg: &CgSettings) -> Result<NodalField3> {
        self.raw_normals(gamma_n, cg)?.normalized()
    }
}

pub fn curvature_vector(mesh: &TriMesh, params: &StabilizationParams) -> Result<NodalField3> {
    params.validate()?;
    SurfaceOperators::assemble(mesh).curvature_vector(params.gamma_h, &params.cg)
}

pub fn projected_normals(mesh: &TriMesh, params: &StabilizationParams) -> Result<NodalField3> {
    params.validate()?;
    SurfaceOperators::assemble(mesh).normals(params.gamma_n, &params.cg)
}

/// Scalar mean curvature recovered from the curvature vector.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarCurvature {
    /// `H_h . n_h / 2`.
    pub signed: Vec<f64>,
    /// `|H_h| / 2`.
    pub magnitude: Vec<f64>,
}

pub fn scalar_curvature(curvature: &NodalField3, normals: &NodalField3) -> ScalarCurvature {
    assert_eq!(curvature.len(), normals.len(), "fields live on different meshes");
    let signed = curvature
        .values
        .iter()
        .zip(&normals.values)
        .map(|(h, n)| 0.5 * h.dot(n))
        .collect();
    let magnitude = curvature.values.iter().map(|h| 0.5 * h.norm()).collect();
    ScalarCurvature { signed, magnitude }
}

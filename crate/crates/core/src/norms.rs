//! Vertex-lumped L2 norms on a triangulation and error measures built on them.
//!
//! `||v||_h^2 = sum_K A_K / 3 sum_{i=1..3} |v(x_K^i)|^2`, where the corner
//! value may depend on the element (face-constant fields) or not (nodal
//! fields).

use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::implicit::{LevelSet, DEFAULT_PROJECTION_TOL};
use crate::mesh::{TriMesh, Vec3};

/// Values that can be sampled at element corners.
pub trait FieldValue: Copy + Send + Sync {
    fn squared(&self) -> f64;
    fn minus(&self, other: &Self) -> Self;
}

impl FieldValue for f64 {
    fn squared(&self) -> f64 {
        self * self
    }

    fn minus(&self, other: &Self) -> Self {
        self - other
    }
}

impl FieldValue for Vec3 {
    fn squared(&self) -> f64 {
        self.norm_squared()
    }

    fn minus(&self, other: &Self) -> Self {
        self - other
    }
}

/// Value of a field at corner `i` of element `K`.
#[derive(Clone, Copy, Debug)]
pub enum ElementSampler<'a, T> {
    /// One value per vertex, shared by all incident elements.
    Nodal(&'a [T]),
    /// One value per face, used at all three of its corners.
    PerFace(&'a [T]),
    Constant(T),
}

impl<T: FieldValue> ElementSampler<'_, T> {
    #[inline]
    pub fn sample(&self, mesh: &TriMesh, face: usize, corner: usize) -> T {
        match self {
            ElementSampler::Nodal(v) => v[mesh.faces()[face][corner]],
            ElementSampler::PerFace(v) => v[face],
            ElementSampler::Constant(c) => *c,
        }
    }

    fn check(&self, mesh: &TriMesh) {
        match self {
            ElementSampler::Nodal(v) => assert_eq!(v.len(), mesh.num_vertices(), "nodal field length"),
            ElementSampler::PerFace(v) => assert_eq!(v.len(), mesh.num_faces(), "face field length"),
            ElementSampler::Constant(_) => {}
        }
    }
}

/// Squared element contributions `A_K/3 sum_i |a(x_K^i) - b(x_K^i)|^2`.
pub fn element_contributions<T: FieldValue>(
    mesh: &TriMesh,
    a: &ElementSampler<'_, T>,
    b: Option<&ElementSampler<'_, T>>,
) -> Vec<f64> {
    a.check(mesh);
    if let Some(b) = b {
        b.check(mesh);
    }
    (0..mesh.num_faces())
        .into_par_iter()
        .map(|f| {
            let s: f64 = (0..3)
                .map(|i| {
                    let va = a.sample(mesh, f, i);
                    match b {
                        Some(b) => va.minus(&b.sample(mesh, f, i)).squared(),
                        None => va.squared(),
                    }
                })
                .sum();
            mesh.face_areas()[f] / 3.0 * s
        })
        .collect()
}

pub fn l2h_norm<T: FieldValue>(mesh: &TriMesh, field: &ElementSampler<'_, T>) -> f64 {
    element_contributions(mesh, field, None).iter().sum::<f64>().sqrt()
}

pub fn l2h_distance<T: FieldValue>(mesh: &TriMesh, a: &ElementSampler<'_, T>, b: &ElementSampler<'_, T>) -> f64 {
    element_contributions(mesh, a, Some(b)).iter().sum::<f64>().sqrt()
}

pub fn exact_normals<S: LevelSet + ?Sized>(mesh: &TriMesh, surface: &S) -> Result<Vec<Vec3>> {
    mesh.vertices().par_iter().map(|x| surface.normal(x)).collect()
}

/// Exact mean curvature at the closest surface points of the vertices.
pub fn exact_mean_curvature<S: LevelSet + ?Sized>(mesh: &TriMesh, surface: &S) -> Result<Vec<f64>> {
    mesh.vertices()
        .par_iter()
        .map(|x| {
            let p = surface.project(x, DEFAULT_PROJECTION_TOL)?;
            surface.mean_curvature(&p.position)
        })
        .collect()
}

/// `||n_a - n_e||_h` with both fields nodal.
pub fn normal_error(mesh: &TriMesh, approx: &[Vec3], exact: &[Vec3]) -> f64 {
    l2h_distance(mesh, &ElementSampler::Nodal(approx), &ElementSampler::Nodal(exact))
}

/// `||H_exact - H_h||_h`. Vertices with `None` contribute nothing; their
/// count is returned alongside the error.
pub fn curvature_error<S: LevelSet + ?Sized>(
    mesh: &TriMesh,
    approx: &[Option<f64>],
    surface: &S,
) -> Result<(f64, usize)> {
    assert_eq!(approx.len(), mesh.num_vertices(), "curvature field length");
    let exact = exact_mean_curvature(mesh, surface)?;
    let diff: Vec<f64> = approx
        .iter()
        .zip(&exact)
        .map(|(a, e)| a.map_or(0.0, |a| a - e))
        .collect();
    let excluded = approx.iter().filter(|a| a.is_none()).count();
    Ok((l2h_norm(mesh, &ElementSampler::Nodal(&diff)), excluded))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum GeomErrorMode {
    /// Signed distance of each vertex to the surface.
    #[default]
    SignedDistance,
    /// `phi(x)^2` at each vertex.
    PhiSquared,
}

pub fn vertex_geom_errors<S: LevelSet + ?Sized>(points: &[Vec3], surface: &S, mode: GeomErrorMode) -> Result<Vec<f64>> {
    match mode {
        GeomErrorMode::SignedDistance => points
            .par_iter()
            .map(|x| surface.signed_distance(x, DEFAULT_PROJECTION_TOL))
            .collect(),
        GeomErrorMode::PhiSquared => Ok(points.iter().map(|x| surface.value(x).powi(2)).collect()),
    }
}

/// Lumped L2 norm of the vertexwise distance of the mesh to the surface.
pub fn geom_error<S: LevelSet + ?Sized>(mesh: &TriMesh, surface: &S, mode: GeomErrorMode) -> Result<f64> {
    let d = vertex_geom_errors(mesh.vertices(), surface, mode)?;
    Ok(l2h_norm(mesh, &ElementSampler::Nodal(&d)))
}

/// `||n_e - n_K|| / ||n_stab - n_K||`, both measured against the face normals.
pub fn effectivity_index(mesh: &TriMesh, exact: &[Vec3], n_stab: &[Vec3]) -> Result<f64> {
    effectivity_index_sampled(mesh, &ElementSampler::Nodal(exact), &ElementSampler::Nodal(n_stab))
}

pub fn effectivity_index_sampled(
    mesh: &TriMesh,
    exact: &ElementSampler<'_, Vec3>,
    n_stab: &ElementSampler<'_, Vec3>,
) -> Result<f64> {
    let faces = ElementSampler::PerFace(mesh.face_normals());
    let num = l2h_distance(mesh, exact, &faces);
    let den = l2h_distance(mesh, n_stab, &faces);
    if den < 1e-14 {
        return Err(Error::DivisionByZero(den));
    }
    Ok(num / den)
}

/// `p_n = (log e_{n+1} - log e_n) / (log h_{n+1} - log h_n)`.
pub fn convergence_rates(h: &[f64], errors: &[f64]) -> Result<Vec<f64>> {
    assert_eq!(h.len(), errors.len(), "h and error columns differ in length");
    if h.len() < 2 {
        return Err(Error::InvalidParameter("need at least two rows for a rate".into()));
    }
    if let Some(&e) = errors.iter().find(|&&e| !(e > 0.0)) {
        return Err(Error::NonPositiveError(e));
    }
    if let Some(&x) = h.iter().find(|&&x| !(x > 0.0)) {
        return Err(Error::InvalidParameter(format!("mesh size {x} is not positive")));
    }
    Ok(h.windows(2)
        .zip(errors.windows(2))
        .map(|(h, e)| (e[1].ln() - e[0].ln()) / (h[1].ln() - h[0].ln()))
        .collect())
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConvergenceTable {
    pub h: Vec<f64>,
    pub errors: Vec<f64>,
}

impl ConvergenceTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, h: f64, error: f64) -> Result<()> {
        if let Some(&last) = self.h.last() {
            if !(h < last) {
                return Err(Error::InvalidParameter(format!(
                    "mesh sizes must decrease down the table ({h} after {last})"
                )));
            }
        }
        if !(error > 0.0) {
            return Err(Error::NonPositiveError(error));
        }
        self.h.push(h);
        self.errors.push(error);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.h.len()
    }

    pub fn is_empty(&self) -> bool {
        self.h.is_empty()
    }

    pub fn rates(&self) -> Result<Vec<f64>> {
        convergence_rates(&self.h, &self.errors)
    }

    /// Columns `h,error,rate`; the first rate is empty.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let rates = if self.len() >= 2 { self.rates()? } else { Vec::new() };
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["h", "error", "rate"])?;
        for k in 0..self.len() {
            let rate = if k == 0 {
                String::new()
            } else {
                format!("{}", rates[k - 1])
            };
            w.write_record([format!("{}", self.h[k]), format!("{}", self.errors[k]), rate])?;
        }
        w.flush()?;
        Ok(())
    }
}

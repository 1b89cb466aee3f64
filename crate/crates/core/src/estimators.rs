//! Classical per-vertex normal and mean curvature estimators.
//!
//! Weighted normals sum the incident face normals `n_k` with a per-wedge
//! weight built from the two wedge edges `e_k`, `e_{k+1}` at the centre
//! vertex and the wedge angle `alpha_k`:
//!
//! | scheme | weight |
//! |--------|--------|
//! | MWE    | `1` |
//! | MWA    | `alpha_k` |
//! | MWSELR | `sin alpha_k / (|e_k| |e_{k+1}|)` |
//! | MWAAT  | `|e_k x e_{k+1}|` |
//! | MWELR  | `1 / (|e_k| |e_{k+1}|)` |
//! | MWRELR | `1 / sqrt(|e_k| |e_{k+1}|)` |
//!
//! DLLB uses the cotangent Laplace-Beltrami vector
//! `K_i = 1/(2 A_i) sum_j (cot a_ij + cot b_ij)(x_i - x_j)`.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fem::{FieldKind, NodalField3};
use crate::mesh::{triangle_angles, TriMesh, Vec3};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NormalScheme {
    Mwe,
    Mwa,
    Mwselr,
    Mwaat,
    Mwelr,
    Mwrelr,
    Dllb,
}

impl NormalScheme {
    pub const ALL: [NormalScheme; 7] = [
        NormalScheme::Mwe,
        NormalScheme::Mwa,
        NormalScheme::Mwaat,
        NormalScheme::Mwelr,
        NormalScheme::Mwrelr,
        NormalScheme::Mwselr,
        NormalScheme::Dllb,
    ];

    pub fn name(self) -> &'static str {
        match self {
            NormalScheme::Mwe => "mwe",
            NormalScheme::Mwa => "mwa",
            NormalScheme::Mwselr => "mwselr",
            NormalScheme::Mwaat => "mwaat",
            NormalScheme::Mwelr => "mwelr",
            NormalScheme::Mwrelr => "mwrelr",
            NormalScheme::Dllb => "dllb",
        }
    }

    /// Weight of one wedge, `None` for DLLB.
    fn wedge_weight(self, e0: &Vec3, e1: &Vec3) -> Option<f64> {
        let (l0, l1) = (e0.norm(), e1.norm());
        let cross = e0.cross(e1).norm();
        Some(match self {
            NormalScheme::Mwe => 1.0,
            NormalScheme::Mwa => e0.angle(e1),
            NormalScheme::Mwselr => cross / (l0 * l1) / (l0 * l1),
            NormalScheme::Mwaat => cross,
            NormalScheme::Mwelr => 1.0 / (l0 * l1),
            NormalScheme::Mwrelr => 1.0 / (l0 * l1).sqrt(),
            NormalScheme::Dllb => return None,
        })
    }
}

impl fmt::Display for NormalScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for NormalScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        NormalScheme::ALL
            .iter()
            .copied()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidParameter(format!("unknown normal scheme '{s}'")))
    }
}

/// Normalised vertex normals and the vertices where the estimator fell back.
#[derive(Clone, Debug)]
pub struct VertexNormals {
    pub scheme: NormalScheme,
    pub field: NodalField3,
    /// Vertices whose weighted sum vanished (weighted schemes: MWE was used)
    /// or whose cotangent vector vanished (DLLB: mean face normal was used).
    pub fallbacks: Vec<usize>,
}

const ZERO_SUM: f64 = 1e-14;

/// Unnormalised weighted sum of face normals at `v`.
pub fn weighted_normal_sum(mesh: &TriMesh, v: usize, scheme: NormalScheme) -> Vec3 {
    let ring = mesh.ring(v);
    let p = mesh.vertices()[v];
    let k = ring.len();
    let mut sum = Vec3::zeros();
    for (w, &f) in mesh.ring_faces(v).iter().enumerate() {
        let e0 = mesh.vertices()[ring[w]] - p;
        let e1 = mesh.vertices()[ring[(w + 1) % k]] - p;
        let weight = scheme.wedge_weight(&e0, &e1).expect("DLLB has no wedge weight");
        sum += mesh.face_normals()[f] * weight;
    }
    sum
}

pub fn weighted_vertex_normals(mesh: &TriMesh, scheme: NormalScheme) -> VertexNormals {
    if scheme == NormalScheme::Dllb {
        let d = dllb(mesh, AreaMode::default());
        return VertexNormals {
            scheme,
            field: d.normals,
            fallbacks: d.fallbacks,
        };
    }
    let sums: Vec<Vec3> = (0..mesh.num_vertices())
        .into_par_iter()
        .map(|v| weighted_normal_sum(mesh, v, scheme))
        .collect();
    let mut fallbacks = Vec::new();
    let values = sums
        .into_iter()
        .enumerate()
        .map(|(v, s)| {
            let n = s.norm();
            if n >= ZERO_SUM {
                s / n
            } else {
                fallbacks.push(v);
                weighted_normal_sum(mesh, v, NormalScheme::Mwe).normalize()
            }
        })
        .collect();
    VertexNormals {
        scheme,
        field: NodalField3::new(FieldKind::Normal, values),
        fallbacks,
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum AreaMode {
    /// A third of every incident face.
    #[default]
    Barycentric,
    /// Voronoi cells, with the obtuse-triangle split (A/2 at the obtuse
    /// corner, A/4 at the others).
    MixedVoronoi,
}

impl FromStr for AreaMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "barycentric" => Ok(AreaMode::Barycentric),
            "mixed-voronoi" | "voronoi" => Ok(AreaMode::MixedVoronoi),
            _ => Err(Error::InvalidParameter(format!("unknown area mode '{s}'"))),
        }
    }
}

/// Per-face share of the area attributed to each corner.
fn corner_areas(mesh: &TriMesh, f: usize, mode: AreaMode) -> [f64; 3] {
    let area = mesh.face_areas()[f];
    match mode {
        AreaMode::Barycentric => [area / 3.0; 3],
        AreaMode::MixedVoronoi => {
            let p = mesh.corners(f);
            let ang = triangle_angles(&p);
            if let Some(obtuse) = (0..3).find(|&c| ang[c] > std::f64::consts::FRAC_PI_2) {
                let mut out = [area / 4.0; 3];
                out[obtuse] = area / 2.0;
                out
            } else {
                let cot = ang.map(|a| 1.0 / a.tan());
                [0, 1, 2].map(|c| {
                    let (a, b) = ((c + 1) % 3, (c + 2) % 3);
                    // Edge c-a is opposite corner b, edge c-b opposite corner a.
                    ((p[c] - p[a]).norm_squared() * cot[b] + (p[c] - p[b]).norm_squared() * cot[a]) / 8.0
                })
            }
        }
    }
}

pub fn vertex_areas(mesh: &TriMesh, mode: AreaMode) -> Vec<f64> {
    let mut out = vec![0.0; mesh.num_vertices()];
    for (f, face) in mesh.faces().iter().enumerate() {
        let a = corner_areas(mesh, f, mode);
        for c in 0..3 {
            out[face[c]] += a[c];
        }
    }
    out
}

/// Unscaled cotangent sum `sum_j (cot a_ij + cot b_ij)(x_i - x_j)`.
pub fn cotangent_sums(mesh: &TriMesh) -> Vec<Vec3> {
    let x = mesh.vertices();
    let mut out = vec![Vec3::zeros(); mesh.num_vertices()];
    for (f, face) in mesh.faces().iter().enumerate() {
        let ang = triangle_angles(&mesh.corners(f));
        for c in 0..3 {
            let (i, j) = (face[(c + 1) % 3], face[(c + 2) % 3]);
            let w = 1.0 / ang[c].tan();
            let d = (x[i] - x[j]) * w;
            out[i] += d;
            out[j] -= d;
        }
    }
    out
}

#[derive(Clone, Debug)]
pub struct Dllb {
    pub area_mode: AreaMode,
    /// `K_h`, approximately `2 H n`.
    pub laplacian: NodalField3,
    /// `|K_h| / 2`.
    pub mean_curvature: Vec<f64>,
    pub normals: NodalField3,
    pub fallbacks: Vec<usize>,
}

pub fn dllb(mesh: &TriMesh, area_mode: AreaMode) -> Dllb {
    let areas = vertex_areas(mesh, area_mode);
    let k: Vec<Vec3> = cotangent_sums(mesh)
        .into_iter()
        .zip(&areas)
        .map(|(s, a)| s / (2.0 * a))
        .collect();
    let mean_curvature = k.iter().map(|v| 0.5 * v.norm()).collect();
    let mut fallbacks = Vec::new();
    let normals = k
        .iter()
        .enumerate()
        .map(|(v, kv)| {
            let n = kv.norm();
            if n < 1e-10 / mesh.local_edge_length(v) {
                fallbacks.push(v);
                weighted_normal_sum(mesh, v, NormalScheme::Mwe).normalize()
            } else {
                kv / n
            }
        })
        .collect();
    Dllb {
        area_mode,
        laplacian: NodalField3::new(FieldKind::CurvatureVector, k),
        mean_curvature,
        normals: NodalField3::new(FieldKind::Normal, normals),
        fallbacks,
    }
}

/// Mean curvature from quadratic height fits, one per vertex.
#[derive(Clone, Debug)]
pub struct SsfCurvature {
    /// `None` where even the two-ring fit was rank deficient.
    pub mean_curvature: Vec<Option<f64>>,
    /// Vertices that needed the two-ring.
    pub two_ring: Vec<usize>,
}

impl SsfCurvature {
    pub fn invalid(&self) -> Vec<usize> {
        (0..self.mean_curvature.len())
            .filter(|&v| self.mean_curvature[v].is_none())
            .collect()
    }
}

fn fit_height(centre: Vec3, n: Vec3, u: Vec3, samples: &[Vec3]) -> Option<f64> {
    if samples.len() < 3 {
        return None;
    }
    let v = n.cross(&u);
    let rows = samples.len();
    let mut a = DMatrix::zeros(rows, 3);
    let mut f = DVector::zeros(rows);
    for (r, p) in samples.iter().enumerate() {
        let d = p - centre;
        let (su, sv) = (d.dot(&u), d.dot(&v));
        a[(r, 0)] = 0.5 * su * su;
        a[(r, 1)] = su * sv;
        a[(r, 2)] = 0.5 * sv * sv;
        f[r] = d.dot(&n);
    }
    let svd = a.svd(true, true);
    let smax = svd.singular_values.max();
    if !(svd.singular_values.min() > 1e-10 * smax) {
        return None;
    }
    let c = svd.solve(&f, 0.0).ok()?;
    // Heights are measured along the outward normal, so a sphere bends to
    // negative f and the sign flips to give H > 0 there.
    Some(-(c[0] + c[2]) / 2.0)
}

pub fn ssf_curvature(mesh: &TriMesh, frame_normals: &NodalField3) -> Result<SsfCurvature> {
    if frame_normals.len() != mesh.num_vertices() {
        return Err(Error::InvalidParameter(format!(
            "{} frame normals for {} vertices",
            frame_normals.len(),
            mesh.num_vertices()
        )));
    }
    let x = mesh.vertices();
    let results: Vec<(Option<f64>, bool)> = (0..mesh.num_vertices())
        .into_par_iter()
        .map(|i| {
            let n = frame_normals.values[i].normalize();
            let ring = mesh.ring(i);
            let e = x[ring[0]] - x[i];
            let u = e - n * e.dot(&n);
            let un = u.norm();
            if !(un > 0.0) {
                return (None, false);
            }
            let u = u / un;
            let one: Vec<Vec3> = ring.iter().map(|&j| x[j]).collect();
            if let Some(h) = fit_height(x[i], n, u, &one) {
                return (Some(h), false);
            }
            let mut two: Vec<usize> = ring.to_vec();
            for &j in ring {
                for &k in mesh.ring(j) {
                    if k != i && !two.contains(&k) {
                        two.push(k);
                    }
                }
            }
            let pts: Vec<Vec3> = two.iter().map(|&j| x[j]).collect();
            (fit_height(x[i], n, u, &pts), true)
        })
        .collect();
    let two_ring = results
        .iter()
        .enumerate()
        .filter(|(_, r)| r.1)
        .map(|(v, _)| v)
        .collect();
    Ok(SsfCurvature {
        mean_curvature: results.into_iter().map(|r| r.0).collect(),
        two_ring,
    })
}

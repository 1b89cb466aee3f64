use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

use super::{TriMesh, Vec3};

/// Parameters of a (possibly jittered) parametric torus mesh.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TorusMeshParams {
    pub major_radius: f64,
    pub minor_radius: f64,
    pub squish: f64,
    /// Samples around the z-axis.
    pub n_u: usize,
    /// Samples around the tube.
    pub n_v: usize,
    /// Parameter noise as a fraction of the parametric step, in `[0, 0.5)`.
    pub jitter: f64,
    pub seed: u64,
}

impl TorusMeshParams {
    pub fn new(major_radius: f64, minor_radius: f64, squish: f64, n_u: usize, n_v: usize) -> Self {
        Self {
            major_radius,
            minor_radius,
            squish,
            n_u,
            n_v,
            jitter: 0.0,
            seed: 0,
        }
    }

    pub fn jittered(mut self, jitter: f64, seed: u64) -> Self {
        self.jitter = jitter;
        self.seed = seed;
        self
    }
}

/// Triangulates the squished torus `(R - rho)^2 + a z^2 = r^2`.
///
/// Vertices are placed with the exact parametrisation
/// `((R + r cos t) cos p, (R + r cos t) sin p, r sin t / sqrt(a))`, so they
/// lie on the level set up to rounding. Grid quads are split along
/// alternating diagonals. With `jitter > 0` each vertex's `(p, t)` pair is
/// perturbed by seeded uniform noise of `jitter` parametric steps.
pub fn generate_torus(params: &TorusMeshParams) -> Result<TriMesh> {
    let TorusMeshParams {
        major_radius: big_r,
        minor_radius: r,
        squish: a,
        n_u,
        n_v,
        jitter,
        seed,
    } = *params;
    if !(r > 0.0 && big_r > r && a > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "torus needs R > r > 0 and a > 0 (R={big_r}, r={r}, a={a})"
        )));
    }
    if n_u < 3 || n_v < 3 {
        return Err(Error::InvalidParameter(format!(
            "torus needs n_u, n_v >= 3 (got {n_u}, {n_v})"
        )));
    }
    if !(0.0..0.5).contains(&jitter) {
        return Err(Error::InvalidParameter(format!("jitter {jitter} outside [0, 0.5)")));
    }

    let du = TAU / n_u as f64;
    let dv = TAU / n_v as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sqrt_a = a.sqrt();
    let mut vertices = Vec::with_capacity(n_u * n_v);
    for j in 0..n_v {
        for i in 0..n_u {
            let (mut p, mut t) = (i as f64 * du, j as f64 * dv);
            if jitter > 0.0 {
                p += jitter * du * rng.random_range(-1.0..1.0);
                t += jitter * dv * rng.random_range(-1.0..1.0);
            }
            let rho = big_r + r * t.cos();
            vertices.push(Vec3::new(rho * p.cos(), rho * p.sin(), r * t.sin() / sqrt_a));
        }
    }

    let idx = |i: usize, j: usize| (j % n_v) * n_u + (i % n_u);
    let mut faces = Vec::with_capacity(2 * n_u * n_v);
    for j in 0..n_v {
        for i in 0..n_u {
            let (a, b, c, d) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
            if (i + j) % 2 == 0 {
                faces.push([a, b, c]);
                faces.push([a, c, d]);
            } else {
                faces.push([a, b, d]);
                faces.push([b, c, d]);
            }
        }
    }
    TriMesh::new(vertices, faces)
}

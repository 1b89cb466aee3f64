//! Analytic level-set surfaces used as ground truth.
//!
//! The surface is `{ x : phi(x) = 0 }` with `phi > 0` outside. `phi` is not
//! assumed to be a distance function, so normals always normalise the
//! gradient and distances come from an explicit projection.

use nalgebra::Matrix3;

use crate::error::{Error, Result};
use crate::mesh::Vec3;

/// Maximum Newton steps in [`LevelSet::project`].
pub const MAX_PROJECTION_ITERATIONS: usize = 50;

/// Default residual tolerance `|phi|` for projections.
pub const DEFAULT_PROJECTION_TOL: f64 = 1e-13;

/// A point on (or within tolerance of) the surface.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SurfacePoint {
    pub position: Vec3,
    /// `|phi(position)|`.
    pub residual: f64,
}

pub trait LevelSet: Sync {
    fn value(&self, x: &Vec3) -> f64;

    /// Analytic gradient, or `SingularGradient` where it is undefined or zero.
    fn gradient(&self, x: &Vec3) -> Result<Vec3>;

    fn hessian(&self, x: &Vec3) -> Result<Matrix3<f64>>;

    /// Outward unit normal `grad phi / |grad phi|`.
    fn normal(&self, x: &Vec3) -> Result<Vec3> {
        let g = self.gradient(x)?;
        let n = g.norm();
        if n < 1e-300 {
            return Err(singular(x));
        }
        Ok(g / n)
    }

    /// Mean curvature `(k1 + k2) / 2`, positive on a sphere with outward
    /// normal: `(|g|^2 tr Hess - g^T Hess g) / (2 |g|^3)`.
    fn mean_curvature(&self, x: &Vec3) -> Result<f64> {
        let g = self.gradient(x)?;
        let hess = self.hessian(x)?;
        let g2 = g.norm_squared();
        if g2 < 1e-300 {
            return Err(singular(x));
        }
        Ok((g2 * hess.trace() - g.dot(&(hess * g))) / (2.0 * g2 * g2.sqrt()))
    }

    /// Newton iteration along the gradient, `x <- x - phi grad / |grad|^2`,
    /// until `|phi| <= tol`.
    fn project(&self, x: &Vec3, tol: f64) -> Result<SurfacePoint> {
        let mut p = *x;
        let mut phi = self.value(&p);
        for _ in 0..MAX_PROJECTION_ITERATIONS {
            if phi.abs() <= tol {
                return Ok(SurfacePoint {
                    position: p,
                    residual: phi.abs(),
                });
            }
            let g = self.gradient(&p)?;
            let g2 = g.norm_squared();
            if g2 < 1e-300 {
                return Err(singular(&p));
            }
            p -= g * (phi / g2);
            phi = self.value(&p);
            if !phi.is_finite() {
                break;
            }
        }
        if phi.abs() <= tol {
            return Ok(SurfacePoint {
                position: p,
                residual: phi.abs(),
            });
        }
        Err(Error::NoConvergence {
            what: "surface projection",
            iterations: MAX_PROJECTION_ITERATIONS,
            residual: phi.abs(),
        })
    }

    /// `sign(phi(x)) * |x - project(x)|`.
    fn signed_distance(&self, x: &Vec3, tol: f64) -> Result<f64> {
        let phi = self.value(x);
        let p = self.project(x, tol)?;
        Ok(phi.signum() * (x - p.position).norm())
    }
}

fn singular(x: &Vec3) -> Error {
    Error::SingularGradient(x.x, x.y, x.z)
}

/// `phi(x, y, z) = (R - sqrt(x^2 + y^2))^2 + a z^2 - r^2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SquishedTorus {
    pub major_radius: f64,
    pub minor_radius: f64,
    pub squish: f64,
}

impl SquishedTorus {
    pub fn new(major_radius: f64, minor_radius: f64, squish: f64) -> Result<Self> {
        if !(minor_radius > 0.0 && major_radius > minor_radius && squish > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "torus needs R > r > 0 and a > 0 (R={major_radius}, r={minor_radius}, a={squish})"
            )));
        }
        Ok(Self {
            major_radius,
            minor_radius,
            squish,
        })
    }

    fn rho(x: &Vec3) -> f64 {
        (x.x * x.x + x.y * x.y).sqrt()
    }
}

impl LevelSet for SquishedTorus {
    fn value(&self, x: &Vec3) -> f64 {
        let d = self.major_radius - Self::rho(x);
        d * d + self.squish * x.z * x.z - self.minor_radius * self.minor_radius
    }

    fn gradient(&self, x: &Vec3) -> Result<Vec3> {
        let rho = Self::rho(x);
        if rho < 1e-300 {
            return Err(singular(x));
        }
        // d/dx (R - rho)^2 = -2 (R - rho) x / rho
        let s = -2.0 * (self.major_radius - rho) / rho;
        let g = Vec3::new(s * x.x, s * x.y, 2.0 * self.squish * x.z);
        if g.norm_squared() < 1e-300 {
            return Err(singular(x));
        }
        Ok(g)
    }

    fn hessian(&self, x: &Vec3) -> Result<Matrix3<f64>> {
        let rho = Self::rho(x);
        if rho < 1e-300 {
            return Err(singular(x));
        }
        let big_r = self.major_radius;
        let base = 2.0 * (1.0 - big_r / rho);
        let c = 2.0 * big_r / (rho * rho * rho);
        Ok(Matrix3::new(
            base + c * x.x * x.x,
            c * x.x * x.y,
            0.0,
            c * x.x * x.y,
            base + c * x.y * x.y,
            0.0,
            0.0,
            0.0,
            2.0 * self.squish,
        ))
    }
}

/// `phi(x) = |x - c|^2 - radius^2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sphere {
    pub center: Vec3,
    pub radius: f64,
}

impl Sphere {
    pub fn new(center: Vec3, radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "sphere radius {radius} must be positive"
            )));
        }
        Ok(Self { center, radius })
    }
}

impl LevelSet for Sphere {
    fn value(&self, x: &Vec3) -> f64 {
        (x - self.center).norm_squared() - self.radius * self.radius
    }

    fn gradient(&self, x: &Vec3) -> Result<Vec3> {
        let g = 2.0 * (x - self.center);
        if g.norm_squared() < 1e-300 {
            return Err(singular(x));
        }
        Ok(g)
    }

    fn hessian(&self, _x: &Vec3) -> Result<Matrix3<f64>> {
        Ok(Matrix3::identity() * 2.0)
    }
}

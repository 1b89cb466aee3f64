// NaN-rejecting checks are written as `!(x > 0.0)` on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod estimators;
pub mod fem;
pub mod implicit;
pub mod mesh;
pub mod norms;
pub mod refine;
pub mod search;
pub mod study;

pub use error::{Error, Result};
pub use mesh::{TriMesh, Vec3};

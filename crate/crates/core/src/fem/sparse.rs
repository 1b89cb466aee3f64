use crate::error::{Error, Result};

/// Symmetric sparse operator on vertex unknowns, stored as CSR.
///
/// Entries are summed from triplets in insertion order, so assembling the
/// same element list twice gives bit-identical matrices.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseSpd {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl SparseSpd {
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        // Stable sort keeps the per-entry summation order fixed.
        triplets.sort_by_key(|&(i, j, _)| (i, j));
        let mut row_ptr = vec![0usize; n + 1];
        let mut cols = Vec::with_capacity(triplets.len());
        let mut vals: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in triplets {
            debug_assert!(i < n && j < n);
            if last == Some((i, j)) {
                *vals.last_mut().unwrap() += v;
            } else {
                cols.push(j);
                vals.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self { n, row_ptr, cols, vals }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_triplets(n, (0..n).map(|i| (i, i, 1.0)).collect())
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        Self::from_triplets(d.len(), d.iter().enumerate().map(|(i, &v)| (i, i, v)).collect())
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.cols[r.clone()].binary_search(&j) {
            Ok(k) => self.vals[r.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).map(|(_, v)| v).sum()).collect()
    }

    pub fn total(&self) -> f64 {
        self.vals.iter().sum()
    }

    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let mut s = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.vals[k] * x[self.cols[k]];
            }
            *yi = s;
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        dot(x, &self.mul_vec(x))
    }

    /// `alpha * self + beta * other` on the union sparsity pattern.
    pub fn linear_combination(&self, alpha: f64, other: &SparseSpd, beta: f64) -> SparseSpd {
        assert_eq!(self.n, other.n, "dimension mismatch");
        let mut row_ptr = Vec::with_capacity(self.n + 1);
        row_ptr.push(0);
        let mut cols = Vec::with_capacity(self.nnz().max(other.nnz()));
        let mut vals = Vec::with_capacity(cols.capacity());
        for i in 0..self.n {
            let (mut a, ae) = (self.row_ptr[i], self.row_ptr[i + 1]);
            let (mut b, be) = (other.row_ptr[i], other.row_ptr[i + 1]);
            while a < ae || b < be {
                let ca = if a < ae { self.cols[a] } else { usize::MAX };
                let cb = if b < be { other.cols[b] } else { usize::MAX };
                if ca == cb {
                    cols.push(ca);
                    vals.push(alpha * self.vals[a] + beta * other.vals[b]);
                    a += 1;
                    b += 1;
                } else if ca < cb {
                    cols.push(ca);
                    vals.push(alpha * self.vals[a]);
                    a += 1;
                } else {
                    cols.push(cb);
                    vals.push(beta * other.vals[b]);
                    b += 1;
                }
            }
            row_ptr.push(cols.len());
        }
        SparseSpd {
            n: self.n,
            row_ptr,
            cols,
            vals,
        }
    }

    /// Exact structural and numerical symmetry.
    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| self.row(i).all(|(j, v)| self.get(j, i) == v))
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Default iteration cap is `DEFAULT_ITERATION_FACTOR * sqrt(N)`, at least
/// `MIN_DEFAULT_ITERATIONS`. Unpreconditioned CG on `M + gamma J` needs
/// about `sqrt(gamma) / h` steps, so `10 sqrt(N)` is too tight for
/// `gamma` near 1.
pub const DEFAULT_ITERATION_FACTOR: f64 = 100.0;
pub const MIN_DEFAULT_ITERATIONS: usize = 500;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Preconditioner {
    #[default]
    None,
    Jacobi,
    /// Zero fill-in incomplete Cholesky, diagonally shifted until it exists.
    IncompleteCholesky,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CgSettings {
    /// Relative residual `|Ax - b| / |b|`.
    pub tol: f64,
    /// Defaults to `max(100 sqrt(N), 500)` when `None`.
    pub max_iterations: Option<usize>,
    pub preconditioner: Preconditioner,
}

impl Default for CgSettings {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iterations: None,
            preconditioner: Preconditioner::None,
        }
    }
}

/// Lower factor `L` of `A ~ L L^T` on the lower pattern of `A`.
#[derive(Clone, Debug)]
pub struct IncompleteCholesky {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    /// Relative diagonal shift that was needed.
    pub shift: f64,
}

impl IncompleteCholesky {
    pub fn new(a: &SparseSpd) -> Result<Self> {
        let mut shift = 0.0;
        for _ in 0..30 {
            if let Some(f) = Self::try_factor(a, shift) {
                return Ok(f);
            }
            shift = if shift == 0.0 { 1e-3 } else { 2.0 * shift };
        }
        Err(Error::InvalidParameter("incomplete Cholesky breaks down".into()))
    }

    fn try_factor(a: &SparseSpd, shift: f64) -> Option<Self> {
        let n = a.n;
        let mut row_ptr = Vec::with_capacity(n + 1);
        row_ptr.push(0);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        for i in 0..n {
            for (j, v) in a.row(i) {
                if j < i {
                    cols.push(j);
                    vals.push(v);
                } else if j == i {
                    cols.push(j);
                    vals.push(v * (1.0 + shift));
                }
            }
            row_ptr.push(cols.len());
        }
        let mut f = Self {
            n,
            row_ptr,
            cols,
            vals,
            shift,
        };
        // Row-wise IC(0): l_ij = (a_ij - sum_k l_ik l_jk) / l_jj on the pattern.
        for i in 0..n {
            let (start, end) = (f.row_ptr[i], f.row_ptr[i + 1]);
            for k in start..end {
                let j = f.cols[k];
                let mut s = f.vals[k];
                // Sparse dot of rows i and j over columns < j.
                let (mut p, mut q) = (start, f.row_ptr[j]);
                let qe = f.row_ptr[j + 1];
                while p < k && q < qe {
                    let (cp, cq) = (f.cols[p], f.cols[q]);
                    if cq >= j {
                        break;
                    }
                    if cp == cq {
                        s -= f.vals[p] * f.vals[q];
                        p += 1;
                        q += 1;
                    } else if cp < cq {
                        p += 1;
                    } else {
                        q += 1;
                    }
                }
                if j == i {
                    if !(s > 0.0) {
                        return None;
                    }
                    f.vals[k] = s.sqrt();
                } else {
                    f.vals[k] = s / f.vals[qe - 1];
                }
            }
        }
        Some(f)
    }

    /// `z = (L L^T)^{-1} r`.
    pub fn apply(&self, r: &[f64], z: &mut [f64]) {
        z.copy_from_slice(r);
        for i in 0..self.n {
            let (start, end) = (self.row_ptr[i], self.row_ptr[i + 1]);
            let mut s = z[i];
            for k in start..end - 1 {
                s -= self.vals[k] * z[self.cols[k]];
            }
            z[i] = s / self.vals[end - 1];
        }
        for i in (0..self.n).rev() {
            let (start, end) = (self.row_ptr[i], self.row_ptr[i + 1]);
            z[i] /= self.vals[end - 1];
            let zi = z[i];
            for k in start..end - 1 {
                z[self.cols[k]] -= self.vals[k] * zi;
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct CgSolution {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// Final true relative residual.
    pub residual: f64,
}

/// Conjugate gradients from a zero initial guess.
pub fn conjugate_gradient(a: &SparseSpd, b: &[f64], settings: &CgSettings) -> Result<CgSolution> {
    let n = a.dim();
    assert_eq!(b.len(), n, "right-hand side has wrong length");
    if !(settings.tol > 0.0 && settings.tol < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "cg tolerance {} not in (0, 1)",
            settings.tol
        )));
    }
    if b.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("right-hand side is not finite".into()));
    }
    let max_it = settings
        .max_iterations
        .unwrap_or_else(|| ((DEFAULT_ITERATION_FACTOR * (n as f64).sqrt()).ceil() as usize).max(MIN_DEFAULT_ITERATIONS))
        .max(1);
    let bnorm = norm(b);
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok(CgSolution {
            x,
            iterations: 0,
            residual: 0.0,
        });
    }
    enum Pre {
        Identity,
        Diagonal(Vec<f64>),
        Cholesky(IncompleteCholesky),
    }
    let pre = match settings.preconditioner {
        Preconditioner::None => Pre::Identity,
        Preconditioner::Jacobi => Pre::Diagonal(
            a.diagonal()
                .iter()
                .map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 })
                .collect(),
        ),
        Preconditioner::IncompleteCholesky => Pre::Cholesky(IncompleteCholesky::new(a)?),
    };
    let precondition = |r: &[f64], z: &mut Vec<f64>| match &pre {
        Pre::Identity => {
            z.clear();
            z.extend_from_slice(r);
        }
        Pre::Diagonal(d) => {
            z.clear();
            z.extend(r.iter().zip(d).map(|(ri, di)| ri * di));
        }
        Pre::Cholesky(l) => {
            z.resize(r.len(), 0.0);
            l.apply(r, z);
        }
    };

    let mut r = b.to_vec();
    let mut z = Vec::with_capacity(n);
    precondition(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let mut iterations = 0;
    let mut rel = 1.0;
    while iterations < max_it {
        a.mul_vec_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            break;
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        iterations += 1;
        rel = norm(&r) / bnorm;
        if rel <= settings.tol {
            // Guard against drift of the recursive residual.
            let ax = a.mul_vec(&x);
            for i in 0..n {
                r[i] = b[i] - ax[i];
            }
            rel = norm(&r) / bnorm;
            if rel <= settings.tol {
                return Ok(CgSolution {
                    x,
                    iterations,
                    residual: rel,
                });
            }
            precondition(&r, &mut z);
            p.copy_from_slice(&z);
            rz = dot(&r, &z);
            continue;
        }
        precondition(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::NoConvergence {
        what: "conjugate gradient",
        iterations,
        residual: rel,
    })
}

//! Small dense complex linear-algebra helpers on top of `nalgebra`.
//!
//! Every matrix in this crate is tiny (a handful of antennas), so the helpers
//! favour clarity over avoiding allocations.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;

/// Inputs whose Hermitian asymmetry exceeds this are rejected.
pub const HERMITIAN_TOL: f64 = 1e-8;
/// Eigenvalues down to `-PSD_TOL * max(1, |lambda_max|)` are treated as zero.
pub const PSD_TOL: f64 = 1e-10;
/// Linear systems with a larger condition estimate are reported as singular.
pub const MAX_CONDITION: f64 = 1e14;

pub fn zeros(rows: usize, cols: usize) -> CMat {
    CMat::zeros(rows, cols)
}

pub fn identity(dim: usize) -> CMat {
    CMat::identity(dim, dim)
}

/// Largest `|m[i,j] - conj(m[j,i])|`.
pub fn hermitian_asymmetry(m: &CMat) -> f64 {
    assert!(m.is_square(), "hermitian_asymmetry on non-square matrix");
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Largest entry modulus.
pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Real part of the trace.
pub fn trace_re(m: &CMat) -> f64 {
    m.diagonal().iter().map(|z| z.re).sum()
}

/// Squared Frobenius norm.
pub fn frobenius_sq(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum()
}

/// Eigendecomposition `m = U diag(values) U^H` of a Hermitian matrix, with
/// eigenvalues sorted ascending.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: CMat,
}

impl HermitianEigen {
    /// The input is symmetrized as `(m + m^H) / 2` before factorization so
    /// round-off asymmetry does not leak into the eigenvalues.
    pub fn new(m: &CMat) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::Shape(format!(
                "eigendecomposition of a {}x{} matrix",
                m.nrows(),
                m.ncols()
            )));
        }
        let asym = hermitian_asymmetry(m);
        if asym > HERMITIAN_TOL * max_abs(m).max(1.0) {
            return Err(Error::NotHermitian { asymmetry: asym });
        }
        let sym = (m + m.adjoint()) * C64::new(0.5, 0.0);
        let eig = SymmetricEigen::new(sym);
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let vectors = CMat::from_fn(m.nrows(), m.ncols(), |r, c| eig.eigenvectors[(r, order[c])]);
        Ok(Self { values, vectors })
    }

    pub fn min(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    pub fn max(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    /// Tolerance below which an eigenvalue counts as zero for this matrix.
    pub fn zero_tol(&self) -> f64 {
        PSD_TOL * self.max().abs().max(self.min().abs()).max(1.0)
    }

    /// Fails if any eigenvalue is below `-zero_tol()`; otherwise clamps the
    /// small negative ones to zero.
    pub fn into_psd(mut self) -> Result<Self> {
        let tol = self.zero_tol();
        if self.min() < -tol {
            return Err(Error::NotPositiveSemidefinite {
                min_eigenvalue: self.min(),
            });
        }
        for v in &mut self.values {
            *v = v.max(0.0);
        }
        Ok(self)
    }

    /// `U f(D) U^H`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> CMat {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for c in 0..n {
            let s = C64::new(f(self.values[c]), 0.0);
            for r in 0..n {
                scaled[(r, c)] *= s;
            }
        }
        &scaled * self.vectors.adjoint()
    }
}

/// Unique Hermitian PSD square root `S` with `S S^H = S^2 = r`.
pub fn psd_sqrt(r: &CMat) -> Result<CMat> {
    let asym = hermitian_asymmetry(r);
    if asym > HERMITIAN_TOL {
        return Err(Error::NotHermitian { asymmetry: asym });
    }
    let eig = HermitianEigen::new(r)?.into_psd()?;
    Ok(eig.map(f64::sqrt))
}

/// Solves `mat * x = rhs` for Hermitian positive definite `mat`.
pub fn solve_hpd(mat: &CMat, rhs: &CMat, context: &'static str) -> Result<CMat> {
    let eig = HermitianEigen::new(mat)?;
    let (lo, hi) = (eig.min(), eig.max());
    let condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    if !(condition <= MAX_CONDITION) {
        return Err(Error::Singular { context, condition });
    }
    let sym = (mat + mat.adjoint()) * C64::new(0.5, 0.0);
    let chol = sym
        .cholesky()
        .ok_or(Error::Singular { context, condition })?;
    Ok(chol.solve(rhs))
}

/// Matrix of i.i.d. circularly-symmetric complex Gaussians with unit total
/// variance per entry (each real dimension has variance 1/2).
pub fn complex_gaussian<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMat {
    CMat::from_fn(rows, cols, |_, _| complex_gaussian_scalar(rng))
}

pub fn complex_gaussian_scalar<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

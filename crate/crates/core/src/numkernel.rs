//! Tolerance-aware dense complex matrix primitives.
//!
//! Every decision that depends on a numerical cutoff (rank, positivity,
//! equality) goes through a [`Tolerance`], so a single knob controls how
//! exact-arithmetic statements are realized in floating point.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Numerical cutoffs used throughout the crate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    /// Relative singular-value cutoff for rank decisions.
    pub rank_rel: f64,
    /// Most negative admissible eigenvalue, relative to the largest eigenvalue magnitude.
    pub psd_floor: f64,
    /// Entrywise absolute equality bound.
    pub eq_abs: f64,
}

impl Tolerance {
    pub const DEFAULT_VALUE: f64 = 1e-9;

    pub fn new(rank_rel: f64, psd_floor: f64, eq_abs: f64) -> Result<Self> {
        for (name, v) in [
            ("rank_rel", rank_rel),
            ("psd_floor", psd_floor),
            ("eq_abs", eq_abs),
        ] {
            if !(v > 0.0 && v <= 1e-3) {
                return Err(Error::InvalidTolerance(format!(
                    "{name} = {v} must lie in (0, 1e-3]"
                )));
            }
        }
        Ok(Self {
            rank_rel,
            psd_floor,
            eq_abs,
        })
    }

    /// All three cutoffs set to the same value.
    pub fn uniform(v: f64) -> Result<Self> {
        Self::new(v, v, v)
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            rank_rel: Self::DEFAULT_VALUE,
            psd_floor: Self::DEFAULT_VALUE,
            eq_abs: Self::DEFAULT_VALUE,
        }
    }
}

#[inline]
pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

/// The matrix unit `E_ij` in `M_n` (zero-based indices).
pub fn matrix_unit(n: usize, i: usize, j: usize) -> CMatrix {
    let mut m = CMatrix::zeros(n, n);
    m[(i, j)] = c(1.0);
    m
}

/// Standard basis vector `e_i` of `C^n` (zero-based).
pub fn basis_vector(n: usize, i: usize) -> CVector {
    let mut v = CVector::zeros(n);
    v[i] = c(1.0);
    v
}

/// `|x><y|`, the map `z -> <y, z> x`.
pub fn outer(x: &CVector, y: &CVector) -> CMatrix {
    x * y.adjoint()
}

/// `<x, y>`, conjugate-linear in the first slot.
pub fn inner(x: &CVector, y: &CVector) -> C64 {
    x.dotc(y)
}

/// Kronecker product with the block convention `A (x) B = [a_ij B]`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Largest entry magnitude; zero for an empty matrix.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

/// `max |a - b|` entrywise.
pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape(), "max_abs_diff shape mismatch");
    a.iter()
        .zip(b.iter())
        .fold(0.0_f64, |acc, (x, y)| acc.max((x - y).norm()))
}

pub fn check_finite(m: &CMatrix) -> Result<()> {
    if m.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite)
    }
}

fn check_square(m: &CMatrix) -> Result<usize> {
    let (r, c) = m.shape();
    if r != c {
        return Err(Error::NotSquare(r, c));
    }
    Ok(r)
}

/// Checks Hermiticity within `eq_abs` and returns the symmetrized `(m + m*)/2`.
pub fn hermitian_part(m: &CMatrix, tol: &Tolerance) -> Result<CMatrix> {
    check_square(m)?;
    let adj = m.adjoint();
    let asym = max_abs_diff(m, &adj);
    if asym > tol.eq_abs {
        return Err(Error::NotHermitian(asym));
    }
    Ok((m + adj) * c(0.5))
}

/// Eigen-decomposition of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct HermEig {
    /// Eigenvalues in descending order.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors as columns, aligned with `values`.
    pub vectors: CMatrix,
}

impl HermEig {
    /// `V diag(f(lambda)) V*`.
    pub fn map_spectrum(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let n = self.vectors.nrows();
        let mut out = CMatrix::zeros(n, n);
        for (k, &lam) in self.values.iter().enumerate() {
            let w = f(lam);
            if w == 0.0 {
                continue;
            }
            let col = self.vectors.column(k);
            out += (col * col.adjoint()) * c(w);
        }
        out
    }

    pub fn vector(&self, k: usize) -> CVector {
        self.vectors.column(k).into_owned()
    }

    pub fn min(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    pub fn max_magnitude(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |a, v| a.max(v.abs()))
    }
}

/// Rotates `v` so that its first non-negligible component is real positive.
pub fn fix_phase(v: &mut CVector) {
    let scale = v.iter().fold(0.0_f64, |a, z| a.max(z.norm()));
    if scale == 0.0 {
        return;
    }
    if let Some(z) = v.iter().find(|z| z.norm() > 1e-8 * scale).copied() {
        let phase = z.conj() / z.norm();
        *v *= phase;
    }
}

pub fn herm_eig(m: &CMatrix, tol: &Tolerance) -> Result<HermEig> {
    let h = hermitian_part(m, tol)?;
    let n = h.nrows();
    let eig = h.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let mut vectors = CMatrix::zeros(n, n);
    let mut values = Vec::with_capacity(n);
    for (dst, &src) in order.iter().enumerate() {
        values.push(eig.eigenvalues[src]);
        let mut v: CVector = eig.eigenvectors.column(src).into_owned();
        fix_phase(&mut v);
        vectors.set_column(dst, &v);
    }
    Ok(HermEig { values, vectors })
}

/// Thin singular value decomposition `m = u diag(s) v*`.
#[derive(Debug, Clone)]
pub struct Svd {
    /// `rows x cols`; the column for a zero singular value is zero.
    pub u: CMatrix,
    /// Descending, one per column of `m`.
    pub s: Vec<f64>,
    /// Unitary, `cols x cols`.
    pub v: CMatrix,
}

const JACOBI_MAX_SWEEPS: usize = 80;

/// One-sided Jacobi SVD.
///
/// nalgebra's bidiagonal SVD is not used: on rank-deficient complex inputs of
/// size 4 and up it occasionally returns factors that do not reconstruct the
/// input. Column orthogonalization is backward stable for any shape.
pub fn svd(m: &CMatrix) -> Svd {
    let (rows, cols) = m.shape();
    let mut w = m.clone();
    let mut v = CMatrix::identity(cols, cols);
    // Columns below this squared norm are rounding noise; rotating them only
    // drives entries into the subnormal range.
    let floor = (f64::EPSILON * m.norm()).powi(2);
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..cols {
            for q in p + 1..cols {
                let alpha = w.column(p).norm_squared();
                let beta = w.column(q).norm_squared();
                let gamma = w.column(p).dotc(&w.column(q));
                let g = gamma.norm();
                if alpha <= floor || beta <= floor || g <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                // Rotate column q by the phase of gamma, then apply a real rotation.
                let phase = gamma.conj() / g;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = cs * t;
                for mat in [&mut w, &mut v] {
                    for i in 0..mat.nrows() {
                        let a = mat[(i, p)];
                        let b = mat[(i, q)] * phase;
                        mat[(i, p)] = a * cs - b * sn;
                        mat[(i, q)] = a * sn + b * cs;
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let norms: Vec<f64> = (0..cols).map(|j| w.column(j).norm()).collect();
    let mut order: Vec<usize> = (0..cols).collect();
    order.sort_by(|&a, &b| norms[b].total_cmp(&norms[a]));
    let mut out = Svd {
        u: CMatrix::zeros(rows, cols),
        s: Vec::with_capacity(cols),
        v: CMatrix::zeros(cols, cols),
    };
    for (dst, &src) in order.iter().enumerate() {
        let s = norms[src];
        if s > 0.0 {
            out.u.set_column(dst, &(w.column(src) / c(s)));
        }
        out.v.set_column(dst, &v.column(src));
        out.s.push(s);
    }
    out
}

/// Singular values in descending order.
pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    let (rows, cols) = m.shape();
    // Orthogonalize along the shorter side.
    let mut s = if rows < cols {
        svd(&m.adjoint()).s
    } else {
        svd(m).s
    };
    s.truncate(rows.min(cols));
    s
}

fn rank_of(sv: &[f64], tol: &Tolerance) -> usize {
    let smax = sv.first().copied().unwrap_or(0.0);
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > tol.rank_rel * smax).count()
}

pub fn svd_rank(m: &CMatrix, tol: &Tolerance) -> usize {
    rank_of(&singular_values(m), tol)
}

pub fn is_psd(m: &CMatrix, tol: &Tolerance) -> Result<bool> {
    let eig = herm_eig(m, tol)?;
    Ok(eig.min() >= -tol.psd_floor * eig.max_magnitude().max(1.0))
}

/// Positive square root; eigenvalues inside the admissible negative band are clamped to zero.
pub fn psd_sqrt(m: &CMatrix, tol: &Tolerance) -> Result<CMatrix> {
    let eig = herm_eig(m, tol)?;
    if eig.min() < -tol.psd_floor * eig.max_magnitude().max(1.0) {
        return Err(Error::NotPsd(eig.min()));
    }
    Ok(eig.map_spectrum(|l| l.max(0.0).sqrt()))
}

/// Moore-Penrose pseudoinverse, singular values at or below `rank_rel * s_max` dropped.
pub fn pinv(m: &CMatrix, tol: &Tolerance) -> CMatrix {
    let (r, cdim) = m.shape();
    if m.is_empty() {
        return CMatrix::zeros(cdim, r);
    }
    let d = svd(m);
    let smax = d.s.first().copied().unwrap_or(0.0);
    let mut out = CMatrix::zeros(cdim, r);
    if smax == 0.0 {
        return out;
    }
    for (k, &s) in d.s.iter().enumerate() {
        if s > tol.rank_rel * smax {
            out += (d.v.column(k) * d.u.column(k).adjoint()) * c(1.0 / s);
        }
    }
    out
}

/// Orthonormal basis of the kernel, as columns (`cols x k`).
pub fn nullspace(m: &CMatrix, tol: &Tolerance) -> CMatrix {
    let cdim = m.ncols();
    if cdim == 0 {
        return CMatrix::zeros(0, 0);
    }
    let d = svd(m);
    let smax = d.s.first().copied().unwrap_or(0.0);
    let cutoff = tol.rank_rel * smax;
    let mut kernel: Vec<CVector> = Vec::new();
    for (k, &s) in d.s.iter().enumerate() {
        if smax == 0.0 || s <= cutoff {
            let mut v: CVector = d.v.column(k).into_owned();
            fix_phase(&mut v);
            kernel.push(v);
        }
    }
    if kernel.is_empty() {
        return CMatrix::zeros(cdim, 0);
    }
    CMatrix::from_columns(&kernel)
}

/// Orthonormal basis (columns) of the range of a Hermitian projection-like matrix:
/// eigenvectors with eigenvalue above one half.
pub fn projection_range(p: &CMatrix, tol: &Tolerance) -> Result<CMatrix> {
    let eig = herm_eig(p, tol)?;
    let cols: Vec<CVector> = eig
        .values
        .iter()
        .enumerate()
        .filter(|(_, &l)| l > 0.5)
        .map(|(k, _)| eig.vector(k))
        .collect();
    if cols.is_empty() {
        return Ok(CMatrix::zeros(p.nrows(), 0));
    }
    Ok(CMatrix::from_columns(&cols))
}

/// `tr(a)`.
pub fn trace(m: &CMatrix) -> C64 {
    m.diagonal().iter().sum()
}

//! Dense complex matrices for the small operators used throughout the crate
//! (dimensions up to 2^6).
//!
//! [`ComplexMatrix`] is a plain row-major square matrix. [`HermitianMatrix`]
//! wraps it with the guarantee `A = A^dagger`, which lets us diagonalize it
//! with cyclic complex Jacobi rotations.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Entrywise tolerance on `|A_ij - conj(A_ji)|`, scaled by `max(1, max|A_ij|)`.
pub const HERMITIAN_TOL: f64 = 1e-10;

const JACOBI_TOL: f64 = 1e-13;
const JACOBI_MAX_SWEEPS: usize = 100;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![ZERO; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                data.push(f(i, j));
            }
        }
        Self { dim, data }
    }

    /// Builds a matrix from row-major data; `data.len()` must be a perfect square.
    pub fn from_row_major(data: Vec<Complex64>) -> Result<Self> {
        let dim = (data.len() as f64).sqrt().round() as usize;
        if dim * dim != data.len() {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: data.len(),
            });
        }
        Ok(Self { dim, data })
    }

    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for row in rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Ok(Self { dim, data })
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = Complex64::new(d, 0.0);
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn rows(&self) -> impl Iterator<Item = &[Complex64]> {
        self.data.chunks(self.dim.max(1))
    }

    pub fn is_finite(&self) -> bool {
        self.data
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(j, i)].conj())
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dim, other.dim);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// True when every off-diagonal entry has modulus below `tol`.
    pub fn is_diagonal(&self, tol: f64) -> bool {
        (0..self.dim).all(|i| (0..self.dim).all(|j| i == j || self[(i, j)].norm() < tol))
    }

    pub fn diagonal(&self) -> Vec<Complex64> {
        (0..self.dim).map(|i| self[(i, i)]).collect()
    }

    /// Kronecker product; entry `(i_a * d_b + i_b, j_a * d_b + j_b)` is `A[i_a, j_a] * B[i_b, j_b]`.
    pub fn kron(&self, other: &Self) -> Self {
        let (da, db) = (self.dim, other.dim);
        Self::from_fn(da * db, |i, j| {
            self[(i / db, j / db)] * other[(i % db, j % db)]
        })
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.dim + j]
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch in matrix add");
        ComplexMatrix {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch in matrix sub");
        ComplexMatrix {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl Neg for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn neg(self) -> ComplexMatrix {
        ComplexMatrix {
            dim: self.dim,
            data: self.data.iter().map(|a| -a).collect(),
        }
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch in matrix mul");
        let n = self.dim;
        let mut out = ComplexMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == ZERO {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * rhs.data[k * n + j];
                }
            }
        }
        out
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix({}x{}) [", self.dim, self.dim)?;
        for row in self.rows() {
            write!(f, "  ")?;
            for z in row {
                write!(f, "{:>+.6}{:+.6}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// A square matrix equal to its conjugate transpose.
#[derive(Clone, PartialEq)]
pub struct HermitianMatrix(ComplexMatrix);

impl HermitianMatrix {
    /// Validates Hermiticity within [`HERMITIAN_TOL`] and symmetrizes to `(A + A^dagger) / 2`.
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        if !m.is_finite() {
            return Err(Error::NonFinite);
        }
        let n = m.dim;
        let mut max_deviation = 0.0f64;
        for i in 0..n {
            for j in i..n {
                max_deviation = max_deviation.max((m[(i, j)] - m[(j, i)].conj()).norm());
            }
        }
        if max_deviation > HERMITIAN_TOL * m.max_abs().max(1.0) {
            return Err(Error::NonHermitian { max_deviation });
        }
        Ok(Self::symmetrized(m))
    }

    /// Projects onto the Hermitian part without checking the deviation.
    pub fn symmetrized(m: ComplexMatrix) -> Self {
        let n = m.dim;
        let mut out = m;
        for i in 0..n {
            out[(i, i)] = Complex64::new(out[(i, i)].re, 0.0);
            for j in (i + 1)..n {
                let v = (out[(i, j)] + out[(j, i)].conj()) * 0.5;
                out[(i, j)] = v;
                out[(j, i)] = v.conj();
            }
        }
        Self(out)
    }

    pub fn zeros(dim: usize) -> Self {
        Self(ComplexMatrix::zeros(dim))
    }

    pub fn identity(dim: usize) -> Self {
        Self(ComplexMatrix::identity(dim))
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        Self(ComplexMatrix::from_real_diagonal(diag))
    }

    /// Projector `|psi><psi|` (not normalized).
    pub fn outer(psi: &[Complex64]) -> Self {
        Self(ComplexMatrix::from_fn(psi.len(), |i, j| {
            psi[i] * psi[j].conj()
        }))
    }

    pub fn dim(&self) -> usize {
        self.0.dim
    }

    pub fn as_matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.0
    }

    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }

    pub fn scale(&self, s: f64) -> Self {
        Self(self.0.scale(s))
    }

    pub fn kron(&self, other: &Self) -> Self {
        Self(self.0.kron(&other.0))
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        jacobi(&self.0, false).0
    }

    /// Eigenvalues (ascending) and the unitary whose columns are the matching eigenvectors.
    pub fn eigh(&self) -> (Vec<f64>, ComplexMatrix) {
        let (values, vectors) = jacobi(&self.0, true);
        (values, vectors.expect("eigenvectors requested"))
    }

    /// Smallest and largest eigenvalue, without the full decomposition.
    pub fn extreme_eigenvalues(&self) -> (f64, f64) {
        extreme_eigenvalues(&self.0)
    }

    pub fn operator_norm(&self) -> f64 {
        if self.dim() == 0 {
            return 0.0;
        }
        let (lo, hi) = self.extreme_eigenvalues();
        lo.abs().max(hi.abs())
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().first().copied().unwrap_or(0.0)
    }

    /// Applies `f` to the spectrum: `V diag(f(lambda)) V^dagger`.
    pub fn map_spectrum(&self, f: impl Fn(f64) -> f64) -> Self {
        let (values, v) = self.eigh();
        let n = self.dim();
        let mapped: Vec<f64> = values.into_iter().map(f).collect();
        let m = ComplexMatrix::from_fn(n, |i, j| {
            (0..n)
                .map(|k| v[(i, k)] * v[(j, k)].conj() * mapped[k])
                .sum()
        });
        Self::symmetrized(m)
    }
}

impl Add for &HermitianMatrix {
    type Output = HermitianMatrix;
    fn add(self, rhs: &HermitianMatrix) -> HermitianMatrix {
        HermitianMatrix(&self.0 + &rhs.0)
    }
}

impl Sub for &HermitianMatrix {
    type Output = HermitianMatrix;
    fn sub(self, rhs: &HermitianMatrix) -> HermitianMatrix {
        HermitianMatrix(&self.0 - &rhs.0)
    }
}

impl Neg for &HermitianMatrix {
    type Output = HermitianMatrix;
    fn neg(self) -> HermitianMatrix {
        HermitianMatrix(-&self.0)
    }
}

impl Index<(usize, usize)> for HermitianMatrix {
    type Output = Complex64;
    fn index(&self, idx: (usize, usize)) -> &Complex64 {
        &self.0[idx]
    }
}

impl fmt::Debug for HermitianMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Hermitian")?;
        self.0.fmt(f)
    }
}

pub fn hermitian_eigenvalues(a: &HermitianMatrix) -> Vec<f64> {
    a.eigenvalues()
}

pub fn operator_norm(a: &HermitianMatrix) -> f64 {
    a.operator_norm()
}

/// `Tr(AB)` without forming the product.
pub fn trace_product(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<Complex64> {
    if a.dim != b.dim {
        return Err(Error::DimensionMismatch {
            expected: a.dim,
            found: b.dim,
        });
    }
    let n = a.dim;
    let mut acc = ZERO;
    for i in 0..n {
        for k in 0..n {
            acc += a.data[i * n + k] * b.data[k * n + i];
        }
    }
    Ok(acc)
}

pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kron(b)
}

/// Pauli matrices: identity, X, Y, Z.
pub mod pauli {
    use super::*;

    pub fn identity() -> HermitianMatrix {
        HermitianMatrix::identity(2)
    }

    pub fn x() -> HermitianMatrix {
        HermitianMatrix(ComplexMatrix {
            dim: 2,
            data: vec![ZERO, ONE, ONE, ZERO],
        })
    }

    pub fn y() -> HermitianMatrix {
        let i = Complex64::new(0.0, 1.0);
        HermitianMatrix(ComplexMatrix {
            dim: 2,
            data: vec![ZERO, -i, i, ZERO],
        })
    }

    pub fn z() -> HermitianMatrix {
        HermitianMatrix::from_real_diagonal(&[1.0, -1.0])
    }

    /// `[sigma_0, sigma_x, sigma_y, sigma_z]`.
    pub fn basis() -> [HermitianMatrix; 4] {
        [identity(), x(), y(), z()]
    }
}

// Cyclic Jacobi for complex Hermitian matrices. Each rotation first removes the
// phase of a_pq with diag(1, e^{-i phi}) and then applies a real Givens rotation,
// so the combined unitary zeroes the (p, q) pair.
fn jacobi(a: &ComplexMatrix, want_vectors: bool) -> (Vec<f64>, Option<ComplexMatrix>) {
    let n = a.dim;
    let mut w = a.data.clone();
    let mut v = want_vectors.then(|| ComplexMatrix::identity(n).data);
    let scale = a.frobenius_norm();

    if scale > 0.0 {
        for _ in 0..JACOBI_MAX_SWEEPS {
            let mut off = 0.0;
            for p in 0..n {
                for q in (p + 1)..n {
                    off += 2.0 * w[p * n + q].norm_sqr();
                }
            }
            if off.sqrt() <= JACOBI_TOL * scale {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = w[p * n + q];
                    let g = apq.norm();
                    if g < f64::MIN_POSITIVE {
                        continue;
                    }
                    let phase = apq / g;
                    let zeta = (w[q * n + q].re - w[p * n + p].re) / (2.0 * g);
                    let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = t * c;
                    let pc = phase.conj();

                    // A <- A J
                    for k in 0..n {
                        let akp = w[k * n + p];
                        let akq = w[k * n + q];
                        w[k * n + p] = akp * c - akq * pc * s;
                        w[k * n + q] = akp * s + akq * pc * c;
                    }
                    // A <- J^dagger A
                    for k in 0..n {
                        let apk = w[p * n + k];
                        let aqk = w[q * n + k];
                        w[p * n + k] = apk * c - aqk * phase * s;
                        w[q * n + k] = apk * s + aqk * phase * c;
                    }
                    w[p * n + q] = ZERO;
                    w[q * n + p] = ZERO;
                    w[p * n + p].im = 0.0;
                    w[q * n + q].im = 0.0;

                    if let Some(v) = v.as_mut() {
                        for k in 0..n {
                            let vkp = v[k * n + p];
                            let vkq = v[k * n + q];
                            v[k * n + p] = vkp * c - vkq * pc * s;
                            v[k * n + q] = vkp * s + vkq * pc * c;
                        }
                    }
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| w[i * n + i].re.total_cmp(&w[j * n + j].re));
    let values = order.iter().map(|&i| w[i * n + i].re).collect();
    let vectors = v.map(|v| ComplexMatrix::from_fn(n, |i, j| v[i * n + order[j]]));
    (values, vectors)
}

// Householder reduction to a real symmetric tridiagonal matrix: diagonal and
// squared off-diagonal magnitudes (the phases do not affect the spectrum).
fn tridiagonal(a: &ComplexMatrix) -> (Vec<f64>, Vec<f64>) {
    let n = a.dim;
    let mut w = a.data.clone();
    let mut u = vec![ZERO; n];
    let mut p = vec![ZERO; n];
    for k in 0..n.saturating_sub(2) {
        let alpha = (k + 1..n)
            .map(|i| w[i * n + k].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if alpha == 0.0 {
            continue;
        }
        let x0 = w[(k + 1) * n + k];
        let phase = if x0.norm() > 0.0 {
            x0 / x0.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        // u = sqrt2 v / |v| with v = x + phase alpha e1, so H = I - u u^dagger
        u[k] = ZERO;
        for i in k + 1..n {
            u[i] = w[i * n + k];
        }
        u[k + 1] += phase * alpha;
        let vnorm = u[k + 1..].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let f = std::f64::consts::SQRT_2 / vnorm;
        u[k + 1..].iter_mut().for_each(|z| *z *= f);

        for i in k..n {
            let row = &w[i * n..(i + 1) * n];
            let mut acc = ZERO;
            for j in k + 1..n {
                acc += row[j] * u[j];
            }
            p[i] = acc;
        }
        let half: f64 = 0.5 * (k + 1..n).map(|i| (u[i].conj() * p[i]).re).sum::<f64>();
        for i in k..n {
            p[i] -= u[i] * half;
        }
        // A <- A - u p^dagger - p u^dagger on the lower triangle, mirrored
        for i in k..n {
            for j in k..=i {
                let v = w[i * n + j] - (u[i] * p[j].conj() + p[i] * u[j].conj());
                w[i * n + j] = v;
                w[j * n + i] = v.conj();
            }
        }
    }
    let d = (0..n).map(|i| w[i * n + i].re).collect();
    let e2 = (0..n.saturating_sub(1))
        .map(|i| w[(i + 1) * n + i].norm_sqr())
        .collect();
    (d, e2)
}

// Sturm count: eigenvalues of the tridiagonal (d, e2) strictly below x.
fn eigenvalues_below(d: &[f64], e2: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut q = 1.0;
    for i in 0..d.len() {
        q = d[i] - x - if i > 0 { e2[i - 1] / q } else { 0.0 };
        if q == 0.0 {
            q = -f64::EPSILON * (x.abs() + 1.0);
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

fn gershgorin_radius(d: &[f64], e2: &[f64]) -> f64 {
    let n = d.len();
    (0..n)
        .map(|i| {
            let l = if i > 0 { e2[i - 1].sqrt() } else { 0.0 };
            let r = if i + 1 < n { e2[i].sqrt() } else { 0.0 };
            d[i].abs() + l + r
        })
        .fold(0.0, f64::max)
}

// Eigenvalue number `index` (ascending) by bisection.
fn bisect_eigenvalue(d: &[f64], e2: &[f64], index: usize, radius: f64) -> f64 {
    let (mut lo, mut hi) = (-radius - 1e-300, radius + 1e-300);
    let tol = 0.25 * f64::EPSILON * radius;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if eigenvalues_below(d, e2, mid) > index {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

fn extreme_eigenvalues(a: &ComplexMatrix) -> (f64, f64) {
    let n = a.dim;
    if n == 0 {
        return (0.0, 0.0);
    }
    let (d, e2) = tridiagonal(a);
    let radius = gershgorin_radius(&d, &e2);
    (
        bisect_eigenvalue(&d, &e2, 0, radius),
        bisect_eigenvalue(&d, &e2, n - 1, radius),
    )
}

/// Operator norm of a Hermitian `a` if it exceeds `threshold`, else `None`.
/// Cheaper than the norm itself when the answer is `None`.
pub(crate) fn operator_norm_above(a: &ComplexMatrix, threshold: f64) -> Option<f64> {
    let n = a.dim;
    if n == 0 {
        return None;
    }
    let (d, e2) = tridiagonal(a);
    if threshold >= 0.0
        && eigenvalues_below(&d, &e2, -threshold) == 0
        && eigenvalues_below(&d, &e2, threshold) == n
    {
        return None;
    }
    let radius = gershgorin_radius(&d, &e2);
    let lo = bisect_eigenvalue(&d, &e2, 0, radius);
    let hi = bisect_eigenvalue(&d, &e2, n - 1, radius);
    let norm = lo.abs().max(hi.abs());
    (norm > threshold).then_some(norm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn herm(rows: &[&[(f64, f64)]]) -> HermitianMatrix {
        let rows: Vec<Vec<Complex64>> = rows
            .iter()
            .map(|r| r.iter().map(|&(a, b)| c(a, b)).collect())
            .collect();
        HermitianMatrix::new(ComplexMatrix::from_rows(&rows).unwrap()).unwrap()
    }

    #[test]
    fn identity_and_pauli_spectra() {
        assert_eq!(
            hermitian_eigenvalues(&HermitianMatrix::identity(2)),
            vec![1.0, 1.0]
        );
        let ev = hermitian_eigenvalues(&pauli::z());
        assert_eq!(ev, vec![-1.0, 1.0]);
        let ev = hermitian_eigenvalues(&pauli::y());
        assert!((ev[0] + 1.0).abs() < 1e-14 && (ev[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn two_by_two_matches_quadratic_formula() {
        let a = herm(&[&[(0.963, 0.0), (0.004, 0.0)], &[(0.004, 0.0), (0.137, 0.0)]]);
        // roots of x^2 - tr x + det
        let (tr, det): (f64, f64) = (0.963 + 0.137, 0.963 * 0.137 - 0.004 * 0.004);
        let disc = (tr * tr / 4.0 - det).sqrt();
        let expected = [tr / 2.0 - disc, tr / 2.0 + disc];
        let ev = hermitian_eigenvalues(&a);
        for (got, want) in ev.iter().zip(expected) {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
    }

    #[test]
    fn operator_norm_examples() {
        assert_eq!(operator_norm(&HermitianMatrix::zeros(3)), 0.0);
        assert!((operator_norm(&pauli::x()) - 1.0).abs() < 1e-15);
        assert_eq!(
            operator_norm(&HermitianMatrix::from_real_diagonal(&[0.3, -0.7])),
            0.7
        );
    }

    #[test]
    fn non_hermitian_rejected() {
        let m = ComplexMatrix::from_rows(&[
            vec![c(1.0, 0.0), c(1.0, 0.0)],
            vec![c(0.0, 0.0), c(1.0, 0.0)],
        ])
        .unwrap();
        assert!(matches!(
            HermitianMatrix::new(m),
            Err(Error::NonHermitian { .. })
        ));
    }

    #[test]
    fn trace_product_examples() {
        let i2 = ComplexMatrix::identity(2);
        assert_eq!(trace_product(&i2, &i2).unwrap(), c(2.0, 0.0));
        let zx = trace_product(pauli::z().as_matrix(), pauli::x().as_matrix()).unwrap();
        assert_eq!(zx, c(0.0, 0.0));
        let ket0 = ComplexMatrix::from_real_diagonal(&[1.0, 0.0]);
        let m = herm(&[&[(0.963, 0.0), (0.004, 0.0)], &[(0.004, 0.0), (0.137, 0.0)]]);
        assert!((trace_product(&ket0, m.as_matrix()).unwrap() - c(0.963, 0.0)).norm() < 1e-15);
        assert!(trace_product(&ket0, &ComplexMatrix::identity(3)).is_err());
    }

    #[test]
    fn kron_examples() {
        let i2 = ComplexMatrix::identity(2);
        assert_eq!(kron(&i2, &i2), ComplexMatrix::identity(4));
        let zz = kron(pauli::z().as_matrix(), pauli::z().as_matrix());
        assert_eq!(
            zz,
            ComplexMatrix::from_real_diagonal(&[1.0, -1.0, -1.0, 1.0])
        );
        let (a, b, cc, d) = (2.0, 3.0, 5.0, 7.0);
        let k = kron(
            &ComplexMatrix::from_real_diagonal(&[a, b]),
            &ComplexMatrix::from_real_diagonal(&[cc, d]),
        );
        assert_eq!(
            k,
            ComplexMatrix::from_real_diagonal(&[a * cc, a * d, b * cc, b * d])
        );
    }

    #[test]
    fn pauli_squares_are_identity() {
        for s in pauli::basis() {
            assert_eq!(s.as_matrix() * s.as_matrix(), ComplexMatrix::identity(2));
        }
        for s in &pauli::basis()[1..] {
            assert_eq!(s.trace(), 0.0);
        }
    }

    fn arb_hermitian(max_dim: usize) -> impl Strategy<Value = HermitianMatrix> {
        (1..=max_dim).prop_flat_map(|n| {
            prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n * n).prop_map(move |v| {
                let m =
                    ComplexMatrix::from_row_major(v.into_iter().map(|(a, b)| c(a, b)).collect())
                        .unwrap();
                HermitianMatrix::symmetrized(m)
            })
        })
    }

    fn arb_matrix(n: usize) -> impl Strategy<Value = ComplexMatrix> {
        prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n * n).prop_map(|v| {
            ComplexMatrix::from_row_major(v.into_iter().map(|(a, b)| c(a, b)).collect()).unwrap()
        })
    }

    proptest! {
        #[test]
        fn eigen_sum_is_trace(a in arb_hermitian(8)) {
            let s: f64 = hermitian_eigenvalues(&a).iter().sum();
            prop_assert!((s - a.trace()).abs() < 1e-9);
        }

        #[test]
        fn eigh_reconstructs(a in arb_hermitian(8)) {
            let (vals, v) = a.eigh();
            let rebuilt = a.map_spectrum(|x| x);
            prop_assert!(rebuilt.as_matrix().max_abs_diff(a.as_matrix()) < 1e-9 * a.as_matrix().frobenius_norm().max(1.0));
            let vv = &v.adjoint() * &v;
            prop_assert!(vv.max_abs_diff(&ComplexMatrix::identity(a.dim())) < 1e-12);
            prop_assert!(vals.windows(2).all(|w| w[0] <= w[1]));
        }

        #[test]
        fn operator_norm_is_max_abs_eigenvalue(a in arb_hermitian(6)) {
            let m = hermitian_eigenvalues(&a).iter().map(|x| x.abs()).fold(0.0, f64::max);
            prop_assert!((operator_norm(&a) - m).abs() < 1e-13);
        }

        #[test]
        fn extremes_match_jacobi(a in arb_hermitian(16)) {
            let ev = hermitian_eigenvalues(&a);
            let (lo, hi) = a.extreme_eigenvalues();
            prop_assert!((lo - ev[0]).abs() < 1e-12, "{} vs {}", lo, ev[0]);
            prop_assert!((hi - ev[ev.len() - 1]).abs() < 1e-12, "{} vs {}", hi, ev[ev.len() - 1]);
        }

        #[test]
        fn kron_is_associative(a in arb_matrix(2), b in arb_matrix(3), cm in arb_matrix(2)) {
            let left = kron(&kron(&a, &b), &cm);
            let right = kron(&a, &kron(&b, &cm));
            prop_assert!(left.max_abs_diff(&right) < 1e-12);
        }
    }
}

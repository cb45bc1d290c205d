//! Classical readout noise: the stochastic map `Lambda` extracted from a
//! measured POVM, its coherent residual, and the correction matrix
//! `Lambda^-1`.

use serde::{Deserialize, Serialize};

use crate::distances::{self, BoundOptions, DistanceBound};
use crate::error::{Error, Result};
use crate::matrix::HermitianMatrix;
use crate::povm::Povm;

const STOCHASTIC_TOL: f64 = 1e-9;
const RENORMALIZE_TOL: f64 = 1e-6;
const INVERSE_RESIDUAL_TOL: f64 = 1e-8;
const PIVOT_TOL: f64 = 1e-12;
const CONDITION_LIMIT: f64 = 1e12;

/// Dense real square matrix, row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct RealMatrix {
    n: usize,
    data: Vec<f64>,
}

impl RealMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for r in rows {
            if r.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Ok(Self { n, data })
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        Self { n, data }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.data
            .chunks(self.n.max(1))
            .map(<[f64]>::to_vec)
            .collect()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, j)).collect()
    }

    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.n);
        self.data
            .chunks(self.n)
            .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        let n = self.n;
        Self::from_fn(n, |i, j| {
            (0..n).map(|k| self.get(i, k) * other.get(k, j)).sum()
        })
    }

    pub fn kron(&self, other: &Self) -> Self {
        let nb = other.n;
        Self::from_fn(self.n * nb, |i, j| {
            self.get(i / nb, j / nb) * other.get(i % nb, j % nb)
        })
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Inverse by Gauss-Jordan elimination with partial pivoting.
    /// Returns `None` when a pivot falls below `PIVOT_TOL` relative to the largest entry.
    pub fn inverse(&self) -> Option<Self> {
        let n = self.n;
        let mut a = self.data.clone();
        let mut inv = Self::identity(n).data;
        let scale = a.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if scale == 0.0 {
            return None;
        }
        for col in 0..n {
            let pivot_row = (col..n)
                .max_by(|&r, &s| a[r * n + col].abs().total_cmp(&a[s * n + col].abs()))
                .expect("non-empty range");
            let pivot = a[pivot_row * n + col];
            if pivot.abs() < PIVOT_TOL * scale {
                return None;
            }
            if pivot_row != col {
                for k in 0..n {
                    a.swap(col * n + k, pivot_row * n + k);
                    inv.swap(col * n + k, pivot_row * n + k);
                }
            }
            let recip = 1.0 / pivot;
            for k in 0..n {
                a[col * n + k] *= recip;
                inv[col * n + k] *= recip;
            }
            for r in 0..n {
                if r == col {
                    continue;
                }
                let factor = a[r * n + col];
                if factor == 0.0 {
                    continue;
                }
                for k in 0..n {
                    a[r * n + k] -= factor * a[col * n + k];
                    inv[r * n + k] -= factor * inv[col * n + k];
                }
            }
        }
        Some(Self { n, data: inv })
    }
}

impl TryFrom<Vec<Vec<f64>>> for RealMatrix {
    type Error = Error;
    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::from_rows(&rows)
    }
}

impl From<RealMatrix> for Vec<Vec<f64>> {
    fn from(m: RealMatrix) -> Self {
        m.to_rows()
    }
}

/// Maximum column l1 norm: the operator norm of `A` on `(R^n, l1)`.
pub fn one_to_one_norm(a: &RealMatrix) -> f64 {
    (0..a.n)
        .map(|j| (0..a.n).map(|i| a.get(i, j).abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Left-stochastic matrix: column `j` is the distribution `p(i | j)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RealMatrix", into = "RealMatrix")]
pub struct StochasticMatrix(RealMatrix);

impl StochasticMatrix {
    pub fn new(m: RealMatrix) -> Result<Self> {
        for j in 0..m.n {
            let mut sum = 0.0;
            for i in 0..m.n {
                let x = m.get(i, j);
                if !(-STOCHASTIC_TOL..=1.0 + STOCHASTIC_TOL).contains(&x) {
                    return Err(Error::NotStochastic {
                        reason: format!("entry ({i}, {j}) = {x}"),
                    });
                }
                sum += x;
            }
            if (sum - 1.0).abs() > STOCHASTIC_TOL {
                return Err(Error::NotStochastic {
                    reason: format!("column {j} sums to {sum}"),
                });
            }
        }
        Ok(Self(m))
    }

    pub fn identity(n: usize) -> Self {
        Self(RealMatrix::identity(n))
    }

    pub fn n(&self) -> usize {
        self.0.n
    }

    pub fn matrix(&self) -> &RealMatrix {
        &self.0
    }

    pub fn apply(&self, p: &[f64]) -> Vec<f64> {
        self.0.matvec(p)
    }

    pub fn kron(&self, other: &Self) -> Self {
        Self(self.0.kron(&other.0))
    }
}

impl TryFrom<RealMatrix> for StochasticMatrix {
    type Error = Error;
    fn try_from(m: RealMatrix) -> Result<Self> {
        Self::new(m)
    }
}

impl From<StochasticMatrix> for RealMatrix {
    fn from(m: StochasticMatrix) -> Self {
        m.0
    }
}

/// `Lambda^-1` together with the `Lambda` it inverts.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrectionMatrix {
    inverse: RealMatrix,
    source: StochasticMatrix,
}

impl CorrectionMatrix {
    pub fn n(&self) -> usize {
        self.inverse.n
    }

    pub fn matrix(&self) -> &RealMatrix {
        &self.inverse
    }

    pub fn source(&self) -> &StochasticMatrix {
        &self.source
    }

    pub fn one_to_one_norm(&self) -> f64 {
        one_to_one_norm(&self.inverse)
    }
}

pub fn single_qubit_lambda(p: f64, q: f64) -> Result<StochasticMatrix> {
    for (what, v) in [("p", p), ("q", q)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::OutOfRange { what, value: v });
        }
    }
    StochasticMatrix::new(RealMatrix {
        n: 2,
        data: vec![1.0 - p, q, p, 1.0 - q],
    })
}

/// Kronecker product of per-qubit noise maps, qubit 0 leftmost.
pub fn product_lambda(factors: &[StochasticMatrix]) -> StochasticMatrix {
    let (first, rest) = factors.split_first().expect("at least one factor");
    rest.iter().fold(first.clone(), |acc, f| acc.kron(f))
}

pub fn correction_matrix(lambda: &StochasticMatrix) -> Result<CorrectionMatrix> {
    let inverse = lambda.0.inverse().ok_or(Error::Singular {
        condition_estimate: f64::INFINITY,
    })?;
    let condition_estimate = one_to_one_norm(&lambda.0) * one_to_one_norm(&inverse);
    let residual = inverse
        .matmul(&lambda.0)
        .max_abs_diff(&RealMatrix::identity(lambda.n()));
    if !condition_estimate.is_finite()
        || condition_estimate > CONDITION_LIMIT
        || residual > INVERSE_RESIDUAL_TOL
    {
        return Err(Error::Singular { condition_estimate });
    }
    Ok(CorrectionMatrix {
        inverse,
        source: lambda.clone(),
    })
}

/// Split of a measured POVM into `Lambda M_ideal` and the coherent residual `Delta`.
#[derive(Clone, Debug)]
pub struct NoiseDecomposition {
    pub lambda: StochasticMatrix,
    pub residual_effects: Vec<HermitianMatrix>,
    /// `D_op(M_exp, Lambda M_ideal)`; the upper end is what enters error bounds.
    pub coherent: DistanceBound,
    /// Largest column-sum deviation absorbed by renormalization.
    pub renormalization_residual: f64,
}

impl NoiseDecomposition {
    pub fn coherent_distance(&self) -> f64 {
        self.coherent.upper
    }
}

/// For each ideal effect, the computational basis index it projects onto.
pub(crate) fn projective_support(ideal: &Povm) -> Result<Vec<usize>> {
    let d = ideal.dim();
    if ideal.num_outcomes() != d || !ideal.is_diagonal(1e-12) {
        return Err(Error::NotProjectiveIdeal);
    }
    let mut seen = vec![false; d];
    let mut support = Vec::with_capacity(d);
    for e in ideal.effects() {
        let diag: Vec<f64> = e.as_matrix().diagonal().iter().map(|z| z.re).collect();
        let ones: Vec<usize> = (0..d).filter(|&k| (diag[k] - 1.0).abs() < 1e-12).collect();
        let zeros = diag.iter().filter(|x| x.abs() < 1e-12).count();
        if ones.len() != 1 || zeros != d - 1 || seen[ones[0]] {
            return Err(Error::NotProjectiveIdeal);
        }
        seen[ones[0]] = true;
        support.push(ones[0]);
    }
    Ok(support)
}

/// `Lambda M_ideal` as a POVM: effect `i` is `sum_j Lambda_ij P_j`.
pub fn classical_povm(lambda: &StochasticMatrix, ideal: &Povm) -> Result<Povm> {
    let support = projective_support(ideal)?;
    let n = lambda.n();
    if n != support.len() {
        return Err(Error::ShapeMismatch {
            left: n,
            right: support.len(),
        });
    }
    let effects = (0..n)
        .map(|i| {
            let mut diag = vec![0.0; n];
            for (j, &b) in support.iter().enumerate() {
                diag[b] = lambda.0.get(i, j);
            }
            HermitianMatrix::from_real_diagonal(&diag)
        })
        .collect();
    Povm::validate(effects)
}

/// Extracts `Lambda` from the diagonals of the measured effects; everything
/// off-diagonal becomes the coherent residual.
pub fn classical_part(measured: &Povm, ideal: &Povm) -> Result<NoiseDecomposition> {
    classical_part_with(measured, ideal, &BoundOptions::default())
}

pub fn classical_part_with(
    measured: &Povm,
    ideal: &Povm,
    opts: &BoundOptions,
) -> Result<NoiseDecomposition> {
    let (lambda, renormalization_residual) = extract_lambda(measured, ideal)?;
    let classical = classical_povm(&lambda, ideal)?;
    let residual_effects = measured
        .effects()
        .iter()
        .zip(classical.effects())
        .map(|(m, c)| m - c)
        .collect();
    let coherent = distances::operational_distance_bound(measured, &classical, opts)?;
    Ok(NoiseDecomposition {
        lambda,
        residual_effects,
        coherent,
        renormalization_residual,
    })
}

fn extract_lambda(measured: &Povm, ideal: &Povm) -> Result<(StochasticMatrix, f64)> {
    if measured.dim() != ideal.dim() {
        return Err(Error::DimensionMismatch {
            expected: ideal.dim(),
            found: measured.dim(),
        });
    }
    let support = projective_support(ideal)?;
    let n = support.len();
    if measured.num_outcomes() != n {
        return Err(Error::LengthMismatch {
            left: n,
            right: measured.num_outcomes(),
        });
    }
    let mut raw = RealMatrix::from_fn(n, |i, j| {
        let b = support[j];
        measured.effects()[i][(b, b)].re
    });
    let mut residual = 0.0f64;
    for j in 0..n {
        let sum: f64 = (0..n).map(|i| raw.get(i, j)).sum();
        let deviation = sum - 1.0;
        if deviation.abs() > RENORMALIZE_TOL {
            return Err(Error::ColumnSumViolation {
                column: j,
                deviation,
            });
        }
        residual = residual.max(deviation.abs());
        if deviation != 0.0 {
            for i in 0..n {
                raw.data[i * n + j] /= sum;
            }
        }
    }
    Ok((StochasticMatrix::new(raw)?, residual))
}

/// `Lambda` for a tensor product of single-qubit detectors, built factor by factor.
pub fn lambda_from_factors(factors: &[Povm]) -> Result<StochasticMatrix> {
    let lambdas = factors
        .iter()
        .map(|f| {
            let ideal = crate::povm::projective_basis(f.dim());
            extract_lambda(f, &ideal).map(|(l, _)| l)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(product_lambda(&lambdas))
}

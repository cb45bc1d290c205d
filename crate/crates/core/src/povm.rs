//! POVMs, density matrices and Born-rule statistics.
//!
//! Outcome ordering: for multi-qubit measurements qubit 0 is the most
//! significant bit of the outcome index, so `tensor(A, B)` maps outcome
//! `(i, j)` to `i * n_B + j`, consistent with [`ComplexMatrix::kron`].

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{pauli, trace_product, ComplexMatrix, HermitianMatrix};

/// Minimum eigenvalue accepted for an effect or a state.
pub const PSD_TOL: f64 = 1e-9;
/// Operator-norm tolerance on `sum_i M_i - I`.
pub const COMPLETENESS_TOL: f64 = 1e-9;

const NEGATIVE_ROUNDOFF: f64 = 1e-14;

#[derive(Clone, Debug, PartialEq)]
pub struct Povm {
    dim: usize,
    effects: Vec<HermitianMatrix>,
}

impl Povm {
    /// Checks positivity of every effect and completeness of their sum.
    pub fn validate(effects: Vec<HermitianMatrix>) -> Result<Self> {
        let dim = effects.first().ok_or(Error::EmptyPovm)?.dim();
        if let Some(bad) = effects.iter().find(|e| e.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: bad.dim(),
            });
        }
        for (index, e) in effects.iter().enumerate() {
            let min_eigenvalue = e.min_eigenvalue();
            if min_eigenvalue < -PSD_TOL {
                return Err(Error::NotPositive {
                    index,
                    min_eigenvalue,
                });
            }
        }
        let deviation = completeness_deviation(&effects);
        if deviation > COMPLETENESS_TOL {
            return Err(Error::NotComplete { deviation });
        }
        Ok(Self { dim, effects })
    }

    pub fn from_matrices(effects: Vec<ComplexMatrix>) -> Result<Self> {
        Self::validate(
            effects
                .into_iter()
                .map(HermitianMatrix::new)
                .collect::<Result<_>>()?,
        )
    }

    /// Single-qubit POVM `{[[1-p, z], [z*, q]], [[p, -z], [-z*, 1-q]]}`.
    pub fn single_qubit(p: f64, q: f64, z: Complex64) -> Result<Self> {
        let c = |re: f64| Complex64::new(re, 0.0);
        let m1 = ComplexMatrix::from_row_major(vec![c(1.0 - p), z, z.conj(), c(q)])?;
        let m2 = ComplexMatrix::from_row_major(vec![c(p), -z, -z.conj(), c(1.0 - q)])?;
        Self::from_matrices(vec![m1, m2])
    }

    /// Two-outcome qubit POVM `{M1, I - M1}`.
    pub fn from_first_effect(m1: ComplexMatrix) -> Result<Self> {
        let m2 = &ComplexMatrix::identity(m1.dim()) - &m1;
        Self::from_matrices(vec![m1, m2])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_outcomes(&self) -> usize {
        self.effects.len()
    }

    pub fn effects(&self) -> &[HermitianMatrix] {
        &self.effects
    }

    pub fn into_effects(self) -> Vec<HermitianMatrix> {
        self.effects
    }

    /// True when all effects are diagonal in the computational basis (off-diagonals below `tol`).
    pub fn is_diagonal(&self, tol: f64) -> bool {
        self.effects.iter().all(|e| e.as_matrix().is_diagonal(tol))
    }

    pub fn completeness_deviation(&self) -> f64 {
        completeness_deviation(&self.effects)
    }
}

fn completeness_deviation(effects: &[HermitianMatrix]) -> f64 {
    let dim = effects[0].dim();
    let mut sum = HermitianMatrix::zeros(dim);
    for e in effects {
        sum = &sum + e;
    }
    (&sum - &HermitianMatrix::identity(dim)).operator_norm()
}

/// Computational-basis measurement on `qubits` qubits, effects ordered by binary index.
pub fn projective_computational(qubits: u32) -> Povm {
    assert!(qubits >= 1, "need at least one qubit");
    projective_basis(1usize << qubits)
}

/// Rank-one diagonal projectors `|i><i|` for `i in 0..dim`.
pub fn projective_basis(dim: usize) -> Povm {
    let effects = (0..dim)
        .map(|i| {
            let mut d = vec![0.0; dim];
            d[i] = 1.0;
            HermitianMatrix::from_real_diagonal(&d)
        })
        .collect();
    Povm { dim, effects }
}

pub fn tensor(a: &Povm, b: &Povm) -> Povm {
    let effects = a
        .effects
        .iter()
        .flat_map(|ea| b.effects.iter().map(move |eb| ea.kron(eb)))
        .collect();
    Povm {
        dim: a.dim * b.dim,
        effects,
    }
}

/// Tensor product of the factors in qubit order (first factor is qubit 0).
pub fn tensor_all(factors: &[Povm]) -> Povm {
    let (first, rest) = factors.split_first().expect("at least one factor");
    rest.iter().fold(first.clone(), |acc, f| tensor(&acc, f))
}

#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix(HermitianMatrix);

impl DensityMatrix {
    pub fn new(m: HermitianMatrix) -> Result<Self> {
        let trace = m.trace();
        if (trace - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidState {
                reason: format!("trace {trace}"),
            });
        }
        let min = m.min_eigenvalue();
        if min < -PSD_TOL {
            return Err(Error::InvalidState {
                reason: format!("min eigenvalue {min:e}"),
            });
        }
        Ok(Self(m))
    }

    /// `|psi><psi| / <psi|psi>`.
    pub fn pure(psi: &[Complex64]) -> Result<Self> {
        let norm2: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        if !norm2.is_finite() || norm2 <= 0.0 {
            return Err(Error::InvalidState {
                reason: "zero or non-finite state vector".into(),
            });
        }
        let s = 1.0 / norm2.sqrt();
        let normed: Vec<Complex64> = psi.iter().map(|z| z * s).collect();
        Ok(Self(HermitianMatrix::outer(&normed)))
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self(HermitianMatrix::identity(dim).scale(1.0 / dim as f64))
    }

    pub fn basis_state(dim: usize, index: usize) -> Self {
        let mut d = vec![0.0; dim];
        d[index] = 1.0;
        Self(HermitianMatrix::from_real_diagonal(&d))
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn matrix(&self) -> &HermitianMatrix {
        &self.0
    }

    pub fn tensor(&self, other: &Self) -> Self {
        Self(self.0.kron(&other.0))
    }
}

/// Outcome distribution: nonnegative entries summing to one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ProbabilityVector(Vec<f64>);

impl ProbabilityVector {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidProbabilities {
                reason: "empty".into(),
            });
        }
        if let Some(x) = entries.iter().find(|x| !x.is_finite() || **x < -1e-12) {
            return Err(Error::InvalidProbabilities {
                reason: format!("entry {x}"),
            });
        }
        let sum: f64 = entries.iter().sum();
        if (sum - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidProbabilities {
                reason: format!("sum {sum}"),
            });
        }
        Ok(Self(entries))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    /// Outer product `p_a (x) p_b`, flat index `i * len(b) + j`.
    pub fn outer(&self, other: &Self) -> Self {
        Self(
            self.0
                .iter()
                .flat_map(|a| other.0.iter().map(move |b| a * b))
                .collect(),
        )
    }
}

/// `p_i = Tr(rho M_i)`, with tiny negative roundoff clamped to zero.
pub fn born_probabilities(rho: &DensityMatrix, m: &Povm) -> Result<ProbabilityVector> {
    if rho.dim() != m.dim() {
        return Err(Error::DimensionMismatch {
            expected: m.dim(),
            found: rho.dim(),
        });
    }
    let probs = m
        .effects
        .iter()
        .map(|e| {
            let p = trace_product(rho.matrix().as_matrix(), e.as_matrix())
                .expect("dims checked")
                .re;
            if p < 0.0 && p > -NEGATIVE_ROUNDOFF {
                0.0
            } else {
                p
            }
        })
        .collect();
    ProbabilityVector::new(probs)
}

/// Decomposition of the first effect of a qubit POVM on the Pauli basis,
/// `M_1 = n0 I + nx X + ny Y + nz Z`, plus the readout error probabilities.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReadoutParams {
    pub n0: f64,
    pub nx: f64,
    pub ny: f64,
    pub nz: f64,
    /// Magnitude of the coherent part, `sqrt(nx^2 + ny^2)`.
    pub z_mag: f64,
    /// Probability of reading outcome 2 on `|0>`: `1 - (M_1)_00`.
    pub p: f64,
    /// Probability of reading outcome 1 on `|1>`: `(M_1)_11`.
    pub q: f64,
}

impl ReadoutParams {
    pub fn first_effect(&self) -> ComplexMatrix {
        let [i, x, y, z] = pauli::basis();
        let mut m = i.as_matrix().scale(self.n0);
        m = &m + &x.as_matrix().scale(self.nx);
        m = &m + &y.as_matrix().scale(self.ny);
        &m + &z.as_matrix().scale(self.nz)
    }

    /// Positivity of both effects: `n0^2 - 1 <= |z|^2 + nz^2 <= n0^2` (plus trace conditions).
    pub fn is_physical(&self, tol: f64) -> bool {
        let r2 = self.z_mag * self.z_mag + self.nz * self.nz;
        r2 <= self.n0 * self.n0 + tol
            && r2 <= (1.0 - self.n0) * (1.0 - self.n0) + tol
            && self.n0 >= -tol
            && self.n0 <= 1.0 + tol
    }
}

pub fn readout_params(m: &Povm) -> Result<ReadoutParams> {
    if m.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: m.dim(),
        });
    }
    if m.num_outcomes() != 2 {
        return Err(Error::LengthMismatch {
            left: 2,
            right: m.num_outcomes(),
        });
    }
    let m1 = m.effects[0].as_matrix();
    let coeff = |s: &HermitianMatrix| trace_product(m1, s.as_matrix()).map(|t| t.re / 2.0);
    let [i, x, y, z] = pauli::basis();
    let (n0, nx, ny, nz) = (coeff(&i)?, coeff(&x)?, coeff(&y)?, coeff(&z)?);
    Ok(ReadoutParams {
        n0,
        nx,
        ny,
        nz,
        z_mag: nx.hypot(ny),
        p: 1.0 - m1[(0, 0)].re,
        q: m1[(1, 1)].re,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn computational_projectors_validate() {
        let p = projective_computational(1);
        assert!(Povm::validate(p.effects().to_vec()).is_ok());
        assert_eq!(
            p.effects()[0],
            HermitianMatrix::from_real_diagonal(&[1.0, 0.0])
        );
        assert_eq!(
            p.effects()[1],
            HermitianMatrix::from_real_diagonal(&[0.0, 1.0])
        );
        assert!(p.completeness_deviation() == 0.0);

        let p2 = projective_computational(2);
        assert_eq!(p2.num_outcomes(), 4);
        for (i, e) in p2.effects().iter().enumerate() {
            let mut d = [0.0; 4];
            d[i] = 1.0;
            assert_eq!(e, &HermitianMatrix::from_real_diagonal(&d));
        }
    }

    #[test]
    fn negative_effect_rejected() {
        let err = Povm::validate(vec![
            HermitianMatrix::from_real_diagonal(&[1.2, 0.0]),
            HermitianMatrix::from_real_diagonal(&[-0.2, 1.0]),
        ])
        .unwrap_err();
        match err {
            Error::NotPositive {
                index,
                min_eigenvalue,
            } => {
                assert_eq!(index, 1);
                assert!((min_eigenvalue + 0.2).abs() < 1e-12);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn incomplete_and_mismatched_rejected() {
        let err = Povm::validate(vec![
            HermitianMatrix::from_real_diagonal(&[0.5, 0.0]),
            HermitianMatrix::from_real_diagonal(&[0.0, 1.0]),
        ])
        .unwrap_err();
        assert!(matches!(err, Error::NotComplete { deviation } if (deviation - 0.5).abs() < 1e-12));
        let err = Povm::validate(vec![
            HermitianMatrix::identity(2),
            HermitianMatrix::zeros(3),
        ])
        .unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
        assert!(matches!(Povm::validate(vec![]), Err(Error::EmptyPovm)));
    }

    #[test]
    fn ibm_q0_is_valid() {
        let m1 = ComplexMatrix::from_row_major(vec![
            c(0.963, 0.0),
            c(0.004, 0.0),
            c(0.004, 0.0),
            c(0.137, 0.0),
        ])
        .unwrap();
        assert!(Povm::from_first_effect(m1).is_ok());
    }

    #[test]
    fn tensor_of_projectors() {
        let p1 = projective_computational(1);
        assert_eq!(tensor(&p1, &p1), projective_computational(2));
        let t = tensor(&fixtures::ibm(0), &fixtures::ibm(1));
        assert_eq!(t.num_outcomes(), 4);
        assert!(Povm::validate(t.effects().to_vec()).is_ok());
    }

    #[test]
    fn born_examples() {
        let p1 = projective_computational(1);
        let ket0 = DensityMatrix::basis_state(2, 0);
        assert_eq!(
            born_probabilities(&ket0, &p1).unwrap().as_slice(),
            &[1.0, 0.0]
        );

        let q0 = fixtures::ibm(0);
        let mixed = born_probabilities(&DensityMatrix::maximally_mixed(2), &q0).unwrap();
        assert!((mixed.as_slice()[0] - 0.55).abs() < 1e-15);
        assert!((mixed.as_slice()[1] - 0.45).abs() < 1e-15);

        let ket1 = born_probabilities(&DensityMatrix::basis_state(2, 1), &q0).unwrap();
        assert!((ket1.as_slice()[0] - 0.137).abs() < 1e-15);
        assert!((ket1.as_slice()[1] - 0.863).abs() < 1e-15);

        let wrong = DensityMatrix::maximally_mixed(4);
        assert!(matches!(
            born_probabilities(&wrong, &q0),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn readout_params_examples() {
        let r = readout_params(&projective_computational(1)).unwrap();
        assert_eq!((r.n0, r.nz, r.z_mag, r.p, r.q), (0.5, 0.5, 0.0, 0.0, 0.0));

        let r = readout_params(&fixtures::ibm(0)).unwrap();
        assert!((r.p - 0.037).abs() < 1e-12);
        assert!((r.q - 0.137).abs() < 1e-12);
        assert!((r.z_mag - 0.004).abs() < 1e-12);

        let r = readout_params(&fixtures::ibm(1)).unwrap();
        assert!((r.z_mag - (0.002f64.powi(2) + 0.001f64.powi(2)).sqrt()).abs() < 1e-12);
        assert!((r.z_mag - 0.002236).abs() < 1e-6);

        for f in fixtures::all() {
            let r = readout_params(&f.povm).unwrap();
            assert!(r.is_physical(1e-9), "{}", f.name);
        }

        assert!(readout_params(&projective_computational(2)).is_err());
    }

    #[test]
    fn single_qubit_constructor_rejects_large_z() {
        assert!(Povm::single_qubit(0.037, 0.137, c(0.1, 0.0)).is_ok());
        assert!(matches!(
            Povm::single_qubit(0.037, 0.137, c(0.2, 0.0)),
            Err(Error::NotPositive { index: 1, .. })
        ));
    }

    fn arb_state(dim: usize) -> impl Strategy<Value = DensityMatrix> {
        prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), dim)
            .prop_filter("nonzero", |v| {
                v.iter().any(|(a, b)| a.abs() + b.abs() > 1e-3)
            })
            .prop_map(|v| {
                DensityMatrix::pure(&v.into_iter().map(|(a, b)| c(a, b)).collect::<Vec<_>>())
                    .unwrap()
            })
    }

    fn arb_qubit_povm() -> impl Strategy<Value = Povm> {
        (
            0.0f64..0.5,
            0.0f64..0.5,
            0.0f64..1.0,
            0.0f64..std::f64::consts::TAU,
        )
            .prop_map(|(p, q, r, phi)| {
                let zmax = ((1.0 - p) * q).min(p * (1.0 - q)).sqrt();
                Povm::single_qubit(p, q, Complex64::from_polar(r * zmax * 0.999, phi)).unwrap()
            })
    }

    proptest! {
        #[test]
        fn born_output_is_probability_vector(m in arb_qubit_povm(), rho in arb_state(2)) {
            let p = born_probabilities(&rho, &m).unwrap();
            prop_assert!(p.as_slice().iter().all(|x| *x >= 0.0));
        }

        #[test]
        fn tensor_born_factorizes(a in arb_qubit_povm(), b in arb_qubit_povm(), ra in arb_state(2), rb in arb_state(2)) {
            let joint = born_probabilities(&ra.tensor(&rb), &tensor(&a, &b)).unwrap();
            let prod = born_probabilities(&ra, &a).unwrap().outer(&born_probabilities(&rb, &b).unwrap());
            for (x, y) in joint.as_slice().iter().zip(prod.as_slice()) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }

        #[test]
        fn readout_params_round_trip(m in arb_qubit_povm()) {
            let r = readout_params(&m).unwrap();
            prop_assert!(r.first_effect().max_abs_diff(m.effects()[0].as_matrix()) < 1e-12);
        }
    }
}

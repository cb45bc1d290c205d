//! Detector tomography: reconstructing a POVM from counts recorded on a set
//! of known Pauli-eigenstate preparations.
//!
//! Two estimators are provided. [`linear_inversion`] solves the Born-rule
//! equations in least squares and may return unphysical effects.
//! [`mle_fit`] runs the positivity- and completeness-preserving fixed-point
//! iteration
//!
//! ```text
//! R_i = sum_l (f_li / p_li) rho_l
//! S   = sum_i R_i M_i R_i
//! M_i <- S^{-1/2} R_i M_i R_i S^{-1/2}
//! ```
//!
//! starting from `M_i = I / n`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{trace_product, ComplexMatrix, HermitianMatrix};
use crate::noise::RealMatrix;
use crate::povm::{DensityMatrix, Povm};

const PROBABILITY_FLOOR: f64 = 1e-12;
const EIGENVALUE_FLOOR: f64 = 1e-12;
const RANK_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeSet {
    /// `x+, y+, z+, z-` per qubit.
    Minimal,
    /// All six Pauli eigenstates per qubit.
    #[default]
    Overcomplete,
}

impl ProbeSet {
    pub fn single_qubit_labels(self) -> &'static [&'static str] {
        match self {
            ProbeSet::Minimal => &["x+", "y+", "z+", "z-"],
            ProbeSet::Overcomplete => &["z+", "z-", "x+", "x-", "y+", "y-"],
        }
    }

    /// Product labels for `qubits` qubits, qubit 0 varying slowest.
    pub fn labels(self, qubits: usize) -> Vec<String> {
        let single = self.single_qubit_labels();
        let mut out = vec![String::new()];
        for _ in 0..qubits {
            out = out
                .iter()
                .flat_map(|prefix| {
                    single.iter().map(move |s| {
                        if prefix.is_empty() {
                            (*s).to_string()
                        } else {
                            format!("{prefix} {s}")
                        }
                    })
                })
                .collect();
        }
        out
    }
}

fn single_qubit_ket(token: &str) -> Option<[Complex64; 2]> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let c = |re: f64, im: f64| Complex64::new(re, im);
    let token = token.replace('\u{2212}', "-");
    Some(match token.as_str() {
        "z+" => [c(1.0, 0.0), c(0.0, 0.0)],
        "z-" => [c(0.0, 0.0), c(1.0, 0.0)],
        "x+" => [c(s, 0.0), c(s, 0.0)],
        "x-" => [c(s, 0.0), c(-s, 0.0)],
        "y+" => [c(s, 0.0), c(0.0, s)],
        "y-" => [c(s, 0.0), c(0.0, -s)],
        _ => return None,
    })
}

/// Product of single-qubit Pauli eigenstates, e.g. `"z+ x+"`.
pub fn pauli_state(label: &str) -> Result<DensityMatrix> {
    let tokens: Vec<&str> = label.split_whitespace().collect();
    if tokens.is_empty() {
        return Err(Error::BadLabel(label.to_string()));
    }
    let mut psi = vec![Complex64::new(1.0, 0.0)];
    for t in tokens {
        let ket = single_qubit_ket(t).ok_or_else(|| Error::BadLabel(label.to_string()))?;
        psi = psi
            .iter()
            .flat_map(|a| ket.iter().map(move |b| a * b))
            .collect();
    }
    DensityMatrix::pure(&psi)
}

pub fn qubit_count(label: &str) -> usize {
    label.split_whitespace().count()
}

/// Per-outcome counts of one experiment.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountsVector {
    shots: u64,
    counts: Vec<u64>,
}

impl CountsVector {
    pub fn new(counts: Vec<u64>) -> Result<Self> {
        let shots: u64 = counts.iter().sum();
        if shots == 0 {
            return Err(Error::InvalidCounts("no shots recorded".into()));
        }
        Ok(Self { shots, counts })
    }

    /// Checks the counts against a declared shot total.
    pub fn with_shots(shots: u64, counts: Vec<u64>) -> Result<Self> {
        let c = Self::new(counts)?;
        if c.shots != shots {
            return Err(Error::InvalidCounts(format!(
                "counts sum to {} but {shots} shots were declared",
                c.shots
            )));
        }
        Ok(c)
    }

    pub fn shots(&self) -> u64 {
        self.shots
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn frequencies(&self) -> Vec<f64> {
        let n = self.shots as f64;
        self.counts.iter().map(|&c| c as f64 / n).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CalibrationRecord {
    pub label: String,
    pub rho: DensityMatrix,
    pub counts: CountsVector,
}

impl CalibrationRecord {
    pub fn new(label: &str, counts: CountsVector) -> Result<Self> {
        let rho = pauli_state(label)?;
        if counts.len() != rho.dim() {
            return Err(Error::LengthMismatch {
                left: rho.dim(),
                right: counts.len(),
            });
        }
        Ok(Self {
            label: label.to_string(),
            rho,
            counts,
        })
    }
}

fn check_records(records: &[CalibrationRecord]) -> Result<(usize, usize)> {
    let first = records.first().ok_or(Error::RankDeficient {
        rank: 0,
        required: 1,
    })?;
    let dim = first.rho.dim();
    let outcomes = first.counts.len();
    for r in records {
        if r.rho.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: r.rho.dim(),
            });
        }
        if r.counts.len() != outcomes {
            return Err(Error::LengthMismatch {
                left: outcomes,
                right: r.counts.len(),
            });
        }
    }
    Ok((dim, outcomes))
}

// Orthonormal Hermitian basis: E_kk, (E_kl + E_lk)/sqrt2, i(E_kl - E_lk)/sqrt2.
fn hermitian_basis(d: usize) -> Vec<ComplexMatrix> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut basis = Vec::with_capacity(d * d);
    for k in 0..d {
        let mut m = ComplexMatrix::zeros(d);
        m[(k, k)] = Complex64::new(1.0, 0.0);
        basis.push(m);
    }
    for k in 0..d {
        for l in (k + 1)..d {
            let mut re = ComplexMatrix::zeros(d);
            re[(k, l)] = Complex64::new(s, 0.0);
            re[(l, k)] = Complex64::new(s, 0.0);
            basis.push(re);
            let mut im = ComplexMatrix::zeros(d);
            im[(k, l)] = Complex64::new(0.0, s);
            im[(l, k)] = Complex64::new(0.0, -s);
            basis.push(im);
        }
    }
    basis
}

/// Least-squares solution of `Tr(rho_l M_i) = f_li`. Exact for a minimal
/// spanning probe set; positivity is not enforced.
pub fn linear_inversion(records: &[CalibrationRecord]) -> Result<Vec<HermitianMatrix>> {
    let (dim, outcomes) = check_records(records)?;
    let basis = hermitian_basis(dim);
    let params = basis.len();
    let design: Vec<Vec<f64>> = records
        .iter()
        .map(|r| {
            basis
                .iter()
                .map(|b| {
                    trace_product(r.rho.matrix().as_matrix(), b)
                        .expect("dims")
                        .re
                })
                .collect()
        })
        .collect();

    let gram = RealMatrix::from_fn(params, |a, b| {
        design.iter().map(|row| row[a] * row[b]).sum()
    });
    let gram_h = HermitianMatrix::symmetrized(ComplexMatrix::from_fn(params, |a, b| {
        Complex64::new(gram.get(a, b), 0.0)
    }));
    let spectrum = gram_h.eigenvalues();
    let top = spectrum.last().copied().unwrap_or(0.0);
    let rank = spectrum
        .iter()
        .filter(|&&x| x > RANK_TOL * top.max(1.0))
        .count();
    if rank < params {
        return Err(Error::RankDeficient {
            rank,
            required: params,
        });
    }
    let gram_inv = gram.inverse().ok_or(Error::RankDeficient {
        rank,
        required: params,
    })?;

    let freqs: Vec<Vec<f64>> = records.iter().map(|r| r.counts.frequencies()).collect();
    (0..outcomes)
        .map(|i| {
            let rhs: Vec<f64> = (0..params)
                .map(|a| {
                    design
                        .iter()
                        .zip(&freqs)
                        .map(|(row, f)| row[a] * f[i])
                        .sum()
                })
                .collect();
            let coeffs = gram_inv.matvec(&rhs);
            let mut m = ComplexMatrix::zeros(dim);
            for (c, b) in coeffs.iter().zip(&basis) {
                m = &m + &b.scale(*c);
            }
            Ok(HermitianMatrix::symmetrized(m))
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MleOptions {
    /// Stop when the largest Frobenius change of any effect falls below this.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for MleOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 10_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MleDiagnostics {
    pub iterations: usize,
    pub final_change: f64,
    pub log_likelihood: f64,
    pub converged: bool,
    /// Log-likelihood of every iterate, starting with the initial guess.
    #[serde(skip)]
    pub log_likelihood_trace: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MleFit {
    pub povm: Povm,
    pub diagnostics: MleDiagnostics,
}

fn log_likelihood(freqs: &[Vec<f64>], probs: &[Vec<f64>]) -> f64 {
    freqs
        .iter()
        .zip(probs)
        .flat_map(|(f, p)| f.iter().zip(p))
        .filter(|(f, _)| **f > 0.0)
        .map(|(f, p)| f * p.max(PROBABILITY_FLOOR).ln())
        .sum()
}

fn predicted(rhos: &[&ComplexMatrix], effects: &[HermitianMatrix]) -> Vec<Vec<f64>> {
    rhos.iter()
        .map(|rho| {
            effects
                .iter()
                .map(|e| trace_product(rho, e.as_matrix()).expect("dims").re)
                .collect()
        })
        .collect()
}

/// Maximum-likelihood POVM for the calibration records.
///
/// Returns [`Error::NotConverged`] carrying the last iterate when the step
/// size has not dropped below `opts.tol` within `opts.max_iter` iterations.
pub fn mle_fit(records: &[CalibrationRecord], opts: &MleOptions) -> Result<MleFit> {
    let (dim, outcomes) = check_records(records)?;
    // same spanning requirement as linear inversion
    linear_inversion(records)?;

    let rhos: Vec<&ComplexMatrix> = records.iter().map(|r| r.rho.matrix().as_matrix()).collect();
    let freqs: Vec<Vec<f64>> = records.iter().map(|r| r.counts.frequencies()).collect();

    let mut effects: Vec<HermitianMatrix> =
        vec![HermitianMatrix::identity(dim).scale(1.0 / outcomes as f64); outcomes];
    let mut probs = predicted(&rhos, &effects);
    let mut trace = vec![log_likelihood(&freqs, &probs)];
    let mut change = f64::INFINITY;
    let mut iterations = 0;

    while iterations < opts.max_iter {
        let rmr: Vec<ComplexMatrix> = (0..outcomes)
            .map(|i| {
                let mut r = ComplexMatrix::zeros(dim);
                for (l, rho) in rhos.iter().enumerate() {
                    let f = freqs[l][i];
                    if f > 0.0 {
                        r = &r + &rho.scale(f / probs[l][i].max(PROBABILITY_FLOOR));
                    }
                }
                &(&r * effects[i].as_matrix()) * &r
            })
            .collect();
        let mut s = ComplexMatrix::zeros(dim);
        for m in &rmr {
            s = &s + m;
        }
        let inv_sqrt =
            HermitianMatrix::symmetrized(s).map_spectrum(|x| 1.0 / x.max(EIGENVALUE_FLOOR).sqrt());
        let norm = inv_sqrt.as_matrix();

        let next: Vec<HermitianMatrix> = rmr
            .iter()
            .map(|m| HermitianMatrix::symmetrized(&(norm * m) * norm))
            .collect();
        change = next
            .iter()
            .zip(&effects)
            .map(|(a, b)| (a - b).as_matrix().frobenius_norm())
            .fold(0.0, f64::max);
        effects = next;
        probs = predicted(&rhos, &effects);
        trace.push(log_likelihood(&freqs, &probs));
        iterations += 1;
        if change <= opts.tol {
            break;
        }
    }

    let converged = change <= opts.tol;
    let diagnostics = MleDiagnostics {
        iterations,
        final_change: change,
        log_likelihood: *trace.last().expect("non-empty"),
        converged,
        log_likelihood_trace: trace,
    };
    let fit = MleFit {
        povm: Povm::validate(effects)?,
        diagnostics,
    };
    if converged {
        Ok(fit)
    } else {
        Err(Error::NotConverged(Box::new(fit)))
    }
}

/// Exact Born probabilities for every probe, rounded to integer counts out of `shots`.
/// With `shots` a multiple of the probabilities' denominators this is noiseless.
pub fn synthesize_records(
    povm: &Povm,
    labels: &[String],
    shots: u64,
) -> Result<Vec<CalibrationRecord>> {
    labels
        .iter()
        .map(|label| {
            let rho = pauli_state(label)?;
            let p = crate::povm::born_probabilities(&rho, povm)?;
            let mut counts: Vec<u64> = p
                .as_slice()
                .iter()
                .map(|x| (x * shots as f64).round() as u64)
                .collect();
            let total: u64 = counts.iter().sum();
            let (imax, _) = counts
                .iter()
                .enumerate()
                .max_by_key(|(_, c)| **c)
                .expect("non-empty");
            counts[imax] = (counts[imax] + shots).saturating_sub(total);
            CalibrationRecord::new(label, CountsVector::with_shots(shots, counts)?)
        })
        .collect()
}

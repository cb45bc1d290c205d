//! Synthetic experiments: Haar-random states, multinomial sampling and the
//! Monte Carlo estimate of how often correction helps.
//!
//! Every trial draws from its own ChaCha8 stream (`seed`, stream = trial
//! index), so results do not depend on thread count or scheduling.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distances::{tv_distance, BoundOptions};
use crate::error::{Error, Result};
use crate::mitigation::{self, characterize, Characterization, RawCorrected};
use crate::povm::{born_probabilities, projective_basis, DensityMatrix, Povm, ProbabilityVector};
use crate::tomography::CountsVector;

/// Generator for trial `trial` of a run seeded with `seed`.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

pub fn haar_state(dim: usize, seed: u64) -> Result<DensityMatrix> {
    haar_state_with(dim, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Normalized complex standard-Gaussian vector, as a density matrix.
pub fn haar_state_with<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<DensityMatrix> {
    if dim < 2 {
        return Err(Error::OutOfRange {
            what: "dimension",
            value: dim as f64,
        });
    }
    loop {
        let psi: Vec<Complex64> = (0..dim)
            .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        if psi.iter().map(|c| c.norm_sqr()).sum::<f64>() > 1e-300 {
            return DensityMatrix::pure(&psi);
        }
    }
}

pub fn sample_counts(p: &ProbabilityVector, shots: u64, seed: u64) -> Result<CountsVector> {
    sample_counts_with(p, shots, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// One multinomial draw, as a chain of conditional binomials.
pub fn sample_counts_with<R: Rng + ?Sized>(
    p: &ProbabilityVector,
    shots: u64,
    rng: &mut R,
) -> Result<CountsVector> {
    if shots == 0 {
        return Err(Error::OutOfRange {
            what: "shots",
            value: 0.0,
        });
    }
    let probs = p.as_slice();
    let mut counts = vec![0u64; probs.len()];
    let mut remaining = shots;
    let mut mass = 1.0f64;
    for (i, &pi) in probs.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        if i + 1 == probs.len() {
            counts[i] = remaining;
            break;
        }
        let pi = pi.max(0.0);
        let cond = if mass > 0.0 {
            (pi / mass).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let k = Binomial::new(remaining, cond)
            .map_err(|_| Error::InvalidProbabilities {
                reason: format!("bad conditional probability {cond}"),
            })?
            .sample(rng);
        counts[i] = k;
        remaining -= k;
        mass -= pi;
    }
    CountsVector::with_shots(shots, counts)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shots {
    Finite(u64),
    /// Use the exact Born probabilities instead of sampled frequencies.
    Exact,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FractionOptions {
    pub trials: usize,
    pub shots: Shots,
    pub pr_err: f64,
    pub seed: u64,
    pub bounds: BoundOptions,
}

impl Default for FractionOptions {
    fn default() -> Self {
        Self {
            trials: 10_000,
            shots: Shots::Finite(8192),
            pr_err: mitigation::DEFAULT_PR_ERR,
            seed: 0,
            bounds: BoundOptions::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub q05: f64,
    pub median: f64,
    pub q95: f64,
    pub max: f64,
}

impl Summary {
    fn of(values: &[f64]) -> Self {
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let quantile = |q: f64| {
            let pos = q * (sorted.len() - 1) as f64;
            let lo = pos.floor() as usize;
            let hi = pos.ceil() as usize;
            sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
        };
        Self {
            mean: sorted.iter().sum::<f64>() / sorted.len() as f64,
            q05: quantile(0.05),
            median: quantile(0.5),
            q95: quantile(0.95),
            max: *sorted.last().expect("non-empty"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FractionReport {
    pub f: f64,
    pub successes: usize,
    pub ties: usize,
    /// Every trial tied, so `f` says nothing about the correction.
    pub degenerate: bool,
    pub trials: usize,
    pub shots: Shots,
    pub pr_err: f64,
    pub epsilon: f64,
    pub norm_1to1: f64,
    pub coherent_distance: f64,
    pub delta: f64,
    pub dop: f64,
    pub mean_alpha: f64,
    /// `(delta + <alpha>) / (D_op + eps)`.
    pub ratio: f64,
    /// Trials with `tv(corrected, ideal) > delta + alpha` beyond roundoff.
    pub bound_violations: usize,
    pub tv_raw: Summary,
    pub tv_corrected: Summary,
}

const BOUND_SLACK: f64 = 1e-12;

struct Trial {
    tv_raw: f64,
    tv_corrected: f64,
    alpha: f64,
}

pub fn fraction_f(noisy: &Povm, ideal: &Povm, opts: &FractionOptions) -> Result<FractionReport> {
    let ch = characterize(noisy, ideal, &opts.bounds)?;
    fraction_f_with(noisy, ideal, &ch, opts)
}

/// Monte Carlo over `opts.trials` Haar-random states with a precomputed
/// characterization of `noisy` against `ideal`.
pub fn fraction_f_with(
    noisy: &Povm,
    ideal: &Povm,
    ch: &Characterization,
    opts: &FractionOptions,
) -> Result<FractionReport> {
    if opts.trials == 0 {
        return Err(Error::OutOfRange {
            what: "trials",
            value: 0.0,
        });
    }
    if noisy.dim() != ideal.dim() || noisy.num_outcomes() != ideal.num_outcomes() {
        return Err(Error::ShapeMismatch {
            left: noisy.num_outcomes(),
            right: ideal.num_outcomes(),
        });
    }
    let epsilon = match opts.shots {
        Shots::Finite(n) => mitigation::statistical_epsilon(n, noisy.num_outcomes(), opts.pr_err)?,
        Shots::Exact => 0.0,
    };
    let norm = ch.norm_1to1();
    let coherent = ch.coherent.upper;
    let delta = mitigation::delta_bound(norm, coherent, epsilon);

    let trials = (0..opts.trials as u64)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(opts.seed, t);
            let rho = haar_state_with(noisy.dim(), &mut rng)?;
            let p_ideal = born_probabilities(&rho, ideal)?;
            let p_exp = born_probabilities(&rho, noisy)?;
            let est = match opts.shots {
                Shots::Finite(n) => {
                    ProbabilityVector::new(sample_counts_with(&p_exp, n, &mut rng)?.frequencies())?
                }
                Shots::Exact => p_exp,
            };
            let raw: RawCorrected = mitigation::correct(&est, &ch.correction)?;
            let (corrected, alpha) = mitigation::project_to_simplex(&raw)?;
            Ok(Trial {
                tv_raw: tv_distance(est.as_slice(), p_ideal.as_slice())?,
                tv_corrected: tv_distance(corrected.as_slice(), p_ideal.as_slice())?,
                alpha,
            })
        })
        .collect::<Result<Vec<Trial>>>()?;

    let successes = trials.iter().filter(|t| t.tv_corrected < t.tv_raw).count();
    let ties = trials.iter().filter(|t| t.tv_corrected == t.tv_raw).count();
    let bound_violations = trials
        .iter()
        .filter(|t| t.tv_corrected > delta + t.alpha + BOUND_SLACK)
        .count();
    let mean_alpha = trials.iter().map(|t| t.alpha).sum::<f64>() / trials.len() as f64;
    let dop = ch.distance_to_ideal.lower;
    let raw: Vec<f64> = trials.iter().map(|t| t.tv_raw).collect();
    let corrected: Vec<f64> = trials.iter().map(|t| t.tv_corrected).collect();

    Ok(FractionReport {
        f: successes as f64 / trials.len() as f64,
        successes,
        ties,
        degenerate: ties == trials.len(),
        trials: trials.len(),
        shots: opts.shots,
        pr_err: opts.pr_err,
        epsilon,
        norm_1to1: norm,
        coherent_distance: coherent,
        delta,
        dop,
        mean_alpha,
        ratio: (delta + mean_alpha) / (dop + epsilon),
        bound_violations,
        tv_raw: Summary::of(&raw),
        tv_corrected: Summary::of(&corrected),
    })
}

/// One report per off-diagonal magnitude `z` for the single-qubit detector
/// `[[1-p, z], [z, q]]`, `[[p, -z], [-z, 1-q]]`.
pub fn coherent_sweep(
    p: f64,
    q: f64,
    z_values: &[f64],
    opts: &FractionOptions,
) -> Result<Vec<FractionReport>> {
    let ideal = projective_basis(2);
    z_values
        .iter()
        .map(|&z| {
            let z = Complex64::new(z, 0.0);
            let noisy = Povm::single_qubit(p, q, z).map_err(|e| Error::InvalidPovm {
                z,
                source: Box::new(e),
            })?;
            fraction_f(&noisy, &ideal, opts)
        })
        .collect()
}

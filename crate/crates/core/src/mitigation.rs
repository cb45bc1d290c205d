//! Correction of measured statistics with `Lambda^-1` and the error budget
//! that certifies it.
//!
//! For frequencies `f` from `N` shots on an `n`-outcome detector:
//!
//! * `eps   = sqrt((ln(2^n - 2) - ln Pr_err) / 2N)`
//! * `delta = ||Lambda^-1||_{1->1} (eps + D_op(M_exp, Lambda M_ideal))`
//! * `alpha = TV(projection, Lambda^-1 f)` when the corrected vector leaves the simplex
//!
//! and the correction is accepted when `delta + alpha < D_op(M_exp, M_ideal) + eps`.

use serde::{Deserialize, Serialize};

use crate::distances::{self, BoundOptions, DistanceBound};
use crate::error::{Error, Result};
use crate::noise::{self, CorrectionMatrix, NoiseDecomposition, StochasticMatrix};
use crate::povm::{Povm, ProbabilityVector};
use crate::tomography::CountsVector;

pub const DEFAULT_PR_ERR: f64 = 0.01;

/// `Lambda^-1 f`: sums to one but may have negative entries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RawCorrected(pub Vec<f64>);

impl RawCorrected {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Valid as a [`ProbabilityVector`], roundoff included.
    pub fn is_physical(&self) -> bool {
        ProbabilityVector::new(self.0.clone()).is_ok()
    }
}

pub fn correct(freqs: &ProbabilityVector, c: &CorrectionMatrix) -> Result<RawCorrected> {
    if freqs.len() != c.n() {
        return Err(Error::LengthMismatch {
            left: c.n(),
            right: freqs.len(),
        });
    }
    Ok(RawCorrected(c.matrix().matvec(freqs.as_slice())))
}

/// Euclidean projection onto the probability simplex by sort-and-threshold,
/// returned with `alpha = 1/2 ||v - projection||_1`.
pub fn project_to_simplex(v: &RawCorrected) -> Result<(ProbabilityVector, f64)> {
    let sum: f64 = v.0.iter().sum();
    if !sum.is_finite() || (sum - 1.0).abs() > 1e-6 {
        return Err(Error::SumViolation { sum });
    }
    if v.is_physical() {
        return Ok((ProbabilityVector::new(v.0.clone())?, 0.0));
    }
    let mut u = v.0.clone();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (k, &uk) in u.iter().enumerate() {
        cumulative += uk;
        let t = (cumulative - 1.0) / (k + 1) as f64;
        if uk - t > 0.0 {
            theta = t;
        }
    }
    let projected: Vec<f64> = v.0.iter().map(|&x| (x - theta).max(0.0)).collect();
    let alpha = distances::tv_distance(&projected, &v.0)?;
    Ok((ProbabilityVector::new(projected)?, alpha))
}

/// Concentration bound on the TV distance between empirical
/// frequencies and the true distribution, holding with probability `1 - pr_err`.
pub fn statistical_epsilon(shots: u64, outcomes: usize, pr_err: f64) -> Result<f64> {
    if shots == 0 {
        return Err(Error::OutOfRange {
            what: "shots",
            value: 0.0,
        });
    }
    if outcomes < 2 {
        return Err(Error::OutOfRange {
            what: "outcomes",
            value: outcomes as f64,
        });
    }
    if !(pr_err > 0.0 && pr_err < 1.0) {
        return Err(Error::OutOfRange {
            what: "pr_err",
            value: pr_err,
        });
    }
    // ln(2^n - 2) without overflow: n ln 2 + ln(1 - 2^(1-n))
    let n = outcomes as f64;
    let log_term = n * std::f64::consts::LN_2 + (-(2f64.powf(1.0 - n))).ln_1p();
    Ok(((log_term - pr_err.ln()) / (2.0 * shots as f64)).sqrt())
}

pub fn delta_bound(norm_1to1: f64, coherent_distance: f64, epsilon: f64) -> f64 {
    norm_1to1 * (epsilon + coherent_distance)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorBudget {
    pub epsilon: f64,
    pub norm_1to1: f64,
    pub coherent_distance: f64,
    pub delta: f64,
    pub alpha: f64,
    /// `delta + alpha`.
    pub total: f64,
    pub shots: u64,
    pub pr_err: f64,
}

impl ErrorBudget {
    pub fn new(
        shots: u64,
        outcomes: usize,
        pr_err: f64,
        norm_1to1: f64,
        coherent_distance: f64,
        alpha: f64,
    ) -> Result<Self> {
        let epsilon = statistical_epsilon(shots, outcomes, pr_err)?;
        let delta = delta_bound(norm_1to1, coherent_distance, epsilon);
        Ok(Self {
            epsilon,
            norm_1to1,
            coherent_distance,
            delta,
            alpha,
            total: delta + alpha,
            shots,
            pr_err,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Assessment {
    /// `D_op(M_exp, M_ideal) + eps`, with the lower end of the distance bound.
    pub rhs_bound: f64,
    pub successful: bool,
}

/// Success rule `delta + alpha < D_op + eps`; equality is a failure.
pub fn assess(budget: &ErrorBudget, dop_bound: &DistanceBound) -> Assessment {
    let rhs_bound = dop_bound.lower + budget.epsilon;
    Assessment {
        rhs_bound,
        successful: budget.total < rhs_bound,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MitigationContext {
    /// Upper bound on `D_op(M_exp, Lambda M_ideal)`.
    pub coherent_distance: f64,
    /// Bound on `D_op(M_exp, M_ideal)`.
    pub dop_bound: DistanceBound,
    pub pr_err: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MitigationReport {
    pub frequencies: Vec<f64>,
    pub raw_corrected: RawCorrected,
    pub corrected: ProbabilityVector,
    pub budget: ErrorBudget,
    pub dop_bound: DistanceBound,
    pub rhs_bound: f64,
    pub successful: bool,
    pub projection_applied: bool,
}

/// Runs correction, projection, budget and success rule on one counts vector.
pub fn mitigate(
    counts: &CountsVector,
    c: &CorrectionMatrix,
    ctx: &MitigationContext,
) -> Result<MitigationReport> {
    let freqs = ProbabilityVector::new(counts.frequencies())?;
    let raw = correct(&freqs, c)?;
    let (corrected, alpha) = project_to_simplex(&raw)?;
    let projection_applied = !raw.is_physical();
    let budget = ErrorBudget::new(
        counts.shots(),
        counts.len(),
        ctx.pr_err,
        c.one_to_one_norm(),
        ctx.coherent_distance,
        alpha,
    )?;
    let verdict = assess(&budget, &ctx.dop_bound);
    Ok(MitigationReport {
        frequencies: freqs.into_vec(),
        raw_corrected: raw,
        corrected,
        budget,
        dop_bound: ctx.dop_bound,
        rhs_bound: verdict.rhs_bound,
        successful: verdict.successful,
        projection_applied,
    })
}

/// Everything the correction step needs to know about a detector.
#[derive(Clone, Debug)]
pub struct Characterization {
    pub lambda: StochasticMatrix,
    pub correction: CorrectionMatrix,
    /// `D_op(M_exp, Lambda M_ideal)`.
    pub coherent: DistanceBound,
    /// `D_op(M_exp, M_ideal)`.
    pub distance_to_ideal: DistanceBound,
    pub renormalization_residual: f64,
}

impl Characterization {
    pub fn norm_1to1(&self) -> f64 {
        self.correction.one_to_one_norm()
    }

    /// `||Lambda^-1||_{1->1} D_op(M, Lambda P)`: the bound with infinite statistics.
    pub fn infinite_statistics_delta(&self) -> f64 {
        self.norm_1to1() * self.coherent.upper
    }

    pub fn context(&self, pr_err: f64) -> MitigationContext {
        MitigationContext {
            coherent_distance: self.coherent.upper,
            dop_bound: self.distance_to_ideal,
            pr_err,
        }
    }
}

/// Characterizes a measured POVM against a computational-basis ideal.
pub fn characterize(
    measured: &Povm,
    ideal: &Povm,
    opts: &BoundOptions,
) -> Result<Characterization> {
    let NoiseDecomposition {
        lambda,
        coherent,
        renormalization_residual,
        ..
    } = noise::classical_part_with(measured, ideal, opts)?;
    let correction = noise::correction_matrix(&lambda)?;
    let distance_to_ideal = distances::operational_distance_bound(measured, ideal, opts)?;
    Ok(Characterization {
        lambda,
        correction,
        coherent,
        distance_to_ideal,
        renormalization_residual,
    })
}

/// Characterizes `factors[0] (x) factors[1] (x) ...`, using subadditivity over
/// the factors when the joint distances are too large to enumerate.
pub fn characterize_product(factors: &[Povm], opts: &BoundOptions) -> Result<Characterization> {
    let ideals: Vec<Povm> = factors
        .iter()
        .map(|f| crate::povm::projective_basis(f.dim()))
        .collect();
    let lambda = noise::lambda_from_factors(factors)?;
    let correction = noise::correction_matrix(&lambda)?;
    let mut classical_factors = Vec::with_capacity(factors.len());
    let mut renormalization_residual = 0.0f64;
    for (f, i) in factors.iter().zip(&ideals) {
        let d = noise::classical_part_with(f, i, opts)?;
        renormalization_residual = renormalization_residual.max(d.renormalization_residual);
        classical_factors.push(noise::classical_povm(&d.lambda, i)?);
    }
    let coherent = distances::product_distance_bound(factors, &classical_factors, opts)?;
    let distance_to_ideal = distances::product_distance_bound(factors, &ideals, opts)?;
    Ok(Characterization {
        lambda,
        correction,
        coherent,
        distance_to_ideal,
        renormalization_residual,
    })
}

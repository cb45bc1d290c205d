//! Total-variation distance between outcome distributions and the
//! operational distance between POVMs,
//!
//! `D_op(M, N) = max_x || sum_{i in x} (M_i - N_i) ||_inf`,
//!
//! the worst-case TV distance between their statistics over all states.
//! Exhaustive subset enumeration is used up to [`ENUMERATION_CAP`] outcomes;
//! beyond that a seeded sampled lower bound is paired with an upper bound.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{operator_norm_above, ComplexMatrix, HermitianMatrix};
use crate::noise::StochasticMatrix;
use crate::povm::{tensor_all, Povm};

/// Largest outcome count handled by exhaustive enumeration.
pub const ENUMERATION_CAP: usize = 16;
/// Default number of random subsets for the sampled lower bound.
pub const DEFAULT_SUBSETS: usize = 1 << 17;
/// Off-diagonal magnitude under which a POVM is treated as diagonal.
pub const DIAGONAL_TOL: f64 = 1e-12;

const CHUNK: usize = 1 << 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundMethod {
    Exact,
    SampledLower,
    SubadditiveUpper,
    ClassicalClosedForm,
    Combined,
}

/// Interval `[lower, upper]` known to contain an operational distance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistanceBound {
    pub lower: f64,
    pub upper: f64,
    pub method: BoundMethod,
}

impl DistanceBound {
    pub fn exact(value: f64) -> Self {
        Self {
            lower: value,
            upper: value,
            method: BoundMethod::Exact,
        }
    }

    pub fn closed_form(value: f64) -> Self {
        Self {
            lower: value,
            upper: value,
            method: BoundMethod::ClassicalClosedForm,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(
            self.method,
            BoundMethod::Exact | BoundMethod::ClassicalClosedForm
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundOptions {
    pub subsets: usize,
    pub seed: u64,
}

impl Default for BoundOptions {
    fn default() -> Self {
        Self {
            subsets: DEFAULT_SUBSETS,
            seed: 0,
        }
    }
}

/// `1/2 sum_i |p_i - q_i|`; quasi-probability inputs are accepted.
pub fn tv_distance(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::LengthMismatch {
            left: p.len(),
            right: q.len(),
        });
    }
    Ok(0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>())
}

fn check_shapes(m: &Povm, n: &Povm) -> Result<()> {
    if m.dim() != n.dim() {
        return Err(Error::DimensionMismatch {
            expected: m.dim(),
            found: n.dim(),
        });
    }
    if m.num_outcomes() != n.num_outcomes() {
        return Err(Error::LengthMismatch {
            left: m.num_outcomes(),
            right: n.num_outcomes(),
        });
    }
    Ok(())
}

fn differences(m: &Povm, n: &Povm) -> Vec<ComplexMatrix> {
    m.effects()
        .iter()
        .zip(n.effects())
        .map(|(a, b)| a.as_matrix() - b.as_matrix())
        .collect()
}

fn subset_sum(diffs: &[ComplexMatrix], mask: u64, dim: usize) -> ComplexMatrix {
    let mut sum = ComplexMatrix::zeros(dim);
    for (i, d) in diffs.iter().enumerate() {
        if mask >> i & 1 == 1 {
            sum = &sum + d;
        }
    }
    sum
}

/// Exact operational distance. Pairs of diagonal POVMs take the closed-form
/// route (the optimum is a computational basis state); everything else is
/// enumerated.
pub fn operational_distance_exact(m: &Povm, n: &Povm) -> Result<f64> {
    check_shapes(m, n)?;
    if m.is_diagonal(DIAGONAL_TOL) && n.is_diagonal(DIAGONAL_TOL) {
        return diagonal_distance(m, n);
    }
    operational_distance_enumerated(m, n)
}

/// Brute force over all outcome subsets, without the diagonal shortcut.
///
/// Since the differences sum to zero, a subset and its complement give the
/// same norm, so only subsets excluding the last outcome are visited
/// (`2^(n-1)` of them), in Gray-code order within parallel chunks.
pub fn operational_distance_enumerated(m: &Povm, n: &Povm) -> Result<f64> {
    check_shapes(m, n)?;
    let outcomes = m.num_outcomes();
    if outcomes > ENUMERATION_CAP {
        return Err(Error::TooManyOutcomes {
            outcomes,
            cap: ENUMERATION_CAP,
        });
    }
    if outcomes < 2 {
        return Ok(0.0);
    }
    let diffs = differences(m, n);
    let total: u64 = 1 << (outcomes - 1);
    let chunks = total.div_ceil(CHUNK as u64);
    let best = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let start = c * CHUNK as u64;
            let end = (start + CHUNK as u64).min(total);
            let gray = |k: u64| k ^ (k >> 1);
            let mut mask = gray(start);
            let dim = diffs[0].dim();
            let mut sum = ComplexMatrix::zeros(dim);
            for (i, d) in diffs.iter().enumerate() {
                if mask >> i & 1 == 1 {
                    sum = &sum + d;
                }
            }
            let mut best = HermitianMatrix::symmetrized(sum.clone()).operator_norm();
            for k in (start + 1)..end {
                let next = gray(k);
                let bit = (mask ^ next).trailing_zeros() as usize;
                sum = if next >> bit & 1 == 1 {
                    &sum + &diffs[bit]
                } else {
                    &sum - &diffs[bit]
                };
                mask = next;
                // ||A|| <= ||A||_F screens out many subsets before any eigenvalue work
                if sum.frobenius_norm() > best {
                    if let Some(norm) = operator_norm_above(&sum, best) {
                        best = norm;
                    }
                }
            }
            best
        })
        .reduce(|| 0.0, f64::max);
    Ok(best)
}

/// Closed form for diagonal POVMs: the largest TV distance over computational basis inputs.
pub fn diagonal_distance(m: &Povm, n: &Povm) -> Result<f64> {
    check_shapes(m, n)?;
    let d = m.dim();
    let mut best = 0.0f64;
    for k in 0..d {
        let p: Vec<f64> = m.effects().iter().map(|e| e[(k, k)].re).collect();
        let q: Vec<f64> = n.effects().iter().map(|e| e[(k, k)].re).collect();
        best = best.max(tv_distance(&p, &q)?);
    }
    Ok(best)
}

/// Lower bound from a seeded random sample of outcome subsets plus
/// heuristic ones: every singleton, the set with positive trace difference,
/// and for each basis state the set with positive diagonal difference.
pub fn operational_distance_lower(
    m: &Povm,
    n: &Povm,
    num_subsets: usize,
    seed: u64,
) -> Result<f64> {
    check_shapes(m, n)?;
    let outcomes = m.num_outcomes();
    if outcomes > 64 {
        return Err(Error::TooManyOutcomes { outcomes, cap: 64 });
    }
    let diffs = differences(m, n);
    let full = if outcomes == 64 {
        u64::MAX
    } else {
        (1u64 << outcomes) - 1
    };

    let mut masks: Vec<u64> = (0..outcomes).map(|i| 1u64 << i).collect();
    let positive_trace = diffs
        .iter()
        .enumerate()
        .filter(|(_, d)| d.trace().re > 0.0)
        .fold(0u64, |acc, (i, _)| acc | 1 << i);
    masks.push(positive_trace);
    for k in 0..m.dim() {
        let mask = diffs
            .iter()
            .enumerate()
            .filter(|(_, d)| d[(k, k)].re > 0.0)
            .fold(0u64, |acc, (i, _)| acc | 1 << i);
        masks.push(mask);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    masks.extend((0..num_subsets).map(|_| rng.random::<u64>() & full));

    let dim = m.dim();
    Ok(masks
        .par_iter()
        .fold(
            || 0.0f64,
            |best, &mask| {
                let sum = subset_sum(&diffs, mask, dim);
                operator_norm_above(&sum, best).unwrap_or(best)
            },
        )
        .reduce(|| 0.0, f64::max))
}

/// Generic upper bound `min(1, 1/2 sum_i ||M_i - N_i||_inf)`.
pub fn effect_norm_upper(m: &Povm, n: &Povm) -> Result<f64> {
    check_shapes(m, n)?;
    let s: f64 = m
        .effects()
        .iter()
        .zip(n.effects())
        .map(|(a, b)| (a - b).operator_norm())
        .sum();
    Ok((0.5 * s).min(1.0))
}

/// Largest column-wise TV distance between two stochastic matrices.
pub fn classical_operational_distance(l1: &StochasticMatrix, l2: &StochasticMatrix) -> Result<f64> {
    if l1.n() != l2.n() {
        return Err(Error::ShapeMismatch {
            left: l1.n(),
            right: l2.n(),
        });
    }
    let mut best = 0.0f64;
    for j in 0..l1.n() {
        best = best.max(tv_distance(&l1.matrix().column(j), &l2.matrix().column(j))?);
    }
    Ok(best)
}

/// `1 - prod_i (1 - d_i)` for independent per-qubit classical noise.
pub fn uncorrelated_product_distance(per_qubit: &[f64]) -> Result<f64> {
    let mut keep = 1.0;
    for &d in per_qubit {
        if !(0.0..=1.0).contains(&d) {
            return Err(Error::OutOfRange {
                what: "per-qubit distance",
                value: d,
            });
        }
        keep *= 1.0 - d;
    }
    Ok(1.0 - keep)
}

/// `min(1, sum_i d_i)`.
pub fn subadditive_upper(per_factor_distances: &[f64]) -> f64 {
    per_factor_distances.iter().sum::<f64>().min(1.0)
}

/// Best available bound: closed form for diagonal pairs, enumeration up to
/// the cap, otherwise sampled lower plus effect-norm upper.
pub fn operational_distance_bound(
    m: &Povm,
    n: &Povm,
    opts: &BoundOptions,
) -> Result<DistanceBound> {
    check_shapes(m, n)?;
    if m.is_diagonal(DIAGONAL_TOL) && n.is_diagonal(DIAGONAL_TOL) {
        return Ok(DistanceBound::closed_form(diagonal_distance(m, n)?));
    }
    if m.num_outcomes() <= ENUMERATION_CAP {
        return Ok(DistanceBound::exact(operational_distance_enumerated(m, n)?));
    }
    let lower = operational_distance_lower(m, n, opts.subsets, opts.seed)?;
    let upper = effect_norm_upper(m, n)?.max(lower);
    Ok(DistanceBound {
        lower,
        upper,
        method: BoundMethod::Combined,
    })
}

/// Bound on `D_op(M_1 (x) ... (x) M_K, N_1 (x) ... (x) N_K)`. Large products
/// additionally use subadditivity over the factors for the upper end.
pub fn product_distance_bound(
    ms: &[Povm],
    ns: &[Povm],
    opts: &BoundOptions,
) -> Result<DistanceBound> {
    if ms.len() != ns.len() || ms.is_empty() {
        return Err(Error::LengthMismatch {
            left: ms.len(),
            right: ns.len(),
        });
    }
    let m = tensor_all(ms);
    let n = tensor_all(ns);
    let whole = operational_distance_bound(&m, &n, opts)?;
    if whole.is_exact() {
        return Ok(whole);
    }
    let per_factor = ms
        .iter()
        .zip(ns)
        .map(|(a, b)| operational_distance_exact(a, b))
        .collect::<Result<Vec<_>>>()?;
    let upper = subadditive_upper(&per_factor)
        .min(whole.upper)
        .max(whole.lower);
    Ok(DistanceBound {
        lower: whole.lower,
        upper,
        method: BoundMethod::Combined,
    })
}

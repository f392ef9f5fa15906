//! Rectangle probabilities for the normal and t families, plain and
//! truncated.
//!
//! The rectangle is mapped to the unit cube by Genz's separation of
//! variables: with `C` the Cholesky factor of the (reordered) scale matrix,
//! variable `i` contributes the conditional mass `e_i - d_i`, where
//!
//! ```text
//! d_i = Φ((a_i - Σ_{j<i} c_ij y_j) / c_ii),   e_i likewise with b_i,
//! y_i = Φ⁻¹(d_i + w_i (e_i - d_i)),
//! ```
//!
//! and the integrand is `Π (e_i - d_i)`. The last `y` is never needed, so a
//! `k`-variate normal problem integrates over `k - 1` lattice coordinates.
//! The t family adds one leading coordinate `u` that draws the chi mixing
//! variable: limits are scaled by `s = χ_ν⁻¹(u) / √ν`.
//!
//! Before integrating, variables are reordered greedily so the one with the
//! smallest expected conditional mass comes first, which concentrates the
//! variation of the integrand in the leading lattice coordinates.
//!
//! The estimate is the mean over randomly shifted copies of a Korobov
//! lattice; the reported error is `alpha` times the standard error of the
//! shift means.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::lattice::LatticeRule;
use crate::math::sqrt;
use crate::special::{
    chi_quantile_unchecked, inv_cdf_clamped, std_normal_cdf, std_normal_pdf, student_t_cdf,
};
use crate::types::{
    DegreesOfFreedom, DistributionSpec, ExtendedBounds, LocationVector, ProbabilityEstimate,
    QmcConfig, ScaleMatrix, TruncationBox, PD_TOLERANCE,
};

/// Order in which variables enter the separation-of-variables recursion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum VariableOrdering {
    /// Greedy smallest-conditional-mass-first ordering.
    #[default]
    Gibson,
    /// Keep the input order.
    Natural,
}

/// A rectangle problem after centering, reordering and factorization.
#[derive(Debug, Clone, PartialEq)]
pub struct SovProblem {
    dim: usize,
    chol: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    permutation: Vec<usize>,
}

impl SovProblem {
    /// Centers the limits on `delta`, orders the variables and builds the
    /// Cholesky factor of the permuted `sigma` column by column.
    pub fn build(
        lower: &[f64],
        upper: &[f64],
        delta: &[f64],
        sigma: &ScaleMatrix,
        ordering: VariableOrdering,
    ) -> Result<Self> {
        let k = sigma.dim();
        let mut a: Vec<f64> = lower.iter().zip(delta).map(|(l, d)| l - d).collect();
        let mut b: Vec<f64> = upper.iter().zip(delta).map(|(u, d)| u - d).collect();
        let mut cov = sigma.entries().to_vec();
        let mut chol = vec![0.0; k * k];
        let mut perm: Vec<usize> = (0..k).collect();
        let mut y = vec![0.0; k];
        let max_diag = (0..k).map(|i| sigma.get(i, i)).fold(0.0_f64, f64::max);
        let threshold = PD_TOLERANCE * max_diag;

        for i in 0..k {
            if ordering == VariableOrdering::Gibson && i + 1 < k {
                let mut best = i;
                let mut best_mass = f64::INFINITY;
                for j in i..k {
                    let row = &chol[j * k..j * k + i];
                    let var = cov[j * k + j] - row.iter().map(|c| c * c).sum::<f64>();
                    if !(var > 0.0) {
                        continue;
                    }
                    let sd = sqrt(var);
                    let shift: f64 = row.iter().zip(&y[..i]).map(|(c, y)| c * y).sum();
                    let (_, mass, _) = interval((a[j] - shift) / sd, (b[j] - shift) / sd);
                    if mass < best_mass {
                        best_mass = mass;
                        best = j;
                    }
                }
                if best != i {
                    swap_variables(k, &mut cov, &mut chol, i, best);
                    a.swap(i, best);
                    b.swap(i, best);
                    perm.swap(i, best);
                }
            }

            let row_i: Vec<f64> = chol[i * k..i * k + i].to_vec();
            let var = cov[i * k + i] - row_i.iter().map(|c| c * c).sum::<f64>();
            if !(var > threshold) {
                return Err(Error::NotPositiveDefinite { pivot: i });
            }
            let diag = sqrt(var);
            chol[i * k + i] = diag;
            for l in (i + 1)..k {
                let dot: f64 = chol[l * k..l * k + i]
                    .iter()
                    .zip(&row_i)
                    .map(|(x, y)| x * y)
                    .sum();
                chol[l * k + i] = (cov[l * k + i] - dot) / diag;
            }

            // Conditional expectation of the standardized variable, used to
            // score the remaining candidates.
            let shift: f64 = row_i.iter().zip(&y[..i]).map(|(c, y)| c * y).sum();
            let lo = (a[i] - shift) / diag;
            let hi = (b[i] - shift) / diag;
            y[i] = truncated_mean(lo, hi);
        }

        Ok(SovProblem {
            dim: k,
            chol,
            lower: a,
            upper: b,
            permutation: perm,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Row-major lower Cholesky factor of the permuted scale matrix.
    pub fn cholesky(&self) -> &[f64] {
        &self.chol
    }

    /// Centered, permuted lower limits.
    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    /// Centered, permuted upper limits.
    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    /// `permutation[i]` is the original index of the `i`-th integration
    /// variable.
    pub fn permutation(&self) -> &[usize] {
        &self.permutation
    }

    /// Separation-of-variables integrand at `w`, with the limits multiplied
    /// by `scale` (1 for the normal family). `y` is scratch of length `dim`.
    #[inline]
    fn integrand(&self, scale: f64, w: &[f64], y: &mut [f64]) -> f64 {
        let k = self.dim;
        let mut prod = 1.0;
        for i in 0..k {
            let row = &self.chol[i * k..i * k + i];
            let shift: f64 = row.iter().zip(&y[..i]).map(|(c, y)| c * y).sum();
            let diag = self.chol[i * k + i];
            let lo = (scale_limit(self.lower[i], scale) - shift) / diag;
            let hi = (scale_limit(self.upper[i], scale) - shift) / diag;
            let (start, mass, flipped) = interval(lo, hi);
            if !(mass > 0.0) {
                return 0.0;
            }
            prod *= mass;
            if i + 1 < k {
                y[i] = if flipped {
                    -inv_cdf_clamped(start - w[i] * mass)
                } else {
                    inv_cdf_clamped(start + w[i] * mass)
                };
            }
        }
        prod
    }
}

fn swap_variables(k: usize, cov: &mut [f64], chol: &mut [f64], i: usize, j: usize) {
    for m in 0..k {
        cov.swap(i * k + m, j * k + m);
    }
    for m in 0..k {
        cov.swap(m * k + i, m * k + j);
    }
    for m in 0..i {
        chol.swap(i * k + m, j * k + m);
    }
}

#[inline]
fn scale_limit(limit: f64, scale: f64) -> f64 {
    if limit.is_infinite() {
        limit
    } else {
        limit * scale
    }
}

/// Standard normal mass of `[lo, hi]` as `(start, mass, flipped)`.
///
/// Intervals in the upper half are handled through the survival function to
/// avoid cancellation: then `start = 1 - Φ(lo)` and the uniform point `w`
/// maps to `-Φ⁻¹(start - w·mass)`.
#[inline]
fn interval(lo: f64, hi: f64) -> (f64, f64, bool) {
    if lo > 0.0 {
        let start = std_normal_cdf(-lo);
        (start, start - std_normal_cdf(-hi), true)
    } else {
        let start = std_normal_cdf(lo);
        (start, std_normal_cdf(hi) - start, false)
    }
}

/// Mean of a standard normal truncated to `[lo, hi]`.
fn truncated_mean(lo: f64, hi: f64) -> f64 {
    let (_, mass, _) = interval(lo, hi);
    if mass > 1e-300 {
        let m = (std_normal_pdf(lo) - std_normal_pdf(hi)) / mass;
        if m.is_finite() {
            return m.clamp(lo, hi);
        }
    }
    if lo == f64::NEG_INFINITY {
        hi
    } else if hi == f64::INFINITY {
        lo
    } else {
        0.5 * (lo + hi)
    }
}

/// Greedy reordering for the normal rectangle problem `[a, b]`.
pub fn reorder_variables(
    bounds: &ExtendedBounds,
    delta: &LocationVector,
    sigma: &ScaleMatrix,
) -> Result<SovProblem> {
    check_dims(delta, sigma, bounds.dim(), None)?;
    SovProblem::build(
        bounds.lower(),
        bounds.upper(),
        delta.as_slice(),
        sigma,
        VariableOrdering::Gibson,
    )
}

#[derive(Debug, Clone)]
enum Mixing {
    Normal,
    /// Per-node limit scales `χ_ν⁻¹(u) / √ν`, indexed `shift * points + node`.
    StudentT { nu: f64, scales: Vec<f64> },
}

/// A frozen randomized lattice rule for one dimension and family.
///
/// All probabilities computed by the same integrator share the lattice and
/// the shifts, so differences between them carry no shift-to-shift noise.
#[derive(Debug, Clone)]
pub struct Integrator {
    dim: usize,
    alpha: f64,
    mixing: Mixing,
    rule: Option<LatticeRule>,
}

impl Integrator {
    pub fn normal(dim: usize, qmc: &QmcConfig, seed: u64) -> Result<Self> {
        qmc.validate()?;
        let rule = (dim > 1).then(|| LatticeRule::new(dim - 1, qmc.samples, qmc.shifts, seed));
        Ok(Integrator {
            dim,
            alpha: qmc.alpha,
            mixing: Mixing::Normal,
            rule,
        })
    }

    pub fn student(dim: usize, nu: DegreesOfFreedom, qmc: &QmcConfig, seed: u64) -> Result<Self> {
        qmc.validate()?;
        let nu = nu.get();
        let mut scales = Vec::new();
        let rule = if dim > 1 {
            let rule = LatticeRule::new(dim, qmc.samples, qmc.shifts, seed);
            let root_nu = sqrt(nu);
            let mut w = vec![0.0; dim];
            scales.reserve(rule.shift_count() * rule.points() as usize);
            for j in 0..rule.shift_count() {
                for m in 0..rule.points() {
                    rule.point(j, m, &mut w);
                    scales.push(chi_quantile_unchecked(w[0], nu) / root_nu);
                }
            }
            Some(rule)
        } else {
            None
        };
        Ok(Integrator {
            dim,
            alpha: qmc.alpha,
            mixing: Mixing::StudentT { nu, scales },
            rule,
        })
    }

    /// Integrator matching the (untruncated) family of `spec`.
    pub fn for_spec(spec: &DistributionSpec, qmc: &QmcConfig, seed: u64) -> Result<Self> {
        match spec.df() {
            Some(nu) => Self::student(spec.dim(), nu, qmc, seed),
            None => Self::normal(spec.dim(), qmc, seed),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `P(lower ≤ X ≤ upper)` for the untruncated family. Unlike
    /// [`ExtendedBounds`], empty intervals are allowed and give exactly 0.
    pub fn probability(
        &self,
        lower: &[f64],
        upper: &[f64],
        delta: &[f64],
        sigma: &ScaleMatrix,
    ) -> Result<ProbabilityEstimate> {
        self.probability_with_ordering(lower, upper, delta, sigma, VariableOrdering::Gibson)
    }

    pub fn probability_with_ordering(
        &self,
        lower: &[f64],
        upper: &[f64],
        delta: &[f64],
        sigma: &ScaleMatrix,
        ordering: VariableOrdering,
    ) -> Result<ProbabilityEstimate> {
        let k = self.dim;
        for (what, len) in [
            ("lower", lower.len()),
            ("upper", upper.len()),
            ("location", delta.len()),
            ("sigma", sigma.dim()),
        ] {
            if len != k {
                return Err(Error::DimensionMismatch {
                    what,
                    expected: k,
                    found: len,
                });
            }
        }
        if lower.iter().chain(upper).any(|v| v.is_nan()) {
            return Err(Error::NonFinite("bounds"));
        }
        if lower.iter().zip(upper).any(|(a, b)| a >= b) {
            return Ok(ProbabilityEstimate::exact(0.0));
        }
        if lower.iter().all(|a| *a == f64::NEG_INFINITY)
            && upper.iter().all(|b| *b == f64::INFINITY)
        {
            return Ok(ProbabilityEstimate::exact(1.0));
        }
        if k == 1 {
            let sd = sqrt(sigma.get(0, 0));
            let lo = (lower[0] - delta[0]) / sd;
            let hi = (upper[0] - delta[0]) / sd;
            let value = match self.mixing {
                Mixing::Normal => univariate_mass(lo, hi, std_normal_cdf),
                Mixing::StudentT { nu, .. } => univariate_mass(lo, hi, |t| student_t_cdf(t, nu)),
            };
            return Ok(ProbabilityEstimate::exact(value));
        }

        let problem = SovProblem::build(lower, upper, delta, sigma, ordering)?;
        let rule = self.rule.as_ref().expect("lattice exists for k > 1");
        let shifts = rule.shift_count();

        #[cfg(feature = "parallel")]
        let sums: Vec<(f64, f64)> = {
            use rayon::prelude::*;
            (0..shifts)
                .into_par_iter()
                .map(|j| self.shift_sum(rule, &problem, j))
                .collect()
        };
        #[cfg(not(feature = "parallel"))]
        let sums: Vec<(f64, f64)> = (0..shifts)
            .map(|j| self.shift_sum(rule, &problem, j))
            .collect();

        Ok(self.aggregate(&sums, rule.points()))
    }

    fn shift_sum(&self, rule: &LatticeRule, problem: &SovProblem, j: usize) -> (f64, f64) {
        let mut w = vec![0.0; rule.dim()];
        let mut y = vec![0.0; problem.dim()];
        let n = rule.points();
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for m in 0..n {
            rule.point(j, m, &mut w);
            let f = match &self.mixing {
                Mixing::Normal => problem.integrand(1.0, &w, &mut y),
                Mixing::StudentT { scales, .. } => {
                    let s = scales[j * n as usize + m as usize];
                    problem.integrand(s, &w[1..], &mut y)
                }
            };
            sum += f;
            sum_sq += f * f;
        }
        (sum, sum_sq)
    }

    fn aggregate(&self, sums: &[(f64, f64)], points: u32) -> ProbabilityEstimate {
        let n = points as f64;
        let count = sums.len() as f64;
        let value = sums.iter().map(|(s, _)| s / n).sum::<f64>() / count;
        let variance = if sums.len() > 1 {
            sums.iter()
                .map(|(s, _)| {
                    let d = s / n - value;
                    d * d
                })
                .sum::<f64>()
                / (count * (count - 1.0))
        } else if points > 1 {
            // One shift: fall back to the spread of the nodes themselves.
            let (s, sq) = sums[0];
            (sq - s * s / n) / (n - 1.0) / n
        } else {
            0.0
        };
        ProbabilityEstimate {
            value: value.clamp(0.0, 1.0),
            error: self.alpha * sqrt(variance.max(0.0)),
        }
    }
}

fn univariate_mass(lo: f64, hi: f64, cdf: impl Fn(f64) -> f64) -> f64 {
    if lo > 0.0 {
        cdf(-lo) - cdf(-hi)
    } else {
        cdf(hi) - cdf(lo)
    }
}

fn check_dims(
    delta: &LocationVector,
    sigma: &ScaleMatrix,
    bounds_dim: usize,
    trunc: Option<&TruncationBox>,
) -> Result<()> {
    let k = delta.dim();
    let dims = [
        ("sigma", sigma.dim()),
        ("bounds", bounds_dim),
        ("truncation", trunc.map_or(k, |t| t.dim())),
    ];
    for (what, found) in dims {
        if found != k {
            return Err(Error::DimensionMismatch {
                what,
                expected: k,
                found,
            });
        }
    }
    Ok(())
}

/// `Φ_k(l, u)` or `Ψ_k(l, u)`: the probability of the truncation box under
/// the parent distribution. Fails when the estimate does not exceed its own
/// error bound.
pub fn truncation_normalizer(
    integrator: &Integrator,
    delta: &[f64],
    sigma: &ScaleMatrix,
    trunc: &TruncationBox,
) -> Result<ProbabilityEstimate> {
    let den = integrator.probability(trunc.lower(), trunc.upper(), delta, sigma)?;
    if !(den.value > den.error) {
        return Err(Error::DegenerateTruncation {
            value: den.value,
            error: den.error,
        });
    }
    Ok(den)
}

/// Probability of `[lower, upper]` under the truncated distribution, given
/// the box's normalizing constant.
pub(crate) fn truncated_with_normalizer(
    integrator: &Integrator,
    lower: &[f64],
    upper: &[f64],
    delta: &[f64],
    sigma: &ScaleMatrix,
    trunc: &TruncationBox,
    normalizer: ProbabilityEstimate,
) -> Result<ProbabilityEstimate> {
    let clipped_lower: Vec<f64> = lower
        .iter()
        .zip(trunc.lower())
        .map(|(a, l)| a.max(*l))
        .collect();
    let clipped_upper: Vec<f64> = upper
        .iter()
        .zip(trunc.upper())
        .map(|(b, u)| b.min(*u))
        .collect();
    if clipped_lower
        .iter()
        .zip(&clipped_upper)
        .any(|(a, b)| a >= b)
    {
        return Ok(ProbabilityEstimate::exact(0.0));
    }
    // the rectangle covers the whole support
    if clipped_lower == trunc.lower() && clipped_upper == trunc.upper() {
        return Ok(ProbabilityEstimate::exact(1.0));
    }
    let num = integrator.probability(&clipped_lower, &clipped_upper, delta, sigma)?;
    Ok(quotient(num, normalizer))
}

/// `num / den` with first-order error propagation.
pub fn quotient(num: ProbabilityEstimate, den: ProbabilityEstimate) -> ProbabilityEstimate {
    let ratio = num.value / den.value;
    let error = (num.error + ratio * den.error) / den.value;
    ProbabilityEstimate {
        value: ratio.clamp(0.0, 1.0),
        error: error.max(0.0),
    }
}

/// Rectangle probability under any of the four families described by
/// `spec`.
pub fn probability(
    spec: &DistributionSpec,
    bounds: &ExtendedBounds,
    qmc: &QmcConfig,
    seed: u64,
) -> Result<ProbabilityEstimate> {
    spec.check_bounds(bounds)?;
    let integrator = Integrator::for_spec(spec, qmc, seed)?;
    let delta = spec.location().as_slice();
    let sigma = spec.scale();
    match spec.truncation() {
        None => integrator.probability(bounds.lower(), bounds.upper(), delta, sigma),
        Some(trunc) => {
            let den = truncation_normalizer(&integrator, delta, sigma, trunc)?;
            truncated_with_normalizer(
                &integrator,
                bounds.lower(),
                bounds.upper(),
                delta,
                sigma,
                trunc,
                den,
            )
        }
    }
}

/// `Φ_k(a, b, δ, Σ)`.
pub fn mvn_probability(
    bounds: &ExtendedBounds,
    delta: &LocationVector,
    sigma: &ScaleMatrix,
    qmc: &QmcConfig,
    seed: u64,
) -> Result<ProbabilityEstimate> {
    check_dims(delta, sigma, bounds.dim(), None)?;
    Integrator::normal(delta.dim(), qmc, seed)?.probability(
        bounds.lower(),
        bounds.upper(),
        delta.as_slice(),
        sigma,
    )
}

/// `Ψ_k(a, b, δ, Σ, ν)` for the location-shifted t distribution
/// `X = δ + Y √(ν / V)`, `Y ~ N(0, Σ)`, `V ~ χ²_ν`.
pub fn mvt_probability(
    bounds: &ExtendedBounds,
    delta: &LocationVector,
    sigma: &ScaleMatrix,
    nu: DegreesOfFreedom,
    qmc: &QmcConfig,
    seed: u64,
) -> Result<ProbabilityEstimate> {
    check_dims(delta, sigma, bounds.dim(), None)?;
    Integrator::student(delta.dim(), nu, qmc, seed)?.probability(
        bounds.lower(),
        bounds.upper(),
        delta.as_slice(),
        sigma,
    )
}

/// `Φ'_k(a, b, δ, Σ, l, u)`.
pub fn tmvn_probability(
    bounds: &ExtendedBounds,
    delta: &LocationVector,
    sigma: &ScaleMatrix,
    trunc: &TruncationBox,
    qmc: &QmcConfig,
    seed: u64,
) -> Result<ProbabilityEstimate> {
    check_dims(delta, sigma, bounds.dim(), Some(trunc))?;
    let integrator = Integrator::normal(delta.dim(), qmc, seed)?;
    let den = truncation_normalizer(&integrator, delta.as_slice(), sigma, trunc)?;
    truncated_with_normalizer(
        &integrator,
        bounds.lower(),
        bounds.upper(),
        delta.as_slice(),
        sigma,
        trunc,
        den,
    )
}

/// `Ψ'_k(a, b, δ, Σ, ν, l, u)`.
pub fn tmvt_probability(
    bounds: &ExtendedBounds,
    delta: &LocationVector,
    sigma: &ScaleMatrix,
    nu: DegreesOfFreedom,
    trunc: &TruncationBox,
    qmc: &QmcConfig,
    seed: u64,
) -> Result<ProbabilityEstimate> {
    check_dims(delta, sigma, bounds.dim(), Some(trunc))?;
    let integrator = Integrator::student(delta.dim(), nu, qmc, seed)?;
    let den = truncation_normalizer(&integrator, delta.as_slice(), sigma, trunc)?;
    truncated_with_normalizer(
        &integrator,
        bounds.lower(),
        bounds.upper(),
        delta.as_slice(),
        sigma,
        trunc,
        den,
    )
}

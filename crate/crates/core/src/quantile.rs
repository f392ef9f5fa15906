//! Equicoordinate quantiles: the `q` with `P(X ∈ R(q)) = p`, where `R(q)` is
//! `(-∞, q]^k`, `[q, ∞)^k` or `[-q, q]^k` depending on the tail.
//!
//! The probability is a QMC estimate, so every evaluation inside one search
//! reuses the same lattice and shifts. The objective is then a deterministic,
//! continuous, monotone function of `q` and plain bisection applies.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::sqrt;
use crate::qmc::{truncated_with_normalizer, truncation_normalizer, Integrator};
use crate::special::inv_cdf_clamped;
use crate::types::{
    BisectionConfig, DegreesOfFreedom, DistributionSpec, LocationVector, ProbabilityEstimate,
    QmcConfig, QuantileResult, ScaleMatrix, SearchStatus, Tail, TruncationBox,
};

/// Maximum number of bracket expansions before giving up with
/// [`SearchStatus::NoSignChange`].
pub const MAX_EXPANSIONS: u32 = 60;

struct Objective<'a> {
    integrator: Integrator,
    spec: &'a DistributionSpec,
    normalizer: Option<ProbabilityEstimate>,
    tail: Tail,
    p: f64,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl Objective<'_> {
    /// Probability of the tail region at `q`.
    fn probability(&mut self, q: f64) -> Result<ProbabilityEstimate> {
        let (lo, hi) = match self.tail {
            Tail::Lower => (f64::NEG_INFINITY, q),
            Tail::Upper => (q, f64::INFINITY),
            Tail::Both => (-q, q),
        };
        self.lower.iter_mut().for_each(|v| *v = lo);
        self.upper.iter_mut().for_each(|v| *v = hi);
        let delta = self.spec.location().as_slice();
        let sigma = self.spec.scale();
        match (self.spec.truncation(), self.normalizer) {
            (Some(trunc), Some(den)) => truncated_with_normalizer(
                &self.integrator,
                &self.lower,
                &self.upper,
                delta,
                sigma,
                trunc,
                den,
            ),
            _ => self
                .integrator
                .probability(&self.lower, &self.upper, delta, sigma),
        }
    }

    /// `(F(q) - p, estimate)` together with the value oriented so that it
    /// increases with `q`.
    fn eval(&mut self, q: f64) -> Result<Eval> {
        let est = self.probability(q)?;
        let f = est.value - self.p;
        let g = if self.tail == Tail::Upper { -f } else { f };
        Ok(Eval { q, f, g, est })
    }
}

#[derive(Clone, Copy)]
struct Eval {
    q: f64,
    f: f64,
    g: f64,
    est: ProbabilityEstimate,
}

/// Equicoordinate quantile of any family.
pub fn quantile(
    spec: &DistributionSpec,
    p: f64,
    cfg: &BisectionConfig,
    qmc: &QmcConfig,
    seed: u64,
) -> Result<QuantileResult> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain { what: "p", value: p });
    }
    cfg.validate()?;
    let integrator = Integrator::for_spec(spec, qmc, seed)?;
    let normalizer = match spec.truncation() {
        Some(trunc) => Some(truncation_normalizer(
            &integrator,
            spec.location().as_slice(),
            spec.scale(),
            trunc,
        )?),
        None => None,
    };
    let k = spec.dim();
    let mut objective = Objective {
        integrator,
        spec,
        normalizer,
        tail: cfg.tail,
        p,
        lower: vec![0.0; k],
        upper: vec![0.0; k],
    };
    search(&mut objective, cfg)
}

fn search(obj: &mut Objective<'_>, cfg: &BisectionConfig) -> Result<QuantileResult> {
    let spec = obj.spec;
    let tol = cfg.tolerance;
    let delta = spec.location().as_slice();
    let sigma = spec.scale();

    // Univariate quantile of the coordinate with the smallest variance.
    let i = (0..spec.dim())
        .min_by(|&a, &b| sigma.get(a, a).total_cmp(&sigma.get(b, b)))
        .unwrap_or(0);
    let sd = sqrt(sigma.get(i, i));
    let (floor, ceil) = support(spec, cfg.tail);
    let step0 = sd;

    let (mut lo, mut hi) = match cfg.tail {
        Tail::Both => {
            let top = delta[i].abs() + sd * inv_cdf_clamped(0.5 * (1.0 + obj.p));
            (0.0, top.max(step0).min(ceil))
        }
        tail => {
            let z = inv_cdf_clamped(if tail == Tail::Lower { obj.p } else { 1.0 - obj.p });
            let c = (delta[i] + sd * z).clamp(floor, ceil);
            ((c - step0).max(floor), (c + step0).min(ceil))
        }
    };

    let mut lo_e = obj.eval(lo)?;
    let mut hi_e = obj.eval(hi)?;
    let mut expansions = 0;
    let mut step = step0;
    while lo_e.g > 0.0 && expansions < MAX_EXPANSIONS && lo > floor {
        lo = (lo - step).max(floor);
        step *= 2.0;
        expansions += 1;
        lo_e = obj.eval(lo)?;
    }
    let mut step = step0;
    while hi_e.g < 0.0 && expansions < MAX_EXPANSIONS && hi < ceil {
        hi = (hi + step).min(ceil);
        step *= 2.0;
        expansions += 1;
        hi_e = obj.eval(hi)?;
    }

    for e in [lo_e, hi_e] {
        if e.f.abs() <= tol {
            return Ok(finish(e, 0.0, SearchStatus::Converged, 0));
        }
    }
    if lo_e.g > 0.0 || hi_e.g < 0.0 {
        let best = if lo_e.f.abs() <= hi_e.f.abs() { lo_e } else { hi_e };
        return Ok(finish(best, 0.5 * (hi - lo), SearchStatus::NoSignChange, 0));
    }

    let mut iterations = 0u64;
    loop {
        let mid = 0.5 * (lo + hi);
        iterations += 1;
        let e = obj.eval(mid)?;
        if e.f.abs() <= tol {
            return Ok(finish(e, 0.5 * (hi - lo), SearchStatus::Converged, iterations));
        }
        if e.g < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        let width = hi - lo;
        if width <= tol || iterations >= cfg.itermax {
            return Ok(finish(e, 0.5 * width, SearchStatus::NotConverged, iterations));
        }
    }
}

fn finish(e: Eval, half_width: f64, flag: SearchStatus, iterations: u64) -> QuantileResult {
    QuantileResult {
        quantile: e.q,
        error: half_width + e.est.error,
        flag,
        fquantile: e.f,
        iterations,
    }
}

/// Range of `q` over which the tail probability moves: `[min l, max u]` for
/// a truncated distribution (`[0, max |l|, |u|]` for the two-sided tail).
fn support(spec: &DistributionSpec, tail: Tail) -> (f64, f64) {
    let (l, u) = match spec.truncation() {
        Some(t) => (
            t.lower().iter().copied().fold(f64::INFINITY, f64::min),
            t.upper().iter().copied().fold(f64::NEG_INFINITY, f64::max),
        ),
        None => (f64::NEG_INFINITY, f64::INFINITY),
    };
    match tail {
        Tail::Both => (0.0, l.abs().max(u.abs())),
        _ => (l, u),
    }
}

/// Equicoordinate quantile of `N_k(δ, Σ)`.
pub fn mvn_quantile(
    p: f64,
    delta: &LocationVector,
    sigma: &ScaleMatrix,
    cfg: &BisectionConfig,
    qmc: &QmcConfig,
    seed: u64,
) -> Result<QuantileResult> {
    let spec = DistributionSpec::new(delta.clone(), sigma.clone(), None, None)?;
    quantile(&spec, p, cfg, qmc, seed)
}

pub fn mvt_quantile(
    p: f64,
    delta: &LocationVector,
    sigma: &ScaleMatrix,
    nu: DegreesOfFreedom,
    cfg: &BisectionConfig,
    qmc: &QmcConfig,
    seed: u64,
) -> Result<QuantileResult> {
    let spec = DistributionSpec::new(delta.clone(), sigma.clone(), Some(nu), None)?;
    quantile(&spec, p, cfg, qmc, seed)
}

pub fn tmvn_quantile(
    p: f64,
    delta: &LocationVector,
    sigma: &ScaleMatrix,
    trunc: &TruncationBox,
    cfg: &BisectionConfig,
    qmc: &QmcConfig,
    seed: u64,
) -> Result<QuantileResult> {
    let spec = DistributionSpec::new(delta.clone(), sigma.clone(), None, Some(trunc.clone()))?;
    quantile(&spec, p, cfg, qmc, seed)
}

#[allow(clippy::too_many_arguments)]
pub fn tmvt_quantile(
    p: f64,
    delta: &LocationVector,
    sigma: &ScaleMatrix,
    nu: DegreesOfFreedom,
    trunc: &TruncationBox,
    cfg: &BisectionConfig,
    qmc: &QmcConfig,
    seed: u64,
) -> Result<QuantileResult> {
    let spec = DistributionSpec::new(delta.clone(), sigma.clone(), Some(nu), Some(trunc.clone()))?;
    quantile(&spec, p, cfg, qmc, seed)
}

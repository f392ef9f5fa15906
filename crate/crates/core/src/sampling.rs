//! Seeded draws from the four families.
//!
//! Rows are generated sequentially from one ChaCha8 stream: `k` uniforms
//! turned into standard normals by the inverse CDF, then (t family) one
//! more uniform turned into a chi-square variate the same way. A fixed
//! number of uniforms per proposal keeps the stream layout independent of
//! everything except the parameters and the seed. Truncated families reject
//! proposals outside the closed box.

use alloc::vec;
use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::{Error, Result};
use crate::factor::{matrix_sqrt, MatrixFactor};
use crate::math::sqrt;
use crate::special::{chi_square_quantile_unchecked, inv_cdf_clamped};
use crate::types::{
    DegreesOfFreedom, DistributionSpec, FactorizationMethod, LocationVector, ScaleMatrix,
    TruncationBox,
};

/// Default cap on the number of proposals drawn by the rejection samplers.
pub const DEFAULT_MAX_ATTEMPTS: u64 = 10_000_000;

/// `n` draws of dimension `k`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleMatrix {
    rows: usize,
    dim: usize,
    data: Vec<f64>,
    seed: u64,
    method: FactorizationMethod,
}

impl SampleMatrix {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn method(&self) -> FactorizationMethod {
        self.method
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter_rows(&self) -> core::slice::ChunksExact<'_, f64> {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

/// Uniform on the open interval (0, 1).
#[inline]
fn open_unit(rng: &mut ChaCha8Rng) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

struct Proposer {
    rng: ChaCha8Rng,
    factor: MatrixFactor,
    delta: Vec<f64>,
    nu: Option<f64>,
    z: Vec<f64>,
    y: Vec<f64>,
}

impl Proposer {
    fn new(spec: &DistributionSpec, method: FactorizationMethod, seed: u64) -> Result<Self> {
        let k = spec.dim();
        Ok(Proposer {
            rng: ChaCha8Rng::seed_from_u64(seed),
            factor: matrix_sqrt(spec.scale(), method)?,
            delta: spec.location().as_slice().to_vec(),
            nu: spec.df().map(DegreesOfFreedom::get),
            z: vec![0.0; k],
            y: vec![0.0; k],
        })
    }

    /// Writes `δ + R z` (scaled by `√(ν / v)` for the t family) into `out`.
    fn propose(&mut self, out: &mut [f64]) {
        for z in self.z.iter_mut() {
            *z = inv_cdf_clamped(open_unit(&mut self.rng));
        }
        self.factor.apply(&self.z, &mut self.y);
        let scale = match self.nu {
            Some(nu) => {
                let v = chi_square_quantile_unchecked(open_unit(&mut self.rng), nu);
                sqrt(nu / v)
            }
            None => 1.0,
        };
        for ((o, y), d) in out.iter_mut().zip(&self.y).zip(&self.delta) {
            *o = d + scale * y;
        }
    }
}

/// Draws `n` rows from the family described by `spec`. `max_attempts` caps
/// the proposals spent by the rejection loop of truncated families.
pub fn sample(
    spec: &DistributionSpec,
    n: usize,
    method: FactorizationMethod,
    seed: u64,
    max_attempts: u64,
) -> Result<SampleMatrix> {
    if n == 0 {
        return Err(Error::InvalidConfig("n must be a positive integer"));
    }
    if max_attempts == 0 {
        return Err(Error::InvalidConfig("max_attempts must be a positive integer"));
    }
    let k = spec.dim();
    let mut proposer = Proposer::new(spec, method, seed)?;
    let mut data = vec![0.0; n * k];
    match spec.truncation() {
        None => {
            for row in data.chunks_exact_mut(k) {
                proposer.propose(row);
            }
        }
        Some(trunc) => {
            let mut attempts = 0u64;
            let mut accepted = 0usize;
            let mut buf = vec![0.0; k];
            while accepted < n {
                if attempts >= max_attempts {
                    return Err(Error::AcceptanceTooLow {
                        accepted,
                        attempts,
                        rate: accepted as f64 / attempts as f64,
                    });
                }
                attempts += 1;
                proposer.propose(&mut buf);
                if trunc.contains(&buf) && buf.iter().all(|v| v.is_finite()) {
                    data[accepted * k..(accepted + 1) * k].copy_from_slice(&buf);
                    accepted += 1;
                }
            }
        }
    }
    Ok(SampleMatrix {
        rows: n,
        dim: k,
        data,
        seed,
        method,
    })
}

/// `n` draws `x = δ + R z` from `N_k(δ, Σ)`, with `R Rᵀ = Σ` from `method`.
pub fn sample_mvn(
    n: usize,
    delta: &LocationVector,
    sigma: &ScaleMatrix,
    method: FactorizationMethod,
    seed: u64,
) -> Result<SampleMatrix> {
    let spec = DistributionSpec::new(delta.clone(), sigma.clone(), None, None)?;
    sample(&spec, n, method, seed, DEFAULT_MAX_ATTEMPTS)
}

/// `n` draws `x = δ + y √(ν / v)`, `y ~ N_k(0, Σ)`, `v ~ χ²_ν`.
pub fn sample_mvt(
    n: usize,
    delta: &LocationVector,
    sigma: &ScaleMatrix,
    nu: DegreesOfFreedom,
    method: FactorizationMethod,
    seed: u64,
) -> Result<SampleMatrix> {
    let spec = DistributionSpec::new(delta.clone(), sigma.clone(), Some(nu), None)?;
    sample(&spec, n, method, seed, DEFAULT_MAX_ATTEMPTS)
}

pub fn sample_tmvn(
    n: usize,
    delta: &LocationVector,
    sigma: &ScaleMatrix,
    trunc: &TruncationBox,
    method: FactorizationMethod,
    seed: u64,
    max_attempts: u64,
) -> Result<SampleMatrix> {
    let spec = DistributionSpec::new(delta.clone(), sigma.clone(), None, Some(trunc.clone()))?;
    sample(&spec, n, method, seed, max_attempts)
}

#[allow(clippy::too_many_arguments)]
pub fn sample_tmvt(
    n: usize,
    delta: &LocationVector,
    sigma: &ScaleMatrix,
    nu: DegreesOfFreedom,
    trunc: &TruncationBox,
    method: FactorizationMethod,
    seed: u64,
    max_attempts: u64,
) -> Result<SampleMatrix> {
    let spec = DistributionSpec::new(delta.clone(), sigma.clone(), Some(nu), Some(trunc.clone()))?;
    sample(&spec, n, method, seed, max_attempts)
}

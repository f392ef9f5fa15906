//! Densities of the four families, evaluated in log space through the
//! Cholesky factor of the scale matrix.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{exp, ln, ln_1p};
use crate::qmc::{truncation_normalizer, Integrator};
use crate::special::ln_gamma_ratio;
use crate::types::{
    DegreesOfFreedom, DistributionSpec, LocationVector, ProbabilityEstimate, QmcConfig,
    ScaleMatrix, TruncationBox,
};

const LN_2PI: f64 = 1.837_877_066_409_345_5;
const LN_PI: f64 = 1.144_729_885_849_400_2;

fn check_point(x: &[f64], delta: &LocationVector, sigma: &ScaleMatrix) -> Result<()> {
    let k = delta.dim();
    for (what, found) in [("x", x.len()), ("sigma", sigma.dim())] {
        if found != k {
            return Err(Error::DimensionMismatch {
                what,
                expected: k,
                found,
            });
        }
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("x"));
    }
    Ok(())
}

fn mahalanobis(x: &[f64], delta: &LocationVector, sigma: &ScaleMatrix) -> f64 {
    let centered: Vec<f64> = x.iter().zip(delta.as_slice()).map(|(x, d)| x - d).collect();
    sigma.mahalanobis_sq(&centered)
}

fn normal_log_kernel(x: &[f64], delta: &LocationVector, sigma: &ScaleMatrix) -> f64 {
    let k = delta.dim() as f64;
    -0.5 * (k * LN_2PI + sigma.log_det() + mahalanobis(x, delta, sigma))
}

fn student_log_kernel(x: &[f64], delta: &LocationVector, sigma: &ScaleMatrix, nu: f64) -> f64 {
    let k = delta.dim() as f64;
    let q = mahalanobis(x, delta, sigma);
    ln_gamma_ratio(0.5 * nu, 0.5 * k)
        - 0.5 * k * (ln(nu) + LN_PI)
        - 0.5 * sigma.log_det()
        - 0.5 * (nu + k) * ln_1p(q / nu)
}

/// `ln φ_k(x; δ, Σ)`.
pub fn mvn_log_density(x: &[f64], delta: &LocationVector, sigma: &ScaleMatrix) -> Result<f64> {
    check_point(x, delta, sigma)?;
    Ok(normal_log_kernel(x, delta, sigma))
}

/// `φ_k(x; δ, Σ)`.
pub fn mvn_density(x: &[f64], delta: &LocationVector, sigma: &ScaleMatrix) -> Result<f64> {
    mvn_log_density(x, delta, sigma).map(exp)
}

/// Log density of the t distribution with location `δ`, scale `Σ` and `ν`
/// degrees of freedom.
pub fn mvt_log_density(
    x: &[f64],
    delta: &LocationVector,
    sigma: &ScaleMatrix,
    nu: DegreesOfFreedom,
) -> Result<f64> {
    check_point(x, delta, sigma)?;
    Ok(student_log_kernel(x, delta, sigma, nu.get()))
}

pub fn mvt_density(
    x: &[f64],
    delta: &LocationVector,
    sigma: &ScaleMatrix,
    nu: DegreesOfFreedom,
) -> Result<f64> {
    mvt_log_density(x, delta, sigma, nu).map(exp)
}

/// Identifies the normalizing constant of a truncated distribution: the
/// bit patterns of location, scale, degrees of freedom, truncation box,
/// integration settings and seed.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct NormalizerKey(Vec<u64>);

impl NormalizerKey {
    pub fn new(spec: &DistributionSpec, qmc: &QmcConfig, seed: u64) -> Self {
        let mut bits = Vec::new();
        bits.push(spec.dim() as u64);
        bits.extend(spec.location().as_slice().iter().map(|v| v.to_bits()));
        bits.extend(spec.scale().entries().iter().map(|v| v.to_bits()));
        bits.push(spec.df().map_or(u64::MAX, |nu| nu.get().to_bits()));
        if let Some(t) = spec.truncation() {
            bits.extend(t.lower().iter().chain(t.upper()).map(|v| v.to_bits()));
        }
        bits.extend([
            qmc.shifts as u64,
            qmc.samples as u64,
            qmc.alpha.to_bits(),
            seed,
        ]);
        NormalizerKey(bits)
    }
}

/// Density of a truncated normal or t distribution with its normalizing
/// constant evaluated once.
#[derive(Debug, Clone)]
pub struct TruncatedDensity {
    location: LocationVector,
    scale: ScaleMatrix,
    df: Option<f64>,
    truncation: TruncationBox,
    normalizer: ProbabilityEstimate,
    ln_normalizer: f64,
}

impl TruncatedDensity {
    /// Integrates the truncation box under the parent distribution.
    pub fn new(spec: &DistributionSpec, qmc: &QmcConfig, seed: u64) -> Result<Self> {
        let trunc = spec
            .truncation()
            .ok_or(Error::MissingParameter("truncation"))?;
        let integrator = Integrator::for_spec(spec, qmc, seed)?;
        let normalizer =
            truncation_normalizer(&integrator, spec.location().as_slice(), spec.scale(), trunc)?;
        Self::with_normalizer(spec, normalizer)
    }

    /// Reuses a previously computed normalizing constant.
    pub fn with_normalizer(spec: &DistributionSpec, normalizer: ProbabilityEstimate) -> Result<Self> {
        let trunc = spec
            .truncation()
            .ok_or(Error::MissingParameter("truncation"))?;
        if !(normalizer.value > normalizer.error) {
            return Err(Error::DegenerateTruncation {
                value: normalizer.value,
                error: normalizer.error,
            });
        }
        Ok(TruncatedDensity {
            location: spec.location().clone(),
            scale: spec.scale().clone(),
            df: spec.df().map(DegreesOfFreedom::get),
            truncation: trunc.clone(),
            normalizer,
            ln_normalizer: ln(normalizer.value),
        })
    }

    pub fn normalizer(&self) -> ProbabilityEstimate {
        self.normalizer
    }

    /// Log density; `-inf` outside the closed truncation box.
    pub fn log_density(&self, x: &[f64]) -> Result<f64> {
        check_point(x, &self.location, &self.scale)?;
        if !self.truncation.contains(x) {
            return Ok(f64::NEG_INFINITY);
        }
        let parent = match self.df {
            Some(nu) => student_log_kernel(x, &self.location, &self.scale, nu),
            None => normal_log_kernel(x, &self.location, &self.scale),
        };
        Ok(parent - self.ln_normalizer)
    }

    pub fn density(&self, x: &[f64]) -> Result<f64> {
        self.log_density(x).map(exp)
    }
}

/// Log density of the truncated normal `φ'_k(x; δ, Σ, l, u)`.
pub fn tmvn_log_density(
    x: &[f64],
    delta: &LocationVector,
    sigma: &ScaleMatrix,
    trunc: &TruncationBox,
    qmc: &QmcConfig,
    seed: u64,
) -> Result<f64> {
    let spec = DistributionSpec::new(delta.clone(), sigma.clone(), None, Some(trunc.clone()))?;
    TruncatedDensity::new(&spec, qmc, seed)?.log_density(x)
}

pub fn tmvn_density(
    x: &[f64],
    delta: &LocationVector,
    sigma: &ScaleMatrix,
    trunc: &TruncationBox,
    qmc: &QmcConfig,
    seed: u64,
) -> Result<f64> {
    tmvn_log_density(x, delta, sigma, trunc, qmc, seed).map(exp)
}

/// Log density of the truncated t distribution.
pub fn tmvt_log_density(
    x: &[f64],
    delta: &LocationVector,
    sigma: &ScaleMatrix,
    nu: DegreesOfFreedom,
    trunc: &TruncationBox,
    qmc: &QmcConfig,
    seed: u64,
) -> Result<f64> {
    let spec = DistributionSpec::new(delta.clone(), sigma.clone(), Some(nu), Some(trunc.clone()))?;
    TruncatedDensity::new(&spec, qmc, seed)?.log_density(x)
}

pub fn tmvt_density(
    x: &[f64],
    delta: &LocationVector,
    sigma: &ScaleMatrix,
    nu: DegreesOfFreedom,
    trunc: &TruncationBox,
    qmc: &QmcConfig,
    seed: u64,
) -> Result<f64> {
    tmvt_log_density(x, delta, sigma, nu, trunc, qmc, seed).map(exp)
}

/// Log density of any family.
pub fn log_density(spec: &DistributionSpec, x: &[f64], qmc: &QmcConfig, seed: u64) -> Result<f64> {
    spec.check_point(x)?;
    if spec.truncation().is_some() {
        return TruncatedDensity::new(spec, qmc, seed)?.log_density(x);
    }
    Ok(match spec.df() {
        Some(nu) => student_log_kernel(x, spec.location(), spec.scale(), nu.get()),
        None => normal_log_kernel(x, spec.location(), spec.scale()),
    })
}

pub fn density(spec: &DistributionSpec, x: &[f64], qmc: &QmcConfig, seed: u64) -> Result<f64> {
    log_density(spec, x, qmc, seed).map(exp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use core::f64::consts::PI;

    fn loc(v: &[f64]) -> LocationVector {
        LocationVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn standard_normal_at_origin() {
        let d = mvn_density(&[0.0], &loc(&[0.0]), &ScaleMatrix::identity(1).unwrap()).unwrap();
        assert!((d - 1.0 / (2.0 * PI).sqrt()).abs() < 1e-15);
        let d = mvn_density(&[0.0; 2], &loc(&[0.0; 2]), &ScaleMatrix::identity(2).unwrap()).unwrap();
        assert!((d - 1.0 / (2.0 * PI)).abs() < 1e-15);
    }

    #[test]
    fn bivariate_normal_closed_form() {
        let rho: f64 = 0.6;
        let (s1, s2) = (1.5f64, 0.7f64);
        let sigma = ScaleMatrix::new(
            2,
            vec![s1 * s1, rho * s1 * s2, rho * s1 * s2, s2 * s2],
        )
        .unwrap();
        let delta = loc(&[0.3, -1.0]);
        let x = [1.1, -0.2];
        let z1 = (x[0] - 0.3) / s1;
        let z2 = (x[1] + 1.0) / s2;
        let q = (z1 * z1 - 2.0 * rho * z1 * z2 + z2 * z2) / (1.0 - rho * rho);
        let exact = (-0.5 * q).exp() / (2.0 * PI * s1 * s2 * (1.0 - rho * rho).sqrt());
        let d = mvn_density(&x, &delta, &sigma).unwrap();
        assert!((d - exact).abs() < 1e-14 * exact.max(1.0));
    }

    #[test]
    fn cauchy_and_bivariate_t() {
        let nu = DegreesOfFreedom::new(1.0).unwrap();
        let one = ScaleMatrix::identity(1).unwrap();
        for x in [-3.0, -0.5, 0.0, 2.0] {
            let d = mvt_density(&[x], &loc(&[0.0]), &one, nu).unwrap();
            assert!((d - 1.0 / (PI * (1.0 + x * x))).abs() < 1e-15);
        }
        // k = 2: (1 + Q/ν)^(-(ν+2)/2) / (2π |Σ|^½)
        let nu = 3.0;
        let sigma = ScaleMatrix::new(2, vec![1.0, 0.4, 0.4, 2.0]).unwrap();
        let det: f64 = 2.0 - 0.16;
        let x = [0.5, -1.0];
        let q = (2.0 * x[0] * x[0] - 0.8 * x[0] * x[1] + x[1] * x[1]) / det;
        let exact = (1.0 + q / nu).powf(-(nu + 2.0) / 2.0) / (2.0 * PI * det.sqrt());
        let d = mvt_density(&x, &loc(&[0.0; 2]), &sigma, DegreesOfFreedom::new(nu).unwrap())
            .unwrap();
        assert!((d - exact).abs() < 1e-14);
    }

    #[test]
    fn t_approaches_normal() {
        let sigma = ScaleMatrix::equicorrelated(3, 0.3).unwrap();
        let delta = loc(&[0.1, 0.0, -0.2]);
        let x = [0.4, -0.3, 1.0];
        let n = mvn_log_density(&x, &delta, &sigma).unwrap();
        let t = mvt_log_density(&x, &delta, &sigma, DegreesOfFreedom::new(1e9).unwrap()).unwrap();
        assert!((n - t).abs() < 1e-7);
    }

    #[test]
    fn univariate_truncated_normal() {
        let trunc = TruncationBox::new(vec![-1.5], vec![1.5]).unwrap();
        let one = ScaleMatrix::identity(1).unwrap();
        let q = QmcConfig::default();
        let d = tmvn_density(&[0.0], &loc(&[0.0]), &one, &trunc, &q, 0).unwrap();
        let mass = libm::erf(1.5 / 2f64.sqrt());
        let exact = 1.0 / ((2.0 * PI).sqrt() * mass);
        assert!((d - exact).abs() < 1e-13);
        assert!((d - 0.460_468_1).abs() < 2e-6);
        assert_eq!(
            tmvn_density(&[1.6], &loc(&[0.0]), &one, &trunc, &q, 0).unwrap(),
            0.0
        );
        assert_eq!(
            tmvn_log_density(&[-2.0], &loc(&[0.0]), &one, &trunc, &q, 0).unwrap(),
            f64::NEG_INFINITY
        );
        // closed box
        assert!(tmvn_density(&[1.5], &loc(&[0.0]), &one, &trunc, &q, 0).unwrap() > 0.0);
    }

    #[test]
    fn univariate_truncated_cauchy() {
        let trunc = TruncationBox::new(vec![-1.5], vec![1.5]).unwrap();
        let one = ScaleMatrix::identity(1).unwrap();
        let nu = DegreesOfFreedom::new(1.0).unwrap();
        let d = tmvt_density(&[0.0], &loc(&[0.0]), &one, nu, &trunc, &QmcConfig::default(), 0)
            .unwrap();
        let exact = 1.0 / (PI * (2.0 * 1.5f64.atan() / PI));
        assert!((d - exact).abs() < 1e-13);
        assert!((d - 0.508_752_4).abs() < 2e-6);
    }

    #[test]
    fn requires_truncation() {
        let spec = DistributionSpec::normal(loc(&[0.0]), ScaleMatrix::identity(1).unwrap()).unwrap();
        assert!(matches!(
            TruncatedDensity::new(&spec, &QmcConfig::default(), 0),
            Err(Error::MissingParameter(_))
        ));
    }

    #[test]
    fn rejects_bad_points() {
        let sigma = ScaleMatrix::identity(2).unwrap();
        assert!(matches!(
            mvn_density(&[0.0], &loc(&[0.0; 2]), &sigma),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            mvn_density(&[0.0, f64::NAN], &loc(&[0.0; 2]), &sigma),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn normalizer_key_distinguishes_inputs() {
        let a = DistributionSpec::from_parts(vec![0.0], vec![1.0], None, Some((vec![-1.0], vec![1.0])))
            .unwrap();
        let b = DistributionSpec::from_parts(vec![0.0], vec![1.0], Some(3.0), Some((vec![-1.0], vec![1.0])))
            .unwrap();
        let q = QmcConfig::default();
        assert_eq!(NormalizerKey::new(&a, &q, 1), NormalizerKey::new(&a, &q, 1));
        assert_ne!(NormalizerKey::new(&a, &q, 1), NormalizerKey::new(&a, &q, 2));
        assert_ne!(NormalizerKey::new(&a, &q, 1), NormalizerKey::new(&b, &q, 1));
    }
}

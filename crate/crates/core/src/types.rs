//! Validated domain types shared by every computation.
//!
//! All constructors either return a value whose invariants hold or a typed
//! [`Error`]; there is no way to obtain a partially valid object. Values are
//! immutable after construction.

use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;
use core::str::FromStr;

use crate::error::{Error, Result};
use crate::factor;

/// Relative tolerance for the symmetry check on `sigma`.
pub const SYMMETRY_TOLERANCE: f64 = 1e-12;
/// A Cholesky pivot must exceed this multiple of the largest diagonal entry.
pub const PD_TOLERANCE: f64 = 1e-10;

/// A real number or one of the infinities; never NaN.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtendedReal(f64);

impl ExtendedReal {
    pub const NEG_INF: ExtendedReal = ExtendedReal(f64::NEG_INFINITY);
    pub const POS_INF: ExtendedReal = ExtendedReal(f64::INFINITY);

    pub fn new(value: f64) -> Result<Self> {
        if value.is_nan() {
            Err(Error::NonFinite("extended real"))
        } else {
            Ok(ExtendedReal(value))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }

    pub fn is_finite(self) -> bool {
        self.0.is_finite()
    }
}

impl Eq for ExtendedReal {}

impl PartialOrd for ExtendedReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ExtendedReal {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

impl From<ExtendedReal> for f64 {
    fn from(v: ExtendedReal) -> f64 {
        v.0
    }
}

/// Location vector `δ` (the non-centrality vector for the t family).
#[derive(Debug, Clone, PartialEq)]
pub struct LocationVector(Vec<f64>);

impl LocationVector {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::Empty("location"));
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("location"));
        }
        Ok(LocationVector(entries))
    }

    pub fn zeros(k: usize) -> Result<Self> {
        Self::new(alloc::vec![0.0; k])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Symmetric positive-definite scale matrix `Σ`, stored row-major together
/// with its lower Cholesky factor.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaleMatrix {
    dim: usize,
    entries: Vec<f64>,
    chol: Vec<f64>,
}

impl ScaleMatrix {
    /// Builds `Σ` from `dim * dim` row-major entries.
    ///
    /// Asymmetric input is rejected rather than symmetrized.
    pub fn new(dim: usize, entries: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Empty("sigma"));
        }
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                what: "sigma entries",
                expected: dim * dim,
                found: entries.len(),
            });
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("sigma"));
        }
        for i in 0..dim {
            for j in (i + 1)..dim {
                let a = entries[i * dim + j];
                let b = entries[j * dim + i];
                let scale = a.abs().max(b.abs());
                if (a - b).abs() > SYMMETRY_TOLERANCE * scale {
                    return Err(Error::NotSymmetric { row: i, col: j });
                }
            }
        }
        let chol = factor::cholesky_lower_raw(dim, &entries)?;
        Ok(ScaleMatrix { dim, entries, chol })
    }

    /// Builds `Σ` from a list of rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        let mut entries = Vec::with_capacity(dim * dim);
        for row in rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    what: "sigma row",
                    expected: dim,
                    found: row.len(),
                });
            }
            entries.extend_from_slice(row);
        }
        Self::new(dim, entries)
    }

    pub fn identity(dim: usize) -> Result<Self> {
        let mut entries = alloc::vec![0.0; dim * dim];
        for i in 0..dim {
            entries[i * dim + i] = 1.0;
        }
        Self::new(dim, entries)
    }

    /// Equicorrelated matrix with unit diagonal and off-diagonal `rho`.
    pub fn equicorrelated(dim: usize, rho: f64) -> Result<Self> {
        let mut entries = alloc::vec![rho; dim * dim];
        for i in 0..dim {
            entries[i * dim + i] = 1.0;
        }
        Self::new(dim, entries)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.dim + j]
    }

    /// Row-major entries.
    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    /// Row-major lower Cholesky factor `L` with `L Lᵀ = Σ`.
    pub fn cholesky(&self) -> &[f64] {
        &self.chol
    }

    /// `ln |Σ|`.
    pub fn log_det(&self) -> f64 {
        (0..self.dim)
            .map(|i| crate::math::ln(self.chol[i * self.dim + i]))
            .sum::<f64>()
            * 2.0
    }

    /// `(x-δ)ᵀ Σ⁻¹ (x-δ)` via forward substitution with `L`.
    pub fn mahalanobis_sq(&self, centered: &[f64]) -> f64 {
        let k = self.dim;
        let mut z = alloc::vec![0.0; k];
        let mut total = 0.0;
        for i in 0..k {
            let row = &self.chol[i * k..i * k + i];
            let s: f64 = row.iter().zip(&z).map(|(l, z)| l * z).sum();
            z[i] = (centered[i] - s) / self.chol[i * k + i];
            total += z[i] * z[i];
        }
        total
    }
}

/// Degrees of freedom `ν > 0`; non-integer values are allowed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DegreesOfFreedom(f64);

impl DegreesOfFreedom {
    pub fn new(nu: f64) -> Result<Self> {
        if nu > 0.0 && nu.is_finite() {
            Ok(DegreesOfFreedom(nu))
        } else {
            Err(Error::InvalidDf(nu))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

fn check_box(lower: &[f64], upper: &[f64], what: &'static str) -> Result<()> {
    if lower.is_empty() {
        return Err(Error::Empty(what));
    }
    if lower.len() != upper.len() {
        return Err(Error::DimensionMismatch {
            what,
            expected: lower.len(),
            found: upper.len(),
        });
    }
    if lower.iter().chain(upper).any(|v| v.is_nan()) {
        return Err(Error::NonFinite(what));
    }
    if let Some(index) = lower.iter().zip(upper).position(|(a, b)| a >= b) {
        return Err(Error::InvalidBounds { index });
    }
    Ok(())
}

/// Integration rectangle `[a, b]` over the extended reals, `a_i < b_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedBounds {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl ExtendedBounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        check_box(&lower, &upper, "bounds")?;
        Ok(ExtendedBounds { lower, upper })
    }

    /// The whole of `ℝ^k`.
    pub fn whole_space(k: usize) -> Result<Self> {
        Self::new(
            alloc::vec![f64::NEG_INFINITY; k],
            alloc::vec![f64::INFINITY; k],
        )
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }
}

/// Truncation box `[l, u]`; the support is the closed box.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncationBox {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl TruncationBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        check_box(&lower, &upper, "truncation")?;
        Ok(TruncationBox { lower, upper })
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    /// Closed-box membership.
    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(x, (l, u))| *l <= *x && *x <= *u)
    }

    pub fn as_bounds(&self) -> ExtendedBounds {
        ExtendedBounds {
            lower: self.lower.clone(),
            upper: self.upper.clone(),
        }
    }
}

/// Randomized-lattice settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QmcConfig {
    pub shifts: u32,
    pub samples: u32,
    /// Monte Carlo confidence factor applied to the standard error.
    pub alpha: f64,
}

impl QmcConfig {
    pub fn new(shifts: u32, samples: u32, alpha: f64) -> Result<Self> {
        let cfg = QmcConfig {
            shifts,
            samples,
            alpha,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.shifts == 0 {
            return Err(Error::InvalidConfig("shifts must be a positive integer"));
        }
        if self.samples == 0 {
            return Err(Error::InvalidConfig("samples must be a positive integer"));
        }
        if !(self.alpha > 0.0) || !self.alpha.is_finite() {
            return Err(Error::InvalidConfig("alpha must be strictly positive"));
        }
        Ok(())
    }
}

impl Default for QmcConfig {
    fn default() -> Self {
        QmcConfig {
            shifts: 12,
            samples: 1000,
            alpha: 3.0,
        }
    }
}

/// Which equicoordinate quantile to compute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Tail {
    /// `p = P(X_i ≤ q for all i)`
    #[default]
    Lower,
    /// `p = P(X_i ≥ q for all i)`
    Upper,
    /// `p = P(-q ≤ X_i ≤ q for all i)`
    Both,
}

impl Tail {
    pub fn as_str(self) -> &'static str {
        match self {
            Tail::Lower => "lower",
            Tail::Upper => "upper",
            Tail::Both => "both",
        }
    }
}

impl FromStr for Tail {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lower" => Ok(Tail::Lower),
            "upper" => Ok(Tail::Upper),
            "both" => Ok(Tail::Both),
            _ => Err(Error::UnknownTail),
        }
    }
}

impl fmt::Display for Tail {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Settings for the equicoordinate quantile search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BisectionConfig {
    pub itermax: u64,
    pub tolerance: f64,
    pub tail: Tail,
}

impl BisectionConfig {
    pub fn new(itermax: u64, tolerance: f64, tail: Tail) -> Result<Self> {
        let cfg = BisectionConfig {
            itermax,
            tolerance,
            tail,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.itermax == 0 {
            return Err(Error::InvalidConfig("itermax must be a positive integer"));
        }
        if !(self.tolerance > 0.0) || !self.tolerance.is_finite() {
            return Err(Error::InvalidConfig("tolerance must be strictly positive"));
        }
        Ok(())
    }
}

impl Default for BisectionConfig {
    fn default() -> Self {
        BisectionConfig {
            itermax: 1_000_000,
            tolerance: 1e-6,
            tail: Tail::Lower,
        }
    }
}

/// How a matrix square root `R Rᵀ = Σ` is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FactorizationMethod {
    #[default]
    Cholesky,
    Eigen,
    Svd,
}

impl FactorizationMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            FactorizationMethod::Cholesky => "cholesky",
            FactorizationMethod::Eigen => "eigen",
            FactorizationMethod::Svd => "svd",
        }
    }
}

impl FromStr for FactorizationMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cholesky" | "chol" => Ok(FactorizationMethod::Cholesky),
            "eigen" | "eig" => Ok(FactorizationMethod::Eigen),
            "svd" => Ok(FactorizationMethod::Svd),
            _ => Err(Error::UnknownMethod),
        }
    }
}

impl fmt::Display for FactorizationMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A probability together with its Monte Carlo error bound
/// (`alpha` times the standard error of the shift means).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbabilityEstimate {
    pub value: f64,
    pub error: f64,
}

impl ProbabilityEstimate {
    pub fn exact(value: f64) -> Self {
        ProbabilityEstimate {
            value: value.clamp(0.0, 1.0),
            error: 0.0,
        }
    }
}

/// Outcome of the bisection search.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchStatus {
    /// `|fquantile| <= tolerance`.
    Converged,
    /// Stopped without meeting the objective tolerance: `itermax` ran out or
    /// the bracket collapsed below `tolerance` first.
    NotConverged,
    /// No sign change was found in the widest bracket tried.
    NoSignChange,
}

impl SearchStatus {
    /// Numeric flag as reported to users: 0, 1 or 2.
    pub fn code(self) -> u8 {
        match self {
            SearchStatus::Converged => 0,
            SearchStatus::NotConverged => 1,
            SearchStatus::NoSignChange => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantileResult {
    pub quantile: f64,
    /// Half the final bracket width plus the integrator's error at `quantile`.
    pub error: f64,
    pub flag: SearchStatus,
    /// Objective (probability minus `p`) at `quantile`.
    pub fquantile: f64,
    pub iterations: u64,
}

/// Which of the four distribution families a spec describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Normal,
    StudentT,
    TruncatedNormal,
    TruncatedStudentT,
}

/// A fully validated distribution: location, scale, optional degrees of
/// freedom (t family) and optional truncation box.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionSpec {
    location: LocationVector,
    scale: ScaleMatrix,
    df: Option<DegreesOfFreedom>,
    truncation: Option<TruncationBox>,
}

impl DistributionSpec {
    pub fn new(
        location: LocationVector,
        scale: ScaleMatrix,
        df: Option<DegreesOfFreedom>,
        truncation: Option<TruncationBox>,
    ) -> Result<Self> {
        let k = location.dim();
        if scale.dim() != k {
            return Err(Error::DimensionMismatch {
                what: "sigma",
                expected: k,
                found: scale.dim(),
            });
        }
        if let Some(t) = &truncation {
            if t.dim() != k {
                return Err(Error::DimensionMismatch {
                    what: "truncation",
                    expected: k,
                    found: t.dim(),
                });
            }
        }
        Ok(DistributionSpec {
            location,
            scale,
            df,
            truncation,
        })
    }

    /// Validates raw inputs in one step.
    pub fn from_parts(
        delta: Vec<f64>,
        sigma: Vec<f64>,
        nu: Option<f64>,
        truncation: Option<(Vec<f64>, Vec<f64>)>,
    ) -> Result<Self> {
        let location = LocationVector::new(delta)?;
        let k = location.dim();
        if sigma.len() != k * k {
            return Err(Error::DimensionMismatch {
                what: "sigma entries",
                expected: k * k,
                found: sigma.len(),
            });
        }
        let scale = ScaleMatrix::new(k, sigma)?;
        let df = nu.map(DegreesOfFreedom::new).transpose()?;
        let truncation = truncation
            .map(|(l, u)| TruncationBox::new(l, u))
            .transpose()?;
        Self::new(location, scale, df, truncation)
    }

    pub fn normal(location: LocationVector, scale: ScaleMatrix) -> Result<Self> {
        Self::new(location, scale, None, None)
    }

    pub fn dim(&self) -> usize {
        self.location.dim()
    }

    pub fn location(&self) -> &LocationVector {
        &self.location
    }

    pub fn scale(&self) -> &ScaleMatrix {
        &self.scale
    }

    pub fn df(&self) -> Option<DegreesOfFreedom> {
        self.df
    }

    pub fn truncation(&self) -> Option<&TruncationBox> {
        self.truncation.as_ref()
    }

    pub fn family(&self) -> Family {
        match (self.df.is_some(), self.truncation.is_some()) {
            (false, false) => Family::Normal,
            (true, false) => Family::StudentT,
            (false, true) => Family::TruncatedNormal,
            (true, true) => Family::TruncatedStudentT,
        }
    }

    /// Checks that `bounds` has this spec's dimension.
    pub fn check_bounds(&self, bounds: &ExtendedBounds) -> Result<()> {
        if bounds.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                what: "bounds",
                expected: self.dim(),
                found: bounds.dim(),
            });
        }
        Ok(())
    }

    /// Checks that a point has this spec's dimension and finite entries.
    pub fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                what: "x",
                expected: self.dim(),
                found: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("x"));
        }
        Ok(())
    }
}

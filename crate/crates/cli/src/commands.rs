//! Dispatch from parsed arguments to the core routines.

use std::fmt;

use rayon::prelude::*;
use serde_json::{json, Map, Value};

use mvdist_core::lattice::next_prime;
use mvdist_core::{
    density, qmc, quantile, sampling, BisectionConfig, DegreesOfFreedom, DistributionSpec, Error,
    ExtendedBounds, FactorizationMethod, LocationVector, QmcConfig, ScaleMatrix, SearchStatus, Tail,
    TruncationBox,
};

use crate::args::*;
use crate::cache::NormalizerCache;
use crate::output::{self, Body, Cell, Report};
use crate::parse::{Matrix, Reals};

/// Largest grid accepted by the emitters.
const MAX_GRID_POINTS: usize = 1_000_000;

#[derive(Debug)]
pub enum CliError {
    /// Malformed command line (exit code 1).
    Usage(String),
    /// Well-formed but unsupported request (exit code 2).
    Invalid(String),
    Core(Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Invalid(_) => 2,
            CliError::Core(e) if e.is_validation() => 2,
            CliError::Core(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Invalid(m) => f.write_str(m),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

type Result<T> = std::result::Result<T, CliError>;

/// Ordered record of every parsed flag, echoed in JSON output.
#[derive(Default)]
struct Echo(Map<String, Value>);

impl Echo {
    fn set(&mut self, key: &str, v: Value) -> &mut Self {
        self.0.insert(key.into(), v);
        self
    }

    fn reals(&mut self, key: &str, r: &Reals) -> &mut Self {
        self.set(key, output::reals(&r.0))
    }

    fn real(&mut self, key: &str, x: f64) -> &mut Self {
        self.set(key, output::real(x))
    }
}

fn location(r: &Reals) -> Result<LocationVector> {
    Ok(LocationVector::new(r.0.clone())?)
}

fn scale(m: &Matrix) -> Result<ScaleMatrix> {
    Ok(ScaleMatrix::from_rows(&m.0)?)
}

fn trunc_box(lower: &Reals, upper: &Reals) -> Result<TruncationBox> {
    Ok(TruncationBox::new(lower.0.clone(), upper.0.clone())?)
}

fn method(m: MethodArg) -> FactorizationMethod {
    match m {
        MethodArg::Cholesky => FactorizationMethod::Cholesky,
        MethodArg::Eigen => FactorizationMethod::Eigen,
        MethodArg::Svd => FactorizationMethod::Svd,
    }
}

fn tail(t: TailArg) -> Tail {
    match t {
        TailArg::Lower => Tail::Lower,
        TailArg::Upper => Tail::Upper,
        TailArg::Both => Tail::Both,
    }
}

/// The distribution named by the flags of one command.
struct Model {
    loc: LocationVector,
    scale: ScaleMatrix,
    df: Option<DegreesOfFreedom>,
}

impl Model {
    fn normal(m: &NormalModel, echo: &mut Echo) -> Result<Self> {
        echo.reals("mean", &m.mean).set("sigma", output::matrix(&m.sigma.0));
        Ok(Model {
            loc: location(&m.mean)?,
            scale: scale(&m.sigma)?,
            df: None,
        })
    }

    fn student(m: &StudentModel, echo: &mut Echo) -> Result<Self> {
        echo.reals("delta", &m.delta)
            .set("sigma", output::matrix(&m.sigma.0))
            .real("df", m.df);
        Ok(Model {
            loc: location(&m.delta)?,
            scale: scale(&m.sigma)?,
            df: Some(DegreesOfFreedom::new(m.df)?),
        })
    }

    fn spec(&self, trunc: Option<TruncationBox>) -> Result<DistributionSpec> {
        Ok(DistributionSpec::new(
            self.loc.clone(),
            self.scale.clone(),
            self.df,
            trunc,
        )?)
    }
}

fn truncation(t: &Truncation, echo: &mut Echo) -> Result<TruncationBox> {
    echo.reals("lower_truncation", &t.lower_truncation)
        .reals("upper_truncation", &t.upper_truncation);
    trunc_box(&t.lower_truncation, &t.upper_truncation)
}

fn qmc_config(q: &Qmc, echo: &mut Echo) -> Result<QmcConfig> {
    echo.set("shifts", json!(q.shifts))
        .set("samples", json!(q.samples))
        .real("alpha", q.alpha);
    Ok(QmcConfig::new(q.shifts, q.samples, q.alpha)?)
}

fn lattice_diagnostics(qmc: &QmcConfig) -> Map<String, Value> {
    let mut d = Map::new();
    d.insert("shifts".into(), json!(qmc.shifts));
    d.insert("points_per_shift".into(), json!(next_prime(qmc.samples)));
    d
}

/// Evaluates one command. `seed` and `format` are echoed by the caller.
pub fn execute(cli: &Cli, cache: &NormalizerCache) -> Result<Report> {
    let seed = cli.seed;
    let mut echo = Echo::default();
    let (command, result, error_estimate, diagnostics) = match &cli.command {
        Command::Mvnormalden { point, model } => {
            let m = Model::normal(model, &mut echo)?;
            let r = density_report(point, &m.spec(None)?, None, seed, cache, &mut echo)?;
            ("mvnormalden", r.0, r.1, r.2)
        }
        Command::Mvtden { point, model } => {
            let m = Model::student(model, &mut echo)?;
            let r = density_report(point, &m.spec(None)?, None, seed, cache, &mut echo)?;
            ("mvtden", r.0, r.1, r.2)
        }
        Command::Tmvnormalden {
            point,
            model,
            trunc,
            qmc,
        } => {
            let m = Model::normal(model, &mut echo)?;
            let spec = m.spec(Some(truncation(trunc, &mut echo)?))?;
            let q = qmc_config(qmc, &mut echo)?;
            let r = density_report(point, &spec, Some(&q), seed, cache, &mut echo)?;
            ("tmvnormalden", r.0, r.1, r.2)
        }
        Command::Tmvtden {
            point,
            model,
            trunc,
            qmc,
        } => {
            let m = Model::student(model, &mut echo)?;
            let spec = m.spec(Some(truncation(trunc, &mut echo)?))?;
            let q = qmc_config(qmc, &mut echo)?;
            let r = density_report(point, &spec, Some(&q), seed, cache, &mut echo)?;
            ("tmvtden", r.0, r.1, r.2)
        }
        Command::Pmvnormal { rect, model, qmc } => {
            let m = Model::normal(model, &mut echo)?;
            let r = probability_report(rect, &m.spec(None)?, qmc, seed, &mut echo)?;
            ("pmvnormal", r.0, r.1, r.2)
        }
        Command::Mvt { rect, model, qmc } => {
            let m = Model::student(model, &mut echo)?;
            let r = probability_report(rect, &m.spec(None)?, qmc, seed, &mut echo)?;
            ("mvt", r.0, r.1, r.2)
        }
        Command::Tmvnormal {
            rect,
            model,
            trunc,
            qmc,
        } => {
            let m = Model::normal(model, &mut echo)?;
            let spec = m.spec(Some(truncation(trunc, &mut echo)?))?;
            let r = probability_report(rect, &spec, qmc, seed, &mut echo)?;
            ("tmvnormal", r.0, r.1, r.2)
        }
        Command::Tmvt {
            rect,
            model,
            trunc,
            qmc,
        } => {
            let m = Model::student(model, &mut echo)?;
            let spec = m.spec(Some(truncation(trunc, &mut echo)?))?;
            let r = probability_report(rect, &spec, qmc, seed, &mut echo)?;
            ("tmvt", r.0, r.1, r.2)
        }
        Command::Invmvnormal {
            search,
            model,
            qmc,
            integrator,
        } => {
            let m = Model::normal(model, &mut echo)?;
            echo.set("integrator", json!(integrator.integrator));
            let r = quantile_report(search, &m.spec(None)?, qmc, seed, &mut echo)?;
            ("invmvnormal", r.0, r.1, r.2)
        }
        Command::Invmvt { search, model, qmc } => {
            let m = Model::student(model, &mut echo)?;
            let r = quantile_report(search, &m.spec(None)?, qmc, seed, &mut echo)?;
            ("invmvt", r.0, r.1, r.2)
        }
        Command::Invtmvnormal {
            search,
            model,
            trunc,
            qmc,
            integrator,
        } => {
            let m = Model::normal(model, &mut echo)?;
            let spec = m.spec(Some(truncation(trunc, &mut echo)?))?;
            echo.set("integrator", json!(integrator.integrator));
            let r = quantile_report(search, &spec, qmc, seed, &mut echo)?;
            ("invtmvnormal", r.0, r.1, r.2)
        }
        Command::Invtmvt {
            search,
            model,
            trunc,
            qmc,
        } => {
            let m = Model::student(model, &mut echo)?;
            let spec = m.spec(Some(truncation(trunc, &mut echo)?))?;
            let r = quantile_report(search, &spec, qmc, seed, &mut echo)?;
            ("invtmvt", r.0, r.1, r.2)
        }
        Command::Rmvnormal { model, draws } => {
            let m = Model::normal(model, &mut echo)?;
            let r = sample_report(&m.spec(None)?, draws, None, seed, &mut echo)?;
            ("rmvnormal", r.0, r.1, r.2)
        }
        Command::Rmvt { model, draws } => {
            let m = Model::student(model, &mut echo)?;
            let r = sample_report(&m.spec(None)?, draws, None, seed, &mut echo)?;
            ("rmvt", r.0, r.1, r.2)
        }
        Command::Rtmvnormal {
            model,
            trunc,
            draws,
            cap,
        } => {
            let m = Model::normal(model, &mut echo)?;
            let spec = m.spec(Some(truncation(trunc, &mut echo)?))?;
            let r = sample_report(&spec, draws, Some(cap), seed, &mut echo)?;
            ("rtmvnormal", r.0, r.1, r.2)
        }
        Command::Rtmvt {
            model,
            trunc,
            draws,
            cap,
        } => {
            let m = Model::student(model, &mut echo)?;
            let spec = m.spec(Some(truncation(trunc, &mut echo)?))?;
            let r = sample_report(&spec, draws, Some(cap), seed, &mut echo)?;
            ("rtmvt", r.0, r.1, r.2)
        }
        Command::DensityGrid(g) => {
            let r = density_grid(g, seed, cache, &mut echo)?;
            ("density-grid", r.0, r.1, r.2)
        }
        Command::TruncationCurve(c) => {
            let r = truncation_curve(c, seed, &mut echo)?;
            ("truncation-curve", r.0, r.1, r.2)
        }
    };
    echo.set("seed", json!(seed));
    echo.set("format", json!(format_name(cli.format)));
    Ok(Report {
        command,
        inputs: echo.0,
        result,
        error_estimate,
        diagnostics,
    })
}

fn format_name(f: Format) -> &'static str {
    match f {
        Format::Text => "text",
        Format::Json => "json",
        Format::Csv => "csv",
    }
}

type Parts = (Body, Option<f64>, Map<String, Value>);

fn density_report(
    point: &Point,
    spec: &DistributionSpec,
    qmc: Option<&QmcConfig>,
    seed: u64,
    cache: &NormalizerCache,
    echo: &mut Echo,
) -> Result<Parts> {
    echo.reals("x", &point.x).set("log_density", json!(point.log_density));
    let mut diag = Map::new();
    let (log, rel_err) = match (spec.truncation(), qmc) {
        (Some(_), Some(q)) => {
            let td = cache.density(spec, q, seed)?;
            let z = td.normalizer();
            diag.insert("normalizer".into(), output::real(z.value));
            diag.insert("normalizer_error".into(), output::real(z.error));
            (td.log_density(&point.x.0)?, Some(z.error / z.value))
        }
        _ => (density::log_density(spec, &point.x.0, &QmcConfig::default(), seed)?, None),
    };
    // the normalizer's relative error carries over to the density, and is
    // an absolute error on the log scale
    let (key, value, err) = if point.log_density {
        ("log_density", log, rel_err)
    } else {
        let v = log.exp();
        ("density", v, rel_err.map(|r| r * v))
    };
    Ok((Body::Scalars(vec![(key, Cell::Real(value))]), err, diag))
}

fn probability_report(
    rect: &Rectangle,
    spec: &DistributionSpec,
    q: &Qmc,
    seed: u64,
    echo: &mut Echo,
) -> Result<Parts> {
    echo.reals("lower", &rect.lower).reals("upper", &rect.upper);
    let qmc = qmc_config(q, echo)?;
    let bounds = ExtendedBounds::new(rect.lower.0.clone(), rect.upper.0.clone())?;
    let est = qmc::probability(spec, &bounds, &qmc, seed)?;
    Ok((
        Body::Scalars(vec![("value", Cell::Real(est.value))]),
        Some(est.error),
        lattice_diagnostics(&qmc),
    ))
}

fn quantile_report(
    s: &Search,
    spec: &DistributionSpec,
    q: &Qmc,
    seed: u64,
    echo: &mut Echo,
) -> Result<Parts> {
    echo.real("p", s.p)
        .set("tail", json!(tail(s.tail).as_str()))
        .set("itermax", json!(s.itermax))
        .real("tolerance", s.tolerance);
    let qmc = qmc_config(q, echo)?;
    let cfg = BisectionConfig::new(s.itermax, s.tolerance, tail(s.tail))?;
    let r = quantile::quantile(spec, s.p, &cfg, &qmc, seed)?;
    let mut diag = lattice_diagnostics(&qmc);
    let status = match r.flag {
        SearchStatus::Converged => "converged",
        SearchStatus::NotConverged => "stopped before the objective met the tolerance",
        SearchStatus::NoSignChange => "no sign change in the widest bracket",
    };
    diag.insert("status".into(), json!(status));
    Ok((
        Body::Scalars(vec![
            ("quantile", Cell::Real(r.quantile)),
            ("flag", Cell::Int(r.flag.code() as u64)),
            ("fquantile", Cell::Real(r.fquantile)),
            ("iterations", Cell::Int(r.iterations)),
        ]),
        Some(r.error),
        diag,
    ))
}

fn sample_report(
    spec: &DistributionSpec,
    d: &Draws,
    cap: Option<&AttemptCap>,
    seed: u64,
    echo: &mut Echo,
) -> Result<Parts> {
    echo.set("n", json!(d.n))
        .set("method", json!(method(d.method).as_str()));
    let max_attempts = match cap {
        Some(c) => {
            echo.set("max_attempts", json!(c.max_attempts));
            c.max_attempts
        }
        None => sampling::DEFAULT_MAX_ATTEMPTS,
    };
    let draws = sampling::sample(spec, d.n, method(d.method), seed, max_attempts)?;
    let columns = (1..=draws.dim()).map(|j| format!("x{j}")).collect();
    let rows = draws
        .iter_rows()
        .map(|r| r.iter().map(|&v| Cell::Real(v)).collect())
        .collect();
    let mut diag = Map::new();
    diag.insert("rows".into(), json!(draws.rows()));
    diag.insert("method".into(), json!(draws.method().as_str()));
    Ok((Body::Table { columns, rows }, None, diag))
}

/// Evenly spaced points `from, from + step, …` up to `to`, snapped to nine
/// decimals so that accumulated rounding does not move grid points such as 0.
fn axis(from: f64, to: f64, step: f64) -> Result<Vec<f64>> {
    if !from.is_finite() || !to.is_finite() || !(step > 0.0) || !step.is_finite() || to < from {
        return Err(CliError::Invalid(format!(
            "grid needs finite from <= to and step > 0 (got from {from}, to {to}, step {step})"
        )));
    }
    let n = ((to - from) / step + 1e-9).floor() + 1.0;
    if n > MAX_GRID_POINTS as f64 {
        return Err(CliError::Invalid(format!("grid has more than {MAX_GRID_POINTS} points")));
    }
    Ok((0..n as usize)
        .map(|i| ((from + i as f64 * step) * 1e9).round() / 1e9)
        .collect())
}

fn density_grid(g: &GridArgs, seed: u64, cache: &NormalizerCache, echo: &mut Echo) -> Result<Parts> {
    echo.reals("mean", &g.mean)
        .set("sigma", output::matrix(&g.sigma.0))
        .real("df", g.df)
        .reals("lower_truncation", &g.lower_truncation)
        .reals("upper_truncation", &g.upper_truncation)
        .real("from", g.from)
        .real("to", g.to)
        .real("step", g.step)
        .set("family", json!(family_name(g.family)))
        .set("log_density", json!(g.log_density));
    let qmc = qmc_config(&g.qmc, echo)?;
    let loc = location(&g.mean)?;
    let sigma = scale(&g.sigma)?;
    if loc.dim() != 2 {
        return Err(CliError::Invalid(format!(
            "density-grid needs a bivariate distribution, got dimension {}",
            loc.dim()
        )));
    }
    let nu = DegreesOfFreedom::new(g.df)?;
    let trunc = trunc_box(&g.lower_truncation, &g.upper_truncation)?;
    let xs = axis(g.from, g.to, g.step)?;
    let points: Vec<[f64; 2]> = xs
        .iter()
        .flat_map(|&a| xs.iter().map(move |&b| [a, b]))
        .collect();

    let families = [
        (GridFamily::Mvnormalden, None, None),
        (GridFamily::Mvtden, Some(nu), None),
        (GridFamily::Tmvnormalden, None, Some(trunc.clone())),
        (GridFamily::Tmvtden, Some(nu), Some(trunc)),
    ];
    let mut rows = Vec::new();
    let mut diag = Map::new();
    for (family, df, tb) in families {
        if g.family != GridFamily::All && g.family != family {
            continue;
        }
        let name = family_name(family);
        let spec = DistributionSpec::new(loc.clone(), sigma.clone(), df, tb)?;
        let logs: Vec<f64> = if spec.truncation().is_some() {
            let td = cache.density(&spec, &qmc, seed)?;
            diag.insert(format!("{name}_normalizer"), output::real(td.normalizer().value));
            diag.insert(format!("{name}_normalizer_error"), output::real(td.normalizer().error));
            points
                .par_iter()
                .map(|x| td.log_density(x))
                .collect::<mvdist_core::Result<_>>()?
        } else {
            points
                .par_iter()
                .map(|x| density::log_density(&spec, x, &qmc, seed))
                .collect::<mvdist_core::Result<_>>()?
        };
        for (x, l) in points.iter().zip(logs) {
            let v = if g.log_density { l } else { l.exp() };
            rows.push(vec![
                Cell::Text(name.into()),
                Cell::Real(x[0]),
                Cell::Real(x[1]),
                Cell::Real(v),
            ]);
        }
    }
    let value = if g.log_density { "log_density" } else { "density" };
    let columns = ["family", "x1", "x2", value].map(String::from).to_vec();
    diag.insert("points_per_family".into(), json!(points.len()));
    Ok((Body::Table { columns, rows }, None, diag))
}

fn family_name(f: GridFamily) -> &'static str {
    match f {
        GridFamily::All => "all",
        GridFamily::Mvnormalden => "mvnormalden",
        GridFamily::Mvtden => "mvtden",
        GridFamily::Tmvnormalden => "tmvnormalden",
        GridFamily::Tmvtden => "tmvtden",
    }
}

fn truncation_curve(c: &CurveArgs, seed: u64, echo: &mut Echo) -> Result<Parts> {
    echo.reals("mean", &c.mean)
        .set("sigma", output::matrix(&c.sigma.0))
        .reals("lower", &c.lower)
        .reals("upper", &c.upper)
        .real("from", c.from)
        .real("to", c.to)
        .real("step", c.step);
    let qmc = qmc_config(&c.qmc, echo)?;
    let loc = location(&c.mean)?;
    let sigma = scale(&c.sigma)?;
    let k = loc.dim();
    let bounds = ExtendedBounds::new(c.lower.0.clone(), c.upper.0.clone())?;
    let ts = axis(c.from, c.to, c.step)?;
    // every t shares the seed, so neighbouring points see the same lattice
    let rows = ts
        .par_iter()
        .map(|&t| {
            let tb = TruncationBox::new(vec![t; k], vec![f64::INFINITY; k])?;
            let spec = DistributionSpec::new(loc.clone(), sigma.clone(), None, Some(tb))?;
            let est = qmc::probability(&spec, &bounds, &qmc, seed)?;
            Ok(vec![Cell::Real(t), Cell::Real(est.value), Cell::Real(est.error)])
        })
        .collect::<mvdist_core::Result<Vec<_>>>()?;
    let columns = ["t", "probability", "error"].map(String::from).to_vec();
    Ok((Body::Table { columns, rows }, None, lattice_diagnostics(&qmc)))
}

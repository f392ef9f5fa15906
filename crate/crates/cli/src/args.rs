//! Command-line surface.

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::parse::{self, Matrix, Reals};

#[derive(Debug, Parser)]
#[command(
    name = "mvdist",
    version,
    about = "Densities, probabilities, quantiles and draws of the multivariate normal and t distributions, with optional truncation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Seed for every stochastic step (lattice shifts, draws)
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,

    /// Worker threads for the integrator; never changes results
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TailArg {
    Lower,
    Upper,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Cholesky,
    Eigen,
    Svd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GridFamily {
    All,
    Mvnormalden,
    Mvtden,
    Tmvnormalden,
    Tmvtden,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Density of N_k(mean, sigma)
    Mvnormalden {
        #[command(flatten)]
        point: Point,
        #[command(flatten)]
        model: NormalModel,
    },
    /// P(lower <= X <= upper) for N_k(mean, sigma)
    Pmvnormal {
        #[command(flatten)]
        rect: Rectangle,
        #[command(flatten)]
        model: NormalModel,
        #[command(flatten)]
        qmc: Qmc,
    },
    /// Equicoordinate quantile of N_k(mean, sigma)
    Invmvnormal {
        #[command(flatten)]
        search: Search,
        #[command(flatten)]
        model: NormalModel,
        #[command(flatten)]
        qmc: Qmc,
        #[command(flatten)]
        integrator: IntegratorArg,
    },
    /// Draws from N_k(mean, sigma)
    Rmvnormal {
        #[command(flatten)]
        model: NormalModel,
        #[command(flatten)]
        draws: Draws,
    },
    /// Density of the shifted multivariate t
    Mvtden {
        #[command(flatten)]
        point: Point,
        #[command(flatten)]
        model: StudentModel,
    },
    /// Rectangle probability of the shifted multivariate t
    Mvt {
        #[command(flatten)]
        rect: Rectangle,
        #[command(flatten)]
        model: StudentModel,
        #[command(flatten)]
        qmc: Qmc,
    },
    /// Equicoordinate quantile of the shifted multivariate t
    Invmvt {
        #[command(flatten)]
        search: Search,
        #[command(flatten)]
        model: StudentModel,
        #[command(flatten)]
        qmc: Qmc,
    },
    /// Draws from the shifted multivariate t
    Rmvt {
        #[command(flatten)]
        model: StudentModel,
        #[command(flatten)]
        draws: Draws,
    },
    /// Density of the truncated multivariate normal
    Tmvnormalden {
        #[command(flatten)]
        point: Point,
        #[command(flatten)]
        model: NormalModel,
        #[command(flatten)]
        trunc: Truncation,
        #[command(flatten)]
        qmc: Qmc,
    },
    /// Rectangle probability of the truncated multivariate normal
    Tmvnormal {
        #[command(flatten)]
        rect: Rectangle,
        #[command(flatten)]
        model: NormalModel,
        #[command(flatten)]
        trunc: Truncation,
        #[command(flatten)]
        qmc: Qmc,
    },
    /// Equicoordinate quantile of the truncated multivariate normal
    Invtmvnormal {
        #[command(flatten)]
        search: Search,
        #[command(flatten)]
        model: NormalModel,
        #[command(flatten)]
        trunc: Truncation,
        #[command(flatten)]
        qmc: Qmc,
        #[command(flatten)]
        integrator: IntegratorArg,
    },
    /// Rejection draws from the truncated multivariate normal
    Rtmvnormal {
        #[command(flatten)]
        model: NormalModel,
        #[command(flatten)]
        trunc: Truncation,
        #[command(flatten)]
        draws: Draws,
        #[command(flatten)]
        cap: AttemptCap,
    },
    /// Density of the truncated multivariate t
    Tmvtden {
        #[command(flatten)]
        point: Point,
        #[command(flatten)]
        model: StudentModel,
        #[command(flatten)]
        trunc: Truncation,
        #[command(flatten)]
        qmc: Qmc,
    },
    /// Rectangle probability of the truncated multivariate t
    Tmvt {
        #[command(flatten)]
        rect: Rectangle,
        #[command(flatten)]
        model: StudentModel,
        #[command(flatten)]
        trunc: Truncation,
        #[command(flatten)]
        qmc: Qmc,
    },
    /// Equicoordinate quantile of the truncated multivariate t
    Invtmvt {
        #[command(flatten)]
        search: Search,
        #[command(flatten)]
        model: StudentModel,
        #[command(flatten)]
        trunc: Truncation,
        #[command(flatten)]
        qmc: Qmc,
    },
    /// Rejection draws from the truncated multivariate t
    Rtmvt {
        #[command(flatten)]
        model: StudentModel,
        #[command(flatten)]
        trunc: Truncation,
        #[command(flatten)]
        draws: Draws,
        #[command(flatten)]
        cap: AttemptCap,
    },
    /// Bivariate densities of all four families over a square grid
    DensityGrid(GridArgs),
    /// Orthant probability of a truncated normal as the truncation point t moves
    TruncationCurve(CurveArgs),
}

#[derive(Debug, Args)]
pub struct Point {
    /// Point at which to evaluate the density
    #[arg(long, value_parser = parse::reals, allow_hyphen_values = true)]
    pub x: Reals,
    /// Return the natural log of the density
    #[arg(long)]
    pub log_density: bool,
}

#[derive(Debug, Args)]
pub struct NormalModel {
    /// Location vector
    #[arg(long, visible_alias = "delta", value_parser = parse::reals, allow_hyphen_values = true)]
    pub mean: Reals,
    /// Scale matrix, rows separated by `;`
    #[arg(long, value_parser = parse::matrix, allow_hyphen_values = true)]
    pub sigma: Matrix,
}

#[derive(Debug, Args)]
pub struct StudentModel {
    /// Non-centrality (location) vector
    #[arg(long, visible_alias = "mean", value_parser = parse::reals, allow_hyphen_values = true)]
    pub delta: Reals,
    /// Scale matrix, rows separated by `;`
    #[arg(long, value_parser = parse::matrix, allow_hyphen_values = true)]
    pub sigma: Matrix,
    /// Degrees of freedom (non-integer allowed)
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub df: f64,
}

#[derive(Debug, Args)]
pub struct Rectangle {
    /// Lower integration limits; `.` is -inf
    #[arg(long, value_parser = parse::lower_limits, allow_hyphen_values = true)]
    pub lower: Reals,
    /// Upper integration limits; `.` is +inf
    #[arg(long, value_parser = parse::upper_limits, allow_hyphen_values = true)]
    pub upper: Reals,
}

#[derive(Debug, Args)]
pub struct Truncation {
    /// Lower truncation points; `.` is -inf
    #[arg(long, value_parser = parse::lower_limits, allow_hyphen_values = true)]
    pub lower_truncation: Reals,
    /// Upper truncation points; `.` is +inf
    #[arg(long, value_parser = parse::upper_limits, allow_hyphen_values = true)]
    pub upper_truncation: Reals,
}

#[derive(Debug, Args)]
pub struct Qmc {
    /// Number of random lattice shifts
    #[arg(long, default_value_t = 12)]
    pub shifts: u32,
    /// Lattice points per shift (rounded up to a prime)
    #[arg(long, default_value_t = 1000)]
    pub samples: u32,
    /// Monte Carlo confidence factor for the error estimate
    #[arg(long, default_value_t = 3.0, allow_hyphen_values = true)]
    pub alpha: f64,
}

#[derive(Debug, Args)]
pub struct Search {
    /// Target probability, strictly between 0 and 1
    #[arg(long, allow_hyphen_values = true)]
    pub p: f64,
    #[arg(long, value_enum, default_value_t = TailArg::Lower)]
    pub tail: TailArg,
    /// Maximum number of bisection steps
    #[arg(long, default_value_t = 1_000_000)]
    pub itermax: u64,
    /// Termination tolerance on both the probability and the bracket width
    #[arg(long, default_value_t = 1e-6, allow_hyphen_values = true)]
    pub tolerance: f64,
}

#[derive(Debug, Args)]
pub struct IntegratorArg {
    /// Probability routine used inside the search (only the lattice rule is available)
    #[arg(long, default_value = "pmvnormal", value_parser = ["pmvnormal"])]
    pub integrator: String,
}

#[derive(Debug, Args)]
pub struct Draws {
    /// Number of vectors to draw
    #[arg(long, default_value_t = 1)]
    pub n: usize,
    /// Matrix square root used to correlate the draws
    #[arg(long, value_enum, default_value_t = MethodArg::Cholesky)]
    pub method: MethodArg,
}

#[derive(Debug, Args)]
pub struct AttemptCap {
    /// Total proposals allowed before giving up
    #[arg(long, default_value_t = mvdist_core::sampling::DEFAULT_MAX_ATTEMPTS)]
    pub max_attempts: u64,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    #[arg(long, visible_alias = "delta", default_value = "0,0", value_parser = parse::reals, allow_hyphen_values = true)]
    pub mean: Reals,
    #[arg(long, default_value = "1,0.5;0.5,1", value_parser = parse::matrix, allow_hyphen_values = true)]
    pub sigma: Matrix,
    /// Degrees of freedom of the t families
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub df: f64,
    #[arg(long, default_value = "-1.5,-1.5", value_parser = parse::lower_limits, allow_hyphen_values = true)]
    pub lower_truncation: Reals,
    #[arg(long, default_value = "1.5,1.5", value_parser = parse::upper_limits, allow_hyphen_values = true)]
    pub upper_truncation: Reals,
    /// First grid coordinate on both axes
    #[arg(long, default_value_t = -3.0, allow_hyphen_values = true)]
    pub from: f64,
    /// Last grid coordinate on both axes
    #[arg(long, default_value_t = 3.0, allow_hyphen_values = true)]
    pub to: f64,
    #[arg(long, default_value_t = 0.1, allow_hyphen_values = true)]
    pub step: f64,
    #[arg(long, value_enum, default_value_t = GridFamily::All)]
    pub family: GridFamily,
    #[arg(long)]
    pub log_density: bool,
    #[command(flatten)]
    pub qmc: Qmc,
}

#[derive(Debug, Args)]
pub struct CurveArgs {
    #[arg(long, visible_alias = "delta", default_value = "0,0,0", value_parser = parse::reals, allow_hyphen_values = true)]
    pub mean: Reals,
    #[arg(long, default_value = "1,0.5,0.5;0.5,1,0.5;0.5,0.5,1", value_parser = parse::matrix, allow_hyphen_values = true)]
    pub sigma: Matrix,
    /// Rectangle whose truncated probability is traced
    #[arg(long, default_value = "0,0,0", value_parser = parse::lower_limits, allow_hyphen_values = true)]
    pub lower: Reals,
    #[arg(long, default_value = "inf,inf,inf", value_parser = parse::upper_limits, allow_hyphen_values = true)]
    pub upper: Reals,
    /// First truncation point t; the truncation box is [t, inf)^k
    #[arg(long, default_value_t = -8.0, allow_hyphen_values = true)]
    pub from: f64,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub to: f64,
    #[arg(long, default_value_t = 0.1, allow_hyphen_values = true)]
    pub step: f64,
    #[command(flatten)]
    pub qmc: Qmc,
}

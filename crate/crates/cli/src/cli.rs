use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "gsd",
    version,
    about = "Fit, test and simulate the generalised score distribution for ordinal scores"
)]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Seed for every random draw.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Number of scale categories.
    #[arg(long, global = true, default_value_t = 5, value_parser = clap::value_parser!(u32).range(3..))]
    pub m: u32,
    /// Spacing of the estimation grid in both psi and rho.
    #[arg(long, global = true, default_value_t = 0.01)]
    pub grid_step: f64,
    /// Bootstrap replicates.
    #[arg(long, global = true, default_value_t = 10_000)]
    pub mc: u32,
    /// Score CSV (or p-value CSV for pp-plot).
    #[arg(long, global = true)]
    pub input: Option<PathBuf>,
    /// Write here instead of stdout.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
}

/// Score counts of a single stimulus, as an alternative to `--input`.
#[derive(Debug, Args)]
pub struct CountsArg {
    #[arg(long, value_delimiter = ',', conflicts_with = "input")]
    pub counts: Option<Vec<u64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Moments,
    Grid,
    Gradient,
    Constrained,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Model {
    Gsd,
    Probit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Estimator {
    Grid,
    Constrained,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Bound {
    Pointwise,
    Dkw,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    Unmodified,
    Corrected,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StudyKind {
    Single,
    Matrix,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Figure {
    /// V_min, V_max, V_bin and C against psi.
    Variance,
    /// (mean, variance) reached by a (psi, rho) grid.
    GsdMapping,
    /// (mean, variance) reached by a (mu, sigma) grid of the ordered probit.
    ProbitMapping,
    /// Grid points meeting p_max <= 1 - 1/n.
    Feasible,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    /// Significance level of the reference bound.
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Number of intervals of the [0, 1] grid.
    #[arg(long, default_value_t = 100)]
    pub points: usize,
    #[arg(long, value_enum, default_value_t = Bound::Pointwise)]
    pub bound: Bound,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate (psi, rho) per stimulus.
    Fit {
        #[arg(long, value_enum, default_value_t = Method::Grid)]
        method: Method,
        #[command(flatten)]
        counts: CountsArg,
    },
    /// Bootstrapped G-test of fit per stimulus, with P-P plot data.
    Gof {
        #[arg(long, value_enum, default_value_t = Model::Gsd)]
        model: Model,
        #[arg(long, value_enum, default_value_t = Estimator::Constrained)]
        estimator: Estimator,
        #[command(flatten)]
        plot: PlotArgs,
        #[command(flatten)]
        counts: CountsArg,
    },
    /// Draw scores from one GSD.
    Sample {
        #[arg(long)]
        psi: f64,
        #[arg(long)]
        rho: f64,
        #[arg(short = 'n', long = "size")]
        size: usize,
    },
    /// GSD against the empirical distribution in predicting larger samples.
    Compare {
        #[arg(long, value_delimiter = ',', required = true)]
        n_small: Vec<u64>,
        #[arg(long, value_enum, default_value_t = VariantArg::Unmodified)]
        variant: VariantArg,
        /// Histogram bins over [-1, 1].
        #[arg(long, default_value_t = 20)]
        bins: usize,
        #[command(flatten)]
        counts: CountsArg,
    },
    /// Per-stimulus psi and per-rater rho from rater/stimulus scores.
    MatrixFit {
        #[arg(long, default_value_t = 500)]
        max_sweeps: u32,
        #[arg(long, default_value_t = 1e-8)]
        tolerance: f64,
    },
    /// Simulate a long-format score file.
    Simulate {
        #[arg(long, default_value_t = 1)]
        stimuli: usize,
        #[arg(long, default_value_t = 24)]
        raters: usize,
        /// Common psi of every stimulus; uniform on [1, M] when omitted.
        #[arg(long)]
        psi: Option<f64>,
        /// Common rho of every rater; uniform on [0, 1] when omitted.
        #[arg(long)]
        rho: Option<f64>,
        /// Also write the generating parameters here.
        #[arg(long)]
        truth: Option<PathBuf>,
    },
    /// Estimation accuracy against sample size.
    RmsdStudy {
        #[arg(long, value_enum, default_value_t = StudyKind::Single)]
        kind: StudyKind,
        #[arg(long, value_delimiter = ',', default_value = "12,24,50,200")]
        sizes: Vec<u64>,
        #[arg(long, default_value_t = 1000)]
        replicates: u32,
        /// Spacing of the (psi, rho) cells of the single-stimulus study.
        #[arg(long, default_value_t = 0.25)]
        cell_step: f64,
        /// Fixed psi of stimulus 0 in the matrix study.
        #[arg(long, value_delimiter = ',')]
        probe_psi: Vec<f64>,
        /// Fixed rho of rater 0 in the matrix study.
        #[arg(long, value_delimiter = ',')]
        probe_rho: Vec<f64>,
    },
    /// Ordered probit maximum likelihood per stimulus.
    ProbitFit {
        #[command(flatten)]
        counts: CountsArg,
    },
    /// P-P plot data from a CSV with a p_value column.
    PpPlot {
        #[command(flatten)]
        plot: PlotArgs,
    },
    /// Figure data on the parameter space.
    Envelope {
        #[arg(long, value_enum, default_value_t = Figure::Variance)]
        figure: Figure,
        /// Spacing of psi (and rho, mu, sigma) values.
        #[arg(long, default_value_t = 0.05)]
        step: f64,
        /// Sample size of the feasible region.
        #[arg(short = 'n', long = "size", default_value_t = 24)]
        size: u64,
    },
}

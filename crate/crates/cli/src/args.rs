use std::path::PathBuf;

use boldrecal::boldness::DEFAULT_T;
use boldrecal::calibration::DEFAULT_PRIOR_MC;
use boldrecal::prob::DEFAULT_EPSILON;
use boldrecal::surface::DEFAULT_K;
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "boldrecal",
    version,
    about = "Calibration assessment and boldness-recalibration"
)]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Svg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Algorithm {
    NelderMead,
    QuasiNewton,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    Posterior,
    Boldness,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Headered CSV with predictions and outcomes.
    #[arg(long, global = true)]
    pub input: Option<PathBuf>,
    #[arg(long, global = true, default_value = "x")]
    pub x_col: String,
    #[arg(long, global = true, default_value = "y")]
    pub y_col: String,
    /// Outcome value that counts as an event.
    #[arg(long, global = true, default_value = "1")]
    pub event: String,
    /// Predictions are clamped to [epsilon, 1 - epsilon].
    #[arg(long, global = true, default_value_t = DEFAULT_EPSILON)]
    pub epsilon: f64,
    /// Prior probability that the predictions are calibrated.
    #[arg(long, global = true, default_value_t = DEFAULT_PRIOR_MC)]
    pub prior_mc: f64,
    #[arg(long, global = true, value_enum, default_value_t = Algorithm::NelderMead)]
    pub algorithm: Algorithm,
    #[arg(long, global = true)]
    pub max_eval: Option<usize>,
    #[arg(long, global = true)]
    pub xtol_rel_outer: Option<f64>,
    #[arg(long, global = true)]
    pub xtol_rel_inner: Option<f64>,
    /// Wall-clock budget in seconds for each constrained solve.
    #[arg(long, global = true)]
    pub max_time: Option<f64>,
    /// 1 logs progress, 3 and above streams the solver iterations.
    #[arg(
        short,
        long,
        global = true,
        env = "BOLDRECAL_VERBOSITY",
        default_value_t = 0
    )]
    pub verbosity: u8,
    /// Write here instead of standard output.
    #[arg(short, long, global = true)]
    pub output: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

fn parse_limits(s: &str) -> Result<(f64, f64), String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err(format!("expected two comma-separated numbers, got '{s}'"));
    }
    let num = |p: &str| p.trim().parse::<f64>().map_err(|e| format!("'{p}': {e}"));
    Ok((num(parts[0])?, num(parts[1])?))
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Posterior probability of calibration and the BIC pair.
    Assess,
    /// Likelihood ratio test of calibration.
    Lrt,
    /// Adjust predictions by their maximum likelihood estimates.
    MleRecal,
    /// Boldness-recalibrate to a target posterior probability of calibration.
    Brcal {
        #[arg(long, default_value_t = DEFAULT_T)]
        t: f64,
    },
    /// Posterior or boldness values over a (delta, gamma) grid.
    Surface {
        #[arg(long, value_enum, default_value_t = Kind::Posterior)]
        kind: Kind,
        #[arg(long, value_parser = parse_limits, default_value = "0.0001,5")]
        dlim: (f64, f64),
        #[arg(long, value_parser = parse_limits, default_value = "0.0001,5")]
        glim: (f64, f64),
        #[arg(long, default_value_t = DEFAULT_K)]
        k: usize,
        /// Contour levels, comma separated.
        #[arg(long, value_delimiter = ',')]
        contours: Vec<f64>,
    },
    /// Per-observation table of original, MLE and boldness-recalibrated
    /// predictions.
    Lineplot {
        #[arg(long, value_delimiter = ',', default_value = "0.95")]
        t_levels: Vec<f64>,
        #[arg(long, conflicts_with_all = ["thin_prop", "thin_by"])]
        thin_to: Option<usize>,
        #[arg(long, conflicts_with = "thin_by")]
        thin_prop: Option<f64>,
        #[arg(long)]
        thin_by: Option<usize>,
        /// Seed for random thinning.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        no_original: bool,
        #[arg(long)]
        no_mle: bool,
        /// Re-render a table written earlier with `--format csv`.
        #[arg(long)]
        table: Option<PathBuf>,
    },
    /// LLO-adjust the predictions with given parameters.
    Llo {
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        gamma: f64,
    },
}

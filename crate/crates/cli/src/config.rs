//! Command-line flags, the optional JSON config file, and their resolution
//! into validated values.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use tournament_core::incentives::{check_theta, CostFunction};
use tournament_core::noise::NoiseDistribution;
use tournament_core::prizes::PrizeSpec;
use tournament_core::simulate::SimulationConfig;

use crate::error::CliError;

/// Environment variable naming the default directory for `figure1`.
pub const OUTPUT_DIR_ENV: &str = "TOURNAMENT_OUTPUT_DIR";

pub const DEFAULT_THETA_GRID: &str = "0:1:0.01";

#[derive(Debug, Parser)]
#[command(
    name = "tournament",
    version,
    about = "Equilibrium effort and optimal prizes in rank-order tournaments with loss-averse agents"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Rank coefficients beta_r, B_r and B_r / r, against closed forms where known.
    Coeffs(Flags),
    /// A_r(theta) for every r and the optimal number of equal top prizes.
    Optimal(Flags),
    /// The step function r*(theta) on [0, 1] with exact jump points.
    Breakpoints(Flags),
    /// R, L, M and equilibrium effort over a theta grid.
    Effort(Flags),
    /// Data for the Gumbel / Pareto / Burr comparison at n = 15 (nine CSV files).
    Figure1(Flags),
    /// Monte Carlo check of rank probabilities, beta_r and the equilibrium.
    Simulate(Flags),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Coeffs(_) => "coeffs",
            Self::Optimal(_) => "optimal",
            Self::Breakpoints(_) => "breakpoints",
            Self::Effort(_) => "effort",
            Self::Figure1(_) => "figure1",
            Self::Simulate(_) => "simulate",
        }
    }

    pub fn flags(&self) -> &Flags {
        match self {
            Self::Coeffs(f)
            | Self::Optimal(f)
            | Self::Breakpoints(f)
            | Self::Effort(f)
            | Self::Figure1(f)
            | Self::Simulate(f) => f,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// Flags shared by every command. A `--config` JSON file may supply any of
/// them (same names, e.g. `"theta-grid"`); flags given on the command line win.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct Flags {
    /// Noise law: uniform:b=<real>, gumbel, pareto, burr, normal:sigma=<real>
    #[arg(long)]
    pub dist: Option<String>,
    /// Number of agents
    #[arg(long)]
    pub n: Option<usize>,
    /// Loss-aversion parameter in [0, 1] [default: 0]
    #[arg(long)]
    pub theta: Option<f64>,
    /// theta grid as start:stop:step [default: 0:1:0.01]
    #[arg(long)]
    pub theta_grid: Option<String>,
    /// wta, topk:<s>, equidistant, flat, optimal, or a JSON file of n prizes
    #[arg(long)]
    pub prizes: Option<String>,
    /// Effort cost: quadratic:c0=<real> or power:k=<real>,p=<real> [default: quadratic:c0=1]
    #[arg(long)]
    pub cost: Option<String>,
    /// Output format [default: csv]
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Output file (directory for figure1); stdout when absent
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Simulation seed [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Simulated tournaments [default: 1000000]
    #[arg(long)]
    pub samples: Option<u64>,
    /// Finite-difference half-width for simulated beta [default: 0.001]
    #[arg(long)]
    pub fd_step: Option<f64>,
    /// Effort advantage at which simulate compares rank probabilities [default: 0.25]
    #[arg(long)]
    pub delta: Option<f64>,
    /// JSON object supplying any of the flags above
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

impl Flags {
    /// Fills unset flags from `base`.
    pub fn or(self, base: Flags) -> Flags {
        Flags {
            dist: self.dist.or(base.dist),
            n: self.n.or(base.n),
            theta: self.theta.or(base.theta),
            theta_grid: self.theta_grid.or(base.theta_grid),
            prizes: self.prizes.or(base.prizes),
            cost: self.cost.or(base.cost),
            format: self.format.or(base.format),
            output: self.output.or(base.output),
            seed: self.seed.or(base.seed),
            samples: self.samples.or(base.samples),
            fd_step: self.fd_step.or(base.fd_step),
            delta: self.delta.or(base.delta),
            config: self.config,
        }
    }
}

fn read_config(path: &Path) -> Result<Flags, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("invalid config file {}: {e}", path.display())))
}

#[derive(Debug, Clone, PartialEq)]
pub enum PrizeChoice {
    /// Re-optimised at each theta: `r*(theta)` equal top prizes.
    Optimal,
    Fixed(PrizeSpec),
}

/// Validated settings for one run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    dist: Option<NoiseDistribution>,
    n: Option<usize>,
    pub theta: f64,
    pub theta_grid: Vec<f64>,
    pub prizes: Option<PrizeChoice>,
    pub cost: CostFunction,
    pub format: Format,
    pub output: Option<PathBuf>,
    pub sim: SimulationConfig,
    pub delta: f64,
}

fn usage(field: &str, e: impl std::fmt::Display) -> CliError {
    CliError::Usage(format!("invalid --{field}: {e}"))
}

impl RunConfig {
    pub fn resolve(flags: &Flags) -> Result<Self, CliError> {
        let flags = match &flags.config {
            Some(path) => flags.clone().or(read_config(path)?),
            None => flags.clone(),
        };
        let dist = flags
            .dist
            .as_deref()
            .map(|s| s.parse::<NoiseDistribution>().map_err(|e| usage("dist", e)))
            .transpose()?;
        if let Some(n) = flags.n {
            if n < 2 {
                return Err(usage("n", format!("need at least 2 agents, got {n}")));
            }
        }
        let theta = flags.theta.unwrap_or(0.0);
        check_theta(theta).map_err(|e| usage("theta", e))?;
        let theta_grid =
            parse_theta_grid(flags.theta_grid.as_deref().unwrap_or(DEFAULT_THETA_GRID))?;
        let prizes = flags
            .prizes
            .as_deref()
            .map(|s| match s.trim() {
                "optimal" => Ok(PrizeChoice::Optimal),
                other => PrizeSpec::parse(other)
                    .map(PrizeChoice::Fixed)
                    .map_err(|e| usage("prizes", e)),
            })
            .transpose()?;
        let cost = flags
            .cost
            .as_deref()
            .unwrap_or("quadratic:c0=1")
            .parse::<CostFunction>()
            .map_err(|e| usage("cost", e))?;
        let sim = SimulationConfig {
            samples: flags.samples.unwrap_or(1_000_000),
            seed: flags.seed.unwrap_or(0),
            fd_step: flags.fd_step.unwrap_or(SimulationConfig::default().fd_step),
            ..SimulationConfig::default()
        };
        sim.validate().map_err(|e| usage("samples/fd-step", e))?;
        let delta = flags.delta.unwrap_or(0.25);
        if !delta.is_finite() {
            return Err(usage("delta", "must be finite"));
        }
        Ok(Self {
            dist,
            n: flags.n,
            theta,
            theta_grid,
            prizes,
            cost,
            format: flags.format.unwrap_or(Format::Csv),
            output: flags.output,
            sim,
            delta,
        })
    }

    pub fn dist(&self) -> Result<&NoiseDistribution, CliError> {
        self.dist
            .as_ref()
            .ok_or_else(|| CliError::Usage("--dist is required".into()))
    }

    pub fn n(&self) -> Result<usize, CliError> {
        self.n
            .ok_or_else(|| CliError::Usage("--n is required".into()))
    }
}

fn decimals(s: &str) -> Option<u32> {
    if s.contains(['e', 'E']) {
        return None;
    }
    Some(s.split_once('.').map_or(0, |(_, frac)| frac.len() as u32))
}

/// Parses `start:stop:step` into the grid `start, start + step, ..., stop`,
/// all inside `[0, 1]`. Plain decimal inputs are generated on their decimal
/// lattice, so `0:1:0.01` yields exactly the doubles nearest to `0.07` etc.
pub fn parse_theta_grid(s: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = s.split(':').map(str::trim).collect();
    let [a, b, c] = parts[..] else {
        return Err(usage(
            "theta-grid",
            format!("expected start:stop:step, got {s:?}"),
        ));
    };
    let num = |x: &str| {
        x.parse::<f64>()
            .map_err(|e| usage("theta-grid", format!("{x:?}: {e}")))
    };
    let (start, stop, step) = (num(a)?, num(b)?, num(c)?);
    if !(step.is_finite() && step > 0.0) {
        return Err(usage("theta-grid", format!("step must be > 0, got {step}")));
    }
    if !(0.0..=1.0).contains(&start) || !(0.0..=1.0).contains(&stop) || stop < start {
        return Err(usage(
            "theta-grid",
            format!("need 0 <= start <= stop <= 1, got {start}:{stop}"),
        ));
    }
    let count = ((stop - start) / step + 1e-9).floor() as u64;
    let lattice = [a, b, c]
        .into_iter()
        .map(decimals)
        .try_fold(0u32, |acc, d| d.map(|d| acc.max(d)))
        .filter(|&d| d <= 15);
    let grid = (0..=count)
        .map(|i| match lattice {
            Some(d) => {
                let scale = 10f64.powi(d as i32);
                ((start * scale).round() + i as f64 * (step * scale).round()) / scale
            }
            None => start + i as f64 * step,
        })
        .collect();
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_is_decimal() {
        let g = parse_theta_grid(DEFAULT_THETA_GRID).unwrap();
        assert_eq!(g.len(), 101);
        assert_eq!(g[7], 0.07);
        assert_eq!(g[100], 1.0);
        assert_eq!(parse_theta_grid("0.5:0.5:0.1").unwrap(), vec![0.5]);
        assert_eq!(
            parse_theta_grid("0:1:0.25").unwrap(),
            vec![0.0, 0.25, 0.5, 0.75, 1.0]
        );
    }

    #[test]
    fn bad_grids() {
        for bad in ["0:1", "0:1:0", "0:2:0.1", "0.5:0.2:0.1", "a:1:0.1"] {
            assert!(parse_theta_grid(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn flags_override_config() {
        let file: Flags =
            serde_json::from_str(r#"{"dist": "burr", "n": 15, "theta-grid": "0:1:0.5"}"#).unwrap();
        let cli = Flags {
            n: Some(5),
            ..Flags::default()
        };
        let merged = cli.or(file);
        assert_eq!(merged.n, Some(5));
        assert_eq!(merged.dist.as_deref(), Some("burr"));
        assert!(serde_json::from_str::<Flags>(r#"{"bogus": 1}"#).is_err());
    }
}

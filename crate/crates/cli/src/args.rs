use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use crowding::{LatticeFamily, RoleAssignment};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(name = "crowding", version, about = "Frequency-crowding yield analysis for fixed-frequency transmon lattices")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// Master seed for every random stream.
    #[arg(long, global = true, env = "CROWDING_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Worker threads (defaults to all cores). Results do not depend on it.
    #[arg(long, global = true, env = "CROWDING_THREADS")]
    pub threads: Option<usize>,
    /// TOML file overriding model parameters.
    #[arg(long, global = true, env = "CROWDING_CONFIG")]
    pub config: Option<PathBuf>,
    /// Root directory for run outputs.
    #[arg(long, global = true, env = "CROWDING_OUT", default_value = "out")]
    pub out: PathBuf,
    /// Run directory name (defaults to a UTC timestamp).
    #[arg(long, global = true, env = "CROWDING_NAME")]
    pub name: Option<String>,
}

#[derive(Debug, Clone, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Build a lattice and write its graph.
    Lattice(LatticeArgs),
    /// Sample one trial and list its collisions.
    Check(CheckArgs),
    /// Monte Carlo yield sweep over σ_f with spacing optimisation.
    Sweep(SweepArgs),
    /// Fit the fixed-window model to sweep CSVs.
    FitWindow(FitWindowArgs),
    /// Fit Δf(N) and extrapolate yield to larger lattices.
    Extrapolate(ExtrapolateArgs),
    /// Simulate a laser-anneal tuning campaign.
    Tune(TuneArgs),
    /// Fit f = a·R^p to resistance/frequency samples.
    FitRn(FitRnArgs),
    /// Re-execute a recorded run and compare its outputs.
    Rerun(RerunArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Lattice(_) => "lattice",
            Self::Check(_) => "check",
            Self::Sweep(_) => "sweep",
            Self::FitWindow(_) => "fit-window",
            Self::Extrapolate(_) => "extrapolate",
            Self::Tune(_) => "tune",
            Self::FitRn(_) => "fit-rn",
            Self::Rerun(_) => "rerun",
        }
    }
}

fn parse_family(s: &str) -> Result<LatticeFamily, String> {
    s.parse().map_err(|e: crowding::Error| e.to_string())
}

fn parse_distance(s: &str) -> Result<usize, String> {
    let d: usize = s.parse().map_err(|_| format!("'{s}' is not a non-negative integer"))?;
    if d < 3 || d.is_multiple_of(2) {
        return Err(format!("code distance must be odd and at least 3, got {d}"));
    }
    Ok(d)
}

fn parse_positive(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        _ => Err(format!("expected a positive number, got '{s}'")),
    }
}

fn parse_non_negative(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v >= 0.0 && v.is_finite() => Ok(v),
        _ => Err(format!("expected a non-negative number, got '{s}'")),
    }
}

fn parse_trials(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(n) if n > 0 => Ok(n),
        _ => Err(format!("expected a positive trial count, got '{s}'")),
    }
}

/// `N:Δf`
fn parse_point(s: &str) -> Result<(usize, f64), String> {
    let (n, df) = s.split_once(':').ok_or_else(|| format!("expected N:DELTA_F, got '{s}'"))?;
    let n: usize = n.trim().parse().map_err(|_| format!("bad qubit count in '{s}'"))?;
    let df = parse_positive(df.trim())?;
    if n == 0 {
        return Err(format!("qubit count must be positive in '{s}'"));
    }
    Ok((n, df))
}

/// `MIN:MAX` in percent.
fn parse_spread(s: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = s.split_once(':').ok_or_else(|| format!("expected MIN:MAX, got '{s}'"))?;
    let lo = parse_non_negative(lo.trim())?;
    let hi = parse_non_negative(hi.trim())?;
    if hi < lo {
        return Err(format!("spread minimum exceeds maximum in '{s}'"));
    }
    Ok((lo, hi))
}

/// Grid of MHz values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Grid(pub Vec<f64>);

/// `START:STOP:STEP` or a comma-separated list.
fn parse_grid(s: &str) -> Result<Grid, String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() == 3 {
        let v: Vec<f64> = parts
            .iter()
            .map(|p| p.trim().parse::<f64>().map_err(|_| format!("bad number in '{s}'")))
            .collect::<Result<_, _>>()?;
        return crowding::mc::sigma_grid(v[0], v[1], v[2]).map(Grid).map_err(|e| e.to_string());
    }
    s.split(',').map(|p| parse_non_negative(p.trim())).collect::<Result<_, _>>().map(Grid)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Roles {
    /// Higher sampled frequency drives each gate.
    Sampled,
    /// Gate directions fixed by the design pattern.
    Pattern,
}

impl From<Roles> for RoleAssignment {
    fn from(r: Roles) -> Self {
        match r {
            Roles::Sampled => RoleAssignment::Sampled,
            Roles::Pattern => RoleAssignment::Pattern,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct LatticeSpec {
    /// square, heavy-square or heavy-hexagon.
    #[arg(long, value_parser = parse_family)]
    pub family: LatticeFamily,
    /// Odd code distance, at least 3.
    #[arg(short = 'd', long, value_parser = parse_distance)]
    pub distance: usize,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct LatticeArgs {
    #[command(flatten)]
    pub lattice: LatticeSpec,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct CheckArgs {
    #[command(flatten)]
    pub lattice: LatticeSpec,
    /// Fabrication spread σ_f in MHz.
    #[arg(long, default_value_t = 14.0, value_parser = parse_non_negative)]
    pub sigma: f64,
    /// Pattern spacing in MHz.
    #[arg(long, default_value_t = 70.0, value_parser = parse_positive)]
    pub spacing: f64,
    /// Trial index within the seed's stream.
    #[arg(long, default_value_t = 0)]
    pub trial: usize,
    #[arg(long, value_enum)]
    pub roles: Option<Roles>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SweepArgs {
    /// Required unless --reproduce-table2.
    #[arg(long, value_parser = parse_family, required_unless_present = "reproduce_table2")]
    pub family: Option<LatticeFamily>,
    #[arg(short = 'd', long, value_parser = parse_distance, required_unless_present = "reproduce_table2")]
    pub distance: Option<usize>,
    /// σ_f grid in MHz: START:STOP:STEP or a comma list.
    #[arg(long, value_parser = parse_grid, default_value = "0:150:1")]
    pub sigma: Grid,
    /// Spacing grid in MHz: START:STOP:STEP or a comma list.
    #[arg(long, value_parser = parse_grid)]
    pub spacing: Option<Grid>,
    /// Fixed trials per point instead of the staged policy.
    #[arg(long, value_parser = parse_trials)]
    pub trials: Option<usize>,
    #[arg(long, value_enum)]
    pub roles: Option<Roles>,
    /// All nine lattices, tabulated at σ_f = 132.3 and 14 MHz with a window fit.
    #[arg(long)]
    pub reproduce_table2: bool,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct FitWindowArgs {
    /// Sweep CSV (repeatable).
    #[arg(long = "input", required = true)]
    pub inputs: Vec<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ExtrapolateArgs {
    /// fit-window results.json to take (N, Δf) points from.
    #[arg(long, required_unless_present = "points", conflicts_with = "points")]
    pub input: Option<PathBuf>,
    /// Family to select from --input.
    #[arg(long, value_parser = parse_family, default_value = "heavy-hexagon")]
    pub family: LatticeFamily,
    /// Explicit N:DELTA_F point (repeatable).
    #[arg(long = "point", value_parser = parse_point)]
    pub points: Vec<(usize, f64)>,
    /// σ_f values (MHz) for the yield columns.
    #[arg(long, value_delimiter = ',', default_value = "14,12,10,8,6", value_parser = parse_positive)]
    pub sigma: Vec<f64>,
    #[arg(long, default_value_t = 20)]
    pub n_min: usize,
    #[arg(long, default_value_t = 1000)]
    pub n_max: usize,
    #[arg(long, default_value_t = 10)]
    pub n_step: usize,
    /// Also report the σ_f needed to reach this yield at each tabulated N.
    #[arg(long, value_parser = parse_positive)]
    pub target_yield: Option<f64>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct TuneArgs {
    /// Population size (31 for the two-group scenario, 300 for a spread).
    #[arg(long)]
    pub junctions: Option<usize>,
    /// Per-junction targets MIN:MAX percent above the initial resistance.
    #[arg(long, value_parser = parse_spread)]
    pub target_spread: Option<(f64, f64)>,
    /// Independent campaigns to average.
    #[arg(long, default_value_t = 1, value_parser = parse_trials)]
    pub replicates: usize,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct FitRnArgs {
    /// CSV with columns resistance_ohm,frequency_ghz.
    #[arg(long)]
    pub input: PathBuf,
    /// Hold the exponent fixed instead of fitting it.
    #[arg(long, allow_hyphen_values = true)]
    pub fixed_exponent: Option<f64>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct RerunArgs {
    /// manifest.json of the run to repeat.
    pub manifest: PathBuf,
}

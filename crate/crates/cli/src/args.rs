use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use crate::fail::Failure;

#[derive(Parser, Debug)]
#[command(name = "crosscurve", version, about = "Cross-curvature and c-segment verification suites")]
pub struct Cli {
    /// JSON file supplying default values for the subcommand's flags.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Seed for every randomized step.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Write the JSON report here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Allow existing output files to be replaced.
    #[arg(long, global = true)]
    pub force: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Sampled chord checks on a registered cost family.
    Verify(VerifyArgs),
    /// Tabulate the transport-cost gaps of the log-distance counterexample.
    Counterexample(CounterexampleArgs),
    /// Scan the MTW tensor of a smooth cost.
    Mtw(MtwArgs),
    /// Chord check of the transport cost along a lifted segment.
    Lift(LiftArgs),
    /// Gromov-Wasserstein distance or segment check on tiny gauged spaces.
    Gw(GwArgs),
    /// Gromov-Hausdorff distance between two small finite metric spaces.
    Gh(GhArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Check {
    Nncc,
    Lmp,
    Conv,
    OneConvex,
    Pc,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Glue {
    Independent,
    Northwest,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum MtwCostName {
    Hilbert,
    Sphere,
    LogDistance,
}

#[derive(Args, Debug, Default)]
pub struct FamilyArgs {
    /// hilbert, bregman, semi_geostrophic, monge, soft_threshold, sphere,
    /// log_distance, anisotropic_quartic (pc also accepts hyperbolic).
    #[arg(long)]
    pub family: Option<String>,
    /// Ambient dimension; for the sphere, the dimension of the sphere.
    #[arg(long)]
    pub dim: Option<usize>,
    /// Bregman potential: quadratic, entropy or quartic.
    #[arg(long)]
    pub potential: Option<String>,
    /// Bregman argument order: forward or reverse.
    #[arg(long)]
    pub mode: Option<String>,
    /// Semi-geostrophic gravity constant.
    #[arg(long)]
    pub g: Option<f64>,
    /// Soft-threshold smoothing parameter.
    #[arg(long)]
    pub eps: Option<f64>,
}

#[derive(Args, Debug, Default)]
pub struct VerifyArgs {
    #[arg(long, value_enum)]
    pub check: Option<Check>,
    #[command(flatten)]
    pub family: FamilyArgs,
    /// Number of random triples.
    #[arg(long)]
    pub trials: Option<usize>,
    /// Random test points per triple.
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    /// Nodes of the uniform s-grid.
    #[arg(long)]
    pub grid: Option<usize>,
    /// Succeed only if some trial violates the check.
    #[arg(long)]
    pub expect_fail: bool,
}

#[derive(Args, Debug, Default)]
pub struct CounterexampleArgs {
    /// Nodes of the s-grid.
    #[arg(long)]
    pub n_s: Option<usize>,
    /// Directory receiving the CSV tables.
    #[arg(long)]
    pub csv_dir: Option<PathBuf>,
}

#[derive(Args, Debug, Default)]
pub struct MtwArgs {
    #[arg(long, value_enum)]
    pub cost: Option<MtwCostName>,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub samples: Option<usize>,
}

#[derive(Args, Debug, Default)]
pub struct LiftArgs {
    /// Base family, as for `verify --family`.
    #[arg(long)]
    pub base: Option<String>,
    #[arg(long)]
    pub dim: Option<usize>,
    /// Atoms in each of the three endpoint measures.
    #[arg(long)]
    pub atoms: Option<usize>,
    /// Random test measures.
    #[arg(long)]
    pub sigmas: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub grid: Option<usize>,
    /// How the endpoint plans are glued.
    #[arg(long, value_enum)]
    pub glue: Option<Glue>,
    /// Accept the lift if any glue rule passes, instead of only the chosen one.
    #[arg(long)]
    pub glue_search: bool,
}

#[derive(Args, Debug, Default)]
pub struct GwArgs {
    /// Gauged space JSON, `{"gauge": [[..]], "weights": [..]}`.
    #[arg(long)]
    pub x: Option<PathBuf>,
    /// Second endpoint; switches to the segment chord check.
    #[arg(long)]
    pub x1: Option<PathBuf>,
    #[arg(long)]
    pub y: Option<PathBuf>,
    /// Random two-point test spaces for the chord check.
    #[arg(long)]
    pub tests: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub grid: Option<usize>,
}

#[derive(Args, Debug, Default)]
pub struct GhArgs {
    /// Distance matrix JSON, `[[..], ..]`.
    #[arg(long)]
    pub x: Option<PathBuf>,
    #[arg(long)]
    pub y: Option<PathBuf>,
}

/// Flag defaults read from `--config`. Keys mirror the long flag names.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub check: Option<Check>,
    pub family: Option<String>,
    pub dim: Option<usize>,
    pub potential: Option<String>,
    pub mode: Option<String>,
    pub g: Option<f64>,
    pub eps: Option<f64>,
    pub trials: Option<usize>,
    pub samples: Option<usize>,
    pub tol: Option<f64>,
    pub grid: Option<usize>,
    pub expect_fail: Option<bool>,
    pub n_s: Option<usize>,
    pub csv_dir: Option<PathBuf>,
    pub cost: Option<MtwCostName>,
    pub base: Option<String>,
    pub atoms: Option<usize>,
    pub sigmas: Option<usize>,
    pub glue: Option<Glue>,
    pub glue_search: Option<bool>,
    pub x: Option<PathBuf>,
    pub x1: Option<PathBuf>,
    pub y: Option<PathBuf>,
    pub tests: Option<usize>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("config {}: {e}", path.display())))
    }
}

/// Fills every unset flag from the config file. Flags given on the command line win.
pub fn merge(cli: &mut Cli, cfg: ConfigFile) {
    cli.seed = cli.seed.or(cfg.seed);
    cli.out = cli.out.take().or_else(|| cfg.out.clone());
    match &mut cli.command {
        Command::Verify(a) => {
            a.check = a.check.or(cfg.check);
            merge_family(&mut a.family, &cfg);
            a.trials = a.trials.or(cfg.trials);
            a.samples = a.samples.or(cfg.samples);
            a.tol = a.tol.or(cfg.tol);
            a.grid = a.grid.or(cfg.grid);
            a.expect_fail |= cfg.expect_fail.unwrap_or(false);
        }
        Command::Counterexample(a) => {
            a.n_s = a.n_s.or(cfg.n_s);
            a.csv_dir = a.csv_dir.take().or(cfg.csv_dir);
        }
        Command::Mtw(a) => {
            a.cost = a.cost.or(cfg.cost);
            a.dim = a.dim.or(cfg.dim);
            a.samples = a.samples.or(cfg.samples);
        }
        Command::Lift(a) => {
            a.base = a.base.take().or(cfg.base);
            a.dim = a.dim.or(cfg.dim);
            a.atoms = a.atoms.or(cfg.atoms);
            a.sigmas = a.sigmas.or(cfg.sigmas);
            a.tol = a.tol.or(cfg.tol);
            a.grid = a.grid.or(cfg.grid);
            a.glue = a.glue.or(cfg.glue);
            a.glue_search |= cfg.glue_search.unwrap_or(false);
        }
        Command::Gw(a) => {
            a.x = a.x.take().or(cfg.x);
            a.x1 = a.x1.take().or(cfg.x1);
            a.y = a.y.take().or(cfg.y);
            a.tests = a.tests.or(cfg.tests);
            a.tol = a.tol.or(cfg.tol);
            a.grid = a.grid.or(cfg.grid);
        }
        Command::Gh(a) => {
            a.x = a.x.take().or(cfg.x);
            a.y = a.y.take().or(cfg.y);
        }
    }
}

fn merge_family(a: &mut FamilyArgs, cfg: &ConfigFile) {
    a.family = a.family.take().or_else(|| cfg.family.clone());
    a.dim = a.dim.or(cfg.dim);
    a.potential = a.potential.take().or_else(|| cfg.potential.clone());
    a.mode = a.mode.take().or_else(|| cfg.mode.clone());
    a.g = a.g.or(cfg.g);
    a.eps = a.eps.or(cfg.eps);
}

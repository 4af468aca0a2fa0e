//! The `invlab` command-line front end.
//!
//! Every subcommand accepts `--config <file.toml>`; its keys are the long flag
//! names with `_` for `-`, and flags given on the command line override them.
//! The seed comes from `--seed`, then the config file, then `INVLAB_SEED`,
//! then 0. Exit codes: 0 success, 2 configuration error, 3 numeric failure.

pub mod output;

pub use output::{format_number, round_sig, rows_to_csv, to_json_text, Format};

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rand::Rng as _;
use rand_distr::{Exp1, StandardNormal};
use serde::Serialize;
use serde_json::{Map, Value};

use crate::clt::{
    hajek_coupling, theorem_convergence_sweep, CltSweepConfig, CouplingScheme, MProfile,
};
use crate::error::Error;
use crate::experiments::{
    alternative_profile, neyman_scott_sweep, recalibrate, run_power, spacings_sweep, theorem1_sweep,
    theorem2_sweep, AlternativeSpec, NeymanScottConfig, PowerModel, PowerSettings, SpacingsConfig,
    SpacingsScaling, SweepFamily, Theorem1Config, Theorem2Config,
};
use crate::model::{ExpFamily, MeanVector};
use crate::orbit::{
    identity_check, lbar_null_samples, power_level_bound, DesignProjector, GroupKind, OrbitModel,
    OrbitSpec,
};
use crate::rng::StreamKey;
use crate::statistics::{chisq_statistic, sample_variance};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

/// Failure classes, each with its exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => EXIT_CONFIG,
            CliError::Numeric(_) => EXIT_NUMERIC,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::NonFinite(_) | Error::Degenerate(_) | Error::NotInvariant => CliError::Numeric(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

/// Comma-separated list of sizes.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Grid(pub Vec<usize>);

impl FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let v = s
            .split(',')
            .map(|t| t.trim().parse::<usize>().map_err(|_| format!("`{t}` is not a size")))
            .collect::<Result<Vec<_>, _>>()?;
        if v.is_empty() {
            return Err("empty grid".into());
        }
        Ok(Grid(v))
    }
}

/// Comma-separated list of names.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Names(pub Vec<String>);

impl FromStr for Names {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let v: Vec<String> = s.split(',').map(|t| t.trim().to_string()).filter(|t| !t.is_empty()).collect();
        if v.is_empty() {
            return Err("empty list".into());
        }
        Ok(Names(v))
    }
}

#[derive(Debug, Parser)]
#[command(name = "invlab", version, about = "Power of invariant tests against contiguous many-parameter alternatives")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct Common {
    /// Root seed (default: INVLAB_SEED, else 0).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; 0 uses all cores. Output does not depend on it.
    #[arg(long, default_value_t = 0)]
    #[serde(skip)]
    pub threads: usize,
    /// Output file (default: stdout). A `<out>.meta.json` sidecar is written next to it.
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    #[serde(skip)]
    pub format: Format,
    /// TOML file of flag defaults.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PowerArgs {
    /// Level and power replicates.
    #[arg(long, default_value_t = 10_000)]
    pub reps: usize,
    /// Null replicates for the critical value.
    #[arg(long, default_value_t = 20_000)]
    pub calibration_reps: usize,
    #[arg(long, default_value_t = 0.05)]
    pub level: f64,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Calibrated level and power of chosen statistics against one alternative.
    #[command(args_override_self = true)]
    Power(PowerCmd),
    /// Chi-square and Neyman-Pearson tests in the normal many-means model.
    #[command(name = "sweep-theorem1", args_override_self = true)]
    SweepTheorem1(Theorem1Cmd),
    /// Permutation-invariant versus quadratic statistics across families.
    #[command(name = "sweep-theorem2", args_override_self = true)]
    SweepTheorem2(Theorem2Cmd),
    /// ANOVA F and cell-means chi-square in the Neyman-Scott layout.
    #[command(name = "sweep-neyman-scott", args_override_self = true)]
    SweepNeymanScott(NeymanScottCmd),
    /// Spacings statistics against smooth density perturbations.
    #[command(name = "sweep-spacings", args_override_self = true)]
    SweepSpacings(SpacingsCmd),
    /// Orbit-averaged likelihood ratio: null mean, bound and identity check.
    #[command(args_override_self = true)]
    Lbar(LbarCmd),
    /// Distances between permutation, bootstrap and iid laws of weighted sums.
    #[command(name = "clt-sweep", args_override_self = true)]
    CltSweep(CltCmd),
    /// With- and without-replacement coupling of weighted sums.
    #[command(args_override_self = true)]
    Coupling(CouplingCmd),
    /// Rerun the pilot sweeps and write the expectations file.
    #[command(args_override_self = true)]
    Recalibrate(RecalibrateCmd),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PowerCmd {
    #[command(flatten)]
    #[serde(skip)]
    pub common: Common,
    #[command(flatten)]
    #[serde(flatten)]
    pub power: PowerArgs,
    /// normal, poisson, bernoulli, logistic, neyman_scott, matrix_variate or spacings.
    #[arg(long, default_value = "normal")]
    pub model: String,
    /// Statistics (default: all for the model).
    #[arg(long)]
    pub stat: Option<Names>,
    /// `kind:scale` with kind spike, smooth, random_signs, spacings_h or matrix_variate.
    #[arg(long, default_value = "spike:3")]
    pub alt: String,
    #[arg(long, default_value = "100")]
    pub n: Grid,
    #[arg(long, default_value_t = 5)]
    pub nu: usize,
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct Theorem1Cmd {
    #[command(flatten)]
    #[serde(skip)]
    pub common: Common,
    #[command(flatten)]
    #[serde(flatten)]
    pub power: PowerArgs,
    #[arg(long, default_value_t = 3.0)]
    pub delta: f64,
    #[arg(long, default_value = "100,1000,10000")]
    pub n_grid: Grid,
    /// Null draws of the orbit-averaged likelihood ratio for the bound.
    #[arg(long, default_value_t = 10_000)]
    pub bound_reps: usize,
    /// Also run `δ = c·n^{1/4}` with this `c`; 0 disables.
    #[arg(long, default_value_t = 0.5)]
    pub rate_probe: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct Theorem2Cmd {
    #[command(flatten)]
    #[serde(skip)]
    pub common: Common,
    #[command(flatten)]
    #[serde(flatten)]
    pub power: PowerArgs,
    /// normal, poisson, bernoulli or logistic.
    #[arg(long, default_value = "normal")]
    pub family: String,
    #[arg(long, default_value_t = 1.5)]
    pub delta: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub mbar: f64,
    #[arg(long, default_value = "100,1000,10000")]
    pub n_grid: Grid,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct NeymanScottCmd {
    #[command(flatten)]
    #[serde(skip)]
    pub common: Common,
    #[command(flatten)]
    #[serde(flatten)]
    pub power: PowerArgs,
    #[arg(long, default_value_t = 5)]
    pub nu: usize,
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    #[arg(long, default_value_t = 3.0)]
    pub delta: f64,
    #[arg(long, default_value = "100,1000,10000")]
    pub n_grid: Grid,
    /// Also run the two-column matrix-variate case.
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    pub matrix_variate: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SpacingsCmd {
    #[command(flatten)]
    #[serde(skip)]
    pub common: Common,
    #[command(flatten)]
    #[serde(flatten)]
    pub power: PowerArgs,
    /// Terms `k:c` of `h = Σ c √2 cos(2πkx)`.
    #[arg(long, default_value = "1:2")]
    pub h: Names,
    #[arg(long, default_value = "100,400,1600")]
    pub n_grid: Grid,
    /// contiguous and/or quarter_power.
    #[arg(long, default_value = "contiguous,quarter_power")]
    pub scalings: Names,
    #[arg(long, default_value_t = 20)]
    pub loglik_batches: usize,
    #[arg(long, default_value_t = 500)]
    pub loglik_draws: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct LbarCmd {
    #[command(flatten)]
    #[serde(skip)]
    pub common: Common,
    /// full_orthogonal, permutation, permutation_exhaustive or orthogonal_fixing_design.
    #[arg(long, default_value = "full_orthogonal")]
    pub group: String,
    #[arg(long, default_value = "50")]
    pub n: Grid,
    /// Exponential family for the permutation groups.
    #[arg(long, default_value = "normal")]
    pub family: String,
    /// `kind:scale` with kind spike, smooth or random_signs.
    #[arg(long, default_value = "smooth:1")]
    pub alt: String,
    #[arg(long, default_value_t = 10_000)]
    pub reps: usize,
    /// Random permutations per average for the Monte Carlo permutation group.
    #[arg(long, default_value_t = 200)]
    pub mc_reps: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CltCmd {
    #[command(flatten)]
    #[serde(skip)]
    pub common: Common,
    #[arg(long, default_value = "normal")]
    pub family: String,
    /// spike, smooth or zero.
    #[arg(long, default_value = "spike")]
    pub profile: String,
    #[arg(long, default_value_t = 1.0)]
    pub delta: f64,
    #[arg(long, default_value = "50,500,5000")]
    pub n_grid: Grid,
    #[arg(long, default_value_t = 20)]
    pub batches: usize,
    #[arg(long, default_value_t = 500)]
    pub draws: usize,
    #[arg(long, default_value_t = 1)]
    pub dims: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CouplingCmd {
    #[command(flatten)]
    #[serde(skip)]
    pub common: Common,
    #[arg(long, default_value = "100,1000,10000")]
    pub n_grid: Grid,
    /// spike or smooth centered weights of norm `delta`.
    #[arg(long, default_value = "smooth")]
    pub profile: String,
    #[arg(long, default_value_t = 1.0)]
    pub delta: f64,
    /// normal, exponential or uniform population values.
    #[arg(long, default_value = "normal")]
    pub x_dist: String,
    #[arg(long, default_value_t = 2000)]
    pub reps: usize,
    /// quantile or maximal_prefix.
    #[arg(long, default_value = "quantile")]
    pub scheme: String,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct RecalibrateCmd {
    #[command(flatten)]
    #[serde(skip)]
    pub common: Common,
    #[arg(long, default_value_t = 10_000)]
    pub reps: usize,
    #[arg(long, default_value_t = 20_000)]
    pub calibration_reps: usize,
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::Power(c) => &c.common,
            Command::SweepTheorem1(c) => &c.common,
            Command::SweepTheorem2(c) => &c.common,
            Command::SweepNeymanScott(c) => &c.common,
            Command::SweepSpacings(c) => &c.common,
            Command::Lbar(c) => &c.common,
            Command::CltSweep(c) => &c.common,
            Command::Coupling(c) => &c.common,
            Command::Recalibrate(c) => &c.common,
        }
    }
}

fn config_error(e: impl std::fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

/// Flag arguments equivalent to a TOML config table.
fn config_args(path: &Path) -> Result<Vec<OsString>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| config_error(format!("cannot read {}: {e}", path.display())))?;
    let table: toml::Table = toml::from_str(&text).map_err(|e| config_error(format!("{}: {e}", path.display())))?;
    let scalar = |key: &str, v: &toml::Value| -> Result<String, CliError> {
        Ok(match v {
            toml::Value::String(s) => s.clone(),
            toml::Value::Integer(i) => i.to_string(),
            toml::Value::Float(f) => f.to_string(),
            toml::Value::Boolean(b) => b.to_string(),
            _ => return Err(config_error(format!("config key `{key}` has an unsupported value"))),
        })
    };
    let mut args = Vec::new();
    for (key, value) in &table {
        if key == "config" {
            return Err(config_error("config files cannot include other config files"));
        }
        let text = match value {
            toml::Value::Array(items) => items.iter().map(|v| scalar(key, v)).collect::<Result<Vec<_>, _>>()?.join(","),
            v => scalar(key, v)?,
        };
        args.push(OsString::from(format!("--{}", key.replace('_', "-"))));
        args.push(OsString::from(text));
    }
    Ok(args)
}

/// Parses the command line, splicing in config-file flags ahead of the
/// explicit ones so the latter win.
pub fn parse_args(args: Vec<OsString>) -> Result<Cli, clap::Error> {
    let cli = Cli::try_parse_from(&args)?;
    let Some(path) = cli.command.common().config.clone() else {
        return Ok(cli);
    };
    let extra = config_args(&path).map_err(|e| clap::Error::raw(clap::error::ErrorKind::InvalidValue, format!("{e}\n")))?;
    let mut spliced = args[..2].to_vec();
    spliced.extend(extra);
    spliced.extend_from_slice(&args[2..]);
    Cli::try_parse_from(spliced)
}

fn resolve_seed(flag: Option<u64>) -> Result<u64, CliError> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match std::env::var("INVLAB_SEED") {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| config_error(format!("INVLAB_SEED = `{v}` is not an unsigned integer"))),
        Err(std::env::VarError::NotPresent) => Ok(0),
        Err(e) => Err(config_error(format!("INVLAB_SEED: {e}"))),
    }
}

fn settings(p: &PowerArgs, seed: u64) -> Result<PowerSettings, CliError> {
    if !(p.level > 0.0 && p.level < 1.0) {
        return Err(config_error("level must lie in (0, 1)"));
    }
    Ok(PowerSettings {
        level: p.level,
        reps: p.reps,
        calibration_reps: p.calibration_reps,
        seed,
    })
}

fn sweep_family(name: &str) -> Result<SweepFamily, CliError> {
    SweepFamily::from_name(name).ok_or_else(|| config_error(format!("unknown family `{name}`")))
}

fn exp_family(name: &str) -> Result<ExpFamily, CliError> {
    ExpFamily::from_name(name).ok_or_else(|| config_error(format!("unknown exponential family `{name}`")))
}

fn power_model(cmd: &PowerCmd) -> Result<PowerModel, CliError> {
    Ok(match cmd.model.as_str() {
        "normal" => PowerModel::Normal,
        "neyman_scott" => PowerModel::NeymanScott { nu: cmd.nu, sigma: cmd.sigma },
        "matrix_variate" => PowerModel::MatrixVariate,
        "spacings" => PowerModel::Spacings,
        other => PowerModel::Family(
            SweepFamily::from_name(other).ok_or_else(|| config_error(format!("unknown model `{other}`")))?,
        ),
    })
}

/// What a subcommand produced: its main table and any extras.
struct Produced {
    /// Main rows, already rounded.
    rows: Value,
    /// CSV columns `(field, header)`, if not all fields in order.
    columns: Option<&'static [(&'static str, &'static str)]>,
    /// Secondary table written to `<out>.<name>.<csv|json>`, or after the
    /// main table on stdout.
    secondary: Option<(&'static str, Value)>,
    /// Extra fields for the sidecar.
    extra: Map<String, Value>,
    reps: Option<usize>,
    calibration_reps: Option<usize>,
    /// Raw text output (recalibrate).
    raw: Option<String>,
}

impl Produced {
    fn table<T: Serialize>(rows: &[T]) -> Result<Self, CliError> {
        Ok(Produced {
            rows: output::to_rounded_json(&rows)?,
            columns: None,
            secondary: None,
            extra: Map::new(),
            reps: None,
            calibration_reps: None,
            raw: None,
        })
    }

    fn with_power(mut self, p: &PowerArgs) -> Self {
        self.reps = Some(p.reps);
        self.calibration_reps = Some(p.calibration_reps);
        self
    }
}

const POWER_COLUMNS: &[(&str, &str)] = &[
    ("n", "n"),
    ("statistic", "stat"),
    ("critical", "critical"),
    ("level_hat", "level_hat"),
    ("level_se", "level_se"),
    ("power_hat", "power_hat"),
    ("power_se", "power_se"),
    ("seed", "seed"),
];

#[derive(Serialize)]
struct FamilyRow<'a, T> {
    family: &'a str,
    #[serde(flatten)]
    row: &'a T,
}

#[derive(Serialize)]
struct LbarRow {
    group: &'static str,
    n: usize,
    alternative: String,
    statistic: &'static str,
    lbar_mean: f64,
    lbar_se: f64,
    bound: f64,
    bound_se: f64,
    identity_lhs: f64,
    identity_lhs_se: f64,
    identity_rhs: f64,
    identity_rhs_se: f64,
    identity_holds: bool,
}

#[derive(Serialize)]
struct CouplingRow {
    n: usize,
    scheme: &'static str,
    mean_sq_gap: f64,
    mean_sq_gap_se: f64,
    bound: f64,
    bound_holds: bool,
    mean_matched: f64,
}

type BoxedStat = Box<dyn Fn(&[f64]) -> f64 + Sync + Send>;

fn run_lbar(cmd: &LbarCmd, seed: u64) -> Result<Produced, CliError> {
    let group = GroupKind::from_name(&cmd.group).ok_or_else(|| config_error(format!("unknown group `{}`", cmd.group)))?;
    let alt: AlternativeSpec = cmd.alt.parse()?;
    let mut rows = Vec::new();
    for &n in &cmd.n.0 {
        let key = StreamKey::new(seed).named("lbar").named(group.name()).child(n as u64);
        let m = alternative_profile(&alt, n, key)?;
        let (model, statistic, name): (OrbitModel, BoxedStat, &'static str) = match group {
            GroupKind::FullOrthogonal => (OrbitModel::Orthogonal { m }, Box::new(chisq_statistic), "chisq"),
            GroupKind::Permutation | GroupKind::PermutationExhaustive => {
                let spec = if group == GroupKind::PermutationExhaustive {
                    OrbitSpec::exhaustive()
                } else {
                    OrbitSpec::monte_carlo(cmd.mc_reps)
                };
                let model = OrbitModel::Permutation {
                    family: exp_family(&cmd.family)?,
                    m: MeanVector::new(m)?,
                    spec,
                };
                (model, Box::new(sample_variance), "sample_variance")
            }
            GroupKind::OrthogonalFixingDesign => {
                let projector = Arc::new(DesignProjector::intercept(n)?);
                projector.check_identifiable(&m)?;
                let p = projector.clone();
                let stat = move |y: &[f64]| p.residual(y).map(|r| chisq_statistic(&r)).unwrap_or(f64::NAN);
                (OrbitModel::Design { projector, m }, Box::new(stat), "residual_chisq")
            }
        };
        let lbar = lbar_null_samples(&model, cmd.reps, key.named("lbar"))?;
        let mean = crate::numeric::Estimate::from_samples(&lbar);
        let bound = power_level_bound(&lbar);
        let id = identity_check(&model, statistic, cmd.reps, key.named("identity"))?;
        rows.push(LbarRow {
            group: group.name(),
            n,
            alternative: alt.to_string(),
            statistic: name,
            lbar_mean: mean.mean,
            lbar_se: mean.se,
            bound: bound.mean,
            bound_se: bound.se,
            identity_lhs: id.lhs.mean,
            identity_lhs_se: id.lhs.se,
            identity_rhs: id.rhs.mean,
            identity_rhs_se: id.rhs.se,
            identity_holds: id.holds(4.0),
        });
    }
    let mut p = Produced::table(&rows)?;
    p.reps = Some(cmd.reps);
    Ok(p)
}

fn run_coupling(cmd: &CouplingCmd, seed: u64) -> Result<Produced, CliError> {
    let scheme = CouplingScheme::from_name(&cmd.scheme).ok_or_else(|| config_error(format!("unknown scheme `{}`", cmd.scheme)))?;
    let profile = MProfile::from_name(&cmd.profile).ok_or_else(|| config_error(format!("unknown profile `{}`", cmd.profile)))?;
    let mut rows = Vec::new();
    for &n in &cmd.n_grid.0 {
        if n < 2 {
            return Err(config_error("coupling needs n >= 2"));
        }
        let key = StreamKey::new(seed).named("coupling").child(n as u64);
        let mut rng = key.named("x").rng(0);
        let x: Vec<f64> = match cmd.x_dist.as_str() {
            "normal" => (0..n).map(|_| rng.sample(StandardNormal)).collect(),
            "exponential" => (0..n).map(|_| rng.sample(Exp1)).collect(),
            "uniform" => (0..n).map(|_| rng.random::<f64>()).collect(),
            other => return Err(config_error(format!("unknown x distribution `{other}`"))),
        };
        let m = profile.build(n, cmd.delta, 0);
        let r = hajek_coupling(&m, &x, cmd.reps, key.named("draws"), scheme)?;
        let matched = r.draws.iter().map(|d| d.matched_prefix as f64).sum::<f64>() / r.draws.len() as f64;
        rows.push(CouplingRow {
            n,
            scheme: scheme.name(),
            mean_sq_gap: r.mean_sq_gap.mean,
            mean_sq_gap_se: r.mean_sq_gap.se,
            bound: r.bound,
            bound_holds: r.bound_holds,
            mean_matched: matched,
        });
    }
    let mut p = Produced::table(&rows)?;
    p.reps = Some(cmd.reps);
    Ok(p)
}

fn parse_h_terms(names: &Names) -> Result<Vec<(u32, f64)>, CliError> {
    names
        .0
        .iter()
        .map(|t| {
            let (k, c) = t.split_once(':').ok_or_else(|| config_error(format!("h term `{t}` is not k:c")))?;
            let k = k.parse().map_err(|_| config_error(format!("bad frequency in `{t}`")))?;
            let c = c.parse().map_err(|_| config_error(format!("bad coefficient in `{t}`")))?;
            Ok((k, c))
        })
        .collect()
}

fn execute(command: &Command, seed: u64) -> Result<Produced, CliError> {
    match command {
        Command::Power(cmd) => {
            let model = power_model(cmd)?;
            let alt: AlternativeSpec = cmd.alt.parse()?;
            let stats: Vec<String> = match &cmd.stat {
                Some(s) => s.0.clone(),
                None => model.statistics().iter().map(|s| s.to_string()).collect(),
            };
            let s = settings(&cmd.power, seed)?;
            let mut reports = Vec::new();
            for &n in &cmd.n.0 {
                reports.extend(run_power(&model, &stats, &alt, n, &s)?);
            }
            let mut p = Produced::table(&reports)?.with_power(&cmd.power);
            p.columns = Some(POWER_COLUMNS);
            Ok(p)
        }
        Command::SweepTheorem1(cmd) => {
            let rows = theorem1_sweep(&Theorem1Config {
                delta: cmd.delta,
                n_grid: cmd.n_grid.0.clone(),
                settings: settings(&cmd.power, seed)?,
                bound_reps: cmd.bound_reps,
                rate_probe: (cmd.rate_probe > 0.0).then_some(cmd.rate_probe),
            })?;
            Ok(Produced::table(&rows)?.with_power(&cmd.power))
        }
        Command::SweepTheorem2(cmd) => {
            let family = sweep_family(&cmd.family)?;
            let rows = theorem2_sweep(&Theorem2Config {
                family,
                mbar: cmd.mbar,
                delta: cmd.delta,
                n_grid: cmd.n_grid.0.clone(),
                settings: settings(&cmd.power, seed)?,
            })?;
            let rows: Vec<_> = rows.iter().map(|row| FamilyRow { family: family.name(), row }).collect();
            Ok(Produced::table(&rows)?.with_power(&cmd.power))
        }
        Command::SweepNeymanScott(cmd) => {
            let rows = neyman_scott_sweep(&NeymanScottConfig {
                nu: cmd.nu,
                sigma: cmd.sigma,
                delta: cmd.delta,
                n_grid: cmd.n_grid.0.clone(),
                matrix_variate: cmd.matrix_variate,
                settings: settings(&cmd.power, seed)?,
            })?;
            Ok(Produced::table(&rows)?.with_power(&cmd.power))
        }
        Command::SweepSpacings(cmd) => {
            let scalings = cmd
                .scalings
                .0
                .iter()
                .map(|s| match s.as_str() {
                    "contiguous" => Ok(SpacingsScaling::Contiguous),
                    "quarter_power" => Ok(SpacingsScaling::QuarterPower),
                    other => Err(config_error(format!("unknown scaling `{other}`"))),
                })
                .collect::<Result<Vec<_>, _>>()?;
            let report = spacings_sweep(&SpacingsConfig {
                h_terms: parse_h_terms(&cmd.h)?,
                n_grid: cmd.n_grid.0.clone(),
                scalings,
                settings: settings(&cmd.power, seed)?,
                loglik_batches: cmd.loglik_batches,
                loglik_draws: cmd.loglik_draws,
            })?;
            let mut p = Produced::table(&report.power)?.with_power(&cmd.power);
            p.secondary = Some(("loglik", output::to_rounded_json(&report.loglik)?));
            p.extra.insert("loglik_slope".into(), output::to_rounded_json(&report.loglik_slope)?);
            Ok(p)
        }
        Command::Lbar(cmd) => run_lbar(cmd, seed),
        Command::CltSweep(cmd) => {
            let profile = MProfile::from_name(&cmd.profile)
                .ok_or_else(|| config_error(format!("unknown profile `{}`", cmd.profile)))?;
            let rows = theorem_convergence_sweep(&CltSweepConfig {
                family: exp_family(&cmd.family)?,
                profile,
                delta: cmd.delta,
                n_grid: cmd.n_grid.0.clone(),
                batches: cmd.batches,
                draws_per_batch: cmd.draws,
                dims: cmd.dims,
                seed,
            })?;
            Ok(Produced::table(&rows)?)
        }
        Command::Coupling(cmd) => run_coupling(cmd, seed),
        Command::Recalibrate(cmd) => {
            let e = recalibrate(seed, cmd.reps, cmd.calibration_reps)?;
            let mut p = Produced::table::<()>(&[])?;
            p.raw = Some(e.render());
            p.reps = Some(cmd.reps);
            p.calibration_reps = Some(cmd.calibration_reps);
            Ok(p)
        }
    }
}

fn command_name(command: &Command) -> &'static str {
    match command {
        Command::Power(_) => "power",
        Command::SweepTheorem1(_) => "sweep-theorem1",
        Command::SweepTheorem2(_) => "sweep-theorem2",
        Command::SweepNeymanScott(_) => "sweep-neyman-scott",
        Command::SweepSpacings(_) => "sweep-spacings",
        Command::Lbar(_) => "lbar",
        Command::CltSweep(_) => "clt-sweep",
        Command::Coupling(_) => "coupling",
        Command::Recalibrate(_) => "recalibrate",
    }
}

fn config_echo(command: &Command, seed: u64) -> Result<Value, CliError> {
    let mut v = match command {
        Command::Power(c) => output::to_rounded_json(c)?,
        Command::SweepTheorem1(c) => output::to_rounded_json(c)?,
        Command::SweepTheorem2(c) => output::to_rounded_json(c)?,
        Command::SweepNeymanScott(c) => output::to_rounded_json(c)?,
        Command::SweepSpacings(c) => output::to_rounded_json(c)?,
        Command::Lbar(c) => output::to_rounded_json(c)?,
        Command::CltSweep(c) => output::to_rounded_json(c)?,
        Command::Coupling(c) => output::to_rounded_json(c)?,
        Command::Recalibrate(c) => output::to_rounded_json(c)?,
    };
    if let Value::Object(o) = &mut v {
        o.insert("seed".into(), Value::from(seed));
    }
    Ok(v)
}

/// The main table and the optional secondary table, both in `format`.
fn render(p: &Produced, format: Format) -> Result<(String, Option<String>), CliError> {
    if let Some(raw) = &p.raw {
        return Ok((raw.clone(), None));
    }
    let table = |v: &Value, columns| -> Result<String, CliError> {
        match format {
            Format::Json => to_json_text(v),
            Format::Csv => rows_to_csv(v.as_array().map(Vec::as_slice).unwrap_or(&[]), columns),
        }
    };
    let secondary = match &p.secondary {
        Some((_, v)) => Some(table(v, None)?),
        None => None,
    };
    Ok((table(&p.rows, p.columns)?, secondary))
}

fn run_cli(cli: Cli) -> Result<(), CliError> {
    let started = Instant::now();
    let common = cli.command.common().clone();
    let seed = resolve_seed(common.seed)?;
    let produced = crate::par::with_threads(common.threads, || execute(&cli.command, seed))?;
    let (main, secondary) = render(&produced, common.format)?;
    let out = common.out.as_deref();
    match (&secondary, out) {
        (Some(text), Some(path)) => {
            let name = produced.secondary.as_ref().map(|s| s.0).unwrap_or("extra");
            let ext = match common.format {
                Format::Csv => "csv",
                Format::Json => "json",
            };
            output::emit(Some(&output::sibling(path, &format!(".{name}.{ext}"))), text)?;
            output::emit(out, &main)?;
        }
        (Some(text), None) => output::emit(None, &format!("{main}\n{text}"))?,
        (None, _) => output::emit(out, &main)?,
    }
    if let Some(path) = out {
        let config = config_echo(&cli.command, seed)?;
        let meta = output::Meta {
            tool: "invlab",
            version: env!("CARGO_PKG_VERSION"),
            command: command_name(&cli.command),
            config_sha256: output::config_hash(&config),
            config,
            reps: produced.reps,
            calibration_reps: produced.calibration_reps,
            wall_time_s: started.elapsed().as_secs_f64(),
            extra: produced.extra.clone(),
        };
        output::emit(Some(&output::sibling(path, ".meta.json")), &to_json_text(&meta)?)?;
    }
    Ok(())
}

/// Runs the CLI on `args` (including the program name) and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match parse_args(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match run_cli(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("invlab: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_parsing() {
        assert_eq!("10, 20".parse::<Grid>().unwrap(), Grid(vec![10, 20]));
        assert!("10,x".parse::<Grid>().is_err());
        assert!(",".parse::<Names>().is_err());
    }

    #[test]
    fn later_flags_override_earlier() {
        let cli = parse_args(
            ["invlab", "power", "--n", "10", "--n", "20"].iter().map(OsString::from).collect(),
        )
        .unwrap();
        match cli.command {
            Command::Power(c) => assert_eq!(c.n, Grid(vec![20])),
            _ => unreachable!(),
        }
    }

    #[test]
    fn error_classes_map_to_exit_codes() {
        assert_eq!(CliError::from(Error::NonFinite("x")).exit_code(), EXIT_NUMERIC);
        assert_eq!(CliError::from(Error::InvalidArgument("x".into())).exit_code(), EXIT_CONFIG);
    }
}

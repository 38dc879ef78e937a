//! Command-line and TOML configuration.
//!
//! Every subcommand has one argument struct that doubles as its section of
//! the configuration file. Values given on the command line override the
//! file; the merged result is validated before any computation starts.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::report::Format;

const CUSTOM_CSV_HELP: &str =
    "Custom functions (--f custom-csv) are read from a two-column CSV file of \
(node, value) pairs with strictly increasing nodes; an optional header line is skipped. \
The function is the piecewise-linear interpolant of the table and vanishes outside it.";

#[derive(Debug, Parser)]
#[command(name = "dunkl", version, about = "Rational Dunkl analysis on Z2^d: checks and experiments", after_help = CUSTOM_CSV_HELP)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct GlobalArgs {
    /// Output file (written atomically); standard output if absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Output format; each subcommand has its own default.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Jacobi rule order for kernel and translation quadrature.
    #[arg(long, global = true)]
    pub quad_order: Option<usize>,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// TOML configuration file with a [global] table and one table per subcommand.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Measure constants and the identities tying them together.
    Constants(ConstantsArgs),
    /// Eigen-equation residual and |E(ix, y)| <= 1 for the Dunkl kernel.
    KernelCheck(KernelArgs),
    /// Plancherel, inversion, Gaussian image and translation symbol of the transform.
    TransformCheck(TransformArgs),
    /// Mass, total variation and support of the translation measures.
    VerifyMeasure(MeasureArgs),
    /// Heat semigroup properties and the domination constants.
    HeatCheck(HeatArgs),
    /// Maximal function of a test function on a grid of points.
    Maximal(MaximalArgs),
    /// Weak and strong constants against the bound shapes.
    ConstantSweep(SweepArgs),
    /// Maximal functions of dyadic blocks and their l^r sums.
    FsCounterexample(CounterexampleArgs),
    /// Exponential tail and integrability of the l^r maximal function.
    ExpIntegrability(ExpIntArgs),
    /// Aggregate JSON reports into one summary table.
    Report(ReportArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Constants(_) => "constants",
            Command::KernelCheck(_) => "kernel-check",
            Command::TransformCheck(_) => "transform-check",
            Command::VerifyMeasure(_) => "verify-measure",
            Command::HeatCheck(_) => "heat-check",
            Command::Maximal(_) => "maximal",
            Command::ConstantSweep(_) => "constant-sweep",
            Command::FsCounterexample(_) => "fs-counterexample",
            Command::ExpIntegrability(_) => "exp-integrability",
            Command::Report(_) => "report",
        }
    }

    pub fn default_format(&self) -> Format {
        match self {
            Command::KernelCheck(_)
            | Command::VerifyMeasure(_)
            | Command::Maximal(_)
            | Command::ConstantSweep(_)
            | Command::FsCounterexample(_) => Format::Csv,
            _ => Format::Json,
        }
    }
}

/// A real number that also parses `a/b`, `inf` and `-inf`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Real(pub f64);

impl FromStr for Real {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let t = s.trim();
        let parse = |v: &str| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| format!("cannot parse '{s}' as a number"))
        };
        if let Some((a, b)) = t.split_once('/') {
            let (a, b) = (parse(a)?, parse(b)?);
            if b == 0.0 {
                return Err(format!("zero denominator in '{s}'"));
            }
            return Ok(Real(a / b));
        }
        parse(t).map(Real)
    }
}

impl fmt::Display for Real {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl Serialize for Real {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0.is_finite() {
            s.serialize_f64(self.0)
        } else {
            s.serialize_str(&self.0.to_string())
        }
    }
}

impl<'de> Deserialize<'de> for Real {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Int(i64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(Real(v)),
            Raw::Int(v) => Ok(Real(v as f64)),
            Raw::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct ConstantsArgs {
    /// Dimension (at least 1, default 1).
    #[arg(long)]
    pub d: Option<usize>,
    /// Multiplicities: one value for all coordinates or one per coordinate.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub kappa: Option<Vec<f64>>,
    /// Sweep of uniform multiplicities (default 0,0.5,1,2).
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub kappa_grid: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct KernelArgs {
    /// Multiplicity (default 1).
    #[arg(long, allow_negative_numbers = true)]
    pub kappa: Option<f64>,
    /// Both x and y run over grid-n equally spaced points of [-grid-max, grid-max] (default 5).
    #[arg(long)]
    pub grid_max: Option<f64>,
    /// Points per axis (default 21).
    #[arg(long)]
    pub grid_n: Option<usize>,
    /// Step of the five-point stencil (default 1e-3).
    #[arg(long)]
    pub h: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum TransformTest {
    /// e^{-x^2/2}, the fixed point of the transform
    Gaussian,
    /// q_t for every t of --t-list, against c e^{-t x^2}
    Heat,
    /// (0.5 + x - 0.3 x^2) e^{-0.7 x^2}, which has both parities
    Polynomial,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct TransformArgs {
    /// Multiplicities (default 0,0.5,1,2.5).
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub kappa: Option<Vec<f64>>,
    /// Quadrature nodes of the transform, even (default 512).
    #[arg(long)]
    pub grid_n: Option<usize>,
    /// Truncation radius (default: where the weighted tail of each test function drops below 1e-12).
    #[arg(long)]
    pub grid_max: Option<f64>,
    /// Test families (default all).
    #[arg(long, value_delimiter = ',', value_enum)]
    pub tests: Option<Vec<TransformTest>>,
    /// Heat times (default 0.25,0.5,1,2).
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub t_list: Option<Vec<f64>>,
    /// Translation of the symbol check (default 0.7).
    #[arg(long, allow_negative_numbers = true)]
    pub shift: Option<f64>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct MeasureArgs {
    /// Multiplicities (default 0.3,0.7,1,2.5).
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub kappa_grid: Option<Vec<f64>>,
    /// Values of x and y, as "a:b:n" or a comma list (default -3:3:20).
    #[arg(long, allow_hyphen_values = true)]
    pub xy_grid: Option<String>,
    /// Jacobi rule order of the translation (default --quad-order, else 64).
    #[arg(long)]
    pub order: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum HeatTest {
    Mass,
    Unit,
    Semigroup,
    Symmetry,
    Positivity,
    Contraction,
    Equation,
    Domination,
    Cf1,
}

impl HeatTest {
    /// Whether the test is available for `d > 1`.
    pub fn any_dim(self) -> bool {
        matches!(
            self,
            HeatTest::Mass | HeatTest::Unit | HeatTest::Domination | HeatTest::Cf1
        )
    }
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct HeatArgs {
    /// Multiplicities: one value for all coordinates or one per coordinate (default 0.5).
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub kappa: Option<Vec<f64>>,
    /// Dimension (default 1). With d > 1 only mass, unit, domination and cf1 apply.
    #[arg(long)]
    pub d: Option<usize>,
    /// Times (default 0.1,0.25,0.5).
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub t_list: Option<Vec<f64>>,
    /// Tests to run (default: all that apply).
    #[arg(long, value_delimiter = ',', value_enum)]
    pub tests: Option<Vec<HeatTest>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum FunctionKind {
    /// chi_{[-w, w)} with w = --half-width
    Indicator,
    /// e^{-a x^2} with a = --rate
    Gaussian,
    /// Piecewise-linear table from --csv
    CustomCsv,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct MaximalArgs {
    /// Multiplicities: one value for all coordinates or one per coordinate (default 0.5).
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub kappa: Option<Vec<f64>>,
    /// Dimension, 1 to 3 (default 1). For d > 1 the input is the tensor power of f
    /// and the points run along the first axis.
    #[arg(long)]
    pub d: Option<usize>,
    /// Test function (default indicator).
    #[arg(long, value_enum)]
    pub f: Option<FunctionKind>,
    /// Table for --f custom-csv.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Half-width of the indicator (default 1).
    #[arg(long)]
    pub half_width: Option<f64>,
    /// Rate of the Gaussian (default 1).
    #[arg(long)]
    pub rate: Option<f64>,
    /// Ratio of the geometric radius grid, in (1, 2] (default 1.05).
    #[arg(long)]
    pub radius_ratio: Option<f64>,
    /// Points as "a:b:n" or a comma list (default -4:4:17).
    #[arg(long, allow_hyphen_values = true)]
    pub x_grid: Option<String>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct SweepArgs {
    /// Dimensions, each 1 to 3 (default 1). For d > 1 the multiplicity gamma/d is
    /// shared by all coordinates and the test function is the cube indicator.
    #[arg(long, value_delimiter = ',')]
    pub d_list: Option<Vec<usize>>,
    /// Values of gamma, the sum of the multiplicities (default 0.5,1.5,3.5,7.5,15.5,31.5).
    #[arg(long, value_delimiter = ',')]
    pub gamma_list: Option<Vec<f64>>,
    /// Strong-type exponents; fractions and inf are accepted (default 4/3,2,4,8).
    #[arg(long, value_delimiter = ',')]
    pub p_list: Option<Vec<Real>>,
    /// Largest accepted max/min of the normalized constants (default 5).
    #[arg(long)]
    pub spread: Option<f64>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CounterexampleArgs {
    /// Multiplicity (default 1).
    #[arg(long)]
    pub kappa: Option<f64>,
    /// Number of dyadic blocks (default 10).
    #[arg(long = "N")]
    #[serde(rename = "N")]
    pub n: Option<i32>,
    /// Exponent of the l^r sum (default 2).
    #[arg(long)]
    pub r: Option<f64>,
    /// Sample points as "a:b:n" or a comma list (default 0, +-2^j and +-0.75 2^j for j = 0..N).
    #[arg(long = "x-grid", allow_hyphen_values = true)]
    #[serde(rename = "x-grid")]
    pub x_grid: Option<String>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpIntArgs {
    /// Multiplicity (default 1).
    #[arg(long)]
    pub kappa: Option<f64>,
    /// Exponent of the l^r sum (default 2).
    #[arg(long)]
    pub r: Option<f64>,
    /// Radius a of the compact set K = [-a, a] (default 2^N).
    #[arg(long = "K")]
    #[serde(rename = "K")]
    pub k: Option<f64>,
    /// Number of dyadic blocks (default 8).
    #[arg(long = "N")]
    #[serde(rename = "N")]
    pub n: Option<i32>,
    /// Geometric cells per side of K (default 256).
    #[arg(long)]
    pub cells: Option<usize>,
    /// Values of eps (default 0, 0.2, 0.4, 0.6, 0.8 times the fitted beta).
    #[arg(long = "eps-grid", value_delimiter = ',')]
    #[serde(rename = "eps-grid")]
    pub eps_grid: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportArgs {
    /// JSON reports to aggregate.
    pub inputs: Vec<PathBuf>,
}

/// Contents of a `--config` file.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct FileConfig {
    pub global: Option<GlobalArgs>,
    pub constants: Option<ConstantsArgs>,
    pub kernel_check: Option<KernelArgs>,
    pub transform_check: Option<TransformArgs>,
    pub verify_measure: Option<MeasureArgs>,
    pub heat_check: Option<HeatArgs>,
    pub maximal: Option<MaximalArgs>,
    pub constant_sweep: Option<SweepArgs>,
    pub fs_counterexample: Option<CounterexampleArgs>,
    pub exp_integrability: Option<ExpIntArgs>,
    pub report: Option<ReportArgs>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config file {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("invalid config file {}", path.display()))
    }
}

/// `cli` with unset fields taken from `file`.
pub fn overlay<T: Serialize + DeserializeOwned>(cli: &T, file: Option<&T>) -> Result<T> {
    let mut base = match file {
        Some(f) => serde_json::to_value(f)?,
        None => serde_json::Value::Object(Default::default()),
    };
    let top = serde_json::to_value(cli)?;
    if let (Some(b), serde_json::Value::Object(t)) = (base.as_object_mut(), top) {
        for (k, v) in t {
            if !v.is_null() {
                b.insert(k, v);
            }
        }
    }
    Ok(serde_json::from_value(base)?)
}

/// Merge the file sections into the parsed command line.
pub fn merge(cli: Cli) -> Result<(GlobalArgs, Command)> {
    let file = match &cli.global.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    let mut global = overlay(&cli.global, file.global.as_ref())?;
    global.config = cli.global.config.clone();
    let command = match cli.command {
        Command::Constants(a) => Command::Constants(overlay(&a, file.constants.as_ref())?),
        Command::KernelCheck(a) => Command::KernelCheck(overlay(&a, file.kernel_check.as_ref())?),
        Command::TransformCheck(a) => {
            Command::TransformCheck(overlay(&a, file.transform_check.as_ref())?)
        }
        Command::VerifyMeasure(a) => {
            Command::VerifyMeasure(overlay(&a, file.verify_measure.as_ref())?)
        }
        Command::HeatCheck(a) => Command::HeatCheck(overlay(&a, file.heat_check.as_ref())?),
        Command::Maximal(a) => Command::Maximal(overlay(&a, file.maximal.as_ref())?),
        Command::ConstantSweep(a) => {
            Command::ConstantSweep(overlay(&a, file.constant_sweep.as_ref())?)
        }
        Command::FsCounterexample(a) => {
            Command::FsCounterexample(overlay(&a, file.fs_counterexample.as_ref())?)
        }
        Command::ExpIntegrability(a) => {
            Command::ExpIntegrability(overlay(&a, file.exp_integrability.as_ref())?)
        }
        Command::Report(a) => {
            let mut merged = a.clone();
            if merged.inputs.is_empty() {
                if let Some(f) = &file.report {
                    merged.inputs = f.inputs.clone();
                }
            }
            Command::Report(merged)
        }
    };
    Ok((global, command))
}

/// Points given as `a:b:n` or as a comma-separated list.
pub fn parse_points(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() == 3 {
        let a: f64 = parts[0]
            .trim()
            .parse()
            .with_context(|| format!("x-grid: cannot parse start '{}'", parts[0]))?;
        let b: f64 = parts[1]
            .trim()
            .parse()
            .with_context(|| format!("x-grid: cannot parse end '{}'", parts[1]))?;
        let n: usize = parts[2]
            .trim()
            .parse()
            .with_context(|| format!("x-grid: cannot parse count '{}'", parts[2]))?;
        if n == 0 || !(a.is_finite() && b.is_finite()) {
            bail!("x-grid: need finite ends and at least one point, got '{spec}'");
        }
        if n == 1 {
            return Ok(vec![a]);
        }
        return Ok((0..n)
            .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
            .collect());
    }
    spec.split(',')
        .map(|t| {
            let v: f64 = t
                .trim()
                .parse()
                .with_context(|| format!("x-grid: cannot parse '{t}'"))?;
            if !v.is_finite() {
                bail!("x-grid: points must be finite, got '{t}'");
            }
            Ok(v)
        })
        .collect()
}

pub(crate) fn check_dim(d: usize, max: usize) -> Result<()> {
    if d < 1 {
        bail!("d must be ≥ 1");
    }
    if d > max {
        bail!("d must be ≤ {max} for this subcommand, got {d}");
    }
    Ok(())
}

pub(crate) fn check_kappas(name: &str, ks: &[f64]) -> Result<()> {
    if ks.is_empty() {
        bail!("{name} must not be empty");
    }
    if let Some(k) = ks.iter().find(|k| !(**k >= 0.0 && k.is_finite())) {
        bail!("{name} values must be finite and ≥ 0, got {k}");
    }
    Ok(())
}

pub(crate) fn check_positive(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        bail!("{name} must be positive and finite, got {v}");
    }
    Ok(())
}

/// Per-coordinate multiplicities from one value or `d` values.
pub(crate) fn expand_kappa(ks: &[f64], d: usize) -> Result<Vec<f64>> {
    match ks.len() {
        1 => Ok(vec![ks[0]; d]),
        n if n == d => Ok(ks.to_vec()),
        n => bail!("kappa needs 1 or d = {d} values, got {n}"),
    }
}

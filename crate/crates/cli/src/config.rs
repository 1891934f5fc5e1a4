//! Run configuration: a command plus a flat record of parameters, read from
//! flags and an optional JSON file (flags win).

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, ValueEnum};
use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Nondominated sort of a point cloud.
    Sort,
    /// Pareto depth function on a grid.
    Depth,
    /// Longest chain of a point cloud.
    Chain,
    /// Simplex cell problem.
    Cell,
    /// Finite-difference solve of the continuum PDE.
    Solve,
    /// Convergence rates on the masked domain.
    Rates,
    /// Convergence rates on the full box.
    RatesFull,
    /// Longest-chain constant estimate.
    Cd,
    /// Semiconvexity blow-up near the curved boundary.
    Semiconvexity,
    /// Longest chain inside the boundary tube.
    Boundary,
    /// Check the simplex cover, and the tube cover when R is given. Tube
    /// covers grow quickly as eps shrinks.
    CoverCheck,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Sort => "sort",
            Command::Depth => "depth",
            Command::Chain => "chain",
            Command::Cell => "cell",
            Command::Solve => "solve",
            Command::Rates => "rates",
            Command::RatesFull => "rates-full",
            Command::Cd => "cd",
            Command::Semiconvexity => "semiconvexity",
            Command::Boundary => "boundary",
            Command::CoverCheck => "cover-check",
        }
    }
}

/// Every parameter any command understands. Counts (`n`, `ns`) accept
/// scientific notation such as `1e6`.
#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    /// Dimension.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,

    /// Expected number of points (Poisson intensity).
    #[arg(long, value_parser = parse_count)]
    #[serde(
        default,
        skip_serializing_if = "Option::is_none",
        deserialize_with = "de_count"
    )]
    pub n: Option<u64>,

    /// Ladder of intensities, comma separated.
    #[arg(long, value_parser = parse_count, value_delimiter = ',')]
    #[serde(
        default,
        skip_serializing_if = "Option::is_none",
        deserialize_with = "de_counts"
    )]
    pub ns: Option<Vec<u64>>,

    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<u64>,

    /// Radius of the removed corner.
    #[arg(long = "R")]
    #[serde(rename = "R", default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,

    /// Tube width or cover resolution.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,

    /// Grid cells per axis; the grid has `grid + 1` nodes.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<usize>,

    /// Density name: constant, affine or bump.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density: Option<String>,

    /// Constant value, or the base level of affine and bump densities.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho0: Option<f64>,

    /// Affine gradient, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slope: Option<Vec<f64>>,

    /// Bump height.
    #[arg(long, allow_hyphen_values = true)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<f64>,

    /// Bump center, comma separated.
    #[arg(long, value_delimiter = ',')]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<Vec<f64>>,

    /// Bump width.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width: Option<f64>,

    /// Simplex side lengths, comma separated.
    #[arg(long, value_delimiter = ',')]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<Vec<f64>>,

    /// Decreasing radii for the blow-up fit, comma separated.
    #[arg(long, value_delimiter = ',')]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radii: Option<Vec<f64>>,

    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,

    /// Worker threads; 0 uses every core.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,

    /// Output directory (default: $PARETOLAB_OUT, then ./paretolab-out).
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,

    /// Point cloud CSV to read instead of sampling.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,

    /// Longest-chain constant; estimated when absent and d ≥ 3.
    #[arg(long = "cd")]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_d: Option<f64>,

    /// Trials for the automatic c_d estimate.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cd_trials: Option<u64>,
}

impl Params {
    /// Fills every unset field from `base`.
    pub fn or(self, base: Params) -> Params {
        Params {
            d: self.d.or(base.d),
            n: self.n.or(base.n),
            ns: self.ns.or(base.ns),
            trials: self.trials.or(base.trials),
            radius: self.radius.or(base.radius),
            eps: self.eps.or(base.eps),
            grid: self.grid.or(base.grid),
            density: self.density.or(base.density),
            rho0: self.rho0.or(base.rho0),
            slope: self.slope.or(base.slope),
            amplitude: self.amplitude.or(base.amplitude),
            center: self.center.or(base.center),
            width: self.width.or(base.width),
            p: self.p.or(base.p),
            radii: self.radii.or(base.radii),
            seed: self.seed.or(base.seed),
            threads: self.threads.or(base.threads),
            out: self.out.or(base.out),
            input: self.input.or(base.input),
            c_d: self.c_d.or(base.c_d),
            cd_trials: self.cd_trials.or(base.cd_trials),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    #[serde(default)]
    pub params: Params,
}

impl RunConfig {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn from_json(text: &str) -> CliResult<Self> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("config file: {e}")))
    }
}

/// Config file contents: like [`RunConfig`] but the command may come from
/// the command line instead.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    command: Option<Command>,
    #[serde(default)]
    params: Params,
}

#[derive(Debug, Parser)]
#[command(
    name = "paretolab",
    version,
    about = "Longest chains, Pareto depth and their continuum limit"
)]
pub struct Cli {
    pub command: Command,

    /// JSON file with `command` and `params`; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,

    #[command(flatten)]
    pub params: Params,
}

/// Parses flags and the optional config file into a [`RunConfig`].
pub fn parse_config<I, T>(argv: I) -> Result<RunConfig, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv)?;
    let params = match &cli.config {
        Some(path) => {
            let file = read_file_config(path)
                .map_err(|e| clap::Error::raw(clap::error::ErrorKind::InvalidValue, format!("{e}\n")))?;
            if let Some(cmd) = file.command {
                if cmd != cli.command {
                    return Err(clap::Error::raw(
                        clap::error::ErrorKind::ArgumentConflict,
                        format!(
                            "config file is for '{}' but '{}' was requested\n",
                            cmd.name(),
                            cli.command.name()
                        ),
                    ));
                }
            }
            cli.params.or(file.params)
        }
        None => cli.params,
    };
    Ok(RunConfig {
        command: cli.command,
        params,
    })
}

fn read_file_config(path: &Path) -> CliResult<FileConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("config file {}: {e}", path.display())))
}

/// A positive integer written plainly or in scientific notation.
pub fn parse_count(s: &str) -> Result<u64, String> {
    let s = s.trim();
    if let Ok(v) = s.parse::<u64>() {
        return Ok(v);
    }
    let v: f64 = s.parse().map_err(|_| format!("'{s}' is not a number"))?;
    float_count(v).ok_or_else(|| format!("'{s}' is not a nonnegative integer"))
}

fn float_count(v: f64) -> Option<u64> {
    (v.is_finite() && v >= 0.0 && v.fract() == 0.0 && v <= 9.007_199_254_740_992e15).then_some(v as u64)
}

#[derive(Deserialize)]
#[serde(untagged)]
enum CountRepr {
    Int(u64),
    Float(f64),
    Text(String),
}

impl CountRepr {
    fn value<E: serde::de::Error>(self) -> Result<u64, E> {
        match self {
            CountRepr::Int(v) => Ok(v),
            CountRepr::Float(v) => {
                float_count(v).ok_or_else(|| E::custom(format!("{v} is not a nonnegative integer")))
            }
            CountRepr::Text(s) => parse_count(&s).map_err(E::custom),
        }
    }
}

fn de_count<'de, D: Deserializer<'de>>(d: D) -> Result<Option<u64>, D::Error> {
    Option::<CountRepr>::deserialize(d)?
        .map(CountRepr::value)
        .transpose()
}

fn de_counts<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Vec<u64>>, D::Error> {
    Option::<Vec<CountRepr>>::deserialize(d)?
        .map(|v| v.into_iter().map(CountRepr::value).collect())
        .transpose()
}

pub fn require<T: Clone>(value: &Option<T>, key: &str) -> CliResult<T> {
    value.clone().ok_or_else(|| CliError::missing(key))
}

/// Output directory: `out`, then `$PARETOLAB_OUT`, then `./paretolab-out`.
pub fn default_out_dir() -> PathBuf {
    std::env::var_os("PARETOLAB_OUT")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("paretolab-out"))
}

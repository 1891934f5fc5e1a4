//! Monte-Carlo harness: `c_d` estimation, the simplex cell problem, one-sided
//! sup-norm rates on `Ω_R` and on the full box, the boundary tube statistic,
//! and log-log fits.
//!
//! Trials are independent jobs seeded by [`substream_seed`]; results are
//! gathered in `(n, trial)` order so output does not depend on the number of
//! worker threads.
//!
//! The theorems behind these experiments carry unknown constants, so fitted
//! prefactors are descriptive only; slopes and trends are what can be checked.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chains::{
    depth_on_grid, longest_chain, longest_chain_in, scale_factor, ChainScalingConstants, Region,
};
use crate::density::{DensityField, DensityKind};
use crate::error::{invalid, Error, Result};
use crate::geometry::{geometric_mean, MaskedDomain, Point, Rect, Simplex};
use crate::grid::{Grid, GridFunction};
use crate::hj::{exact_constant_solution, solve_hj, SolveSpec};
use crate::sampling::{sample_poisson, substream_seed, SampleConfig, SampleMode, SampleRegion};

/// Least-squares line through `(log x, log y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogLogFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

pub fn fit_loglog(xs: &[f64], ys: &[f64]) -> Result<LogLogFit> {
    if xs.len() != ys.len() {
        return Err(invalid("ys", "length differs from xs"));
    }
    if xs.len() < 3 {
        return Err(invalid("xs", "need at least three points"));
    }
    if xs.iter().chain(ys).any(|&v| !(v > 0.0 && v.is_finite())) {
        return Err(invalid("data", "log-log fit needs positive finite values"));
    }
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    Ok(fit_line(&lx, &ly))
}

fn fit_line(xs: &[f64], ys: &[f64]) -> LogLogFit {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let r2 = if ss_res <= 1e-30 * (1.0 + ss_tot) {
        1.0
    } else if ss_tot > 0.0 {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    } else {
        0.0
    };
    LogLogFit { slope, intercept, r2 }
}

/// One Monte-Carlo sample of a scalar statistic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub trial_index: u64,
    pub seed: u64,
    pub statistic: f64,
    pub n: u64,
}

/// Per-`n` means and standard deviations with a log-log fit of the means.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFitResult {
    pub ns: Vec<u64>,
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub theory_slope: f64,
    /// The smallest `n` lies more than `2σ` off the line fitted to the other
    /// points, where `σ` combines their log-scale scatter with the relative
    /// spread of the trials at the smallest `n`; such a point is likely
    /// pre-asymptotic.
    pub smallest_n_flagged: bool,
}

impl RateFitResult {
    /// Groups trials by `n` (ladder order) and fits `log mean` vs `log n`.
    /// When some mean is not positive the slope, intercept and `r2` are NaN.
    pub fn from_trials(ns: &[u64], trials: &[TrialResult], theory_slope: f64) -> Result<Self> {
        let (means, stds) = moments_by_n(ns, trials)?;
        Self::from_moments(ns, means, stds, theory_slope)
    }

    pub fn from_moments(ns: &[u64], means: Vec<f64>, stds: Vec<f64>, theory_slope: f64) -> Result<Self> {
        let xs: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
        let (fit, flagged) = if ns.len() >= 3 && means.iter().all(|&m| m > 0.0) {
            let fit = fit_loglog(&xs, &means)?;
            (fit, smallest_is_outlier(&xs, &means, &stds))
        } else {
            (
                LogLogFit {
                    slope: f64::NAN,
                    intercept: f64::NAN,
                    r2: f64::NAN,
                },
                false,
            )
        };
        Ok(Self {
            ns: ns.to_vec(),
            means,
            stds,
            slope: fit.slope,
            intercept: fit.intercept,
            r2: fit.r2,
            theory_slope,
            smallest_n_flagged: flagged,
        })
    }

    pub fn strictly_decreasing(&self) -> bool {
        self.means.windows(2).all(|w| w[1] < w[0])
    }
}

fn smallest_is_outlier(xs: &[f64], ys: &[f64], stds: &[f64]) -> bool {
    let first = xs
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let (rx, ry): (Vec<f64>, Vec<f64>) = xs
        .iter()
        .zip(ys)
        .enumerate()
        .filter(|(i, _)| *i != first)
        .map(|(_, (x, y))| (*x, *y))
        .unzip();
    if rx.len() < 2 {
        return false;
    }
    let rest = fit_line(
        &rx.iter().map(|v| v.ln()).collect::<Vec<_>>(),
        &ry.iter().map(|v| v.ln()).collect::<Vec<_>>(),
    );
    let line = |x: f64| rest.intercept + rest.slope * x.ln();
    let scatter = if rx.len() > 2 {
        rx.iter()
            .zip(&ry)
            .map(|(x, y)| (y.ln() - line(*x)).powi(2))
            .sum::<f64>()
            / (rx.len() as f64 - 2.0)
    } else {
        0.0
    };
    let spread = stds.get(first).map_or(0.0, |s| s / ys[first]);
    let sigma = (scatter + spread * spread).sqrt();
    (ys[first].ln() - line(xs[first])).abs() > 2.0 * sigma + 1e-12
}

/// Mean and sample standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn moments_by_n(ns: &[u64], trials: &[TrialResult]) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut means = Vec::with_capacity(ns.len());
    let mut stds = Vec::with_capacity(ns.len());
    for &n in ns {
        let vals: Vec<f64> = trials.iter().filter(|t| t.n == n).map(|t| t.statistic).collect();
        if vals.is_empty() {
            return Err(invalid("trials", format!("no trials for n = {n}")));
        }
        let (m, s) = mean_std(&vals);
        means.push(m);
        stds.push(s);
    }
    Ok((means, stds))
}

fn check_ladder(ns: &[u64]) -> Result<()> {
    if ns.is_empty() {
        return Err(invalid("ns", "empty ladder"));
    }
    if ns[0] == 0 || ns.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("ns", "must be positive and strictly increasing"));
    }
    Ok(())
}

/// Runs `job` on every element in a pool of `threads` workers (0 = all
/// cores), returning results in input order.
pub fn run_ordered<J, T, F>(threads: usize, jobs: &[J], job: F) -> Result<Vec<T>>
where
    J: Sync,
    T: Send,
    F: Fn(&J) -> Result<T> + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Numeric(format!("thread pool: {e}")))?;
    pool.install(|| jobs.par_iter().map(&job).collect())
}

#[derive(Debug, Clone, Copy)]
struct Job {
    n: u64,
    trial: u64,
    seed: u64,
}

fn ladder_jobs(master: u64, tag: &str, ns: &[u64], trials: u64) -> Vec<Job> {
    ns.iter()
        .flat_map(|&n| {
            (0..trials).map(move |trial| Job {
                n,
                trial,
                seed: substream_seed(master, trial, &format!("{tag}/n={n}")),
            })
        })
        .collect()
}

fn to_trial(job: &Job, statistic: f64) -> TrialResult {
    TrialResult {
        trial_index: job.trial,
        seed: job.seed,
        statistic,
        n: job.n,
    }
}

fn check_trials(trials: u64, min: u64) -> Result<()> {
    if trials < min {
        return Err(invalid("trials", format!("need at least {min}")));
    }
    Ok(())
}

fn unit_density(d: usize) -> Result<DensityField> {
    DensityField::constant(d, 1.0)
}

/// Trials as CSV with columns `n, trial_index, seed, statistic`.
pub fn write_trials_csv<W: Write>(mut w: W, trials: &[TrialResult]) -> Result<()> {
    writeln!(w, "n,trial_index,seed,statistic")?;
    for t in trials {
        writeln!(w, "{},{},{},{:.16e}", t.n, t.trial_index, t.seed, t.statistic)?;
    }
    Ok(())
}

/// Writes `<dir>/<name>.csv` and `<dir>/<name>.summary.json`.
pub fn write_outputs(
    dir: &Path,
    name: &str,
    csv: impl FnOnce(&mut dyn Write) -> Result<()>,
    summary: &serde_json::Value,
) -> Result<(PathBuf, PathBuf)> {
    std::fs::create_dir_all(dir)?;
    let csv_path = dir.join(format!("{name}.csv"));
    let json_path = dir.join(format!("{name}.summary.json"));
    let mut w = BufWriter::new(File::create(&csv_path)?);
    csv(&mut w)?;
    w.flush()?;
    let mut j = BufWriter::new(File::create(&json_path)?);
    serde_json::to_writer_pretty(&mut j, summary)?;
    writeln!(j)?;
    j.flush()?;
    Ok((csv_path, json_path))
}

/// `c_d` estimate from `trials` Poisson clouds of intensity `n` on `[0,1]^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CdEstimate {
    pub d: usize,
    pub n: u64,
    pub estimate: f64,
    /// Half-width of the normal-approximation 95% interval.
    pub ci_halfwidth: f64,
    pub lower_bound: f64,
    pub trials: Vec<TrialResult>,
}

impl CdEstimate {
    pub fn scaling(&self) -> Result<ChainScalingConstants> {
        ChainScalingConstants::new(self.d, self.estimate)
    }

    pub fn summary(&self) -> serde_json::Value {
        serde_json::json!({
            "d": self.d,
            "n": self.n,
            "estimate": self.estimate,
            "ci_halfwidth": self.ci_halfwidth,
            "lower_bound": self.lower_bound,
            "upper_bound": std::f64::consts::E,
            "trials": self.trials.len(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CdConfig {
    pub d: usize,
    pub n: u64,
    pub trials: u64,
    pub seed: u64,
    pub threads: usize,
}

/// Mean of `n^{−1/d} ℓ([0,1]^d ∩ X_n)` with a 95% confidence half-width.
pub fn estimate_cd(cfg: &CdConfig) -> Result<CdEstimate> {
    if cfg.d < 2 {
        return Err(invalid("d", "must be at least 2"));
    }
    check_trials(cfg.trials, 2)?;
    let rho = unit_density(cfg.d)?;
    let jobs = ladder_jobs(cfg.seed, "cd", &[cfg.n], cfg.trials);
    let trials = run_ordered(cfg.threads, &jobs, |job| {
        let cloud = sample_poisson(&rho, &SampleConfig::poisson_unit(cfg.d, job.n, job.seed)?)?;
        let stat = longest_chain(&cloud) as f64 * (job.n as f64).powf(-1.0 / cfg.d as f64);
        Ok(to_trial(job, stat))
    })?;
    let vals: Vec<f64> = trials.iter().map(|t| t.statistic).collect();
    let (mean, std) = mean_std(&vals);
    Ok(CdEstimate {
        d: cfg.d,
        n: cfg.n,
        estimate: mean,
        ci_halfwidth: 1.96 * std / (vals.len() as f64).sqrt(),
        lower_bound: crate::chains::cd_lower_bound(cfg.d),
        trials,
    })
}

/// Longest chain in the simplex `S_{p,p} ⊂ [0,p]` under constant density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellConfig {
    pub d: usize,
    pub rho0: f64,
    pub p: Vec<f64>,
    pub ns: Vec<u64>,
    pub trials: u64,
    pub seed: u64,
    pub threads: usize,
    /// Required for `d ≥ 3`.
    pub c_d: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellOutcome {
    /// `d ρ0^{1/d} |S_p|^{1/d}`.
    pub limit: f64,
    pub trials: Vec<TrialResult>,
    /// Per-`n` mean and standard deviation of the scaled chain length.
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
    /// Fit of `|mean − limit|` against `n`.
    pub bias: RateFitResult,
    /// Fit of the standard deviation against `n`.
    pub spread: RateFitResult,
}

impl CellOutcome {
    pub fn summary(&self) -> serde_json::Value {
        serde_json::json!({
            "limit": self.limit,
            "ns": self.bias.ns,
            "means": self.means,
            "stds": self.stds,
            "bias": self.bias,
            "spread": self.spread,
        })
    }
}

fn scaling_for(d: usize, c_d: Option<f64>) -> Result<ChainScalingConstants> {
    match c_d {
        Some(c) => ChainScalingConstants::new(d, c),
        None => ChainScalingConstants::known(d).ok_or_else(|| {
            invalid(
                "c_d",
                format!("no built-in chain constant for d = {d}; supply an estimate"),
            )
        }),
    }
}

pub fn cell_problem_experiment(cfg: &CellConfig) -> Result<CellOutcome> {
    check_ladder(&cfg.ns)?;
    check_trials(cfg.trials, 2)?;
    if cfg.p.len() != cfg.d {
        return Err(Error::DimensionMismatch {
            expected: cfg.d,
            got: cfg.p.len(),
        });
    }
    let consts = scaling_for(cfg.d, cfg.c_d)?;
    let simplex = Simplex::new(Point::new(cfg.p.clone())?, cfg.p.clone())?;
    let d = cfg.d as f64;
    let root_measure = simplex.measure().powf(1.0 / d);
    if d * root_measure > 1.0 + 1e-12 {
        return Err(invalid("p", "need d |S_p|^{1/d} ≤ 1"));
    }
    let rho = DensityField::new(cfg.d, 1.0, DensityKind::Constant { value: cfg.rho0 })?;
    let limit = d * cfg.rho0.powf(1.0 / d) * root_measure;
    let region = SampleRegion::Box(Rect::new(vec![0.0; cfg.d], cfg.p.clone())?);
    let inside = Region::Simplex(simplex);
    let jobs = ladder_jobs(cfg.seed, "cell", &cfg.ns, cfg.trials);
    let trials = run_ordered(cfg.threads, &jobs, |job| {
        let sc = SampleConfig::new(job.n, job.seed, SampleMode::Poisson, region.clone())?;
        let cloud = sample_poisson(&rho, &sc)?;
        let stat = scale_factor(job.n, &consts) * longest_chain_in(&cloud, &inside) as f64;
        Ok(to_trial(job, stat))
    })?;
    let (means, stds) = moments_by_n(&cfg.ns, &trials)?;
    let gaps: Vec<f64> = means.iter().map(|m| (m - limit).abs()).collect();
    let theory = -1.0 / (2.0 * d);
    let bias = RateFitResult::from_moments(&cfg.ns, gaps, vec![0.0; cfg.ns.len()], theory)?;
    let spread = RateFitResult::from_moments(&cfg.ns, stds.clone(), vec![0.0; cfg.ns.len()], theory)?;
    Ok(CellOutcome {
        limit,
        trials,
        means,
        stds,
        bias,
        spread,
    })
}

/// Shared configuration of the sup-norm rate experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateConfig {
    pub d: usize,
    /// `R`; zero runs the full-box experiment.
    pub radius: f64,
    pub density: DensityField,
    pub ns: Vec<u64>,
    pub trials: u64,
    /// Grid nodes per axis on `[0,1]^d`.
    pub grid_nodes: usize,
    pub seed: u64,
    pub threads: usize,
    pub c_d: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateOutcome {
    /// `sup (u_n − u)_+` over admissible nodes.
    pub upper: RateFitResult,
    /// `sup (u − u_n)_+` over admissible nodes.
    pub lower: RateFitResult,
    pub upper_trials: Vec<TrialResult>,
    pub lower_trials: Vec<TrialResult>,
    pub admissible_nodes: usize,
    /// Sup of `|u − exact|` on admissible nodes for constant densities.
    pub solver_error: Option<f64>,
    pub spacing: f64,
    /// Trial-averaged `u − u_n` at the largest `n`.
    #[serde(skip)]
    pub deviation: Option<GridFunction>,
}

impl RateOutcome {
    /// Columns `n, trial_index, seed, upper, lower`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "n,trial_index,seed,upper,lower")?;
        for (a, b) in self.upper_trials.iter().zip(&self.lower_trials) {
            writeln!(
                w,
                "{},{},{},{:.16e},{:.16e}",
                a.n, a.trial_index, a.seed, a.statistic, b.statistic
            )?;
        }
        Ok(())
    }

    pub fn summary(&self) -> serde_json::Value {
        serde_json::json!({
            "upper": self.upper,
            "lower": self.lower,
            "admissible_nodes": self.admissible_nodes,
            "solver_error": self.solver_error,
            "spacing": self.spacing,
        })
    }
}

/// Sup-norm rates of `u_n` toward the PDE solution on `Ω_R`
/// (theory slopes `−1/4d` above and `−1/3d` below).
pub fn rate_experiment(cfg: &RateConfig) -> Result<RateOutcome> {
    if !(cfg.radius > 0.0 && cfg.radius <= 0.5) {
        return Err(invalid("R", "must lie in (0, 0.5]"));
    }
    let d = cfg.d as f64;
    run_rates(cfg, -1.0 / (4.0 * d), -1.0 / (3.0 * d))
}

/// The same pipeline on the whole box `[0,1]^d`.
pub fn full_domain_rate_experiment(cfg: &RateConfig) -> Result<RateOutcome> {
    if cfg.radius != 0.0 {
        return Err(invalid("R", "the full-domain experiment uses R = 0"));
    }
    let (a, b) = full_domain_theory_exponents(cfg.d);
    run_rates(cfg, -a, -b)
}

/// `(1/(2d³+d²+5d+1), 1/(2d³−d²+3d+1))`.
pub fn full_domain_theory_exponents(d: usize) -> (f64, f64) {
    let d = d as f64;
    (
        1.0 / (2.0 * d.powi(3) + d * d + 5.0 * d + 1.0),
        1.0 / (2.0 * d.powi(3) - d * d + 3.0 * d + 1.0),
    )
}

fn run_rates(cfg: &RateConfig, upper_theory: f64, lower_theory: f64) -> Result<RateOutcome> {
    check_ladder(&cfg.ns)?;
    check_trials(cfg.trials, 1)?;
    if cfg.density.dim() != cfg.d {
        return Err(Error::DimensionMismatch {
            expected: cfg.d,
            got: cfg.density.dim(),
        });
    }
    let consts = scaling_for(cfg.d, cfg.c_d)?;
    let grid = Grid::unit(cfg.d, cfg.grid_nodes)?;
    let h = grid.spacing();
    if cfg.radius > 0.0 && h > cfg.radius / 16.0 {
        return Err(Error::GridTooCoarse(format!(
            "spacing {h} exceeds R/16 = {}",
            cfg.radius / 16.0
        )));
    }
    let mask = (cfg.radius > 0.0)
        .then(|| MaskedDomain::unit(cfg.radius))
        .transpose()?;
    let spec = match mask {
        Some(m) => SolveSpec::masked(cfg.density.clone(), m),
        None => SolveSpec::unmasked(cfg.density.clone()),
    };
    let u = solve_hj(&spec, &grid)?;
    let cut = cfg.radius + 2.0 * h;
    let mut admissible = vec![false; grid.len()];
    grid.for_each_node(|flat, x| admissible[flat] = geometric_mean(x) > cut);
    let admissible_nodes = admissible.iter().filter(|&&a| a).count();
    if admissible_nodes == 0 {
        return Err(Error::EmptyDomain);
    }
    let solver_error = match cfg.density.kind() {
        DensityKind::Constant { value } => {
            let mut worst = 0.0f64;
            let mut err = None;
            grid.for_each_node(|flat, x| {
                if admissible[flat] {
                    match exact_constant_solution(*value, cfg.radius, x) {
                        Ok(e) => worst = worst.max((u.values()[flat] - e).abs()),
                        Err(e) => err = Some(e),
                    }
                }
            });
            if let Some(e) = err {
                return Err(e);
            }
            Some(worst)
        }
        _ => None,
    };

    let tag = if cfg.radius > 0.0 { "rates" } else { "rates-full" };
    let jobs = ladder_jobs(cfg.seed, tag, &cfg.ns, cfg.trials);
    let largest = *cfg.ns.last().unwrap();
    let per_trial = run_ordered(cfg.threads, &jobs, |job| {
        let cloud = sample_poisson(&cfg.density, &SampleConfig::poisson_unit(cfg.d, job.n, job.seed)?)?;
        let cloud = match mask {
            Some(m) => cloud.filter(|p| m.contains(p)),
            None => cloud,
        };
        let depth = depth_on_grid(&cloud, &grid)?;
        let scale = scale_factor(job.n, &consts);
        let mut up = 0.0f64;
        let mut down = 0.0f64;
        let keep_field = job.n == largest;
        let mut field = if keep_field {
            vec![0.0; grid.len()]
        } else {
            Vec::new()
        };
        for flat in 0..grid.len() {
            if !admissible[flat] {
                continue;
            }
            let diff = scale * depth.values()[flat] - u.values()[flat];
            up = up.max(diff);
            down = down.max(-diff);
            if keep_field {
                field[flat] = -diff;
            }
        }
        Ok((to_trial(job, up), to_trial(job, down), field))
    })?;

    let mut upper_trials = Vec::with_capacity(per_trial.len());
    let mut lower_trials = Vec::with_capacity(per_trial.len());
    let mut deviation = vec![0.0; grid.len()];
    let mut count = 0.0;
    for (a, b, field) in per_trial {
        upper_trials.push(a);
        lower_trials.push(b);
        if !field.is_empty() {
            for (acc, v) in deviation.iter_mut().zip(&field) {
                *acc += v;
            }
            count += 1.0;
        }
    }
    for v in &mut deviation {
        *v /= count;
    }
    Ok(RateOutcome {
        upper: RateFitResult::from_trials(&cfg.ns, &upper_trials, upper_theory)?,
        lower: RateFitResult::from_trials(&cfg.ns, &lower_trials, lower_theory)?,
        upper_trials,
        lower_trials,
        admissible_nodes,
        solver_error,
        spacing: h,
        deviation: Some(GridFunction::from_values(grid, deviation)?),
    })
}

/// Longest chain in the tube `Ω_R \ Ω_{R+ε}`, which equals the sup of `U_n`
/// over the tube.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryConfig {
    pub d: usize,
    pub radius: f64,
    pub eps: f64,
    pub density: DensityField,
    pub n: u64,
    pub trials: u64,
    pub seed: u64,
    pub threads: usize,
    pub c_d: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryOutcome {
    pub trials: Vec<TrialResult>,
    pub mean: f64,
    pub std: f64,
    /// `mean / ε`.
    pub ratio: f64,
    /// `d ρ_max^{1/d} ε`.
    pub pde_bound: f64,
    /// Sup over the tube of the constant-density solution with `ρ_max`.
    pub pde_sup: f64,
}

impl BoundaryOutcome {
    pub fn summary(&self) -> serde_json::Value {
        serde_json::json!({
            "mean": self.mean,
            "std": self.std,
            "ratio": self.ratio,
            "pde_bound": self.pde_bound,
            "pde_sup": self.pde_sup,
        })
    }
}

pub fn boundary_sup_experiment(cfg: &BoundaryConfig) -> Result<BoundaryOutcome> {
    if !(cfg.eps > 0.0 && cfg.eps <= cfg.radius) {
        return Err(invalid("eps", "need 0 < ε ≤ R"));
    }
    check_trials(cfg.trials, 1)?;
    let domain = MaskedDomain::unit(cfg.radius)?;
    let consts = scaling_for(cfg.d, cfg.c_d)?;
    let d = cfg.d as f64;
    let rho_max = cfg.density.rho_max();
    let tube = Region::Tube {
        domain,
        width: cfg.eps,
    };
    let jobs = ladder_jobs(cfg.seed, "boundary", &[cfg.n], cfg.trials);
    let trials = run_ordered(cfg.threads, &jobs, |job| {
        let cloud = sample_poisson(&cfg.density, &SampleConfig::poisson_unit(cfg.d, job.n, job.seed)?)?;
        let stat = scale_factor(job.n, &consts) * longest_chain_in(&cloud, &tube) as f64;
        Ok(to_trial(job, stat))
    })?;
    let vals: Vec<f64> = trials.iter().map(|t| t.statistic).collect();
    let (mean, std) = mean_std(&vals);

    // The constant solution is maximal on the outer surface G = R + ε; probe
    // it along a family of points there.
    let outer = cfg.radius + cfg.eps;
    let mut pde_sup = 0.0f64;
    for k in 0..=64 {
        let t = outer.powf(d) + (1.0 - outer.powf(d)) * k as f64 / 64.0;
        let mut x = vec![1.0; cfg.d];
        x[0] = t;
        let rest = (outer.powf(d) / t).powf(1.0 / (d - 1.0));
        for c in x.iter_mut().skip(1) {
            *c = rest;
        }
        pde_sup = pde_sup.max(exact_constant_solution(rho_max, cfg.radius, &x)?);
    }
    Ok(BoundaryOutcome {
        trials,
        mean,
        std,
        ratio: mean / cfg.eps,
        pde_bound: d * rho_max.powf(1.0 / d) * cfg.eps,
        pde_sup,
    })
}

/// Seconds elapsed since `start`, for summaries.
pub fn wall_time(start: Instant) -> f64 {
    start.elapsed().as_secs_f64()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fit_examples() {
        let xs = [1.0, 10.0, 100.0, 1000.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| x.powf(-0.25)).collect();
        let f = fit_loglog(&xs, &ys).unwrap();
        assert!((f.slope + 0.25).abs() < 1e-12);
        assert!((f.r2 - 1.0).abs() < 1e-12);
        let f = fit_loglog(&xs, &[2.0; 4]).unwrap();
        assert!(f.slope.abs() < 1e-12);
        assert!(fit_loglog(&xs, &[1.0, 0.0, 1.0, 1.0]).is_err());
        assert!(fit_loglog(&xs[..2], &ys[..2]).is_err());
    }

    #[test]
    fn theory_exponents_for_the_plane() {
        let (a, b) = full_domain_theory_exponents(2);
        assert!((a - 1.0 / 31.0).abs() < 1e-15);
        assert!((b - 1.0 / 19.0).abs() < 1e-15);
    }

    #[test]
    fn cd_is_reproducible() {
        let cfg = CdConfig {
            d: 2,
            n: 2000,
            trials: 2,
            seed: 11,
            threads: 1,
        };
        assert_eq!(estimate_cd(&cfg).unwrap(), estimate_cd(&cfg).unwrap());
    }

    #[test]
    fn missing_chain_constant_is_reported() {
        let cfg = CellConfig {
            d: 3,
            rho0: 1.0,
            p: vec![1.0; 3],
            ns: vec![100, 200, 400],
            trials: 2,
            seed: 0,
            threads: 1,
            c_d: None,
        };
        assert!(cell_problem_experiment(&cfg).is_err());
    }

    #[test]
    fn mean_std_basic() {
        let (m, s) = mean_std(&[1.0, 2.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((s - 1.0).abs() < 1e-15);
    }
}

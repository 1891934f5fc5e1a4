//! Executes a resolved [`RunConfig`] and writes its artifacts.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use paretolab_core::experiments::*;
use paretolab_core::geometry::cover_boundary_tube;
use paretolab_core::regularity::semiconvexity_blowup_fit;
use paretolab_core::sampling::rng_from_seed;
use paretolab_core::*;
use rand::Rng;
use serde_json::{json, Value};

use crate::config::{default_out_dir, require, Command, Params, RunConfig};
use crate::error::{CliError, CliResult};
use crate::plot::{emit_plot, PlotStyle, Series};

/// Files written by a run and its summary.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub out_dir: PathBuf,
    pub files: Vec<PathBuf>,
    pub summary: Value,
}

const DEFAULT_TRIALS: u64 = 10;
const DEFAULT_CD_TRIALS: u64 = 10;
const DEFAULT_COVER_POINTS: u64 = 10_000;

/// Fills defaults and checks that every key the command needs is present
/// and in range.
pub fn resolve(mut cfg: RunConfig) -> CliResult<RunConfig> {
    let p = &mut cfg.params;
    p.seed.get_or_insert(0);
    p.threads.get_or_insert(0);
    if p.out.is_none() {
        p.out = Some(default_out_dir());
    }
    let samples_cloud = matches!(cfg.command, Command::Sort | Command::Depth | Command::Chain);
    if samples_cloud && p.input.is_some() {
        if let Some(k) = [("n", p.n.is_some()), ("density", p.density.is_some())]
            .iter()
            .find(|k| k.1)
        {
            return Err(CliError::invalid(k.0, "not used together with input"));
        }
    } else {
        let d = require(&p.d, "d")?;
        if d < 2 {
            return Err(CliError::invalid("d", "must be at least 2"));
        }
    }
    let uses_density =
        !matches!(cfg.command, Command::Cd | Command::CoverCheck) && !(samples_cloud && p.input.is_some());
    if uses_density {
        p.density.get_or_insert_with(|| "constant".into());
        p.rho0.get_or_insert(1.0);
    }
    match cfg.command {
        Command::Sort | Command::Chain | Command::Depth => {
            if p.input.is_none() {
                require(&p.n, "n")?;
            }
            if cfg.command == Command::Depth {
                check_grid(p)?;
            }
            if let Some(r) = p.radius {
                check_radius(r)?;
            }
        }
        Command::Cd => {
            require(&p.n, "n")?;
            p.trials.get_or_insert(20);
            check_trials(p, 2)?;
        }
        Command::Cell => {
            require(&p.ns, "ns")?;
            let d = p.d.unwrap_or(2);
            p.p.get_or_insert_with(|| vec![1.0; d]);
            p.trials.get_or_insert(DEFAULT_TRIALS);
            check_trials(p, 2)?;
            cd_defaults(p);
        }
        Command::Solve => {
            check_grid(p)?;
            if let Some(r) = p.radius {
                check_radius(r)?;
            }
        }
        Command::Rates | Command::RatesFull => {
            if cfg.command == Command::Rates {
                check_radius(require(&p.radius, "R")?)?;
            } else if p.radius.is_some_and(|r| r != 0.0) {
                return Err(CliError::invalid("R", "the full-box experiment has no corner"));
            }
            require(&p.ns, "ns")?;
            check_grid(p)?;
            p.trials.get_or_insert(DEFAULT_TRIALS);
            check_trials(p, 2)?;
            cd_defaults(p);
        }
        Command::Semiconvexity => {
            check_grid(p)?;
            let radii = require(&p.radii, "radii")?;
            if radii.len() < 3 || radii.windows(2).any(|w| w[1] >= w[0]) {
                return Err(CliError::invalid(
                    "radii",
                    "need at least three strictly decreasing values",
                ));
            }
        }
        Command::Boundary => {
            let r = require(&p.radius, "R")?;
            check_radius(r)?;
            let eps = require(&p.eps, "eps")?;
            if !(eps > 0.0 && eps <= r) {
                return Err(CliError::invalid("eps", "need 0 < eps <= R"));
            }
            require(&p.n, "n")?;
            p.trials.get_or_insert(DEFAULT_TRIALS);
            check_trials(p, 1)?;
            cd_defaults(p);
        }
        Command::CoverCheck => {
            let eps = require(&p.eps, "eps")?;
            if !(eps > 0.0) {
                return Err(CliError::invalid("eps", "must be positive"));
            }
            let d = p.d.unwrap_or(2);
            p.p.get_or_insert_with(|| vec![1.0; d]);
            p.n.get_or_insert(DEFAULT_COVER_POINTS);
            if let Some(r) = p.radius {
                check_radius(r)?;
                if eps > r {
                    return Err(CliError::invalid("eps", "the tube needs eps <= R"));
                }
            }
        }
    }
    Ok(cfg)
}

fn check_grid(p: &Params) -> CliResult<()> {
    if require(&p.grid, "grid")? < 2 {
        return Err(CliError::invalid("grid", "need at least 2 cells"));
    }
    Ok(())
}

fn check_radius(r: f64) -> CliResult<()> {
    if !(r > 0.0 && r <= 0.5) {
        return Err(CliError::invalid("R", "must lie in (0, 0.5]"));
    }
    Ok(())
}

fn check_trials(p: &Params, min: u64) -> CliResult<()> {
    if p.trials.unwrap_or(0) < min {
        return Err(CliError::invalid("trials", format!("need at least {min}")));
    }
    Ok(())
}

fn cd_defaults(p: &mut Params) {
    if p.d.unwrap_or(2) >= 3 && p.c_d.is_none() {
        p.cd_trials.get_or_insert(DEFAULT_CD_TRIALS);
    }
}

fn density(p: &Params, d: usize) -> CliResult<DensityField> {
    let base = p.rho0.unwrap_or(1.0);
    let name = p.density.as_deref().unwrap_or("constant");
    let field = match name {
        "constant" => DensityField::constant(d, base)?,
        "affine" => {
            let slope = require(&p.slope, "slope")?;
            if slope.len() != d {
                return Err(CliError::invalid("slope", format!("need {d} entries")));
            }
            DensityField::affine(d, base, slope)?
        }
        "bump" => DensityField::new(
            d,
            1.0,
            DensityKind::Bump {
                base,
                amplitude: require(&p.amplitude, "amplitude")?,
                center: p.center.clone().unwrap_or_else(|| vec![0.5; d]),
                width: require(&p.width, "width")?,
            },
        )?,
        other => {
            return Err(CliError::invalid(
                "density",
                format!("unknown density '{other}' (constant, affine, bump)"),
            ))
        }
    };
    Ok(field)
}

/// Resolves, runs and writes `config.echo.json` plus the command's outputs.
pub fn execute(cfg: RunConfig) -> CliResult<RunReport> {
    let cfg = resolve(cfg)?;
    let out = cfg.params.out.clone().expect("resolved");
    std::fs::create_dir_all(&out)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", out.display())))?;
    let echo = out.join("config.echo.json");
    std::fs::write(&echo, cfg.to_json() + "\n")?;
    let start = Instant::now();
    let mut report = RunReport {
        out_dir: out.clone(),
        files: vec![echo],
        summary: Value::Null,
    };
    let p = &cfg.params;
    let mut summary = match cfg.command {
        Command::Sort => run_sort(p, &mut report)?,
        Command::Depth => run_depth(p, &mut report)?,
        Command::Chain => run_chain(p, &mut report)?,
        Command::Cd => run_cd(p, &mut report)?,
        Command::Cell => run_cell(p, &mut report)?,
        Command::Solve => run_solve(p, &mut report)?,
        Command::Rates => run_rates(p, false, &mut report)?,
        Command::RatesFull => run_rates(p, true, &mut report)?,
        Command::Semiconvexity => run_semiconvexity(p, &mut report)?,
        Command::Boundary => run_boundary(p, &mut report)?,
        Command::CoverCheck => run_cover_check(p, &mut report)?,
    };
    summary["wall_seconds"] = json!(start.elapsed().as_secs_f64());
    let name = cfg.command.name();
    let path = out.join(format!("{name}.summary.json"));
    std::fs::write(
        &path,
        serde_json::to_string_pretty(&summary).expect("json") + "\n",
    )?;
    report.files.push(path);
    report.summary = summary;
    Ok(report)
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

fn write_csv(
    report: &mut RunReport,
    name: &str,
    body: impl FnOnce(&mut dyn Write) -> Result<()>,
) -> CliResult<()> {
    let path = report.out_dir.join(name);
    let mut w = create(&path)?;
    body(&mut w)?;
    w.flush()?;
    report.files.push(path);
    Ok(())
}

/// Plots the series that can be drawn in `style`; log-log drops any series
/// with a nonpositive value and nothing is written if none remain.
fn plot(report: &mut RunReport, name: &str, series: Vec<Series>, style: PlotStyle) -> CliResult<()> {
    let series: Vec<Series> = series
        .into_iter()
        .filter(|s| style == PlotStyle::Linear || s.points.iter().all(|&(x, y)| x > 0.0 && y > 0.0))
        .collect();
    if series.is_empty() {
        return Ok(());
    }
    let path = report.out_dir.join(name);
    emit_plot(&series, style, &path)?;
    report.files.push(path);
    Ok(())
}

fn load_cloud(p: &Params) -> CliResult<PointCloud> {
    match &p.input {
        Some(path) => {
            let f =
                File::open(path).map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
            let cloud = PointCloud::read_csv(BufReader::new(f))?;
            if let Some(d) = p.d {
                if d != cloud.dim() {
                    return Err(CliError::invalid(
                        "d",
                        format!("input has dimension {}", cloud.dim()),
                    ));
                }
            }
            Ok(cloud)
        }
        None => {
            let d = require(&p.d, "d")?;
            let cfg = SampleConfig::poisson_unit(d, require(&p.n, "n")?, p.seed.unwrap_or(0))?;
            Ok(sample_poisson(&density(p, d)?, &cfg)?)
        }
    }
}

fn run_sort(p: &Params, report: &mut RunReport) -> CliResult<Value> {
    let cloud = load_cloud(p)?;
    let depths = pareto_depths(&cloud)?;
    let fronts = nondominated_sort(&cloud)?;
    write_csv(report, "labels.csv", |w| {
        paretolab_core::chains::write_labels_csv(w, &cloud, &depths, &fronts)
    })?;
    Ok(json!({
        "points": cloud.len(),
        "fronts": fronts.fronts.len(),
        "front_sizes": fronts.fronts.iter().map(Vec::len).collect::<Vec<_>>(),
    }))
}

fn run_chain(p: &Params, report: &mut RunReport) -> CliResult<Value> {
    let cloud = load_cloud(p)?;
    let region = match p.radius {
        Some(r) => Region::Masked(MaskedDomain::unit(r)?),
        None => Region::All,
    };
    let len = longest_chain_in(&cloud, &region);
    let d = cloud.dim();
    let n = p.n.map(|n| n as f64).unwrap_or(cloud.len() as f64).max(1.0);
    let normalized = len as f64 / n.powf(1.0 / d as f64);
    write_csv(report, "chain.csv", |w| {
        writeln!(w, "points,longest_chain,normalized")?;
        writeln!(w, "{},{len},{normalized:.16e}", cloud.len())?;
        Ok(())
    })?;
    Ok(json!({"points": cloud.len(), "longest_chain": len, "normalized": normalized}))
}

fn run_depth(p: &Params, report: &mut RunReport) -> CliResult<Value> {
    let cloud = load_cloud(p)?;
    let grid = Grid::unit(cloud.dim(), require(&p.grid, "grid")? + 1)?;
    let depth = match p.radius {
        Some(r) => depth_on_grid_masked(&cloud, &grid, &MaskedDomain::unit(r)?)?,
        None => depth_on_grid(&cloud, &grid)?,
    };
    write_csv(report, "depth.csv", |w| depth.write_csv(w))?;
    let max = depth.values().iter().cloned().fold(0.0, f64::max);
    Ok(json!({"points": cloud.len(), "nodes": grid.len(), "max_depth": max}))
}

fn run_cd(p: &Params, report: &mut RunReport) -> CliResult<Value> {
    let est = estimate_cd(&CdConfig {
        d: require(&p.d, "d")?,
        n: require(&p.n, "n")?,
        trials: require(&p.trials, "trials")?,
        seed: p.seed.unwrap_or(0),
        threads: p.threads.unwrap_or(0),
    })?;
    write_csv(report, "cd.csv", |w| write_trials_csv(w, &est.trials))?;
    Ok(est.summary())
}

/// `c_d` from the config, or estimated at the largest intensity for `d ≥ 3`.
fn chain_constant(p: &Params, n: u64) -> CliResult<(Option<f64>, Value)> {
    let d = require(&p.d, "d")?;
    if d == 2 || p.c_d.is_some() {
        return Ok((p.c_d, json!(p.c_d)));
    }
    let est = estimate_cd(&CdConfig {
        d,
        n,
        trials: p.cd_trials.unwrap_or(DEFAULT_CD_TRIALS),
        seed: substream_seed(p.seed.unwrap_or(0), 0, "c_d"),
        threads: p.threads.unwrap_or(0),
    })?;
    Ok((Some(est.estimate), est.summary()))
}

fn run_cell(p: &Params, report: &mut RunReport) -> CliResult<Value> {
    let ns = require(&p.ns, "ns")?;
    let (c_d, cd_info) = chain_constant(p, *ns.last().expect("nonempty"))?;
    let out = cell_problem_experiment(&CellConfig {
        d: require(&p.d, "d")?,
        rho0: p.rho0.unwrap_or(1.0),
        p: require(&p.p, "p")?,
        ns: ns.clone(),
        trials: require(&p.trials, "trials")?,
        seed: p.seed.unwrap_or(0),
        threads: p.threads.unwrap_or(0),
        c_d,
    })?;
    write_csv(report, "cell.csv", |w| write_trials_csv(w, &out.trials))?;
    let xs: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
    let bias: Vec<f64> = out.means.iter().map(|m| (m - out.limit).abs()).collect();
    let series = vec![
        Series::new("std", &xs, &out.stds),
        Series::new("|mean - limit|", &xs, &bias),
    ];
    plot(report, "cell.svg", series, PlotStyle::LogLog)?;
    let mut summary = out.summary();
    summary["c_d"] = cd_info;
    Ok(summary)
}

fn run_solve(p: &Params, report: &mut RunReport) -> CliResult<Value> {
    let d = require(&p.d, "d")?;
    let grid = Grid::unit(d, require(&p.grid, "grid")? + 1)?;
    let rho = density(p, d)?;
    let constant = rho.is_constant().then(|| rho.rho_max());
    let spec = match p.radius {
        Some(r) => SolveSpec::masked(rho, MaskedDomain::unit(r)?),
        None => SolveSpec::unmasked(rho),
    };
    let u = solve_hj(&spec, &grid)?;
    write_csv(report, "solve.csv", |w| u.write_csv(w))?;
    let r = p.radius.unwrap_or(0.0);
    let error = match constant {
        Some(rho0) => {
            let mut err = 0.0f64;
            let mut failure = None;
            grid.for_each_node(|flat, x| {
                if geometric_mean(x) > r {
                    match exact_constant_solution(rho0, r, x) {
                        Ok(v) => err = err.max((u.values()[flat] - v).abs()),
                        Err(e) => failure = Some(e),
                    }
                }
            });
            if let Some(e) = failure {
                return Err(e.into());
            }
            Some(err)
        }
        None => None,
    };
    let max = u.values().iter().cloned().fold(0.0, f64::max);
    Ok(json!({"nodes": grid.len(), "spacing": grid.spacing(), "max": max, "sup_error_vs_exact": error}))
}

fn run_rates(p: &Params, full: bool, report: &mut RunReport) -> CliResult<Value> {
    let d = require(&p.d, "d")?;
    let ns = require(&p.ns, "ns")?;
    let (c_d, cd_info) = chain_constant(p, *ns.last().expect("nonempty"))?;
    let cfg = RateConfig {
        d,
        radius: if full { 0.0 } else { require(&p.radius, "R")? },
        density: density(p, d)?,
        ns: ns.clone(),
        trials: require(&p.trials, "trials")?,
        grid_nodes: require(&p.grid, "grid")? + 1,
        seed: p.seed.unwrap_or(0),
        threads: p.threads.unwrap_or(0),
        c_d,
    };
    let out = if full {
        full_domain_rate_experiment(&cfg)?
    } else {
        rate_experiment(&cfg)?
    };
    let stem = if full { "rates-full" } else { "rates" };
    write_csv(report, &format!("{stem}.csv"), |w| out.write_csv(w))?;
    if let Some(field) = &out.deviation {
        write_csv(report, "deviation.csv", |w| field.write_csv(w))?;
    }
    let xs: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
    let series = vec![
        Series::new("sup (u_n - u)+", &xs, &out.upper.means),
        Series::new("sup (u - u_n)+", &xs, &out.lower.means),
    ];
    plot(report, &format!("{stem}.svg"), series, PlotStyle::LogLog)?;
    let mut summary = out.summary();
    summary["c_d"] = cd_info;
    Ok(summary)
}

fn run_semiconvexity(p: &Params, report: &mut RunReport) -> CliResult<Value> {
    let d = require(&p.d, "d")?;
    let grid = Grid::unit(d, require(&p.grid, "grid")? + 1)?;
    let fit = semiconvexity_blowup_fit(&density(p, d)?, &require(&p.radii, "radii")?, &grid)?;
    write_csv(report, "semiconvexity.csv", |w| fit.write_csv(w))?;
    plot(
        report,
        "semiconvexity.svg",
        vec![Series::new("semiconvexity constant", &fit.radii, &fit.constants)],
        PlotStyle::LogLog,
    )?;
    let mut summary = fit.summary_json();
    summary["constants"] = json!(fit.constants);
    summary["samples"] = json!(fit.samples);
    Ok(summary)
}

fn run_boundary(p: &Params, report: &mut RunReport) -> CliResult<Value> {
    let d = require(&p.d, "d")?;
    let n = require(&p.n, "n")?;
    let (c_d, cd_info) = chain_constant(p, n)?;
    let out = boundary_sup_experiment(&BoundaryConfig {
        d,
        radius: require(&p.radius, "R")?,
        eps: require(&p.eps, "eps")?,
        density: density(p, d)?,
        n,
        trials: require(&p.trials, "trials")?,
        seed: p.seed.unwrap_or(0),
        threads: p.threads.unwrap_or(0),
        c_d,
    })?;
    write_csv(report, "boundary.csv", |w| write_trials_csv(w, &out.trials))?;
    let mut summary = out.summary();
    summary["c_d"] = cd_info;
    Ok(summary)
}

fn run_cover_check(p: &Params, report: &mut RunReport) -> CliResult<Value> {
    let d = require(&p.d, "d")?;
    let eps = require(&p.eps, "eps")?;
    let points = require(&p.n, "n")?;
    let sides = require(&p.p, "p")?;
    if sides.len() != d {
        return Err(CliError::invalid("p", format!("need {d} entries")));
    }
    let simplex = Simplex::new(Point::splat(d, 1.0)?, sides)?;
    let cover = cover_simplex(&simplex, eps)?;
    let mut rng = rng_from_seed(p.seed.unwrap_or(0));
    let mut hits = 0u64;
    for _ in 0..points {
        let x = simplex.map_from_unit(&unit_simplex(&mut rng, d));
        if cover.covers(&x) {
            hits += 1;
        }
    }
    let simplex_rate = hits as f64 / points as f64;
    let mut rows = vec![("simplex", cover.len(), simplex_rate)];
    let mut summary = json!({
        "simplex": {"rects": cover.len(), "hit_rate": simplex_rate, "points": points},
    });
    if let Some(r) = p.radius {
        let tube = cover_boundary_tube(r, eps, d)?;
        let dom = MaskedDomain::unit(r)?;
        let mut inside = 0u64;
        let mut covered = 0u64;
        while inside < points {
            let x = unit_cube(&mut rng, d);
            let g = geometric_mean(&x);
            if dom.contains(&x) && g <= r + eps {
                inside += 1;
                if tube.covers(&x) {
                    covered += 1;
                }
            }
        }
        let rate = covered as f64 / inside as f64;
        rows.push(("tube", tube.len(), rate));
        summary["tube"] = json!({"rects": tube.len(), "hit_rate": rate, "points": inside});
    }
    write_csv(report, "cover.csv", |w| {
        writeln!(w, "kind,eps,rects,hit_rate")?;
        for (kind, count, rate) in &rows {
            writeln!(w, "{kind},{eps:.16e},{count},{rate:.16e}")?;
        }
        Ok(())
    })?;
    Ok(summary)
}

fn unit_cube(rng: &mut impl Rng, d: usize) -> Vec<f64> {
    (0..d).map(|_| rng.random::<f64>()).collect()
}

/// Uniform on `{u ≥ 0, Σu ≤ 1}` via sorted uniform spacings.
fn unit_simplex(rng: &mut impl Rng, d: usize) -> Vec<f64> {
    let mut cuts: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
    cuts.sort_by(f64::total_cmp);
    let mut prev = 0.0;
    cuts.iter()
        .map(|&c| {
            let gap = c - prev;
            prev = c;
            gap
        })
        .collect()
}

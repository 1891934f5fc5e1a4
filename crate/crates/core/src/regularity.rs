//! Inf-convolution, discrete semiconvexity / semiconcavity and Lipschitz
//! constants of grid functions, and the boundary blow-up fit of the
//! semiconvexity constant.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::density::DensityField;
use crate::error::{invalid, Error, Result};
use crate::experiments::fit_loglog;
use crate::geometry::{geometric_mean, MaskedDomain, Point};
use crate::grid::{Grid, GridFunction};
use crate::hj::{solve_hj, SolveSpec};

/// Cells excluded next to the curved boundary when measuring on `Ω_R`.
pub const BOUNDARY_MARGIN_CELLS: f64 = 2.0;

/// Minimum tube resolution `R^d M^{1−d} / h` for a blow-up fit.
pub const MIN_NODES_ACROSS: f64 = 8.0;

/// Worst centered second difference found over a set of offsets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SecondDifferenceReport {
    /// `max(0, max −(f(x+h) − 2f(x) + f(x−h)) / |h|²)`.
    pub worst_value: f64,
    pub arg_x: Point,
    pub arg_h: Vec<f64>,
    /// Number of admissible `(x, h)` pairs examined.
    pub samples: usize,
}

/// Semiconvexity constants of the solution on `Ω_R` over decreasing radii.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlowupFit {
    pub radii: Vec<f64>,
    pub constants: Vec<f64>,
    pub samples: Vec<usize>,
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    /// `−(2d − 1)`.
    pub theory_slope: f64,
}

impl BlowupFit {
    /// Columns `R, constant, samples`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "R,constant,samples")?;
        for ((r, c), s) in self.radii.iter().zip(&self.constants).zip(&self.samples) {
            writeln!(w, "{r:.16e},{c:.16e},{s}")?;
        }
        Ok(())
    }

    pub fn summary_json(&self) -> serde_json::Value {
        serde_json::json!({
            "slope": self.slope,
            "intercept": self.intercept,
            "r2": self.r2,
            "theory_slope": self.theory_slope,
        })
    }
}

/// Exact inf-convolution `min_y f(y) + |x − y|² / (2α)` by scanning all node
/// pairs, together with a minimizing node for every `x`.
pub fn inf_convolution_brute(f: &GridFunction, alpha: f64) -> Result<(GridFunction, Vec<usize>)> {
    check_alpha(alpha)?;
    let grid = *f.grid();
    let n = grid.len();
    let d = grid.dim();
    let coords: Vec<f64> = {
        let mut c = vec![0.0; n * d];
        grid.for_each_node(|flat, x| c[flat * d..(flat + 1) * d].copy_from_slice(x));
        c
    };
    let scale = 1.0 / (2.0 * alpha);
    let vals = f.values();
    let (out, arg): (Vec<f64>, Vec<usize>) = (0..n)
        .into_par_iter()
        .map(|i| {
            let xi = &coords[i * d..(i + 1) * d];
            let mut best = f64::INFINITY;
            let mut best_j = i;
            for j in 0..n {
                let yj = &coords[j * d..(j + 1) * d];
                let r2: f64 = xi.iter().zip(yj).map(|(a, b)| (a - b) * (a - b)).sum();
                let v = vals[j] + r2 * scale;
                if v < best {
                    best = v;
                    best_j = j;
                }
            }
            (best, best_j)
        })
        .unzip();
    Ok((GridFunction::from_values(grid, out)?, arg))
}

/// Inf-convolution by successive one-dimensional lower envelopes of
/// parabolas along every axis, with a minimizing node for every `x`.
pub fn inf_convolution_with_argmin(f: &GridFunction, alpha: f64) -> Result<(GridFunction, Vec<usize>)> {
    check_alpha(alpha)?;
    let grid = *f.grid();
    let m = grid.nodes();
    let coords: Vec<f64> = (0..m).map(|i| grid.coord(i)).collect();
    let scale = 1.0 / (2.0 * alpha);
    let mut values = f.values().to_vec();
    let mut source: Vec<usize> = (0..values.len()).collect();
    let mut line_v = vec![0.0; m];
    let mut line_s = vec![0usize; m];
    let mut env = Envelope::new(m);
    for &stride in &grid.strides() {
        for start in 0..values.len() {
            if (start / stride) % m != 0 {
                continue;
            }
            for i in 0..m {
                line_v[i] = values[start + i * stride];
                line_s[i] = source[start + i * stride];
            }
            env.run(&coords, &line_v, scale);
            for q in 0..m {
                let p = env.winner[q];
                let dx = coords[q] - coords[p];
                values[start + q * stride] = line_v[p] + dx * dx * scale;
                source[start + q * stride] = line_s[p];
            }
        }
    }
    Ok((GridFunction::from_values(grid, values)?, source))
}

/// Inf-convolution `u_α` of a grid function.
pub fn inf_convolution(f: &GridFunction, alpha: f64) -> Result<GridFunction> {
    inf_convolution_with_argmin(f, alpha).map(|(u, _)| u)
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(invalid("alpha", "must be positive"));
    }
    Ok(())
}

/// Lower envelope of the parabolas `f_p + c (x − x_p)²` on a sorted node set.
struct Envelope {
    hull: Vec<usize>,
    breaks: Vec<f64>,
    winner: Vec<usize>,
}

impl Envelope {
    fn new(m: usize) -> Self {
        Self {
            hull: Vec::with_capacity(m),
            breaks: Vec::with_capacity(m + 1),
            winner: vec![0; m],
        }
    }

    fn run(&mut self, xs: &[f64], f: &[f64], c: f64) {
        let m = xs.len();
        self.hull.clear();
        self.breaks.clear();
        self.hull.push(0);
        self.breaks.push(f64::NEG_INFINITY);
        let meet = |p: usize, q: usize| -> f64 {
            ((f[q] + c * xs[q] * xs[q]) - (f[p] + c * xs[p] * xs[p])) / (2.0 * c * (xs[q] - xs[p]))
        };
        for q in 1..m {
            loop {
                let p = *self.hull.last().unwrap();
                let s = meet(p, q);
                if s <= *self.breaks.last().unwrap() && self.hull.len() > 1 {
                    self.hull.pop();
                    self.breaks.pop();
                } else {
                    self.hull.push(q);
                    self.breaks.push(s);
                    break;
                }
            }
        }
        let mut k = 0;
        for q in 0..m {
            while k + 1 < self.hull.len() && self.breaks[k + 1] < xs[q] {
                k += 1;
            }
            // Envelope breakpoints are computed in floating point; compare the
            // neighbors directly to get the exact minimum among them.
            let mut best = self.hull[k];
            let val = |p: usize| f[p] + c * (xs[q] - xs[p]) * (xs[q] - xs[p]);
            let mut best_v = val(best);
            for &alt in [k.checked_sub(1), Some(k + 1)].iter().flatten() {
                if let Some(&p) = self.hull.get(alt) {
                    let v = val(p);
                    if v < best_v {
                        best_v = v;
                        best = p;
                    }
                }
            }
            self.winner[q] = best;
        }
    }
}

/// Grid offsets `k e_i` and `k (e_i ± e_j)` for `k ∈ {1, 2, 4}`, in node units.
pub fn default_offsets(d: usize) -> Vec<Vec<isize>> {
    let mut out = Vec::new();
    for k in [1isize, 2, 4] {
        for i in 0..d {
            let mut e = vec![0; d];
            e[i] = k;
            out.push(e);
        }
        for i in 0..d {
            for j in i + 1..d {
                for sign in [1isize, -1] {
                    let mut e = vec![0; d];
                    e[i] = k;
                    e[j] = sign * k;
                    out.push(e);
                }
            }
        }
    }
    out
}

/// Worst semiconvexity ratio of `f` over nodes `x` with `x`, `x ± h` all in
/// `domain`, for the given node offsets.
pub fn semiconvexity_constant(
    f: &GridFunction,
    domain: impl Fn(&[f64]) -> bool + Sync,
    offsets: &[Vec<isize>],
) -> Result<SecondDifferenceReport> {
    second_difference_scan(f, &domain, offsets, 1.0)
}

/// Semiconcavity constant: the semiconvexity constant of `−f`.
pub fn semiconcavity_constant(
    f: &GridFunction,
    domain: impl Fn(&[f64]) -> bool + Sync,
    offsets: &[Vec<isize>],
) -> Result<SecondDifferenceReport> {
    second_difference_scan(f, &domain, offsets, -1.0)
}

fn second_difference_scan(
    f: &GridFunction,
    domain: &(impl Fn(&[f64]) -> bool + Sync),
    offsets: &[Vec<isize>],
    sign: f64,
) -> Result<SecondDifferenceReport> {
    let grid = *f.grid();
    let d = grid.dim();
    let m = grid.nodes() as isize;
    let h = grid.spacing();
    if offsets.iter().any(|o| o.len() != d || o.iter().all(|&k| k == 0)) {
        return Err(invalid("offsets", "need nonzero offsets of the grid dimension"));
    }
    let inside: Vec<bool> = {
        let mut v = vec![false; grid.len()];
        grid.for_each_node(|flat, x| v[flat] = domain(x));
        v
    };
    let strides: Vec<isize> = grid.strides().iter().map(|&s| s as isize).collect();
    let vals = f.values();

    #[derive(Clone, Copy)]
    struct Best {
        ratio: f64,
        node: usize,
        offset: usize,
        samples: usize,
    }
    let merge = |a: Best, b: Best| -> Best {
        let samples = a.samples + b.samples;
        let pick = if b.ratio > a.ratio || (b.ratio == a.ratio && (b.node, b.offset) < (a.node, a.offset)) {
            b
        } else {
            a
        };
        Best { samples, ..pick }
    };
    let empty = Best {
        ratio: f64::NEG_INFINITY,
        node: usize::MAX,
        offset: 0,
        samples: 0,
    };
    let best = (0..grid.len())
        .into_par_iter()
        .fold(
            || empty,
            |mut acc, flat| {
                if !inside[flat] {
                    return acc;
                }
                let mut idx = vec![0usize; d];
                grid.unflatten(flat, &mut idx);
                for (oi, off) in offsets.iter().enumerate() {
                    let mut ok = true;
                    let mut delta = 0isize;
                    for k in 0..d {
                        let i = idx[k] as isize;
                        if i + off[k] < 0 || i + off[k] >= m || i - off[k] < 0 || i - off[k] >= m {
                            ok = false;
                            break;
                        }
                        delta += off[k] * strides[k];
                    }
                    if !ok {
                        continue;
                    }
                    let plus = (flat as isize + delta) as usize;
                    let minus = (flat as isize - delta) as usize;
                    if !inside[plus] || !inside[minus] {
                        continue;
                    }
                    let norm2 = off.iter().map(|&k| (k * k) as f64).sum::<f64>() * h * h;
                    let second = sign * (vals[plus] - 2.0 * vals[flat] + vals[minus]);
                    let cand = Best {
                        ratio: -second / norm2,
                        node: flat,
                        offset: oi,
                        samples: 1,
                    };
                    acc = merge(acc, cand);
                }
                acc
            },
        )
        .reduce(|| empty, merge);
    if best.samples == 0 {
        return Err(Error::NoAdmissiblePair);
    }
    let mut x = vec![0.0; d];
    grid.node_coords(best.node, &mut x);
    Ok(SecondDifferenceReport {
        worst_value: best.ratio.max(0.0),
        arg_x: Point::new(x)?,
        arg_h: offsets[best.offset].iter().map(|&k| k as f64 * h).collect(),
        samples: best.samples,
    })
}

/// Max over axis-adjacent node pairs inside `domain` of `|Δf| / h`.
pub fn lipschitz_constant(f: &GridFunction, domain: impl Fn(&[f64]) -> bool) -> Result<f64> {
    Ok(axis_lipschitz_constants(f, domain)?
        .into_iter()
        .fold(0.0, f64::max))
}

/// Per-axis discrete Lipschitz constants over adjacent pairs inside `domain`.
pub fn axis_lipschitz_constants(f: &GridFunction, domain: impl Fn(&[f64]) -> bool) -> Result<Vec<f64>> {
    let grid = *f.grid();
    let d = grid.dim();
    let m = grid.nodes();
    let h = grid.spacing();
    let mut inside = vec![false; grid.len()];
    grid.for_each_node(|flat, x| inside[flat] = domain(x));
    let vals = f.values();
    let strides = grid.strides();
    let mut best = vec![0.0f64; d];
    let mut pairs = 0usize;
    for flat in 0..grid.len() {
        if !inside[flat] {
            continue;
        }
        for k in 0..d {
            if (flat / strides[k]) % m + 1 < m {
                let nb = flat + strides[k];
                if inside[nb] {
                    pairs += 1;
                    let slope = (vals[nb] - vals[flat]).abs() / h;
                    if slope > best[k] {
                        best[k] = slope;
                    }
                }
            }
        }
    }
    if pairs == 0 {
        return Err(Error::EmptyDomain);
    }
    Ok(best)
}

/// `G(x) > R + 2h` with `G` the geometric mean: the measurement region on `Ω_R`.
pub fn interior_with_margin(radius: f64, grid: &Grid) -> impl Fn(&[f64]) -> bool + Sync {
    let cut = radius + BOUNDARY_MARGIN_CELLS * grid.spacing();
    move |x: &[f64]| geometric_mean(x) > cut
}

/// Solves on `Ω_R` for every radius, measures the semiconvexity constant away
/// from the curved boundary, and fits `log C` against `log R`.
pub fn semiconvexity_blowup_fit(density: &DensityField, radii: &[f64], grid: &Grid) -> Result<BlowupFit> {
    if radii.len() < 2 {
        return Err(invalid("radii", "need at least two radii"));
    }
    if radii.windows(2).any(|w| w[1] >= w[0]) {
        return Err(invalid("radii", "must be strictly decreasing"));
    }
    let d = grid.dim();
    let side = grid.side();
    let h = grid.spacing();
    let smallest = *radii.last().unwrap();
    let across = smallest.powi(d as i32) / side.powi(d as i32 - 1) / h;
    if across < MIN_NODES_ACROSS {
        return Err(Error::GridTooCoarse(format!(
            "R = {smallest} leaves {across:.1} nodes across the boundary layer, need {MIN_NODES_ACROSS}"
        )));
    }
    let offsets = default_offsets(d);
    let reports: Vec<SecondDifferenceReport> = radii
        .par_iter()
        .map(|&r| {
            let mask = MaskedDomain::new(r, side)?;
            let u = solve_hj(&SolveSpec::masked(density.clone(), mask), grid)?;
            semiconvexity_constant(&u, interior_with_margin(r, grid), &offsets)
        })
        .collect::<Result<_>>()?;
    let constants: Vec<f64> = reports.iter().map(|r| r.worst_value).collect();
    if constants.iter().any(|&c| !(c > 0.0)) {
        return Err(Error::Numeric(format!(
            "nonpositive semiconvexity constant in {constants:?}"
        )));
    }
    let fit = fit_loglog(radii, &constants)?;
    Ok(BlowupFit {
        radii: radii.to_vec(),
        constants,
        samples: reports.iter().map(|r| r.samples).collect(),
        slope: fit.slope,
        intercept: fit.intercept,
        r2: fit.r2,
        theory_slope: -(2.0 * d as f64 - 1.0),
    })
}

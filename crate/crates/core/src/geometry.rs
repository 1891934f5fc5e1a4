//! Points under the coordinatewise partial order, the rounded-off domains
//! `Ω_{R,M}`, orthogonal simplices, and the rectangle covers used to bound
//! longest chains in simplices and in thin tubes around `∂_R Ω`.

use std::collections::HashSet;
use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Tolerance on the geometric mean when deciding surface membership.
pub const SURFACE_TOL: f64 = 1e-12;

/// A point in `ℝ^d`, `d ≥ 2`, with finite coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.len() < 2 {
            return Err(invalid("point", "dimension must be at least 2"));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(invalid("point", "coordinates must be finite"));
        }
        Ok(Point(coords))
    }

    pub fn splat(d: usize, value: f64) -> Result<Self> {
        Self::new(vec![value; d])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for Point {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl AsRef<[f64]> for Point {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// `x ≤ y` coordinatewise. No dimension check; see [`dominates`].
#[inline]
pub fn leq(x: &[f64], y: &[f64]) -> bool {
    x.iter().zip(y).all(|(a, b)| a <= b)
}

/// True iff `x_i ≤ y_i` for every coordinate.
pub fn dominates(x: &[f64], y: &[f64]) -> Result<bool> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    Ok(leq(x, y))
}

/// `(x_1 ⋯ x_d)^{1/d}`, computed in log space for nonnegative input.
#[inline]
pub fn geometric_mean(x: &[f64]) -> f64 {
    if x.iter().any(|&c| c <= 0.0) {
        return 0.0;
    }
    let d = x.len() as f64;
    (x.iter().map(|c| c.ln()).sum::<f64>() / d).exp()
}

/// The rounded-off box `Ω_{R,M} = {x ∈ [0,M]^d : (x_1⋯x_d)^{1/d} > R}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaskedDomain {
    radius: f64,
    side: f64,
}

impl MaskedDomain {
    pub fn new(radius: f64, side: f64) -> Result<Self> {
        if !(radius.is_finite() && radius >= 0.0) {
            return Err(invalid("R", "must be finite and nonnegative"));
        }
        if !(side.is_finite() && side > 0.0) {
            return Err(invalid("M", "must be finite and positive"));
        }
        if radius >= side {
            return Err(invalid("R", format!("R = {radius} must be below M = {side}")));
        }
        Ok(Self { radius, side })
    }

    /// `Ω_R` inside the unit box.
    pub fn unit(radius: f64) -> Result<Self> {
        Self::new(radius, 1.0)
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn side(&self) -> f64 {
        self.side
    }

    pub fn in_box(&self, x: &[f64]) -> bool {
        x.iter().all(|&c| (0.0..=self.side).contains(&c))
    }

    /// Strict membership: inside the box and geometric mean `> R`.
    pub fn contains(&self, x: &[f64]) -> bool {
        self.in_box(x) && geometric_mean(x) > self.radius
    }

    /// Closed domain membership, surface included up to [`SURFACE_TOL`].
    pub fn closed_contains(&self, x: &[f64]) -> bool {
        self.in_box(x) && geometric_mean(x) >= self.radius - SURFACE_TOL
    }

    pub fn on_surface(&self, x: &[f64]) -> bool {
        self.in_box(x) && (geometric_mean(x) - self.radius).abs() <= SURFACE_TOL
    }
}

/// Axis-aligned closed box `[lower, upper]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Rect {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch {
                expected: lower.len(),
                got: upper.len(),
            });
        }
        if lower.iter().zip(&upper).any(|(l, u)| !(l < u)) {
            return Err(invalid("rect", "lower corner must be strictly below upper"));
        }
        Ok(Self { lower, upper })
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        leq(&self.lower, x) && leq(x, &self.upper)
    }

    pub fn contains_rect(&self, other: &Rect) -> bool {
        leq(&self.lower, &other.lower) && leq(&other.upper, &self.upper)
    }

    pub fn measure(&self) -> f64 {
        self.lower.iter().zip(&self.upper).map(|(l, u)| u - l).product()
    }
}

/// A finite family of rectangles.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RectCollection {
    pub rects: Vec<Rect>,
}

impl RectCollection {
    pub fn len(&self) -> usize {
        self.rects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rects.is_empty()
    }

    pub fn covers(&self, x: &[f64]) -> bool {
        self.rects.iter().any(|r| r.contains(x))
    }

    pub fn find_containing(&self, target: &Rect) -> Option<&Rect> {
        self.rects.iter().find(|r| r.contains_rect(target))
    }
}

/// Orthogonal simplex `S_{y,p} = {x ≤ y : 1 + (x − y)·p^{-1} ≥ 0}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Simplex {
    apex: Point,
    sides: Vec<f64>,
}

impl Simplex {
    pub fn new(apex: Point, sides: Vec<f64>) -> Result<Self> {
        if apex.dim() != sides.len() {
            return Err(Error::DimensionMismatch {
                expected: apex.dim(),
                got: sides.len(),
            });
        }
        if sides.iter().any(|&p| !(p.is_finite() && p > 0.0)) {
            return Err(invalid("p", "side lengths must be positive and finite"));
        }
        Ok(Self { apex, sides })
    }

    pub fn dim(&self) -> usize {
        self.sides.len()
    }

    pub fn apex(&self) -> &Point {
        &self.apex
    }

    pub fn sides(&self) -> &[f64] {
        &self.sides
    }

    /// `p_1⋯p_d / d^d`: the volume of the largest box inscribed in the
    /// simplex with a corner at the apex. This is the quantity that enters the
    /// longest-chain limit `d ρ^{1/d} |S|^{1/d}`; the Lebesgue volume of the
    /// simplex is `p_1⋯p_d / d!`.
    pub fn measure(&self) -> f64 {
        let d = self.dim() as f64;
        self.sides.iter().product::<f64>() / d.powf(d)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        if x.len() != self.dim() || !leq(x, &self.apex) {
            return false;
        }
        let s: f64 = x
            .iter()
            .zip(self.apex.iter())
            .zip(&self.sides)
            .map(|((xi, yi), pi)| (xi - yi) / pi)
            .sum();
        1.0 + s >= 0.0
    }

    /// Bounding box `[y − p, y]`.
    pub fn bounding_box(&self) -> Rect {
        let lower = self.apex.iter().zip(&self.sides).map(|(y, p)| y - p).collect();
        Rect {
            lower,
            upper: self.apex.coords().to_vec(),
        }
    }

    /// Image of `u` in the unit simplex `{u ≥ 0, Σu ≤ 1}` under `u ↦ y − p∘u`.
    pub fn map_from_unit(&self, u: &[f64]) -> Vec<f64> {
        self.apex
            .iter()
            .zip(&self.sides)
            .zip(u)
            .map(|((y, p), ui)| y - p * ui)
            .collect()
    }
}

/// Euclidean distance from `x ∈ Ω̄_{R,M}` to the surface `(x_1⋯x_d)^{1/d} = R`
/// inside `[0,M]^d`.
///
/// The surface is parameterized by the logarithms of its first `d − 1`
/// coordinates and the squared distance is minimized by a compass search from
/// eight starts.
pub fn dist_to_curved_boundary(dom: &MaskedDomain, x: &[f64]) -> Result<f64> {
    if !dom.closed_contains(x) {
        return Err(Error::OutsideDomain { point: x.to_vec() });
    }
    let d = x.len();
    let r = dom.radius();
    if r == 0.0 {
        return Ok(x.iter().cloned().fold(f64::INFINITY, f64::min));
    }
    if dom.on_surface(x) {
        return Ok(0.0);
    }
    let ln_m = dom.side().ln();
    let ln_rd = d as f64 * r.ln();
    // Surface point from free log-coordinates; None when outside the box.
    let surface = |s: &[f64], out: &mut [f64]| -> bool {
        let mut sum = 0.0;
        for (i, &si) in s.iter().enumerate() {
            if si > ln_m {
                return false;
            }
            out[i] = si.exp();
            sum += si;
        }
        let last = ln_rd - sum;
        if last > ln_m {
            return false;
        }
        out[d - 1] = last.exp();
        true
    };
    let objective = |s: &[f64], buf: &mut [f64]| -> f64 {
        if !surface(s, buf) {
            return f64::INFINITY;
        }
        buf.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum()
    };

    let mut dirs: Vec<Vec<f64>> = Vec::new();
    for i in 0..d - 1 {
        for sign in [1.0, -1.0] {
            let mut e = vec![0.0; d - 1];
            e[i] = sign;
            dirs.push(e);
        }
        for j in i + 1..d - 1 {
            for sign in [1.0, -1.0] {
                let mut e = vec![0.0; d - 1];
                e[i] = sign;
                e[j] = -sign;
                dirs.push(e);
            }
        }
    }

    // Radial projection onto the surface, then deterministic perturbations.
    let g = geometric_mean(x);
    let radial: Vec<f64> = x[..d - 1].iter().map(|&c| (c * r / g).ln().min(ln_m)).collect();
    const OFFSETS: [f64; 8] = [0.0, 0.75, -0.75, 1.5, -1.5, 3.0, -3.0, 0.3];
    let mut buf = vec![0.0; d];
    let mut best = f64::INFINITY;
    for (k, off) in OFFSETS.iter().enumerate() {
        let mut s: Vec<f64> = radial
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                let sign = if (i + k) % 2 == 0 { 1.0 } else { -1.0 };
                (v + sign * off).min(ln_m)
            })
            .collect();
        let mut f = objective(&s, &mut buf);
        if !f.is_finite() {
            // Pull the start back onto the feasible set along the radial ray.
            s.clone_from(&radial);
            f = objective(&s, &mut buf);
            if !f.is_finite() {
                continue;
            }
        }
        let mut step = 0.5;
        let mut trial = s.clone();
        while step > 1e-13 {
            let mut improved = false;
            for dir in &dirs {
                for (t, (si, di)) in trial.iter_mut().zip(s.iter().zip(dir)) {
                    *t = si + step * di;
                }
                let ft = objective(&trial, &mut buf);
                if ft < f {
                    f = ft;
                    s.clone_from(&trial);
                    improved = true;
                }
            }
            if !improved {
                step *= 0.5;
            }
        }
        best = best.min(f);
    }
    if !best.is_finite() {
        return Err(Error::Numeric("no feasible surface point found".into()));
    }
    Ok(best.sqrt())
}

/// Rectangle cover of `S_{y,p}` built from the lattice `x_0 + εℤ^d` on the
/// diagonal face `{u ≥ 0, Σu = 1}` of the unit simplex, `x_0` its barycenter.
///
/// Each lattice point `x` on the hyperplane `Σu = 1` with `x_i > −ε` yields the
/// box `[0, x⁺ + ε𝟙]`, which is then mapped onto `S_{y,p}`. For `ε ≥ 1` a single
/// box `[0, (1+ε)𝟙]` is returned.
pub fn cover_simplex(simplex: &Simplex, eps: f64) -> Result<RectCollection> {
    if !(eps.is_finite() && eps > 0.0) {
        return Err(invalid("eps", "must be positive"));
    }
    let d = simplex.dim();
    let to_rect = |u: &[f64]| -> Rect {
        let lower = simplex.map_from_unit(u);
        Rect {
            lower,
            upper: simplex.apex().coords().to_vec(),
        }
    };
    if eps >= 1.0 {
        return Ok(RectCollection {
            rects: vec![to_rect(&vec![1.0 + eps; d])],
        });
    }

    let x0 = 1.0 / d as f64;
    let k_min = (-(x0 + eps) / eps).floor() as i64;
    let k_max = ((1.0 - x0 + (d as f64 - 1.0) * eps) / eps).ceil() as i64;
    let mut seen: HashSet<Vec<u64>> = HashSet::new();
    let mut rects = Vec::new();
    let mut k = vec![0i64; d];

    fn recurse(i: usize, partial: i64, k: &mut Vec<i64>, bounds: (i64, i64), emit: &mut dyn FnMut(&[i64])) {
        let d = k.len();
        if i == d - 1 {
            k[i] = -partial;
            emit(k);
            return;
        }
        for v in bounds.0..=bounds.1 {
            k[i] = v;
            recurse(i + 1, partial + v, k, bounds, emit);
        }
    }

    let mut emit = |k: &[i64]| {
        let x: Vec<f64> = k.iter().map(|&ki| x0 + eps * ki as f64).collect();
        if x.iter().any(|&xi| xi <= -eps) {
            return;
        }
        let upper: Vec<f64> = x.iter().map(|&xi| xi.max(0.0) + eps).collect();
        let key: Vec<u64> = upper.iter().map(|v| v.to_bits()).collect();
        if seen.insert(key) {
            rects.push(to_rect(&upper));
        }
    };
    recurse(0, 0, &mut k, (k_min, k_max), &mut emit);
    Ok(RectCollection { rects })
}

/// Steps a multi-index through `[lo, hi]^d`, last axis fastest. Returns
/// false once every index has wrapped.
pub(crate) fn advance_odometer(idx: &mut [usize], lo: usize, hi: usize) -> bool {
    for axis in (0..idx.len()).rev() {
        if idx[axis] < hi {
            idx[axis] += 1;
            return true;
        }
        idx[axis] = lo;
    }
    false
}

/// Lattice spacing `ε R^{d−1} / 4` for [`cover_boundary_tube`]; with it every
/// order interval in the tube fits in a lattice box inside the shell.
pub fn default_tube_spacing(radius: f64, eps: f64, d: usize) -> f64 {
    eps * radius.powi(d as i32 - 1) / 4.0
}

/// Cover of order intervals in the tube `Ω_R \ Ω_{R+ε}` by lattice boxes
/// inside the shell `R − ε ≤ (x_1⋯x_d)^{1/d} ≤ R + 2ε`, with the default
/// spacing.
pub fn cover_boundary_tube(radius: f64, eps: f64, d: usize) -> Result<RectCollection> {
    cover_boundary_tube_with_spacing(radius, eps, d, default_tube_spacing(radius, eps, d))
}

/// As [`cover_boundary_tube`] with an explicit lattice spacing `h`.
///
/// Returns every box `[a, b]` with `a < b` on the lattice `hℤ^d ∩ [0, 1+2h]^d`
/// and `[a, b]` inside the shell. Membership of the box reduces to its two
/// corners because the geometric mean is monotone.
pub fn cover_boundary_tube_with_spacing(radius: f64, eps: f64, d: usize, h: f64) -> Result<RectCollection> {
    if d < 2 {
        return Err(invalid("d", "must be at least 2"));
    }
    if !(radius > 0.0 && radius <= 0.5) {
        return Err(invalid("R", "must lie in (0, 1/2]"));
    }
    if !(eps > 0.0 && eps <= radius / 2.0) {
        return Err(invalid("eps", "must lie in (0, R/2]"));
    }
    if !(h > 0.0 && h < 1.0) {
        return Err(invalid("h", "must lie in (0, 1)"));
    }
    let lo = radius - eps;
    let hi = radius + 2.0 * eps;
    let top = ((1.0 + 2.0 * h) / h).ceil() as usize;
    let coord = |i: usize| i as f64 * h;

    // Lower corners: lattice nodes inside the shell.
    let mut corners = Vec::new();
    let mut idx = vec![1usize; d];
    loop {
        let x: Vec<f64> = idx.iter().map(|&i| coord(i)).collect();
        let g = geometric_mean(&x);
        if g >= lo && g <= hi {
            corners.push(idx.clone());
        }
        if !advance_odometer(&mut idx, 1, top) {
            break;
        }
    }

    let ln_hi = d as f64 * hi.ln();
    let mut rects = Vec::new();
    let mut upper = vec![0usize; d];
    for a in &corners {
        // Depth-first enumeration of upper corners with the running log-product
        // pruned against the shell's outer surface.
        #[allow(clippy::too_many_arguments)]
        fn walk(
            axis: usize,
            a: &[usize],
            upper: &mut [usize],
            log_sum: f64,
            ln_hi: f64,
            top: usize,
            h: f64,
            out: &mut Vec<Rect>,
        ) {
            let d = a.len();
            if axis == d {
                out.push(Rect {
                    lower: a.iter().map(|&i| i as f64 * h).collect(),
                    upper: upper.iter().map(|&i| i as f64 * h).collect(),
                });
                return;
            }
            // Remaining axes contribute at least their minimal step a_j + 1.
            let rest: f64 = a[axis + 1..].iter().map(|&i| ((i + 1) as f64 * h).ln()).sum();
            for b in a[axis] + 1..=top {
                let lb = (b as f64 * h).ln();
                if log_sum + lb + rest > ln_hi + 1e-12 {
                    break;
                }
                upper[axis] = b;
                walk(axis + 1, a, upper, log_sum + lb, ln_hi, top, h, out);
            }
        }
        walk(0, a, &mut upper, 0.0, ln_hi, top, h, &mut rects);
    }
    Ok(RectCollection { rects })
}

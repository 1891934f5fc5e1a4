//! Monotone upwind solver for `u_{x_1}⋯u_{x_d} = ρ` with zero data on the
//! coordinate hyperplanes, closed-form solutions, the boundary expansion
//! `ū = w + v`, and a variational lower-bound oracle.

use serde::{Deserialize, Serialize};

use crate::density::DensityField;
use crate::error::{invalid, Error, Result};
use crate::geometry::{geometric_mean, MaskedDomain, Point, SURFACE_TOL};
use crate::grid::{Grid, GridFunction};

pub const DEFAULT_ROOT_TOLERANCE: f64 = 1e-12;

const MAX_ROOT_ITERATIONS: usize = 200;

/// Solves `∏ (t − a_i) = h^d ρ` for the unique `t ≥ max a_i`.
pub fn node_update(a: &[f64], h: f64, rho: f64) -> Result<f64> {
    node_update_tol(a, h, rho, DEFAULT_ROOT_TOLERANCE)
}

/// [`node_update`] with an explicit absolute tolerance.
///
/// `t ↦ ∏ (t − a_i)` is increasing and convex on `[max a, ∞)`, so Newton's
/// method started at the upper end of the bracket decreases monotonically to
/// the root; bisection takes over if a step ever leaves the bracket.
pub fn node_update_tol(a: &[f64], h: f64, rho: f64, tol: f64) -> Result<f64> {
    if !(h > 0.0) || !(rho >= 0.0) || a.is_empty() {
        return Err(invalid("node_update", format!("h = {h}, rho = {rho}")));
    }
    let top = a.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if rho == 0.0 {
        return Ok(top);
    }
    let d = a.len() as f64;
    let target = h.powi(a.len() as i32) * rho;
    if a.len() == 2 {
        // s (s + gap) = target with s = t − max a, in cancellation-free form.
        let gap = (a[0] - a[1]).abs();
        let s = 2.0 * target / (gap + (gap * gap + 4.0 * target).sqrt());
        return Ok(top + s);
    }
    let eval = |t: f64| -> (f64, f64) {
        let mut prod = 1.0;
        let mut deriv = 0.0;
        for &ai in a {
            let f = t - ai;
            deriv = deriv * f + prod;
            prod *= f;
        }
        (prod - target, deriv)
    };
    let mut lo = top;
    let mut hi = top + h * rho.powf(1.0 / d) * d;
    let mut t = hi;
    for _ in 0..MAX_ROOT_ITERATIONS {
        let (f, df) = eval(t);
        if f == 0.0 {
            return Ok(t);
        }
        if f > 0.0 {
            hi = t;
        } else {
            lo = t;
        }
        let mut next = if df > 0.0 { t - f / df } else { f64::NAN };
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - t).abs() <= tol || hi - lo <= tol {
            return Ok(next);
        }
        t = next;
    }
    Err(Error::Numeric(format!(
        "root solve did not converge for a = {a:?}, h = {h}, rho = {rho}"
    )))
}

/// Density, optional mask `Ω_{R,M}`, and root tolerance for [`solve_hj`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveSpec {
    pub density: DensityField,
    pub mask: Option<MaskedDomain>,
    pub root_tolerance: f64,
}

impl SolveSpec {
    pub fn new(density: DensityField, mask: Option<MaskedDomain>, root_tolerance: f64) -> Result<Self> {
        if !(root_tolerance > 0.0) {
            return Err(invalid("root_tolerance", "must be positive"));
        }
        Ok(Self {
            density,
            mask,
            root_tolerance,
        })
    }

    pub fn unmasked(density: DensityField) -> Self {
        Self {
            density,
            mask: None,
            root_tolerance: DEFAULT_ROOT_TOLERANCE,
        }
    }

    pub fn masked(density: DensityField, mask: MaskedDomain) -> Self {
        Self {
            density,
            mask: Some(mask),
            root_tolerance: DEFAULT_ROOT_TOLERANCE,
        }
    }

    /// Right-hand side `ρ·1_{Ω_R}` at `x`.
    pub fn effective_density(&self, x: &[f64]) -> f64 {
        match &self.mask {
            Some(m) if !m.contains(x) => 0.0,
            _ => self.density.eval(x),
        }
    }
}

/// One lexicographic sweep of the backward-difference scheme.
pub fn solve_hj(spec: &SolveSpec, grid: &Grid) -> Result<GridFunction> {
    let d = grid.dim();
    if spec.density.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: spec.density.dim(),
        });
    }
    let h = grid.spacing();
    let strides = grid.strides();
    let mut values = vec![0.0f64; grid.len()];
    let mut idx = vec![0usize; d];
    let mut x = vec![0.0f64; d];
    let mut a = vec![0.0f64; d];
    for flat in 0..grid.len() {
        grid.unflatten(flat, &mut idx);
        if idx.contains(&0) {
            continue;
        }
        for k in 0..d {
            x[k] = grid.coord(idx[k]);
            a[k] = values[flat - strides[k]];
        }
        let rho = spec.effective_density(&x);
        values[flat] = node_update_tol(&a, h, rho, spec.root_tolerance)?;
    }
    GridFunction::from_values(*grid, values)
}

/// `d ρ0^{1/d} (G(x) − R)` with `G` the geometric mean.
pub fn exact_constant_solution(rho0: f64, radius: f64, x: &[f64]) -> Result<f64> {
    if !(rho0 > 0.0) {
        return Err(invalid("rho0", "must be positive"));
    }
    if !(radius >= 0.0) {
        return Err(invalid("R", "must be nonnegative"));
    }
    let g = geometric_mean(x);
    if g < radius - SURFACE_TOL || x.iter().any(|&c| c < 0.0) {
        return Err(Error::OutsideDomain { point: x.to_vec() });
    }
    let d = x.len() as f64;
    Ok((d * rho0.powf(1.0 / d) * (g - radius)).max(0.0))
}

/// The approximate solution `ū = w + v` near a point `x0` of the unit
/// surface `G(x) = 1`, for right-hand side `a + p·(x − x0)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryExpansion {
    x0: Point,
    a: f64,
    p: Vec<f64>,
}

impl BoundaryExpansion {
    pub fn new(x0: Point, a: f64, p: Vec<f64>) -> Result<Self> {
        if !((geometric_mean(&x0) - 1.0).abs() <= 1e-10) {
            return Err(invalid("x0", "geometric mean must equal 1"));
        }
        if !(a > 0.0) {
            return Err(invalid("a", "must be positive"));
        }
        if p.len() != x0.dim() {
            return Err(Error::DimensionMismatch {
                expected: x0.dim(),
                got: p.len(),
            });
        }
        Ok(Self { x0, a, p })
    }

    pub fn x0(&self) -> &Point {
        &self.x0
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn p(&self) -> &[f64] {
        &self.p
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.x0.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.x0.dim(),
                got: x.len(),
            });
        }
        if x.iter().any(|&c| !(c > 0.0)) {
            return Err(Error::OutsideDomain { point: x.to_vec() });
        }
        Ok(())
    }

    fn dimf(&self) -> f64 {
        self.x0.dim() as f64
    }

    fn k(&self) -> f64 {
        let d = self.dimf();
        0.5 * self.a.powf(-(d - 1.0) / d)
    }

    fn px0(&self) -> f64 {
        dot(&self.p, &self.x0)
    }

    pub fn w(&self, x: &[f64]) -> Result<f64> {
        self.check(x)?;
        let d = self.dimf();
        Ok(self.a.powf(1.0 / d) * d * (geometric_mean(x) - 1.0))
    }

    pub fn v(&self, x: &[f64]) -> Result<f64> {
        self.check(x)?;
        let g = geometric_mean(x);
        Ok(self.k() * (dot(&self.p, x) * (g - 1.0 / g) - 2.0 * self.px0() * (g - 1.0)))
    }

    pub fn value(&self, x: &[f64]) -> Result<f64> {
        Ok(self.w(x)? + self.v(x)?)
    }

    /// `(Dw, Dv)` at `x`.
    pub fn gradient_parts(&self, x: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        self.check(x)?;
        let d = self.dimf();
        let g = geometric_mean(x);
        let (am, bp) = (g - 1.0 / g, g + 1.0 / g);
        let (k, c, px) = (self.k(), self.px0(), dot(&self.p, x));
        let root_a = self.a.powf(1.0 / d);
        let dw = x.iter().map(|&xi| root_a * g / xi).collect();
        let dv = x
            .iter()
            .zip(&self.p)
            .map(|(&xi, &pi)| k * (pi * am + px * bp / (d * xi) - 2.0 * c * g / (d * xi)))
            .collect();
        Ok((dw, dv))
    }

    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        let (dw, dv) = self.gradient_parts(x)?;
        Ok(dw.iter().zip(&dv).map(|(a, b)| a + b).collect())
    }

    /// Row-major `d × d` Hessian of `ū`.
    pub fn hessian(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check(x)?;
        let n = x.len();
        let d = self.dimf();
        let g = geometric_mean(x);
        let (am, bp) = (g - 1.0 / g, g + 1.0 / g);
        let (k, c, px) = (self.k(), self.px0(), dot(&self.p, x));
        let root_a = self.a.powf(1.0 / d);
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                let (xi, xj) = (x[i], x[j]);
                let diag = if i == j { 1.0 } else { 0.0 };
                let wij = root_a * (g / (d * xi * xj) - diag * g / (xi * xi));
                let vij = k
                    * (self.p[i] * bp / (d * xj) + self.p[j] * bp / (d * xi) + px * am / (d * d * xi * xj)
                        - diag * px * bp / (d * xi * xi)
                        - 2.0 * c * g / (d * d * xi * xj)
                        + diag * 2.0 * c * g / (d * xi * xi));
                out[i * n + j] = wij + vij;
            }
        }
        Ok(out)
    }

    /// `E(x) = ∏ ū_{x_i} − a − p·(x − x0)`.
    pub fn residual(&self, x: &[f64]) -> Result<f64> {
        let grad = self.gradient(x)?;
        let lin: f64 = self
            .p
            .iter()
            .zip(x.iter().zip(self.x0.iter()))
            .map(|(pi, (xi, x0i))| pi * (xi - x0i))
            .sum();
        Ok(grad.iter().product::<f64>() - self.a - lin)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `d ∫ ρ(γ)^{1/d} (∏ γ_i')^{1/d} dt` along a coordinatewise nondecreasing
/// polyline, by composite Simpson's rule with `quadrature_steps` panels per
/// segment.
pub fn variational_value(density: &DensityField, polyline: &[Point], quadrature_steps: usize) -> Result<f64> {
    if polyline.len() < 2 {
        return Err(invalid("polyline", "need at least two vertices"));
    }
    if quadrature_steps == 0 {
        return Err(invalid("quadrature_steps", "must be positive"));
    }
    let dim = density.dim();
    for (i, v) in polyline.iter().enumerate() {
        if v.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: v.dim(),
            });
        }
        if i > 0 && v.iter().zip(polyline[i - 1].iter()).any(|(b, a)| b < a) {
            return Err(Error::NonMonotonePolyline { vertex: i });
        }
    }
    let d = dim as f64;
    let steps = quadrature_steps + quadrature_steps % 2;
    let mut total = 0.0;
    let mut x = vec![0.0; dim];
    for seg in polyline.windows(2) {
        let (p0, p1) = (&seg[0], &seg[1]);
        let speed: f64 = p1
            .iter()
            .zip(p0.iter())
            .map(|(b, a)| b - a)
            .product::<f64>()
            .powf(1.0 / d);
        if speed == 0.0 {
            continue;
        }
        let mut acc = 0.0;
        for s in 0..=steps {
            let t = s as f64 / steps as f64;
            for k in 0..dim {
                x[k] = p0[k] + t * (p1[k] - p0[k]);
            }
            let weight = if s == 0 || s == steps {
                1.0
            } else if s % 2 == 1 {
                4.0
            } else {
                2.0
            };
            acc += weight * density.eval(&x).powf(1.0 / d);
        }
        total += d * speed * acc / (3.0 * steps as f64);
    }
    Ok(total)
}

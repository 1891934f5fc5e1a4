//! Intensity fields `ρ` on the box `[0,M]^d`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Shape of a density field. All variants are bounded away from zero on the box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum DensityKind {
    /// `ρ ≡ value`.
    Constant { value: f64 },
    /// `ρ(x) = base + slope·x`.
    Affine { base: f64, slope: Vec<f64> },
    /// `ρ(x) = base + amplitude·exp(−|x − center|² / (2 width²))`.
    Bump {
        base: f64,
        amplitude: f64,
        center: Vec<f64>,
        width: f64,
    },
    /// Multilinear interpolation of nodal values on a uniform grid with `m`
    /// nodes per axis over `[0,M]^d` (row-major, last axis fastest). The
    /// Lipschitz constant is declared by the caller.
    Tabulated {
        m: usize,
        values: Vec<f64>,
        lipschitz: f64,
    },
}

/// A density `ρ` with its bounds and Lipschitz constants on `[0,M]^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityField {
    dim: usize,
    side: f64,
    kind: DensityKind,
    rho_min: f64,
    rho_max: f64,
    lipschitz: f64,
}

impl DensityField {
    pub fn new(dim: usize, side: f64, kind: DensityKind) -> Result<Self> {
        if dim < 2 {
            return Err(invalid("d", "must be at least 2"));
        }
        if !(side.is_finite() && side > 0.0) {
            return Err(invalid("M", "must be positive"));
        }
        let (rho_min, rho_max, lipschitz) = match &kind {
            DensityKind::Constant { value } => (*value, *value, 0.0),
            DensityKind::Affine { base, slope } => {
                if slope.len() != dim {
                    return Err(invalid("slope", format!("expected {dim} components")));
                }
                let lo = base + slope.iter().map(|s| s.min(0.0) * side).sum::<f64>();
                let hi = base + slope.iter().map(|s| s.max(0.0) * side).sum::<f64>();
                let norm = slope.iter().map(|s| s * s).sum::<f64>().sqrt();
                (lo, hi, norm)
            }
            DensityKind::Bump {
                base,
                amplitude,
                center,
                width,
            } => {
                if center.len() != dim {
                    return Err(invalid("center", format!("expected {dim} components")));
                }
                if !(*width > 0.0) {
                    return Err(invalid("width", "must be positive"));
                }
                // max |∇ exp(−r²/2w²)| = e^{−1/2} / w
                let lip = amplitude.abs() * (-0.5f64).exp() / width;
                (base + amplitude.min(0.0), base + amplitude.max(0.0), lip)
            }
            DensityKind::Tabulated { m, values, lipschitz } => {
                if *m < 2 || values.len() != m.pow(dim as u32) {
                    return Err(invalid("values", format!("expected {m}^{dim} nodal values")));
                }
                if !(*lipschitz >= 0.0) {
                    return Err(invalid("lipschitz", "must be nonnegative"));
                }
                let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                (lo, hi, *lipschitz)
            }
        };
        if !(rho_min.is_finite() && rho_min > 0.0 && rho_max.is_finite()) {
            return Err(invalid(
                "density",
                format!("must be bounded below by a positive constant (min {rho_min})"),
            ));
        }
        Ok(Self {
            dim,
            side,
            kind,
            rho_min,
            rho_max,
            lipschitz,
        })
    }

    pub fn constant(dim: usize, value: f64) -> Result<Self> {
        Self::new(dim, 1.0, DensityKind::Constant { value })
    }

    pub fn affine(dim: usize, base: f64, slope: Vec<f64>) -> Result<Self> {
        Self::new(dim, 1.0, DensityKind::Affine { base, slope })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn side(&self) -> f64 {
        self.side
    }

    pub fn kind(&self) -> &DensityKind {
        &self.kind
    }

    pub fn rho_min(&self) -> f64 {
        self.rho_min
    }

    pub fn rho_max(&self) -> f64 {
        self.rho_max
    }

    /// Lipschitz constant of `ρ`.
    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    /// Lipschitz constant of `ρ^{1/d}`, from `|∇ρ^{1/d}| = |∇ρ| / (d ρ^{(d−1)/d})`.
    pub fn lipschitz_root(&self) -> f64 {
        let d = self.dim as f64;
        self.lipschitz / (d * self.rho_min.powf((d - 1.0) / d))
    }

    pub fn is_constant(&self) -> bool {
        matches!(self.kind, DensityKind::Constant { .. })
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match &self.kind {
            DensityKind::Constant { value } => *value,
            DensityKind::Affine { base, slope } => {
                base + slope.iter().zip(x).map(|(s, c)| s * c).sum::<f64>()
            }
            DensityKind::Bump {
                base,
                amplitude,
                center,
                width,
            } => {
                let r2: f64 = x.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum();
                base + amplitude * (-r2 / (2.0 * width * width)).exp()
            }
            DensityKind::Tabulated { m, values, .. } => self.interpolate(*m, values, x),
        }
    }

    fn interpolate(&self, m: usize, values: &[f64], x: &[f64]) -> f64 {
        let d = self.dim;
        let h = self.side / (m - 1) as f64;
        let mut base = vec![0usize; d];
        let mut frac = vec![0.0; d];
        for k in 0..d {
            let t = (x[k].clamp(0.0, self.side) / h).min((m - 1) as f64);
            let i = (t.floor() as usize).min(m - 2);
            base[k] = i;
            frac[k] = t - i as f64;
        }
        let mut acc = 0.0;
        for corner in 0..(1usize << d) {
            let mut weight = 1.0;
            let mut flat = 0usize;
            for k in 0..d {
                let bit = (corner >> (d - 1 - k)) & 1;
                weight *= if bit == 1 { frac[k] } else { 1.0 - frac[k] };
                flat = flat * m + base[k] + bit;
            }
            if weight != 0.0 {
                acc += weight * values[flat];
            }
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn assert_bounds_hold(rho: &DensityField) {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10_000 {
            let x: Vec<f64> = (0..rho.dim()).map(|_| rng.random::<f64>() * rho.side()).collect();
            let v = rho.eval(&x);
            assert!(v >= rho.rho_min() - 1e-12 && v <= rho.rho_max() + 1e-12);
        }
    }

    #[test]
    fn bounds_hold_at_sampled_points() {
        assert_bounds_hold(&DensityField::constant(2, 1.5).unwrap());
        assert_bounds_hold(&DensityField::affine(3, 1.0, vec![0.5, -0.25, 0.1]).unwrap());
        assert_bounds_hold(
            &DensityField::new(
                2,
                1.0,
                DensityKind::Bump {
                    base: 1.0,
                    amplitude: 0.5,
                    center: vec![0.5, 0.5],
                    width: 0.2,
                },
            )
            .unwrap(),
        );
        let values: Vec<f64> = (0..25).map(|i| 1.0 + (i % 7) as f64 * 0.1).collect();
        assert_bounds_hold(
            &DensityField::new(
                2,
                1.0,
                DensityKind::Tabulated {
                    m: 5,
                    values,
                    lipschitz: 3.0,
                },
            )
            .unwrap(),
        );
    }

    #[test]
    fn affine_bounds_and_constants() {
        let rho = DensityField::affine(2, 1.0, vec![1.0, 0.0]).unwrap();
        assert_eq!(rho.rho_min(), 1.0);
        assert_eq!(rho.rho_max(), 2.0);
        assert_eq!(rho.lipschitz(), 1.0);
        assert!((rho.lipschitz_root() - 0.5).abs() < 1e-15);
        assert!((rho.eval(&[0.25, 0.9]) - 1.25).abs() < 1e-15);
    }

    #[test]
    fn tabulated_reproduces_nodes_and_linear_data() {
        // f(x) = 1 + x_0 + 2 x_1 is reproduced exactly by multilinear interpolation.
        let m = 4;
        let h = 1.0 / 3.0;
        let mut values = Vec::new();
        for i in 0..m {
            for j in 0..m {
                values.push(1.0 + i as f64 * h + 2.0 * j as f64 * h);
            }
        }
        let rho = DensityField::new(
            2,
            1.0,
            DensityKind::Tabulated {
                m,
                values,
                lipschitz: 5f64.sqrt(),
            },
        )
        .unwrap();
        for x in [[0.0, 0.0], [1.0, 1.0], [0.2, 0.7], [0.5, 0.05]] {
            assert!((rho.eval(&x) - (1.0 + x[0] + 2.0 * x[1])).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_nonpositive_densities() {
        assert!(DensityField::constant(2, 0.0).is_err());
        assert!(DensityField::affine(2, 0.5, vec![-1.0, 0.0]).is_err());
        assert!(DensityField::affine(2, 1.0, vec![1.0]).is_err());
    }
}

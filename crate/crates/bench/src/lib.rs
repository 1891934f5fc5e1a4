//! Fixtures shared by the benchmarks.

use paretolab_core::{
    sample_poisson, DensityField, Grid, GridFunction, MaskedDomain, PointCloud, SampleConfig, SolveSpec,
};

pub fn uniform_cloud(d: usize, n: u64, seed: u64) -> PointCloud {
    let cfg = SampleConfig::poisson_unit(d, n, seed).expect("valid config");
    sample_poisson(&DensityField::constant(d, 1.0).expect("valid density"), &cfg).expect("sample")
}

pub fn masked_spec(d: usize, radius: f64) -> SolveSpec {
    let rho = DensityField::affine(d, 1.0, vec![0.5; d]).expect("valid density");
    SolveSpec::masked(rho, MaskedDomain::unit(radius).expect("valid radius"))
}

/// A rough grid function for the envelope benchmarks.
pub fn wavy(grid: Grid) -> GridFunction {
    GridFunction::from_fn(grid, |x| {
        x.iter()
            .enumerate()
            .map(|(k, v)| ((3 + k) as f64 * v).sin())
            .sum::<f64>()
    })
}

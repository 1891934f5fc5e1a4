//! Nondominated sorting and longest chains in random point clouds, the
//! Hamilton-Jacobi equation `u_{x_1}⋯u_{x_d} = ρ` that describes their
//! large-sample limit, and experiments comparing the two.

pub mod chains;
pub mod density;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod grid;
pub mod hj;
pub mod regularity;
pub mod sampling;

pub use chains::{
    chain_depths, depth_function_eval, depth_on_grid, depth_on_grid_masked, longest_chain, longest_chain_in,
    nondominated_sort, pareto_depths, scaled_depth, ChainScalingConstants, DepthIndex, DepthLabeling,
    FrontPartition, Region,
};
pub use density::{DensityField, DensityKind};
pub use error::{Error, Result};
pub use experiments::{fit_loglog, LogLogFit, RateFitResult, TrialResult};
pub use geometry::{
    cover_boundary_tube, cover_simplex, dist_to_curved_boundary, dominates, geometric_mean, MaskedDomain,
    Point, Rect, RectCollection, Simplex,
};
pub use grid::{Grid, GridFunction};
pub use hj::{
    exact_constant_solution, node_update, solve_hj, variational_value, BoundaryExpansion, SolveSpec,
};
pub use regularity::{
    inf_convolution, lipschitz_constant, semiconcavity_constant, semiconvexity_blowup_fit,
    semiconvexity_constant, BlowupFit, SecondDifferenceReport,
};
pub use sampling::{
    couple_thinning, sample_iid, sample_poisson, substream_seed, PointCloud, SampleConfig, SampleMode,
    SampleRegion,
};

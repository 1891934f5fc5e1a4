//! Longest chains under the coordinatewise order, Pareto depth, nondominated
//! sorting, and the scaled depth function `u_n = (d/c_d) n^{-1/d} U_n`.
//!
//! Per-point depth (the longest chain among cloud points `≤ x`, `x` included)
//! is computed by one of three exact routes:
//!
//! * `d = 2`: patience sorting on the second coordinate after a lexicographic
//!   sort, `O(n log n)`;
//! * `d = 3`: divide and conquer over the lexicographic order with a Fenwick
//!   tree of prefix maxima on the third coordinate, `O(n log² n)`;
//! * any `d`: dynamic program over predecessors in coordinate-sum order,
//!   `O(n² d)`.

use std::cmp::Ordering;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::{geometric_mean, leq, MaskedDomain, Point, Rect, Simplex};
use crate::grid::{Grid, GridFunction};
use crate::sampling::PointCloud;

/// Depth of every cloud point.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DepthLabeling {
    pub depth: Vec<usize>,
}

impl DepthLabeling {
    pub fn max_depth(&self) -> usize {
        self.depth.iter().copied().max().unwrap_or(0)
    }
}

/// Pareto fronts `F_1, F_2, …` and the front index of every point (1-based).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrontPartition {
    pub front_index: Vec<usize>,
    pub fronts: Vec<Vec<usize>>,
}

/// Euler's number, the universal upper bound on `c_d`.
pub const CD_UPPER: f64 = std::f64::consts::E;

/// `d² / (d!^{1/d} Γ(1/d))`, the lower bound on `c_d`.
pub fn cd_lower_bound(d: usize) -> f64 {
    let df = d as f64;
    let log_fact: f64 = (1..=d).map(|k| (k as f64).ln()).sum();
    df * df / ((log_fact / df).exp() * statrs::function::gamma::gamma(1.0 / df))
}

/// The longest-chain constant `c_d` used to scale depths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainScalingConstants {
    pub c_d: f64,
    pub d: usize,
}

impl ChainScalingConstants {
    /// `c_d` must be positive and below `e`. Finite-sample estimates may sit
    /// slightly under the lower bound, so that bound is reported by
    /// [`Self::within_known_bounds`] rather than enforced.
    pub fn new(d: usize, c_d: f64) -> Result<Self> {
        if d < 2 {
            return Err(invalid("d", "must be at least 2"));
        }
        if !(c_d > 0.0 && c_d < CD_UPPER) {
            return Err(invalid("c_d", format!("{c_d} is outside (0, e)")));
        }
        Ok(Self { c_d, d })
    }

    /// `c_2 = 2`.
    pub fn planar() -> Self {
        Self { c_d: 2.0, d: 2 }
    }

    /// The built-in constant for `d = 2`; other dimensions need an estimate.
    pub fn known(d: usize) -> Option<Self> {
        (d == 2).then(Self::planar)
    }

    pub fn within_known_bounds(&self) -> bool {
        cd_lower_bound(self.d) <= self.c_d && self.c_d < CD_UPPER
    }
}

/// `(d / c_d) n^{-1/d} U`.
pub fn scaled_depth(depth: usize, n: u64, consts: &ChainScalingConstants) -> Result<f64> {
    if n == 0 {
        return Err(invalid("n", "must be at least 1"));
    }
    Ok(scale_factor(n, consts) * depth as f64)
}

pub fn scale_factor(n: u64, consts: &ChainScalingConstants) -> f64 {
    let d = consts.d as f64;
    d / consts.c_d * (n as f64).powf(-1.0 / d)
}

fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    Ordering::Equal
}

fn lex_order(cloud: &PointCloud) -> Vec<usize> {
    let mut order: Vec<usize> = (0..cloud.len()).collect();
    order.sort_unstable_by(|&a, &b| lex_cmp(cloud.point(a), cloud.point(b)).then(a.cmp(&b)));
    order
}

/// Per-point depths for `d = 2` by patience sorting.
pub fn depths_planar(cloud: &PointCloud) -> Vec<usize> {
    assert_eq!(cloud.dim(), 2, "planar route needs d = 2");
    let order = lex_order(cloud);
    let mut depth = vec![0; cloud.len()];
    let mut tails: Vec<f64> = Vec::new();
    for &i in &order {
        let y = cloud.point(i)[1];
        let pos = tails.partition_point(|&t| t <= y);
        if pos == tails.len() {
            tails.push(y);
        } else {
            tails[pos] = y;
        }
        depth[i] = pos + 1;
    }
    depth
}

/// Fenwick tree of prefix maxima.
struct MaxFenwick {
    tree: Vec<usize>,
}

impl MaxFenwick {
    fn new(n: usize) -> Self {
        Self { tree: vec![0; n + 1] }
    }

    fn update(&mut self, pos: usize, value: usize) {
        let mut i = pos + 1;
        while i < self.tree.len() {
            if self.tree[i] < value {
                self.tree[i] = value;
            }
            i += i & i.wrapping_neg();
        }
    }

    fn clear(&mut self, pos: usize) {
        let mut i = pos + 1;
        while i < self.tree.len() {
            self.tree[i] = 0;
            i += i & i.wrapping_neg();
        }
    }

    /// Max over positions `0..=pos`.
    fn query(&self, pos: usize) -> usize {
        let mut i = pos + 1;
        let mut best = 0;
        while i > 0 {
            best = best.max(self.tree[i]);
            i -= i & i.wrapping_neg();
        }
        best
    }
}

/// Per-point depths for `d = 3` by divide and conquer.
pub fn depths_spatial(cloud: &PointCloud) -> Vec<usize> {
    assert_eq!(cloud.dim(), 3, "spatial route needs d = 3");
    let n = cloud.len();
    let order = lex_order(cloud);
    let ys: Vec<f64> = order.iter().map(|&i| cloud.point(i)[1]).collect();
    // Dense ranks of the third coordinate; equal values share a rank.
    let zs: Vec<f64> = order.iter().map(|&i| cloud.point(i)[2]).collect();
    let mut sorted_z = zs.clone();
    sorted_z.sort_unstable_by(f64::total_cmp);
    sorted_z.dedup();
    let zrank: Vec<usize> = zs.iter().map(|z| sorted_z.partition_point(|v| v < z)).collect();

    let mut dp = vec![1usize; n];
    let mut fenwick = MaxFenwick::new(sorted_z.len().max(1));
    let mut scratch_left = Vec::new();
    let mut scratch_right = Vec::new();
    cdq(
        0,
        n,
        &ys,
        &zrank,
        &mut dp,
        &mut fenwick,
        &mut scratch_left,
        &mut scratch_right,
    );

    let mut depth = vec![0; n];
    for (pos, &i) in order.iter().enumerate() {
        depth[i] = dp[pos];
    }
    depth
}

const CDQ_LEAF: usize = 48;

#[allow(clippy::too_many_arguments)]
fn cdq(
    lo: usize,
    hi: usize,
    ys: &[f64],
    zr: &[usize],
    dp: &mut [usize],
    fenwick: &mut MaxFenwick,
    left: &mut Vec<usize>,
    right: &mut Vec<usize>,
) {
    if hi - lo <= CDQ_LEAF {
        for i in lo..hi {
            let mut best = dp[i];
            for j in lo..i {
                if ys[j] <= ys[i] && zr[j] <= zr[i] && dp[j] + 1 > best {
                    best = dp[j] + 1;
                }
            }
            dp[i] = best;
        }
        return;
    }
    let mid = (lo + hi) / 2;
    cdq(lo, mid, ys, zr, dp, fenwick, left, right);

    left.clear();
    left.extend(lo..mid);
    left.sort_unstable_by(|&a, &b| ys[a].total_cmp(&ys[b]));
    right.clear();
    right.extend(mid..hi);
    right.sort_unstable_by(|&a, &b| ys[a].total_cmp(&ys[b]));
    let mut li = 0;
    for &i in right.iter() {
        while li < left.len() && ys[left[li]] <= ys[i] {
            let j = left[li];
            fenwick.update(zr[j], dp[j]);
            li += 1;
        }
        let best = fenwick.query(zr[i]);
        if best + 1 > dp[i] {
            dp[i] = best + 1;
        }
    }
    for &j in &left[..li] {
        fenwick.clear(zr[j]);
    }

    cdq(mid, hi, ys, zr, dp, fenwick, left, right);
}

/// Per-point depths in any dimension by the predecessor dynamic program.
///
/// Points are visited in coordinate-sum order (ties broken lexicographically);
/// every predecessor `q ≤ p` precedes `p` in that order.
pub fn depths_dp(cloud: &PointCloud) -> Vec<usize> {
    let n = cloud.len();
    let sums: Vec<f64> = cloud.iter().map(|p| p.iter().sum()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_unstable_by(|&a, &b| {
        sums[a]
            .total_cmp(&sums[b])
            .then_with(|| lex_cmp(cloud.point(a), cloud.point(b)))
            .then(a.cmp(&b))
    });
    let mut dp = vec![1usize; n];
    for (k, &i) in order.iter().enumerate() {
        let p = cloud.point(i);
        let mut best = 1;
        for &j in &order[..k] {
            if dp[j] >= best && leq(cloud.point(j), p) {
                best = dp[j] + 1;
            }
        }
        dp[i] = best;
    }
    dp
}

/// Per-point depths, using the fastest exact route for the dimension.
pub fn chain_depths(cloud: &PointCloud) -> Vec<usize> {
    match cloud.dim() {
        2 => depths_planar(cloud),
        3 => depths_spatial(cloud),
        _ => depths_dp(cloud),
    }
}

/// Length of the longest chain in the cloud (0 for an empty cloud).
pub fn longest_chain(cloud: &PointCloud) -> usize {
    if cloud.is_empty() {
        return 0;
    }
    if cloud.dim() == 2 {
        // Only the tails array is needed for the length.
        let order = lex_order(cloud);
        let mut tails: Vec<f64> = Vec::new();
        for &i in &order {
            let y = cloud.point(i)[1];
            let pos = tails.partition_point(|&t| t <= y);
            if pos == tails.len() {
                tails.push(y);
            } else {
                tails[pos] = y;
            }
        }
        return tails.len();
    }
    chain_depths(cloud).into_iter().max().unwrap_or(0)
}

/// Longest chain by the general-dimension dynamic program, for cross-checks.
pub fn longest_chain_dp(cloud: &PointCloud) -> usize {
    depths_dp(cloud).into_iter().max().unwrap_or(0)
}

/// Sets on which a longest chain can be restricted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Region {
    /// The whole space.
    All,
    /// Order interval `[0, x]`.
    Below(Point),
    Rect(Rect),
    Simplex(Simplex),
    /// `Ω_{R,M}` with strict membership.
    Masked(MaskedDomain),
    /// The tube `Ω_R \ Ω_{R+ε}`: `R < geometric mean ≤ R + ε` inside `[0,M]^d`.
    Tube {
        domain: MaskedDomain,
        width: f64,
    },
}

impl Region {
    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            Region::All => true,
            Region::Below(p) => x.iter().all(|&c| c >= 0.0) && leq(x, p),
            Region::Rect(r) => r.contains(x),
            Region::Simplex(s) => s.contains(x),
            Region::Masked(m) => m.contains(x),
            Region::Tube { domain, width } => {
                domain.contains(x) && geometric_mean(x) <= domain.radius() + width
            }
        }
    }
}

/// `ℓ(region ∩ cloud)`.
pub fn longest_chain_in(cloud: &PointCloud, region: &Region) -> usize {
    longest_chain(&cloud.filter(|p| region.contains(p)))
}

fn find_duplicate(cloud: &PointCloud) -> Option<(usize, usize)> {
    let order = lex_order(cloud);
    order.windows(2).find_map(|w| {
        (lex_cmp(cloud.point(w[0]), cloud.point(w[1])) == Ordering::Equal)
            .then(|| (w[0].min(w[1]), w[0].max(w[1])))
    })
}

fn require_distinct(cloud: &PointCloud) -> Result<()> {
    match find_duplicate(cloud) {
        Some((first, second)) => Err(Error::DuplicatePoints { first, second }),
        None => Ok(()),
    }
}

/// Pareto depth of every point of a cloud of distinct points.
pub fn pareto_depths(cloud: &PointCloud) -> Result<DepthLabeling> {
    require_distinct(cloud)?;
    Ok(DepthLabeling {
        depth: chain_depths(cloud),
    })
}

/// Nondominated sorting by iterative peeling of minimal elements.
///
/// Builds the strict-dominance graph once and removes minimal elements front
/// by front; independent of the depth routes above.
pub fn nondominated_sort(cloud: &PointCloud) -> Result<FrontPartition> {
    require_distinct(cloud)?;
    let n = cloud.len();
    let mut dominated_by_count = vec![0usize; n];
    let mut dominates_list: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        for j in i + 1..n {
            let (a, b) = (cloud.point(i), cloud.point(j));
            if leq(a, b) {
                dominates_list[i].push(j);
                dominated_by_count[j] += 1;
            } else if leq(b, a) {
                dominates_list[j].push(i);
                dominated_by_count[i] += 1;
            }
        }
    }
    let mut front_index = vec![0usize; n];
    let mut fronts = Vec::new();
    let mut current: Vec<usize> = (0..n).filter(|&i| dominated_by_count[i] == 0).collect();
    while !current.is_empty() {
        let k = fronts.len() + 1;
        let mut next = Vec::new();
        for &i in &current {
            front_index[i] = k;
            for &j in &dominates_list[i] {
                dominated_by_count[j] -= 1;
                if dominated_by_count[j] == 0 {
                    next.push(j);
                }
            }
        }
        next.sort_unstable();
        fronts.push(current);
        current = next;
    }
    Ok(FrontPartition { front_index, fronts })
}

/// Precomputed depths for repeated evaluation of `U_n(x)`.
pub struct DepthIndex<'a> {
    cloud: &'a PointCloud,
    depth: Vec<usize>,
}

impl<'a> DepthIndex<'a> {
    pub fn new(cloud: &'a PointCloud) -> Self {
        Self {
            cloud,
            depth: chain_depths(cloud),
        }
    }

    pub fn depths(&self) -> &[usize] {
        &self.depth
    }

    /// `U_n(x)`: max depth over cloud points `≤ x`, 0 if there are none.
    pub fn eval(&self, x: &[f64]) -> usize {
        self.cloud
            .iter()
            .zip(&self.depth)
            .filter(|(p, _)| leq(p, x))
            .map(|(_, &d)| d)
            .max()
            .unwrap_or(0)
    }
}

/// `U_n(x) = ℓ([0, x] ∩ cloud)`.
pub fn depth_function_eval(cloud: &PointCloud, x: &[f64]) -> Result<usize> {
    if x.len() != cloud.dim() {
        return Err(Error::DimensionMismatch {
            expected: cloud.dim(),
            got: x.len(),
        });
    }
    Ok(DepthIndex::new(cloud).eval(x))
}

/// `U_n` at every grid node.
///
/// Each point's depth is deposited at the smallest node dominating it, then a
/// running maximum is swept along every axis, so node values are maxima over
/// all points `≤` the node.
pub fn depth_on_grid(cloud: &PointCloud, grid: &Grid) -> Result<GridFunction> {
    if cloud.dim() != grid.dim() {
        return Err(Error::DimensionMismatch {
            expected: grid.dim(),
            got: cloud.dim(),
        });
    }
    let depth = chain_depths(cloud);
    let mut values = vec![0.0f64; grid.len()];
    let mut idx = vec![0usize; grid.dim()];
    'points: for (p, &dp) in cloud.iter().zip(&depth) {
        for (k, &c) in p.iter().enumerate() {
            match grid.ceil_index(c) {
                Some(i) => idx[k] = i,
                None => continue 'points,
            }
        }
        let flat = grid.flat(&idx);
        if values[flat] < dp as f64 {
            values[flat] = dp as f64;
        }
    }
    running_max_all_axes(grid, &mut values);
    GridFunction::from_values(*grid, values)
}

/// `U_n` on the grid for the cloud restricted to `Ω_{R,M}`.
pub fn depth_on_grid_masked(cloud: &PointCloud, grid: &Grid, domain: &MaskedDomain) -> Result<GridFunction> {
    depth_on_grid(&cloud.filter(|p| domain.contains(p)), grid)
}

fn running_max_all_axes(grid: &Grid, values: &mut [f64]) {
    let strides = grid.strides();
    let m = grid.nodes();
    for &stride in &strides {
        for flat in 0..values.len() {
            let i = (flat / stride) % m;
            if i > 0 {
                let prev = values[flat - stride];
                if prev > values[flat] {
                    values[flat] = prev;
                }
            }
        }
    }
}

/// CSV with columns `point_index, x0..x{d-1}, depth, front`.
pub fn write_labels_csv<W: Write>(
    mut w: W,
    cloud: &PointCloud,
    depths: &DepthLabeling,
    fronts: &FrontPartition,
) -> Result<()> {
    let d = cloud.dim();
    let mut header = vec!["point_index".to_string()];
    header.extend((0..d).map(|k| format!("x{k}")));
    header.push("depth".into());
    header.push("front".into());
    writeln!(w, "{}", header.join(","))?;
    for (i, p) in cloud.iter().enumerate() {
        let mut line = format!("{i}");
        for c in p {
            line.push_str(&format!(",{c:.16e}"));
        }
        line.push_str(&format!(",{},{}", depths.depth[i], fronts.front_index[i]));
        writeln!(w, "{line}")?;
    }
    Ok(())
}

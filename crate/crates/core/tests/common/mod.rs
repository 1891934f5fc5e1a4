#![allow(dead_code)]

use paretolab_core::PointCloud;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn leq(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| x <= y)
}

/// Longest chain by checking every subset.
pub fn brute_longest_chain(points: &[Vec<f64>]) -> usize {
    let n = points.len();
    assert!(n <= 16, "exhaustive search is exponential");
    let mut best = 0;
    for mask in 1u32..(1 << n) {
        let size = mask.count_ones() as usize;
        if size <= best {
            continue;
        }
        let mut members: Vec<&Vec<f64>> = (0..n)
            .filter(|&i| mask & (1 << i) != 0)
            .map(|i| &points[i])
            .collect();
        members.sort_by(|a, b| {
            let sa: f64 = a.iter().sum();
            let sb: f64 = b.iter().sum();
            sa.total_cmp(&sb)
        });
        if members.windows(2).all(|w| leq(w[0], w[1])) {
            best = size;
        }
    }
    best
}

/// Front index of every point by repeatedly removing minimal elements.
pub fn brute_peel(points: &[Vec<f64>]) -> Vec<usize> {
    let n = points.len();
    let mut front = vec![0usize; n];
    let mut left: Vec<usize> = (0..n).collect();
    let mut k = 0;
    while !left.is_empty() {
        k += 1;
        let minimal: Vec<usize> = left
            .iter()
            .copied()
            .filter(|&i| !left.iter().any(|&j| j != i && leq(&points[j], &points[i])))
            .collect();
        for &i in &minimal {
            front[i] = k;
        }
        left.retain(|i| !minimal.contains(i));
    }
    front
}

/// `U(x)` by filtering then searching exhaustively.
pub fn brute_depth_eval(points: &[Vec<f64>], x: &[f64]) -> usize {
    let below: Vec<Vec<f64>> = points.iter().filter(|p| leq(p, x)).cloned().collect();
    brute_longest_chain(&below)
}

/// Distinct random points; with `lattice = Some(k)` coordinates are drawn
/// from `{0, 1/k, …, 1}` so that shared coordinates occur often.
pub fn random_points(rng: &mut ChaCha8Rng, n: usize, d: usize, lattice: Option<u32>) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut guard = 0;
    while out.len() < n {
        guard += 1;
        assert!(
            guard < 100 * n + 1000,
            "lattice too small for {n} distinct points"
        );
        let p: Vec<f64> = (0..d)
            .map(|_| match lattice {
                Some(k) => rng.random_range(0..=k) as f64 / k as f64,
                None => rng.random::<f64>(),
            })
            .collect();
        if !out.contains(&p) {
            out.push(p);
        }
    }
    out
}

pub fn cloud_of(d: usize, points: &[Vec<f64>]) -> PointCloud {
    PointCloud::from_points(d, points).unwrap()
}

pub fn to_vecs(cloud: &PointCloud) -> Vec<Vec<f64>> {
    cloud.iter().map(|p| p.to_vec()).collect()
}

/// Distance from `x` to the curve `t ↦ (t, R²/t)` for `t ∈ [R², 1]`, by
/// golden-section search on a fine bracket around the best sampled `t`.
pub fn planar_boundary_distance(radius: f64, x: &[f64]) -> f64 {
    let r2 = radius * radius;
    let dist = |t: f64| ((t - x[0]).powi(2) + (r2 / t - x[1]).powi(2)).sqrt();
    // Sample to isolate the global minimum, then refine.
    let samples = 20_000;
    let (mut lo, mut hi) = (r2, 1.0f64);
    let ln_lo = lo.ln();
    let ln_hi = hi.ln();
    let mut best = (f64::INFINITY, lo);
    for k in 0..=samples {
        let t = (ln_lo + (ln_hi - ln_lo) * k as f64 / samples as f64).exp();
        let v = dist(t);
        if v < best.0 {
            best = (v, t);
        }
    }
    let step = (ln_hi - ln_lo) / samples as f64;
    lo = (best.1.ln() - step).exp().max(r2);
    hi = (best.1.ln() + step).exp().min(1.0);
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = hi - phi * (hi - lo);
    let mut b = lo + phi * (hi - lo);
    for _ in 0..200 {
        if dist(a) < dist(b) {
            hi = b;
        } else {
            lo = a;
        }
        a = hi - phi * (hi - lo);
        b = lo + phi * (hi - lo);
    }
    dist(0.5 * (lo + hi)).min(best.0)
}

/// Nearest point on `{y_1 y_2 y_3 = R³}` for `x` inside the surface:
/// stationarity gives `y_i = (x_i + sqrt(x_i² − 4λ)) / 2` for a scalar
/// `λ ∈ [0, min x_i² / 4]` fixed by the constraint. Other stationary points
/// have some `y_i ≤ x_i / 2`, so the result is the global distance whenever
/// it is below `min x_i / 2`; `None` otherwise.
pub fn spatial_boundary_distance(radius: f64, x: &[f64]) -> Option<f64> {
    let target = 3.0 * radius.ln();
    let y_of = |lambda: f64| -> Vec<f64> {
        x.iter()
            .map(|&c| 0.5 * (c + (c * c - 4.0 * lambda).max(0.0).sqrt()))
            .collect()
    };
    let constraint = |lambda: f64| -> f64 { y_of(lambda).iter().map(|v| v.ln()).sum::<f64>() - target };
    let top = x.iter().map(|c| c * c / 4.0).fold(f64::INFINITY, f64::min);
    if constraint(top) > 0.0 {
        return None;
    }
    let (mut lo, mut hi) = (0.0f64, top);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if constraint(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let y = y_of(0.5 * (lo + hi));
    let dist = y
        .iter()
        .zip(x)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    let half = x.iter().cloned().fold(f64::INFINITY, f64::min) / 2.0;
    (dist < half).then_some(dist)
}

mod common;

use common::*;
use paretolab_core::geometry::{cover_boundary_tube_with_spacing, default_tube_spacing, leq};
use paretolab_core::sampling::rng_from_seed;
use paretolab_core::*;
use proptest::prelude::*;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

fn pt(c: &[f64]) -> Point {
    Point::new(c.to_vec()).unwrap()
}

#[test]
fn dominance_examples() {
    assert!(dominates(&[0.1, 0.2], &[0.3, 0.4]).unwrap());
    assert!(!dominates(&[0.1, 0.5], &[0.3, 0.4]).unwrap());
    assert!(dominates(&[0.7, 0.7], &[0.7, 0.7]).unwrap());
    assert!(matches!(
        dominates(&[0.1, 0.2], &[0.1, 0.2, 0.3]),
        Err(Error::DimensionMismatch { .. })
    ));
}

#[test]
fn domain_membership_examples() {
    assert!(MaskedDomain::unit(0.0).unwrap().contains(&[0.5, 0.5]));
    assert!(!MaskedDomain::unit(0.6).unwrap().contains(&[0.36, 1.0]));
    assert!(MaskedDomain::unit(0.5).unwrap().contains(&[0.49, 1.0]));
    assert!(MaskedDomain::new(1.0, 0.5).is_err());
}

#[test]
fn simplex_examples() {
    let s = |p: &[f64]| Simplex::new(Point::splat(p.len(), 0.0).unwrap(), p.to_vec()).unwrap();
    assert!((s(&[1.0, 1.0]).measure() - 0.25).abs() < 1e-15);
    assert!((s(&[1.0, 1.0, 1.0]).measure() - 1.0 / 27.0).abs() < 1e-15);
    assert!((s(&[2.0, 0.5]).measure() - 0.25).abs() < 1e-15);
    let unit = s(&[1.0, 1.0]);
    assert!(unit.contains(&[-0.25, -0.25]));
    assert!(!unit.contains(&[-0.75, -0.5]));
    assert!(!unit.contains(&[0.1, -0.5]));
    assert!(Simplex::new(pt(&[0.0, 0.0]), vec![1.0, 0.0]).is_err());
}

fn simplex_points(rng: &mut ChaCha8Rng, s: &Simplex, n: usize) -> Vec<Vec<f64>> {
    let bb = s.bounding_box();
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let x: Vec<f64> = bb
            .lower
            .iter()
            .zip(&bb.upper)
            .map(|(l, u)| l + (u - l) * rng.random::<f64>())
            .collect();
        if s.contains(&x) {
            out.push(x);
        }
    }
    out
}

#[test]
fn simplex_cover_hits_every_sampled_point() {
    let mut rng = rng_from_seed(3);
    let cases = [
        (vec![1.0, 1.0], vec![1.0, 1.0], 0.5),
        (vec![0.8, 0.9], vec![0.3, 0.6], 0.1),
        (vec![1.0, 1.0, 1.0], vec![1.0, 0.5, 0.8], 0.2),
        (vec![0.5, 0.5], vec![0.5, 0.5], 0.03),
    ];
    for (apex, sides, eps) in cases {
        let s = Simplex::new(pt(&apex), sides).unwrap();
        let cover = cover_simplex(&s, eps).unwrap();
        for x in simplex_points(&mut rng, &s, 10_000) {
            assert!(cover.covers(&x), "{x:?} uncovered at eps {eps}");
        }
        // Every vertex, including the apex, is covered too.
        assert!(cover.covers(s.apex().coords()));
        for r in &cover.rects {
            assert!(r.lower.iter().zip(&r.upper).all(|(l, u)| l < u));
        }
    }
}

#[test]
fn simplex_cover_rectangle_sizes() {
    // With the lattice point x on Σx = 1 and x_i > −ε, AM-GM bounds the unit
    // box side by (Σx⁺)/d + ε ≤ 1/d + (2d − 1)ε/d.
    for (d, eps) in [(2, 0.1), (2, 0.025), (3, 0.1)] {
        let sides: Vec<f64> = (0..d).map(|i| 0.5 + 0.25 * i as f64).collect();
        let s = Simplex::new(Point::splat(d, 1.0).unwrap(), sides.clone()).unwrap();
        let scale = sides.iter().product::<f64>().powf(1.0 / d as f64);
        let cover = cover_simplex(&s, eps).unwrap();
        let upper = scale * (1.0 / d as f64 + (2 * d - 1) as f64 * eps / d as f64);
        for r in &cover.rects {
            let side = r.measure().powf(1.0 / d as f64);
            assert!(side <= upper * (1.0 + 1e-12));
            assert!(side >= scale * eps * (1.0 - 1e-12));
        }
    }
}

#[test]
fn simplex_cover_count_scales_like_eps_to_one_minus_d() {
    let s = Simplex::new(pt(&[1.0, 1.0]), vec![1.0, 1.0]).unwrap();
    let eps = [0.2, 0.1, 0.05, 0.025];
    let counts: Vec<f64> = eps
        .iter()
        .map(|&e| cover_simplex(&s, e).unwrap().len() as f64)
        .collect();
    let fit = fit_loglog(&eps, &counts).unwrap();
    assert!((fit.slope + 1.0).abs() <= 0.5, "slope {}", fit.slope);
}

#[test]
fn simplex_cover_degenerates_to_one_box() {
    let s = Simplex::new(pt(&[1.0, 1.0]), vec![0.5, 0.5]).unwrap();
    let cover = cover_simplex(&s, 1.5).unwrap();
    assert_eq!(cover.len(), 1);
    let mut rng = rng_from_seed(4);
    for x in simplex_points(&mut rng, &s, 1000) {
        assert!(cover.covers(&x));
    }
    assert!(cover_simplex(&s, 0.0).is_err());
}

#[test]
fn distance_matches_planar_oracle() {
    let dom = MaskedDomain::unit(0.5).unwrap();
    let x = [0.49, 1.0];
    let got = dist_to_curved_boundary(&dom, &x).unwrap();
    let want = planar_boundary_distance(0.5, &x);
    assert!((got - want).abs() <= 1e-6 * want, "{got} vs {want}");

    let mut rng = rng_from_seed(5);
    for _ in 0..300 {
        let r = 0.1 + 0.5 * rng.random::<f64>();
        let dom = MaskedDomain::unit(r).unwrap();
        let x = [rng.random::<f64>(), rng.random::<f64>()];
        if !dom.contains(&x) {
            continue;
        }
        let got = dist_to_curved_boundary(&dom, &x).unwrap();
        let want = planar_boundary_distance(r, &x);
        assert!(
            (got - want).abs() <= 1e-6 * want,
            "R {r} x {x:?}: {got} vs {want}"
        );
    }
}

#[test]
fn distance_matches_spatial_oracle() {
    let mut rng = rng_from_seed(6);
    let mut checked = 0;
    for _ in 0..2000 {
        let r = 0.2 + 0.3 * rng.random::<f64>();
        let dom = MaskedDomain::unit(r).unwrap();
        let x: Vec<f64> = (0..3).map(|_| rng.random::<f64>()).collect();
        if !dom.contains(&x) {
            continue;
        }
        let Some(want) = spatial_boundary_distance(r, &x) else {
            continue;
        };
        // The Lagrange point must lie inside the unit box to be admissible.
        let got = dist_to_curved_boundary(&dom, &x).unwrap();
        assert!(
            (got - want).abs() <= 1e-6 * want,
            "R {r} x {x:?}: {got} vs {want}"
        );
        checked += 1;
    }
    assert!(checked > 100, "only {checked} certified cases");
}

#[test]
fn distance_vanishes_exactly_on_the_surface() {
    let mut rng = rng_from_seed(7);
    for d in [2, 3] {
        let dom = MaskedDomain::unit(0.4).unwrap();
        for _ in 0..200 {
            let mut x: Vec<f64> = (0..d).map(|_| 0.4 + 0.6 * rng.random::<f64>()).collect();
            let g = geometric_mean(&x);
            let on = rng.random::<bool>();
            if on {
                x.iter_mut().for_each(|c| *c *= 0.4 / g);
                if !dom.closed_contains(&x) {
                    continue;
                }
            }
            let dist = dist_to_curved_boundary(&dom, &x).unwrap();
            let g = geometric_mean(&x);
            assert_eq!(dist <= 1e-6, (g - 0.4).abs() <= 1e-6, "x {x:?} dist {dist}");
        }
    }
    let dom = MaskedDomain::unit(0.5).unwrap();
    assert!(matches!(
        dist_to_curved_boundary(&dom, &[0.1, 0.1]),
        Err(Error::OutsideDomain { .. })
    ));
}

#[test]
fn distance_lower_bound_constant_is_uniform_in_delta() {
    let r = 0.5;
    let dom = MaskedDomain::unit(r).unwrap();
    let mut rng = rng_from_seed(8);
    let mut constants = Vec::new();
    for delta in [0.05, 0.1, 0.2] {
        let mut worst = f64::INFINITY;
        let mut seen = 0;
        while seen < 400 {
            let x = [rng.random::<f64>(), rng.random::<f64>()];
            if geometric_mean(&x) <= r + delta {
                continue;
            }
            seen += 1;
            let dist = dist_to_curved_boundary(&dom, &x).unwrap();
            worst = worst.min(dist / (delta * r));
        }
        constants.push(worst);
    }
    let lo = constants.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = constants.iter().cloned().fold(0.0, f64::max);
    assert!(lo >= 0.25, "constants {constants:?}");
    assert!(hi / lo <= 4.0, "constants {constants:?}");
}

/// Random order interval `[x, y]` with both corners in `{R < G ≤ R + ε}`.
fn tube_interval(rng: &mut ChaCha8Rng, r: f64, eps: f64) -> Rect {
    loop {
        let x = [rng.random::<f64>(), rng.random::<f64>()];
        let gx = geometric_mean(&x);
        if !(gx > r && gx <= r + eps) {
            continue;
        }
        let span = 2.0 * eps * rng.random::<f64>();
        let y = [
            (x[0] + span * rng.random::<f64>()).min(1.0),
            (x[1] + span * rng.random::<f64>()).min(1.0),
        ];
        if geometric_mean(&y) <= r + eps && x.iter().zip(&y).all(|(a, b)| a < b) {
            return Rect::new(x.to_vec(), y.to_vec()).unwrap();
        }
    }
}

#[test]
fn tube_cover_contains_random_order_intervals() {
    let (r, eps) = (0.5, 0.1);
    let cover = cover_boundary_tube(r, eps, 2).unwrap();
    let mut rng = rng_from_seed(9);
    for _ in 0..1000 {
        let target = tube_interval(&mut rng, r, eps);
        assert!(cover.find_containing(&target).is_some(), "{target:?}");
    }
}

#[test]
fn tube_cover_at_the_widest_tube() {
    let (r, eps) = (0.4, 0.2);
    let cover = cover_boundary_tube(r, eps, 2).unwrap();
    assert!(!cover.is_empty());
    let mut rng = rng_from_seed(10);
    for _ in 0..300 {
        let target = tube_interval(&mut rng, r, eps);
        assert!(cover.find_containing(&target).is_some(), "{target:?}");
    }
    assert!(cover_boundary_tube(r, 0.21, 2).is_err());
    assert!(cover_boundary_tube(0.6, 0.1, 2).is_err());
}

#[test]
fn tube_cover_rectangle_sizes_have_uniform_constants() {
    let r = 0.5;
    let mut lower = Vec::new();
    let mut upper = Vec::new();
    for eps in [0.25, 0.1] {
        let cover = cover_boundary_tube(r, eps, 2).unwrap();
        let sides: Vec<f64> = cover.rects.iter().map(|e| e.measure().sqrt()).collect();
        let min = sides.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = sides.iter().cloned().fold(0.0, f64::max);
        lower.push(min / (r * eps));
        upper.push(max / (eps / r));
        for e in &cover.rects {
            let lo = geometric_mean(&e.lower);
            let hi = geometric_mean(&e.upper);
            assert!(lo >= r - eps - 1e-12 && hi <= r + 2.0 * eps + 1e-12);
        }
    }
    // The smallest box is a single lattice cell of side εR/4.
    for c in &lower {
        assert!((c - 0.25).abs() < 1e-9, "lower {lower:?}");
    }
    assert!(
        upper[0] / upper[1] < 2.0 && upper[1] / upper[0] < 2.0,
        "upper {upper:?}"
    );
}

#[test]
fn tube_cover_in_three_dimensions() {
    let (r, eps) = (0.5, 0.25);
    let h = 8.0 * default_tube_spacing(r, eps, 3);
    let cover = cover_boundary_tube_with_spacing(r, eps, 3, h).unwrap();
    assert!(!cover.is_empty());
    for e in &cover.rects {
        assert!(geometric_mean(&e.upper) <= r + 2.0 * eps + 1e-12);
    }
}

proptest! {
    #[test]
    fn order_is_a_partial_order(
        a in proptest::collection::vec(0u8..4, 3),
        b in proptest::collection::vec(0u8..4, 3),
        c in proptest::collection::vec(0u8..4, 3),
    ) {
        let f = |v: &Vec<u8>| v.iter().map(|&x| x as f64).collect::<Vec<f64>>();
        let (a, b, c) = (f(&a), f(&b), f(&c));
        prop_assert!(dominates(&a, &a).unwrap());
        if dominates(&a, &b).unwrap() && dominates(&b, &a).unwrap() {
            prop_assert_eq!(&a, &b);
        }
        if dominates(&a, &b).unwrap() && dominates(&b, &c).unwrap() {
            prop_assert!(dominates(&a, &c).unwrap());
        }
        prop_assert_eq!(dominates(&a, &b).unwrap(), leq(&a, &b));
    }

    #[test]
    fn simplex_holds_its_apex(
        apex in proptest::collection::vec(-2.0f64..2.0, 2..5),
        scale in 0.01f64..5.0,
    ) {
        let d = apex.len();
        let sides: Vec<f64> = (0..d).map(|i| scale * (1.0 + i as f64)).collect();
        let s = Simplex::new(pt(&apex), sides).unwrap();
        prop_assert!(s.contains(&apex));
        prop_assert!(s.measure() >= 0.0);
    }
}

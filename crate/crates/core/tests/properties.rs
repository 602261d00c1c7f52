use confheat_core::harmonic::{
    correlation_by_enumeration, correlation_by_inclusion_exclusion, inverse_k_transform, k_transform_points, permanent,
    star_convolution, Factor, FiniteConfiguration, KernelFunction, Level,
};
use confheat_core::metrics::{flat_metric, rho};
use confheat_core::rng::substream;
use confheat_core::{Configuration, HeatKernelParams};
use proptest::prelude::*;
use rand::Rng;

fn points(dim: usize, n: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-3.0..3.0f64, dim), n)
}

fn config(dim: usize, pts: &[Vec<f64>]) -> Configuration {
    if pts.is_empty() {
        Configuration::empty(dim, 1.0).unwrap()
    } else {
        Configuration::from_points_auto(dim, pts).unwrap()
    }
}

fn brute_rho(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    fn rec(k: usize, a: &[Vec<f64>], b: &[Vec<f64>], used: &mut [bool], acc: f64, best: &mut f64) {
        if k == a.len() {
            *best = best.min(acc);
            return;
        }
        for j in 0..b.len() {
            if !used[j] {
                used[j] = true;
                let d: f64 = a[k].iter().zip(&b[j]).map(|(u, v)| (u - v) * (u - v)).sum();
                rec(k + 1, a, b, used, acc + d, best);
                used[j] = false;
            }
        }
    }
    let mut best = f64::INFINITY;
    rec(0, a, b, &mut vec![false; b.len()], 0.0, &mut best);
    best.sqrt()
}

fn level() -> impl Strategy<Value = Level> {
    prop_oneof![
        Just(Level::Zero),
        (-1.0..1.0f64).prop_map(Level::Constant),
        (-2.0..2.0f64, -1.0..1.0f64, 0.2..1.5f64, 0.3..2.0f64).prop_map(|(coefficient, c, amplitude, width)| {
            Level::Product {
                coefficient,
                factor: Factor::Gaussian {
                    center: vec![c],
                    amplitude,
                    width,
                },
            }
        }),
    ]
}

fn kernel() -> impl Strategy<Value = KernelFunction> {
    (-1.5..1.5f64, prop::collection::vec(level(), 0..=3)).prop_map(|(c, rest)| {
        let mut levels = vec![Level::Constant(c)];
        levels.extend(rest);
        KernelFunction::new(1, levels).unwrap()
    })
}

/// Points at least 0.05 apart, so the configuration is simple.
fn distinct_1d(n: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::btree_set(-60i32..60, n).prop_map(|s| s.into_iter().map(|k| vec![k as f64 * 0.05]).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rho_matches_brute_force(dim in 1usize..=2, seed in any::<u64>(), n in 0usize..=5) {
        let mut r = substream(seed, &[]);
        let mut draw = || (0..n).map(|_| (0..dim).map(|_| r.random_range(-3.0..3.0)).collect()).collect::<Vec<Vec<f64>>>();
        let (a, b) = (draw(), draw());
        let got = rho(&config(dim, &a), &config(dim, &b)).unwrap();
        let want = brute_rho(&a, &b);
        prop_assert!((got - want).abs() <= 1e-9 * (1.0 + want));
    }

    #[test]
    fn rho_is_a_metric(a in points(2, 3..=3), b in points(2, 3..=3), c in points(2, 3..=3)) {
        let (ga, gb, gc) = (config(2, &a), config(2, &b), config(2, &c));
        let ab = rho(&ga, &gb).unwrap();
        prop_assert!(rho(&ga, &ga).unwrap() == 0.0);
        prop_assert!((ab - rho(&gb, &ga).unwrap()).abs() < 1e-12);
        prop_assert!(ab <= rho(&ga, &gc).unwrap() + rho(&gc, &gb).unwrap() + 1e-9);
    }

    #[test]
    fn rho_is_infinite_across_counts(a in points(1, 0..=3), b in points(1, 4..=6)) {
        prop_assert!(rho(&config(1, &a), &config(1, &b)).unwrap().is_infinite());
    }

    #[test]
    fn flat_metric_is_a_pseudometric(a in points(1, 0..=3), b in points(1, 0..=3), c in points(1, 0..=3), i in 1u32..=4) {
        let (ga, gb, gc) = (config(1, &a), config(1, &b), config(1, &c));
        let ab = flat_metric(&ga, &gb, i).unwrap();
        prop_assert!(ab >= 0.0);
        prop_assert!(flat_metric(&ga, &ga, i).unwrap() < 1e-9);
        prop_assert!((ab - flat_metric(&gb, &ga, i).unwrap()).abs() < 1e-9);
        let via = flat_metric(&ga, &gc, i).unwrap() + flat_metric(&gc, &gb, i).unwrap();
        prop_assert!(ab <= via + 1e-9);
    }

    #[test]
    fn flat_metric_grows_with_the_ball(a in points(1, 0..=3), b in points(1, 0..=3), i in 1u32..=4) {
        let (ga, gb) = (config(1, &a), config(1, &b));
        prop_assert!(flat_metric(&ga, &gb, i).unwrap() <= flat_metric(&ga, &gb, i + 1).unwrap() + 1e-9);
    }

    #[test]
    fn k_transform_round_trip(g in kernel(), pts in distinct_1d(0..=5)) {
        let eta = FiniteConfiguration::new(1, pts.clone()).unwrap();
        let back = inverse_k_transform(|sub| k_transform_points(&g, sub).unwrap(), &eta).unwrap();
        let refs: Vec<&[f64]> = pts.iter().map(|p| p.as_slice()).collect();
        let want = g.eval(&refs);
        prop_assert!((back - want).abs() <= 1e-9 * (1.0 + want.abs()));
    }

    #[test]
    fn star_turns_into_a_product(g1 in kernel(), g2 in kernel(), pts in distinct_1d(0..=4)) {
        let refs: Vec<&[f64]> = pts.iter().map(|p| p.as_slice()).collect();
        // K(G1 ⋆ G2) = KG1 · KG2 on every sub-configuration
        let eta = FiniteConfiguration::new(1, pts.clone()).unwrap();
        let direct = star_convolution(&g1, &g2, &eta).unwrap();
        let via_k = inverse_k_transform(
            |sub| k_transform_points(&g1, sub).unwrap() * k_transform_points(&g2, sub).unwrap(),
            &eta,
        ).unwrap();
        prop_assert!((direct - via_k).abs() <= 1e-8 * (1.0 + via_k.abs()));
        let star = KernelFunction::star(&g1, &g2).unwrap();
        let full = k_transform_points(&star, &refs).unwrap();
        let prod = k_transform_points(&g1, &refs).unwrap() * k_transform_points(&g2, &refs).unwrap();
        prop_assert!((full - prod).abs() <= 1e-8 * (1.0 + prod.abs()));
    }

    #[test]
    fn tail_mass_is_monotone(d in 1usize..=6, t in 0.05..4.0f64, r in 0.0..8.0f64, dr in 0.01..2.0f64) {
        let k = HeatKernelParams::new(d, t).unwrap();
        let (near, far) = (k.tail_mass(r).unwrap(), k.tail_mass(r + dr).unwrap());
        prop_assert!((0.0..=1.0).contains(&near));
        prop_assert!(far <= near);
    }

    #[test]
    fn permanent_ignores_row_order(n in 1usize..=6, seed in any::<u64>(), swap in (0usize..6, 0usize..6)) {
        let mut r = substream(seed, &[]);
        let m: Vec<f64> = (0..n * n).map(|_| r.random_range(-1.0..1.0)).collect();
        let (i, j) = (swap.0 % n, swap.1 % n);
        let mut p = m.clone();
        for k in 0..n {
            p.swap(i * n + k, j * n + k);
        }
        let mut tr = vec![0.0; n * n];
        for a in 0..n {
            for b in 0..n {
                tr[b * n + a] = m[a * n + b];
            }
        }
        let base = permanent(&m, n).unwrap();
        prop_assert!((base - permanent(&p, n).unwrap()).abs() <= 1e-12 * (1.0 + base.abs()));
        prop_assert!((base - permanent(&tr, n).unwrap()).abs() <= 1e-12 * (1.0 + base.abs()));
    }

    #[test]
    fn correlation_methods_agree(gamma in distinct_1d(1..=5), theta in points(1, 1..=3), t in 0.1..2.0f64) {
        let g = config(1, &gamma);
        let th = FiniteConfiguration::new(1, theta).unwrap();
        let ie = correlation_by_inclusion_exclusion(&g, &th, t).unwrap();
        let en = correlation_by_enumeration(&g, &th, t).unwrap();
        prop_assert!((ie - en).abs() <= 1e-10 * (1.0 + en.abs()));
        prop_assert!(ie >= -1e-12);
    }

    #[test]
    fn substreams_are_deterministic(seed in any::<u64>(), a in any::<u64>(), b in any::<u64>()) {
        let draw = |keys: &[u64]| -> Vec<u64> {
            let mut r = substream(seed, keys);
            (0..4).map(|_| r.random()).collect()
        };
        prop_assert_eq!(draw(&[a, b]), draw(&[a, b]));
        if a != b {
            prop_assert_ne!(draw(&[a]), draw(&[b]));
        }
    }

    #[test]
    fn configuration_json_round_trip(pts in points(2, 0..=6)) {
        let c = config(2, &pts);
        let back = Configuration::from_json(&c.to_json()).unwrap();
        prop_assert!(back.same_multiset(&c));
        prop_assert_eq!(back.window_radius(), c.window_radius());
        prop_assert_eq!(back.to_json(), c.to_json());
    }
}

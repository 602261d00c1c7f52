#![allow(clippy::excessive_precision)]

//! Library values against independent implementations.

use confheat_core::harmonic::{lebesgue_poisson_integral, IntegrationSpec, KernelFunction};
use confheat_core::kernel::{chapman_kolmogorov_quadrature, tau};
use confheat_core::points::truncation_tail_bound;
use confheat_core::semigroup::{gaussian_ball_probability, ExpFunctional, ExpProfile};
use confheat_core::special::{erf, gamma_p, gamma_q, ln_gamma, unit_ball_volume};
use confheat_core::{HeatKernelParams, Window};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};
use statrs::function::gamma as sgamma;

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * b.abs()
}

// reference values computed with mpmath at 30 digits
#[test]
fn special_functions_match_reference_values() {
    for &(x, v) in &[
        (0.1, 2.252712651734205902),
        (0.5, 0.57236494292470008707),
        (2.5, 0.28468287047291915963),
        (7.3, 7.1478925230222486921),
        (40.0, 106.63176026064345913),
    ] {
        assert!(close(ln_gamma(x), v, 1e-14), "lnΓ({x})");
    }
    for &(a, z, p, q) in &[
        (0.5, 0.01, 0.11246291601828489337, 0.88753708398171510663),
        (0.5, 25.0, 0.99999999999846254021, 1.5374597944280348502e-12),
        (1.5, 1.0, 0.427593295529120166, 0.572406704470879834),
        (1.5, 25.0, 0.99999999992010820755, 7.9891792449514711391e-11),
        (3.0, 0.01, 1.6542165280748768657e-7, 0.99999983457834719251),
        (3.0, 4.0, 0.76189669444645565618, 0.23810330555354434382),
        (10.0, 1.0, 1.1142547833872067735e-7, 0.99999988857452166128),
        (10.0, 25.0, 0.99977852336175121642, 0.00022147663824878358122),
    ] {
        assert!(close(gamma_p(a, z).unwrap(), p, 1e-13), "P({a}, {z})");
        assert!(close(gamma_q(a, z).unwrap(), q, 1e-13), "Q({a}, {z})");
    }
    for &(x, v) in &[
        (-2.0, -0.99532226501895273416),
        (-0.3, -0.32862675945912741619),
        (0.7, 0.67780119383741844228),
        (3.0, 0.99997790950300141456),
    ] {
        assert!(close(erf(x), v, 1e-15), "erf({x})");
    }
}

#[test]
fn tail_mass_is_a_chi_square_tail() {
    // |Y|²/(2t) is χ²_d for Y ~ N(0, 2t I_d)
    for d in 1..=5 {
        let chi = ChiSquared::new(d as f64).unwrap();
        for &t in &[0.1, 1.0, 3.0] {
            let k = HeatKernelParams::new(d, t).unwrap();
            for &r in &[0.2, 1.0, 2.5, 6.0] {
                let want = chi.sf(r * r / (2.0 * t));
                assert!((k.tail_mass(r).unwrap() - want).abs() < 1e-12, "d={d} t={t} r={r}");
            }
        }
    }
}

#[test]
fn one_dimensional_tail_is_twice_the_normal_tail() {
    // statrs' erf is good to ~5e-11, which sets the tolerance here
    let n = Normal::new(0.0, 1.0).unwrap();
    for &(delta, r) in &[(0.01f64, 0.25f64), (0.5, 1.0), (2.0, 3.0)] {
        let want = 2.0 * n.sf(r / (2.0 * delta).sqrt());
        assert!((tau(1, delta, r).unwrap() - want).abs() < 1e-10);
    }
    // oscillation bound example: 2τ(0.01, 0.25) = 4Φ̄(0.25/√0.02)
    let bound = 2.0 * tau(1, 0.01, 0.25).unwrap();
    assert!((bound - 4.0 * n.sf(0.25 / 0.02f64.sqrt())).abs() < 1e-10);
    assert!((bound - 0.1542).abs() < 5e-4);
}

#[test]
fn chapman_kolmogorov_by_quadrature() {
    let kt = HeatKernelParams::new(1, 0.3).unwrap();
    let ks = HeatKernelParams::new(1, 0.7).unwrap();
    let direct = HeatKernelParams::new(1, 1.0).unwrap().density(&[0.2], &[-0.9]).unwrap();
    let q = chapman_kolmogorov_quadrature(&kt, &ks, &[0.2], &[-0.9], 1e-13).unwrap();
    assert!((q - direct).abs() < 1e-10 * direct);
}

#[test]
fn ball_probability_one_dimensional() {
    let n = Normal::new(0.0, 1.0).unwrap();
    let (r, sigma, radius) = (0.4, 0.7, 1.1);
    let want = n.cdf((radius - r) / sigma) - n.cdf((-radius - r) / sigma);
    assert!((gaussian_ball_probability(1, r, sigma, radius).unwrap() - want).abs() < 1e-10);
}

#[test]
fn ball_probability_at_the_origin_is_chi_square() {
    let chi = ChiSquared::new(3.0).unwrap();
    let (sigma, radius) = (0.8, 1.3);
    let want = chi.cdf((radius / sigma) * (radius / sigma));
    assert!((gaussian_ball_probability(3, 0.0, sigma, radius).unwrap() - want).abs() < 1e-12);
}

#[test]
fn gaussian_bump_convolution_closed_form() {
    // p_t * (a e^{-x²/2w²}) = a (w²/(w²+2t))^{d/2} e^{-x²/2(w²+2t)}
    let f = ExpFunctional::new(
        2,
        ExpProfile::GaussianBump {
            amplitude: 0.6,
            width: 0.9,
        },
    )
    .unwrap();
    let (t, x): (f64, _) = (0.35, [0.4, -0.7]);
    let w2: f64 = 0.81 + 2.0 * t;
    let want = -0.6 * (0.81 / w2) * (-(0.16 + 0.49) / (2.0 * w2)).exp();
    assert!((f.convolved(&x, t).unwrap() - want).abs() < 1e-14);
}

#[test]
fn lebesgue_poisson_of_constants() {
    // ∫ Σ_n G^(n) dλ over B(0, R) with G^(n) = 1: Σ_n |B|^n / n! = e^{|B|}
    let g = KernelFunction::ones(2, 20).unwrap();
    let w = Window::new(0.8, 1.0).unwrap();
    let rep = lebesgue_poisson_integral(&g, &w, 20, &IntegrationSpec::default()).unwrap();
    let vol = unit_ball_volume(2) * 0.64;
    assert!((rep.value - vol.exp()).abs() < 1e-12 * vol.exp());
}

#[test]
fn truncation_bound_dominates_the_exact_tail() {
    // E Σ_{|x|>R} e^{-|x|/n} = z ω_d d ∫_R^∞ e^{-r/n} r^{d-1} dr = z ω_d d n^d Γ(d) Q(d, R/n)
    for d in 1..=3 {
        for &(radius, n) in &[(10.0, 1u32), (7.5, 2), (3.2, 3)] {
            let nf = n as f64;
            let exact = unit_ball_volume(d)
                * d as f64
                * nf.powi(d as i32)
                * sgamma::gamma(d as f64)
                * sgamma::gamma_ur(d as f64, radius / nf);
            let bound = truncation_tail_bound(radius, n, d, 1.0).unwrap();
            assert!(bound >= exact, "d={d} R={radius} n={n}: {bound} < {exact}");
        }
    }
}

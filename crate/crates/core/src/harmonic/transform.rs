use serde::{Deserialize, Serialize};

use super::kernel_fn::{FiniteConfiguration, KernelFunction, Level};
use crate::error::{invalid, Error, Result};
use crate::points::{uniform_in_ball, Configuration, Window};
use crate::quad::ball_rule;
use crate::rng::substream;
use crate::special::{gamma, gamma_p, ln_gamma, unit_ball_volume, unit_sphere_area};
use crate::stats::MeanEstimate;

/// Largest number of sub-configurations `k_transform` will enumerate.
pub const MAX_SUBSETS: u128 = 1 << 30;
/// Largest `|η|` accepted by `inverse_k_transform`.
pub const MAX_INVERSE_SIZE: usize = 25;
/// Largest `|η|` accepted by `star_convolution`.
pub const MAX_STAR_SIZE: usize = 12;

fn binomial(n: u128, k: u128) -> u128 {
    let mut r: u128 = 1;
    for i in 0..k {
        r = r * (n - i) / (i + 1);
    }
    r
}

fn subset_count(n: usize, max_k: usize) -> u128 {
    (0..=max_k.min(n) as u128).map(|k| binomial(n as u128, k)).sum()
}

/// Calls `f` on every index subset of `0..n` of size at most `max_k`, each
/// in increasing order.
fn for_each_subset<F: FnMut(&[usize])>(n: usize, max_k: usize, f: &mut F) {
    fn rec<F: FnMut(&[usize])>(start: usize, n: usize, max_k: usize, cur: &mut Vec<usize>, f: &mut F) {
        f(cur);
        if cur.len() == max_k {
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, max_k, cur, f);
            cur.pop();
        }
    }
    rec(0, n, max_k, &mut Vec::with_capacity(max_k), f);
}

/// `(KG)(γ) = Σ_{η ⋐ γ} G(η)` for a simple configuration.
pub fn k_transform(g: &KernelFunction, gamma: &Configuration) -> Result<f64> {
    if !gamma.is_simple() {
        return invalid("K-transform needs a simple configuration");
    }
    if gamma.dim() != g.dim() {
        return invalid("kernel and configuration dimensions differ");
    }
    let canon = gamma.as_multiset();
    let pts: Vec<&[f64]> = canon.particles().collect();
    k_transform_points(g, &pts)
}

/// `(KG)` on an explicit list of distinct points.
pub fn k_transform_points(g: &KernelFunction, pts: &[&[f64]]) -> Result<f64> {
    let count = subset_count(pts.len(), g.max_order());
    if count > MAX_SUBSETS {
        return Err(Error::Capacity {
            what: "sub-configurations in K-transform",
            requested: count,
            limit: MAX_SUBSETS,
        });
    }
    let mut sum = 0.0;
    let mut buf: Vec<&[f64]> = Vec::with_capacity(g.max_order());
    for_each_subset(pts.len(), g.max_order(), &mut |idx: &[usize]| {
        buf.clear();
        buf.extend(idx.iter().map(|&i| pts[i]));
        sum += g.eval(&buf);
    });
    Ok(sum)
}

/// `(K⁻¹F)(η) = Σ_{θ ⊂ η} (-1)^{|η∖θ|} F(θ)`.
pub fn inverse_k_transform<F>(f: F, eta: &FiniteConfiguration) -> Result<f64>
where
    F: Fn(&[&[f64]]) -> f64,
{
    let n = eta.len();
    if n > MAX_INVERSE_SIZE {
        return Err(Error::Capacity {
            what: "inverse K-transform size",
            requested: n as u128,
            limit: MAX_INVERSE_SIZE as u128,
        });
    }
    let pts = eta.points();
    let mut buf: Vec<&[f64]> = Vec::with_capacity(n);
    let mut sum = 0.0;
    for mask in 0u32..(1u32 << n) {
        buf.clear();
        buf.extend((0..n).filter(|i| mask >> i & 1 == 1).map(|i| pts[i]));
        let sign = if (n - buf.len()).is_multiple_of(2) { 1.0 } else { -1.0 };
        sum += sign * f(&buf);
    }
    Ok(sum)
}

/// `(G1 ⋆ G2)(η) = Σ G1(η₁ ∪ η₂) G2(η₂ ∪ η₃)` over ordered partitions
/// `(η₁, η₂, η₃)` of `η`.
pub fn star_convolution(g1: &KernelFunction, g2: &KernelFunction, eta: &FiniteConfiguration) -> Result<f64> {
    if eta.len() > MAX_STAR_SIZE {
        return Err(Error::Capacity {
            what: "star-convolution size",
            requested: eta.len() as u128,
            limit: MAX_STAR_SIZE as u128,
        });
    }
    Ok(star_points(g1, g2, &eta.points()))
}

pub(crate) fn star_points(g1: &KernelFunction, g2: &KernelFunction, pts: &[&[f64]]) -> f64 {
    let n = pts.len();
    let total = 3usize.pow(n as u32);
    let mut a: Vec<&[f64]> = Vec::with_capacity(n);
    let mut b: Vec<&[f64]> = Vec::with_capacity(n);
    let mut sum = 0.0;
    for code in 0..total {
        a.clear();
        b.clear();
        let mut c = code;
        for p in pts {
            // 0: only in η₁, 1: in η₂ (shared), 2: only in η₃
            match c % 3 {
                0 => a.push(p),
                1 => {
                    a.push(p);
                    b.push(p);
                }
                _ => b.push(p),
            }
            c /= 3;
        }
        if a.len() > g1.max_order() || b.len() > g2.max_order() {
            continue;
        }
        sum += g1.eval(&a) * g2.eval(&b);
    }
    sum
}

/// How the n-fold integrals of `lebesgue_poisson_integral` are computed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegrationSpec {
    /// Radial Gauss–Legendre nodes of the ball product rule.
    pub nodes: usize,
    /// Monte Carlo samples per order when quadrature is not used.
    pub mc_samples: usize,
    pub seed: u64,
    /// Product quadrature is used for custom levels only while the number
    /// of integrand evaluations stays below this.
    pub max_evaluations: u64,
}

impl Default for IntegrationSpec {
    fn default() -> Self {
        Self {
            nodes: 16,
            mc_samples: 100_000,
            seed: 0,
            max_evaluations: 20_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LebesguePoissonReport {
    pub value: f64,
    /// Combined quadrature and Monte Carlo error estimate of the retained
    /// orders.
    pub error: f64,
    /// Bound on the orders above `n_max`; `None` when no bound is available.
    pub remainder_bound: Option<f64>,
    /// Weighted contribution `(z^n / n!) ∫ G^(n)` of each order.
    pub per_order: Vec<f64>,
    pub routes: Vec<String>,
    pub warnings: Vec<String>,
}

/// Integral of `G` against the Lebesgue–Poisson measure with intensity
/// `window.intensity()` restricted to `B(0, window.radius())`.
pub fn lebesgue_poisson_integral(
    g: &KernelFunction,
    window: &Window,
    n_max: usize,
    spec: &IntegrationSpec,
) -> Result<LebesguePoissonReport> {
    if spec.nodes < 2 {
        return invalid("quadrature needs at least two radial nodes");
    }
    let d = g.dim();
    let r = window.radius();
    let z = window.intensity();
    let vol = unit_ball_volume(d) * r.powi(d as i32);
    let fine = ball_rule(d, r, spec.nodes);
    let coarse = ball_rule(d, r, spec.nodes / 2 + 1);

    let mut value = g.value_at_empty();
    let mut err2 = 0.0;
    let mut per_order = vec![value];
    let mut routes = vec!["exact".to_string()];
    let top = n_max.min(g.max_order());
    for n in 1..=top {
        let weight = (n as f64 * z.ln() - ln_gamma(n as f64 + 1.0)).exp();
        let (integral, err, route) = match g.level(n).expect("n within max_order") {
            Level::Zero => (0.0, 0.0, "exact"),
            Level::Constant(c) => (c * vol.powi(n as i32), 0.0, "exact"),
            Level::Product { coefficient, factor } => match (&fine, &coarse) {
                (Some((fp, fw)), Some((cp, cw))) => {
                    let i1 = rule_sum(d, fp, fw, |x| factor.eval(x));
                    let i0 = rule_sum(d, cp, cw, |x| factor.eval(x));
                    let e1 = (i1 - i0).abs();
                    let v = coefficient * i1.powi(n as i32);
                    let e = coefficient.abs() * n as f64 * i1.abs().powi(n as i32 - 1) * e1;
                    (v, e, "quadrature")
                }
                _ => {
                    let est = mc_level(g, n, d, r, spec)?;
                    (est.mean, est.std_error, "monte-carlo")
                }
            },
            Level::Custom(_) => {
                let evals = fine.as_ref().map(|(_, w)| (w.len() as u64).saturating_pow(n as u32));
                match (&fine, &coarse, evals) {
                    (Some(f), Some(c), Some(e)) if n <= 3 && e <= spec.max_evaluations => {
                        let i1 = product_rule(g, n, d, f);
                        let i0 = product_rule(g, n, d, c);
                        (i1, (i1 - i0).abs(), "quadrature")
                    }
                    _ => {
                        let est = mc_level(g, n, d, r, spec)?;
                        (est.mean, est.std_error, "monte-carlo")
                    }
                }
            }
        };
        let contrib = weight * integral;
        value += contrib;
        err2 += (weight * err).powi(2);
        per_order.push(contrib);
        routes.push(route.to_string());
    }

    let mut warnings = Vec::new();
    let remainder_bound = if g.max_order() <= n_max {
        Some(0.0)
    } else if let Some(dc) = g.d_class() {
        let k = 1.0 + dc.eps;
        let shell = unit_sphere_area(d) * gamma(d as f64) * gamma_p(d as f64, k * r)? / k.powi(d as i32);
        let a = z * dc.c * shell;
        // Σ_{n > N} aⁿ/n! = e^a P(N + 1, a)
        Some(a.exp() * gamma_p(n_max as f64 + 1.0, a)?)
    } else {
        warnings.push(format!(
            "orders {}..={} dropped without a decay certificate; remainder is unbounded",
            n_max + 1,
            g.max_order()
        ));
        None
    };
    Ok(LebesguePoissonReport {
        value,
        error: err2.sqrt(),
        remainder_bound,
        per_order,
        routes,
        warnings,
    })
}

fn rule_sum<F: Fn(&[f64]) -> f64>(d: usize, pts: &[f64], ws: &[f64], f: F) -> f64 {
    pts.chunks_exact(d).zip(ws).map(|(p, w)| w * f(p)).sum()
}

fn product_rule(g: &KernelFunction, n: usize, d: usize, rule: &(Vec<f64>, Vec<f64>)) -> f64 {
    let (pts, ws) = rule;
    let m = ws.len();
    let mut idx = vec![0usize; n];
    let mut args: Vec<&[f64]> = vec![&pts[0..d]; n];
    let mut sum = 0.0;
    loop {
        let mut w = 1.0;
        for (k, &i) in idx.iter().enumerate() {
            args[k] = &pts[i * d..(i + 1) * d];
            w *= ws[i];
        }
        sum += w * g.eval(&args);
        let mut k = 0;
        loop {
            if k == n {
                return sum;
            }
            idx[k] += 1;
            if idx[k] < m {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

fn mc_level(g: &KernelFunction, n: usize, d: usize, r: f64, spec: &IntegrationSpec) -> Result<MeanEstimate> {
    if spec.mc_samples < 2 {
        return invalid("Monte Carlo integration needs at least two samples");
    }
    let vol_n = (unit_ball_volume(d) * r.powi(d as i32)).powi(n as i32);
    let mut rng = substream(spec.seed, &[n as u64]);
    let mut coords = Vec::with_capacity(n * d);
    let mut values = Vec::with_capacity(spec.mc_samples);
    for _ in 0..spec.mc_samples {
        coords.clear();
        for _ in 0..n {
            uniform_in_ball(d, r, &mut rng, &mut coords);
        }
        let args: Vec<&[f64]> = coords.chunks_exact(d).collect();
        values.push(vol_n * g.eval(&args));
    }
    Ok(MeanEstimate::from_values(&values))
}

#[cfg(test)]
mod tests {
    use super::super::kernel_fn::Factor;
    use super::*;
    use std::sync::Arc;

    fn gamma_of(points: &[f64]) -> Configuration {
        let pts: Vec<Vec<f64>> = points.iter().map(|&x| vec![x]).collect();
        Configuration::from_points_auto(1, &pts).unwrap()
    }

    fn only_level(n: usize) -> KernelFunction {
        let mut levels = vec![Level::Zero; n + 1];
        levels[n] = Level::Constant(1.0);
        KernelFunction::new(1, levels).unwrap()
    }

    #[test]
    fn k_transform_counts() {
        let g = gamma_of(&[0.0, 1.0, 2.0, 3.0, 4.0]);
        assert_eq!(
            k_transform(&KernelFunction::constant(1, 2.5).unwrap(), &g).unwrap(),
            2.5
        );
        assert_eq!(k_transform(&only_level(1), &g).unwrap(), 5.0);
        assert_eq!(k_transform(&only_level(2), &g).unwrap(), 10.0);
    }

    #[test]
    fn k_transform_capacity() {
        let pts: Vec<f64> = (0..31).map(|i| i as f64).collect();
        let g = KernelFunction::ones(1, 31).unwrap();
        assert!(matches!(k_transform(&g, &gamma_of(&pts)), Err(Error::Capacity { .. })));
    }

    #[test]
    fn inverse_of_constants_and_counts() {
        let e0 = FiniteConfiguration::empty(1);
        let e2 = FiniteConfiguration::new(1, vec![vec![0.0], vec![1.0]]).unwrap();
        let e1 = FiniteConfiguration::new(1, vec![vec![0.0]]).unwrap();
        assert_eq!(inverse_k_transform(|_| 1.0, &e0).unwrap(), 1.0);
        assert_eq!(inverse_k_transform(|_| 1.0, &e2).unwrap(), 0.0);
        assert_eq!(inverse_k_transform(|p| p.len() as f64, &e1).unwrap(), 1.0);
        assert_eq!(inverse_k_transform(|p| p.len() as f64, &e2).unwrap(), 0.0);
    }

    #[test]
    fn star_on_small_sets() {
        let g1 = KernelFunction::new(
            1,
            vec![
                Level::Constant(2.0),
                Level::Custom(Arc::new(|p: &[&[f64]]| 1.0 + p[0][0])),
            ],
        )
        .unwrap();
        let g2 = KernelFunction::new(
            1,
            vec![
                Level::Constant(-3.0),
                Level::Custom(Arc::new(|p: &[&[f64]]| p[0][0] * p[0][0])),
            ],
        )
        .unwrap();
        let e0 = FiniteConfiguration::empty(1);
        assert_eq!(star_convolution(&g1, &g2, &e0).unwrap(), -6.0);
        let x = 0.7;
        let e1 = FiniteConfiguration::new(1, vec![vec![x]]).unwrap();
        let want = (1.0 + x) * -3.0 + (1.0 + x) * x * x + 2.0 * x * x;
        assert!((star_convolution(&g1, &g2, &e1).unwrap() - want).abs() < 1e-15);
    }

    #[test]
    fn star_product_rule() {
        let g1 = KernelFunction::new(
            1,
            vec![
                Level::Constant(0.5),
                Level::Custom(Arc::new(|p: &[&[f64]]| p[0][0].sin())),
                Level::Custom(Arc::new(|p: &[&[f64]]| p[0][0] * p[1][0] - 1.0)),
            ],
        )
        .unwrap();
        let g2 = KernelFunction::new(
            1,
            vec![
                Level::Constant(1.5),
                Level::Custom(Arc::new(|p: &[&[f64]]| p[0][0].cos())),
            ],
        )
        .unwrap();
        let st = KernelFunction::star(&g1, &g2).unwrap();
        let g = gamma_of(&[-1.2, 0.3, 0.9, 2.0, 2.5]);
        let lhs = k_transform(&st, &g).unwrap();
        let rhs = k_transform(&g1, &g).unwrap() * k_transform(&g2, &g).unwrap();
        assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs());
    }

    #[test]
    fn lebesgue_poisson_examples() {
        let spec = IntegrationSpec::default();
        let w = Window::new(2.0, 0.7).unwrap();
        let one = KernelFunction::constant(1, 1.0).unwrap();
        assert_eq!(lebesgue_poisson_integral(&one, &w, 20, &spec).unwrap().value, 1.0);

        let ind = KernelFunction::single_product(1, 1, 1.0, Factor::Ball { radius: 2.0 }).unwrap();
        let rep = lebesgue_poisson_integral(&ind, &w, 20, &spec).unwrap();
        assert!((rep.value - 0.7 * 4.0).abs() < 1e-12);

        let n = 18;
        let all = KernelFunction::ones(2, n).unwrap();
        let w2 = Window::new(1.0, 0.5).unwrap();
        let rep = lebesgue_poisson_integral(&all, &w2, n, &spec).unwrap();
        let a = 0.5 * std::f64::consts::PI;
        assert!((rep.value - a.exp()).abs() < 1e-9);
        let rep = lebesgue_poisson_integral(&all, &w2, 3, &spec).unwrap();
        assert!(rep.remainder_bound.is_none());
        assert_eq!(rep.warnings.len(), 1);
    }

    #[test]
    fn lebesgue_poisson_custom_quadrature_and_mc() {
        let spec = IntegrationSpec {
            mc_samples: 200_000,
            ..Default::default()
        };
        let w = Window::new(1.0, 1.0).unwrap();
        // G^(2)(x, y) = x·y + 1 on the unit interval → ∫∫ = 4, weight 1/2
        let g = KernelFunction::new(
            1,
            vec![
                Level::Zero,
                Level::Zero,
                Level::Custom(Arc::new(|p: &[&[f64]]| p[0][0] * p[1][0] + 1.0)),
                Level::Zero,
                Level::Custom(Arc::new(|p: &[&[f64]]| p.iter().map(|q| q[0] * q[0]).sum())),
            ],
        )
        .unwrap();
        let rep = lebesgue_poisson_integral(&g, &w, 4, &spec).unwrap();
        assert_eq!(rep.routes[2], "quadrature");
        assert_eq!(rep.routes[4], "monte-carlo");
        assert!((rep.per_order[2] - 2.0).abs() < 1e-12);
        // ∫_{[-1,1]^4} Σ x_k² = 4 · (2/3) · 8, weight 1/24
        let want = 4.0 * (2.0 / 3.0) * 8.0 / 24.0;
        assert!((rep.per_order[4] - want).abs() < 4.0 * rep.error);
    }

    #[test]
    fn remainder_bound_with_certificate() {
        let g = KernelFunction::new(
            1,
            (0..=10)
                .map(|n| {
                    if n == 0 {
                        Level::Constant(1.0)
                    } else {
                        Level::Product {
                            coefficient: 1.0,
                            factor: Factor::Gaussian {
                                center: vec![0.0],
                                amplitude: 1.0,
                                width: 0.5,
                            },
                        }
                    }
                })
                .collect(),
        )
        .unwrap()
        .certified(0.5)
        .unwrap();
        let w = Window::new(3.0, 1.0).unwrap();
        let full = lebesgue_poisson_integral(&g, &w, 10, &IntegrationSpec::default()).unwrap();
        let cut = lebesgue_poisson_integral(&g, &w, 3, &IntegrationSpec::default()).unwrap();
        let bound = cut.remainder_bound.unwrap();
        assert!((full.value - cut.value).abs() <= bound);
        assert!(bound < 1.0);
    }
}

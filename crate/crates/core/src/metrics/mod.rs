//! The functionals `B_n` and the configuration distances `d_K`, `d_1`,
//! `d_∞` and `ρ`.

pub mod hungarian;
pub mod simplex;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::kernel::{norm, sq_dist};
use crate::points::{lex_cmp, truncation_tail_bound, Configuration};

/// Series truncation defaults for `d_K` and the `B_n` sum.
pub const DEFAULT_I_MAX: u32 = 20;
pub const DEFAULT_N_MAX: u32 = 20;

/// A distance value with the error committed by truncating its series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricValue {
    /// May be `+∞`.
    pub value: f64,
    pub truncation_error: f64,
}

impl MetricValue {
    pub fn exact(value: f64) -> Self {
        Self {
            value,
            truncation_error: 0.0,
        }
    }
}

/// `B_n(γ) = Σ_{x∈γ} exp(-|x|/n)`, counted with multiplicity.
pub fn b_n(gamma: &Configuration, n: u32) -> f64 {
    let nf = n as f64;
    gamma
        .sites()
        .map(|s| s.multiplicity as f64 * (-norm(s.position) / nf).exp())
        .sum()
}

/// `B_n` of the window plus the expected contribution of the Poisson tail
/// outside it, when the configuration carries a tail model.
pub fn b_n_with_tail(gamma: &Configuration, n: u32) -> Result<MetricValue> {
    let value = b_n(gamma, n);
    let truncation_error = match gamma.tail_model() {
        Some(tail) => truncation_tail_bound(gamma.window_radius(), n, gamma.dim(), tail.intensity)?,
        None => 0.0,
    };
    Ok(MetricValue {
        value,
        truncation_error,
    })
}

fn same_dim(g1: &Configuration, g2: &Configuration) -> Result<()> {
    if g1.dim() != g2.dim() {
        return invalid(format!(
            "configurations live in different dimensions ({} vs {})",
            g1.dim(),
            g2.dim()
        ));
    }
    Ok(())
}

/// Union support of `g1` and `g2` with signed weights `mult₁ - mult₂`.
fn signed_support(g1: &Configuration, g2: &Configuration) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut all: Vec<(&[f64], f64)> = g1
        .sites()
        .map(|s| (s.position, s.multiplicity as f64))
        .chain(g2.sites().map(|s| (s.position, -(s.multiplicity as f64))))
        .collect();
    all.sort_by(|a, b| lex_cmp(a.0, b.0));
    let mut points: Vec<Vec<f64>> = Vec::new();
    let mut weights: Vec<f64> = Vec::new();
    for (p, w) in all {
        if points.last().is_some_and(|q| q.as_slice() == p) {
            *weights.last_mut().expect("nonempty") += w;
        } else {
            points.push(p.to_vec());
            weights.push(w);
        }
    }
    (points, weights)
}

/// `d_{K,i}(g1, g2)`: the largest `∫ f d(g1 - g2)` over 1-Lipschitz `f`
/// vanishing outside `B(0, i)`.
///
/// On a finite support this is the linear program over the values `f(x)`
/// with `|f(x) - f(y)| ≤ |x - y|` and `|f(x)| ≤ max(0, i - |x|)`; any
/// feasible vector extends to a function on ℝ^d (McShane).
pub fn flat_metric(g1: &Configuration, g2: &Configuration, i: u32) -> Result<f64> {
    same_dim(g1, g2)?;
    if i == 0 {
        return invalid("flat metric index i must be positive");
    }
    let (points, weights) = signed_support(g1, g2);
    let radius = i as f64;
    // points with zero weight or zero cap cannot change the optimum
    let (points, weights): (Vec<_>, Vec<_>) = points
        .into_iter()
        .zip(weights)
        .filter(|(p, w)| *w != 0.0 && norm(p) < radius)
        .unzip();
    let n = points.len();
    if n == 0 {
        return Ok(0.0);
    }
    let caps: Vec<f64> = points.iter().map(|p| radius - norm(p)).collect();

    // g_x = f(x) + cap_x ∈ [0, 2 cap_x]
    let m = n * (n - 1) + n;
    let mut a = vec![0.0; m * n];
    let mut b = Vec::with_capacity(m);
    let mut row = 0;
    for x in 0..n {
        for y in 0..n {
            if x == y {
                continue;
            }
            a[row * n + x] = 1.0;
            a[row * n + y] = -1.0;
            let dist = sq_dist(&points[x], &points[y]).sqrt();
            b.push((dist + caps[x] - caps[y]).max(0.0));
            row += 1;
        }
    }
    for x in 0..n {
        a[row * n + x] = 1.0;
        b.push(2.0 * caps[x]);
        row += 1;
    }
    let sol = simplex::maximize(&weights, &a, &b)
        .map_err(|e| Error::Numerical(format!("flat-metric LP solver failed: {e}")))?;
    let offset: f64 = weights.iter().zip(&caps).map(|(w, c)| w * c).sum();
    Ok((sol.objective - offset).max(0.0))
}

/// `d_K = Σ_{i ≤ i_max} 2^{-i} d_{K,i} / (1 + d_{K,i})`, truncation error
/// at most `2^{-i_max}`.
pub fn kantorovich_flat(g1: &Configuration, g2: &Configuration, i_max: u32) -> Result<MetricValue> {
    same_dim(g1, g2)?;
    let mut value = 0.0;
    for i in 1..=i_max {
        let d = flat_metric(g1, g2, i)?;
        value += 0.5f64.powi(i as i32) * d / (1.0 + d);
    }
    Ok(MetricValue {
        value,
        truncation_error: 0.5f64.powi(i_max as i32),
    })
}

/// `d_1 = d_K + |B_1(g1) - B_1(g2)|` with the default truncation.
pub fn d1(g1: &Configuration, g2: &Configuration) -> Result<MetricValue> {
    d1_truncated(g1, g2, DEFAULT_I_MAX)
}

pub fn d1_truncated(g1: &Configuration, g2: &Configuration, i_max: u32) -> Result<MetricValue> {
    let dk = kantorovich_flat(g1, g2, i_max)?;
    Ok(MetricValue {
        value: dk.value + (b_n(g1, 1) - b_n(g2, 1)).abs(),
        truncation_error: dk.truncation_error,
    })
}

/// `d_∞ = d_K + Σ_{n ≤ n_max} 2^{-n} |ΔB_n| / (1 + |ΔB_n|)`.
pub fn d_infty(g1: &Configuration, g2: &Configuration, i_max: u32, n_max: u32) -> Result<MetricValue> {
    let dk = kantorovich_flat(g1, g2, i_max)?;
    let mut value = dk.value;
    for n in 1..=n_max {
        let diff = (b_n(g1, n) - b_n(g2, n)).abs();
        value += 0.5f64.powi(n as i32) * diff / (1.0 + diff);
    }
    Ok(MetricValue {
        value,
        truncation_error: dk.truncation_error + 0.5f64.powi(n_max as i32),
    })
}

/// `ρ(g1, g2) = min_σ (Σ |x_k - y_σ(k)|²)^{1/2}`; `+∞` when the particle
/// counts differ.
pub fn rho(g1: &Configuration, g2: &Configuration) -> Result<f64> {
    same_dim(g1, g2)?;
    let n = g1.particle_count();
    if n != g2.particle_count() {
        return Ok(f64::INFINITY);
    }
    let xs: Vec<&[f64]> = g1.particles().collect();
    let ys: Vec<&[f64]> = g2.particles().collect();
    let mut cost = Vec::with_capacity(n * n);
    for x in &xs {
        for y in &ys {
            cost.push(sq_dist(x, y));
        }
    }
    let (total, _) = hungarian::min_cost_assignment(&cost, n);
    Ok(total.max(0.0).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c1(points: &[f64]) -> Configuration {
        Configuration::from_points(1, 50.0, &points.iter().map(|&x| vec![x]).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn b_n_values() {
        let origin = Configuration::from_points(2, 10.0, &[vec![0.0, 0.0]]).unwrap();
        assert_eq!(b_n(&origin, 3), 1.0);
        let two = Configuration::from_points(2, 10.0, &[vec![0.0, 0.0], vec![0.0, 3.0]]).unwrap();
        assert!((b_n(&two, 3) - (1.0 + (-1.0f64).exp())).abs() < 1e-15);
        assert_eq!(b_n(&Configuration::empty(1, 1.0).unwrap(), 1), 0.0);
        let doubled = Configuration::new(1, 1.0, vec![(vec![0.0], 2)]).unwrap();
        assert_eq!(b_n(&doubled, 1), 2.0);
    }

    #[test]
    fn flat_metric_oracle_cases() {
        assert!((flat_metric(&c1(&[0.0]), &c1(&[1.0]), 5).unwrap() - 1.0).abs() < 1e-12);
        assert!((flat_metric(&c1(&[0.0]), &c1(&[]), 5).unwrap() - 5.0).abs() < 1e-12);
        assert_eq!(flat_metric(&c1(&[0.3, 2.0]), &c1(&[2.0, 0.3]), 5).unwrap(), 0.0);
        // two points far apart: min(|x-y|, 2i - |x| - |y|)
        assert!((flat_metric(&c1(&[-3.0]), &c1(&[4.0]), 5).unwrap() - 3.0).abs() < 1e-12);
        // outside the ball the function must vanish
        assert_eq!(flat_metric(&c1(&[6.0]), &c1(&[]), 5).unwrap(), 0.0);
    }

    #[test]
    fn rho_oracle_cases() {
        assert_eq!(rho(&c1(&[0.0]), &c1(&[3.0])).unwrap(), 3.0);
        assert!((rho(&c1(&[0.0, 2.0]), &c1(&[1.0, 3.0])).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(rho(&c1(&[0.0]), &c1(&[])).unwrap(), f64::INFINITY);
        assert_eq!(rho(&c1(&[1.0, 5.0]), &c1(&[5.0, 1.0])).unwrap(), 0.0);
    }

    #[test]
    fn d1_and_d_infty_basics() {
        let a = c1(&[0.0, 1.5]);
        assert_eq!(d1(&a, &a).unwrap().value, 0.0);
        assert_eq!(d_infty(&a, &a, 20, 20).unwrap().value, 0.0);
        let origin = c1(&[0.0]);
        let empty = c1(&[]);
        let d = d1(&origin, &empty).unwrap();
        let dk = kantorovich_flat(&origin, &empty, 20).unwrap();
        assert!((d.value - dk.value - 1.0).abs() < 1e-15);
        let di = d_infty(&origin, &empty, 20, 20).unwrap();
        assert!((di.truncation_error - 2.0 * 0.5f64.powi(20)).abs() < 1e-20);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let a = c1(&[0.0]);
        let b = Configuration::from_points(2, 1.0, &[vec![0.0, 0.0]]).unwrap();
        assert!(flat_metric(&a, &b, 1).is_err());
        assert!(rho(&a, &b).is_err());
    }
}

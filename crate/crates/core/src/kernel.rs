//! The Gaussian heat kernel on ℝ^d, its tail function and dominating
//! bounds.
//!
//! Convention: `p(t, x, y) = (4πt)^{-d/2} exp(-|x-y|² / 4t)`, i.e. the
//! transition density of a Brownian motion whose coordinates have
//! variance `2t` at time `t`.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::quad;
use crate::special::gamma_q;

/// Dimension and time of a heat kernel `p(t, ·, ·)` on ℝ^d.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeatKernelParams {
    dim: usize,
    t: f64,
}

impl HeatKernelParams {
    pub fn new(dim: usize, t: f64) -> Result<Self> {
        if dim == 0 {
            return invalid("dimension must be at least 1");
        }
        if !(t > 0.0) || !t.is_finite() {
            return invalid(format!("heat kernel time must be positive and finite, got {t}"));
        }
        Ok(Self { dim, t })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    /// Per-coordinate standard deviation of a displacement, `√(2t)`.
    pub fn std_dev(&self) -> f64 {
        (2.0 * self.t).sqrt()
    }

    /// `p(t, x, y)`.
    pub fn density(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        self.check_point(x)?;
        self.check_point(y)?;
        Ok(self.density_sq(sq_dist(x, y)))
    }

    /// Density as a function of the squared distance `|x - y|²`.
    #[inline]
    pub fn density_sq(&self, r2: f64) -> f64 {
        (4.0 * PI * self.t).powf(-(self.dim as f64) / 2.0) * (-r2 / (4.0 * self.t)).exp()
    }

    /// `ln p(t, 0, r e₁)`.
    pub fn ln_density_at(&self, r: f64) -> f64 {
        -(self.dim as f64) / 2.0 * (4.0 * PI * self.t).ln() - r * r / (4.0 * self.t)
    }

    /// One draw from `p_{t,x}(dy)`.
    pub fn sample_transition<R: Rng + ?Sized>(&self, x: &[f64], rng: &mut R) -> Result<Vec<f64>> {
        self.check_point(x)?;
        let sd = self.std_dev();
        Ok(x.iter()
            .map(|&xi| {
                let z: f64 = rng.sample(StandardNormal);
                xi + sd * z
            })
            .collect())
    }

    /// Mass of `p(t, x, ·)` outside the ball `B(x, r)`: `Q(d/2, r²/4t)`.
    pub fn tail_mass(&self, r: f64) -> Result<f64> {
        if !(r >= 0.0) {
            return invalid(format!("tail radius must be nonnegative, got {r}"));
        }
        gamma_q(self.dim as f64 / 2.0, r * r / (4.0 * self.t))
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return invalid(format!(
                "point has {} coordinates, kernel dimension is {}",
                x.len(),
                self.dim
            ));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return invalid("point has non-finite coordinates");
        }
        Ok(())
    }
}

#[inline]
pub(crate) fn sq_dist(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum()
}

#[inline]
pub(crate) fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// `τ(δ, r) = sup_{t ≤ δ} sup_x ∫_{B(x,r)^c} p(t, x, y) dy`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailFunction {
    pub dim: usize,
    pub delta: f64,
    pub r: f64,
}

impl TailFunction {
    /// The Gaussian tail is increasing in `t`, so the supremum sits at
    /// `t = δ`.
    pub fn value(&self) -> Result<f64> {
        HeatKernelParams::new(self.dim, self.delta)?.tail_mass(self.r)
    }
}

/// `τ(δ, r)` for dimension `dim`.
pub fn tau(dim: usize, delta: f64, r: f64) -> Result<f64> {
    TailFunction { dim, delta, r }.value()
}

/// Constants for the Gaussian-dominated bound
/// `p(s, x, y) ≤ c_t exp(-|x-y|^{1+eps_t})` and, optionally, the
/// exponential tail bound `τ(δ̃, r) ≤ C e^{-r}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundCertificate {
    pub c_t: f64,
    pub eps_t: f64,
    /// Half-width of the time window `(t - θ, t + θ)`; `None` checks the
    /// bound at the given grid times only.
    pub theta_t: Option<f64>,
    pub tail: Option<TailCertificate>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailCertificate {
    pub c: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub pass: bool,
    /// max over the grid of `p(s, 0, r e₁) / (c_t exp(-r^{1+eps}))`.
    pub worst_ratio: f64,
    pub worst_at: (f64, f64),
    /// max over grid radii of `τ(δ̃, r) / (C e^{-r})`, if a tail certificate
    /// was supplied.
    pub tail_worst_ratio: Option<f64>,
    pub checked: usize,
}

/// Checks a certificate on a grid of `(s, r)` pairs.
pub fn verify_dominating_bound(
    params: &HeatKernelParams,
    grid: &[(f64, f64)],
    cert: &BoundCertificate,
) -> Result<BoundReport> {
    if grid.is_empty() {
        return invalid("bound grid is empty");
    }
    if !(cert.c_t > 0.0 && cert.eps_t > 0.0) {
        return invalid("certificate constants must be positive");
    }
    if let Some(theta) = cert.theta_t {
        if !(theta > 0.0 && theta < params.t) {
            return invalid(format!("theta_t must lie in (0, t), got {theta}"));
        }
        if let Some(&(s, _)) = grid
            .iter()
            .find(|(s, _)| *s <= params.t - theta || *s >= params.t + theta)
        {
            return invalid(format!(
                "grid time {s} lies outside ({}, {})",
                params.t - theta,
                params.t + theta
            ));
        }
    }
    let mut worst = f64::NEG_INFINITY;
    let mut worst_at = (0.0, 0.0);
    for &(s, r) in grid {
        if !(r >= 0.0) {
            return invalid(format!("grid radius must be nonnegative, got {r}"));
        }
        let k = HeatKernelParams::new(params.dim, s)?;
        let log_ratio = k.ln_density_at(r) - cert.c_t.ln() + r.powf(1.0 + cert.eps_t);
        if log_ratio > worst {
            worst = log_ratio;
            worst_at = (s, r);
        }
    }
    let worst_ratio = worst.exp();
    let tail_worst_ratio = match cert.tail {
        Some(tc) => {
            let mut w = f64::NEG_INFINITY;
            for &(_, r) in grid {
                let v = tau(params.dim, tc.delta, r)?;
                w = w.max(v / (tc.c * (-r).exp()));
            }
            Some(w)
        }
        None => None,
    };
    let pass = worst_ratio <= 1.0 && tail_worst_ratio.is_none_or(|w| w <= 1.0);
    Ok(BoundReport {
        pass,
        worst_ratio,
        worst_at,
        tail_worst_ratio,
        checked: grid.len(),
    })
}

/// Safety factor applied on top of the grid maximum.
pub const CERTIFICATE_MARGIN: f64 = 1.1;

/// Finds `c_t` for a given exponent `eps_t < 1` by grid search over
/// `s ∈ [t-θ, t+θ]` (or `s = t`) and `r ≥ 0`.
pub fn certify_dominating_bound(
    params: &HeatKernelParams,
    eps_t: f64,
    theta_t: Option<f64>,
) -> Result<BoundCertificate> {
    if !(eps_t > 0.0 && eps_t < 1.0) {
        return invalid("a Gaussian kernel is dominated only for eps_t in (0, 1)");
    }
    let times: Vec<f64> = match theta_t {
        Some(theta) => {
            if !(theta > 0.0 && theta < params.t) {
                return invalid(format!("theta_t must lie in (0, t), got {theta}"));
            }
            (0..=40)
                .map(|i| params.t - theta + 2.0 * theta * i as f64 / 40.0)
                .collect()
        }
        None => vec![params.t],
    };
    let mut best = f64::NEG_INFINITY;
    for &s in &times {
        let k = HeatKernelParams::new(params.dim, s)?;
        // r^{1+ε} - r²/4s peaks at r* = (2(1+ε)s)^{1/(1-ε)}
        let r_star = (2.0 * (1.0 + eps_t) * s).powf(1.0 / (1.0 - eps_t));
        let r_max = 4.0 * r_star + 10.0 * (s.sqrt() + 1.0);
        let steps = 20_000;
        for i in 0..=steps {
            let r = r_max * i as f64 / steps as f64;
            best = best.max(k.ln_density_at(r) + r.powf(1.0 + eps_t));
        }
        best = best.max(k.ln_density_at(r_star) + r_star.powf(1.0 + eps_t));
    }
    Ok(BoundCertificate {
        c_t: CERTIFICATE_MARGIN * best.exp(),
        eps_t,
        theta_t,
        tail: None,
    })
}

/// Finds `C` with `τ(δ̃, r) ≤ C e^{-r}` on `[0, r_max]` by grid search.
pub fn certify_tail(dim: usize, delta: f64, r_max: f64) -> Result<TailCertificate> {
    let steps = 20_000;
    let mut best: f64 = 0.0;
    for i in 0..=steps {
        let r = r_max * i as f64 / steps as f64;
        best = best.max(tau(dim, delta, r)? * r.exp());
    }
    Ok(TailCertificate {
        c: CERTIFICATE_MARGIN * best,
        delta,
    })
}

/// `|∫ p(t,x,z) p(s,z,y) dz - p(t+s,x,y)|` with the convolution integral
/// evaluated by completing the square.
pub fn chapman_kolmogorov_residual(
    params_t: &HeatKernelParams,
    params_s: &HeatKernelParams,
    x: &[f64],
    y: &[f64],
) -> Result<f64> {
    if params_t.dim != params_s.dim {
        return invalid("Chapman–Kolmogorov needs equal dimensions");
    }
    let d = params_t.dim as f64;
    let (t, s) = (params_t.t, params_s.t);
    // ∫ exp(-a|z-x|² - b|z-y|²) dz = (π/(a+b))^{d/2} exp(-ab/(a+b)|x-y|²)
    let a = 1.0 / (4.0 * t);
    let b = 1.0 / (4.0 * s);
    let r2 = {
        params_t.check_point(x)?;
        params_t.check_point(y)?;
        sq_dist(x, y)
    };
    let prefactor = (4.0 * PI * t).powf(-d / 2.0) * (4.0 * PI * s).powf(-d / 2.0);
    let convolution = prefactor * (PI / (a + b)).powf(d / 2.0) * (-a * b / (a + b) * r2).exp();
    let direct = HeatKernelParams::new(params_t.dim, t + s)?.density_sq(r2);
    Ok((convolution - direct).abs())
}

/// `∫ p(t,x,z) p(s,z,y) dz` by nested adaptive quadrature.
pub fn chapman_kolmogorov_quadrature(
    params_t: &HeatKernelParams,
    params_s: &HeatKernelParams,
    x: &[f64],
    y: &[f64],
    abs_tol: f64,
) -> Result<f64> {
    if params_t.dim != params_s.dim {
        return invalid("Chapman–Kolmogorov needs equal dimensions");
    }
    if params_t.dim > 3 {
        return Err(Error::Capability("quadrature cross-check is limited to d <= 3".into()));
    }
    params_t.check_point(x)?;
    params_t.check_point(y)?;
    let reach = 14.0 * params_t.std_dev().max(params_s.std_dev());
    let lo: Vec<f64> = x.iter().zip(y).map(|(a, b)| a.min(*b) - reach).collect();
    let hi: Vec<f64> = x.iter().zip(y).map(|(a, b)| a.max(*b) + reach).collect();
    let f = |z: &[f64]| params_t.density_sq(sq_dist(x, z)) * params_s.density_sq(sq_dist(z, y));
    Ok(quad::integrate_box(&f, &lo, &hi, abs_tol)?.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;

    #[test]
    fn density_closed_form_values() {
        let k = HeatKernelParams::new(1, 0.25).unwrap();
        let v = k.density(&[0.0], &[0.0]).unwrap();
        assert!((v - 1.0 / PI.sqrt()).abs() < 1e-15);
        assert!((v - 0.564_189_58).abs() < 1e-8);

        let k2 = HeatKernelParams::new(2, 1.0).unwrap();
        let v2 = k2.density(&[0.0, 0.0], &[2.0, 0.0]).unwrap();
        assert!((v2 - (-1.0f64).exp() / (4.0 * PI)).abs() < 1e-16);
        assert!((v2 - 0.029_279).abs() < 1e-5);
    }

    #[test]
    fn density_on_diagonal() {
        for d in 1..=4 {
            for &t in &[0.1, 1.0, 7.5] {
                let k = HeatKernelParams::new(d, t).unwrap();
                let x = vec![0.3; d];
                let want = (4.0 * PI * t).powf(-(d as f64) / 2.0);
                assert!((k.density(&x, &x).unwrap() - want).abs() <= 1e-15 * want);
            }
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(HeatKernelParams::new(0, 1.0).is_err());
        assert!(HeatKernelParams::new(1, 0.0).is_err());
        assert!(HeatKernelParams::new(1, -1.0).is_err());
        let k = HeatKernelParams::new(1, 1.0).unwrap();
        assert!(k.density(&[f64::NAN], &[0.0]).is_err());
        assert!(k.density(&[0.0, 1.0], &[0.0]).is_err());
        assert!(k.tail_mass(-1.0).is_err());
    }

    #[test]
    fn tail_mass_reference_values() {
        let k = HeatKernelParams::new(1, 0.5).unwrap();
        // 2 Φ̄(2) with displacement std 1
        assert!((k.tail_mass(2.0).unwrap() - 0.045_500_263_896_358_4).abs() < 1e-13);
        let k2 = HeatKernelParams::new(2, 1.0).unwrap();
        assert!((k2.tail_mass(2.0).unwrap() - (-1.0f64).exp()).abs() < 1e-15);
        for d in 1..=3 {
            assert_eq!(HeatKernelParams::new(d, 3.0).unwrap().tail_mass(0.0).unwrap(), 1.0);
        }
    }

    #[test]
    fn small_time_sample_stays_put() {
        let k = HeatKernelParams::new(2, 1e-20).unwrap();
        let mut rng = substream(1, &[]);
        let y = k.sample_transition(&[1.0, -2.0], &mut rng).unwrap();
        assert!((y[0] - 1.0).abs() < 1e-8 && (y[1] + 2.0).abs() < 1e-8);
    }

    #[test]
    fn bound_at_zero_radius_is_on_diagonal_density() {
        let k = HeatKernelParams::new(2, 0.5).unwrap();
        let diag = (4.0 * PI * 0.5f64).powi(-1);
        let cert = BoundCertificate {
            c_t: diag,
            eps_t: 0.5,
            theta_t: None,
            tail: None,
        };
        let rep = verify_dominating_bound(&k, &[(0.5, 0.0)], &cert).unwrap();
        assert!((rep.worst_ratio - 1.0).abs() < 1e-12);
        let low = BoundCertificate {
            c_t: 0.5 * diag,
            ..cert
        };
        let rep = verify_dominating_bound(&k, &[(0.5, 0.0), (0.5, 1.0)], &low).unwrap();
        assert!(!rep.pass && rep.worst_ratio > 1.0);
    }

    #[test]
    fn bound_integer_grid_at_quarter_time_passes() {
        // at t = 1/4 the kernel is π^{-1/2} e^{-r²} and r² ≥ r^{1.5} for r ≥ 1
        let k = HeatKernelParams::new(1, 0.25).unwrap();
        let cert = BoundCertificate {
            c_t: 10.0,
            eps_t: 0.5,
            theta_t: None,
            tail: None,
        };
        let grid: Vec<(f64, f64)> = (0..=10).map(|r| (0.25, r as f64)).collect();
        assert!(verify_dominating_bound(&k, &grid, &cert).unwrap().pass);
    }

    #[test]
    fn bound_integer_grid_at_unit_time_needs_larger_constant() {
        // -r²/4 + r^{1.5} peaks at r = 9 with value 6.75, so C_t = 10 fails
        let k = HeatKernelParams::new(1, 1.0).unwrap();
        let cert = BoundCertificate {
            c_t: 10.0,
            eps_t: 0.5,
            theta_t: None,
            tail: None,
        };
        let grid: Vec<(f64, f64)> = (0..=10).map(|r| (1.0, r as f64)).collect();
        let rep = verify_dominating_bound(&k, &grid, &cert).unwrap();
        assert!(!rep.pass);
        assert_eq!(rep.worst_at, (1.0, 9.0));
        let want = (4.0 * PI).powf(-0.5) * 6.75f64.exp() / 10.0;
        assert!((rep.worst_ratio - want).abs() < 1e-10 * want);
    }

    #[test]
    fn certificate_window_is_enforced() {
        let k = HeatKernelParams::new(1, 1.0).unwrap();
        let cert = certify_dominating_bound(&k, 0.5, Some(0.5)).unwrap();
        assert!(verify_dominating_bound(&k, &[(1.6, 1.0)], &cert).is_err());
        let grid: Vec<(f64, f64)> = (0..=40)
            .flat_map(|r| [0.6, 1.0, 1.4].map(|s| (s, r as f64 * 0.5)))
            .collect();
        assert!(verify_dominating_bound(&k, &grid, &cert).unwrap().pass);
    }

    #[test]
    fn chapman_kolmogorov_closed_form() {
        let a = HeatKernelParams::new(1, 0.5).unwrap();
        let conv_minus = chapman_kolmogorov_residual(&a, &a, &[0.0], &[1.0]).unwrap();
        let want = (4.0 * PI).powf(-0.5) * (-0.25f64).exp();
        assert!(conv_minus <= 1e-10 * want);
    }

    #[test]
    fn chapman_kolmogorov_quadrature_agrees() {
        let a = HeatKernelParams::new(1, 0.25).unwrap();
        let q = chapman_kolmogorov_quadrature(&a, &a, &[0.0], &[0.0], 1e-12).unwrap();
        let direct = HeatKernelParams::new(1, 0.5).unwrap().density_sq(0.0);
        assert!((q - direct).abs() <= 1e-8);
    }
}

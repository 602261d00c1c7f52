use std::cell::Cell;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::kernel::norm;
use crate::points::Configuration;
use crate::quad::integrate;
use crate::special::{gamma_p, ln_gamma, normal_cdf, unit_ball_volume, unit_sphere_area};

/// Radial profile of `φ` in an exponential functional
/// `F(γ) = Π_{x∈γ} (1 + φ(x))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ExpProfile {
    /// `φ ≡ 0`
    Zero,
    /// `φ(x) = -a exp(-|x|² / (2 s²))`
    GaussianBump { amplitude: f64, width: f64 },
    /// `φ(x) = -a / (1 + exp((|x| - radius) / smoothing))`
    SmoothedIndicator {
        amplitude: f64,
        radius: f64,
        smoothing: f64,
    },
}

/// `F(γ) = exp⟨log(1 + φ), γ⟩` with `-a ≤ φ ≤ 0`, `0 ≤ a < 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpFunctional {
    dim: usize,
    profile: ExpProfile,
}

/// Absolute tolerance of the quadrature route for `p_t * φ`.
pub const CONVOLUTION_TOL: f64 = 1e-10;

impl ExpFunctional {
    pub fn new(dim: usize, profile: ExpProfile) -> Result<Self> {
        if dim == 0 {
            return invalid("dimension must be at least 1");
        }
        let a = match &profile {
            ExpProfile::Zero => 0.0,
            ExpProfile::GaussianBump { amplitude, width } => {
                if !(*width > 0.0) || !width.is_finite() {
                    return invalid(format!("bump width must be positive, got {width}"));
                }
                *amplitude
            }
            ExpProfile::SmoothedIndicator {
                amplitude,
                radius,
                smoothing,
            } => {
                if !(*radius > 0.0) || !(*smoothing > 0.0) || !radius.is_finite() || !smoothing.is_finite() {
                    return invalid("smoothed indicator needs positive radius and smoothing");
                }
                *amplitude
            }
        };
        if !(0.0..1.0).contains(&a) {
            return invalid(format!("amplitude must lie in [0, 1), got {a}"));
        }
        Ok(Self { dim, profile })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn profile(&self) -> &ExpProfile {
        &self.profile
    }

    /// `sup |φ|`
    pub fn amplitude(&self) -> f64 {
        match self.profile {
            ExpProfile::Zero => 0.0,
            ExpProfile::GaussianBump { amplitude, .. } | ExpProfile::SmoothedIndicator { amplitude, .. } => amplitude,
        }
    }

    pub fn phi_radial(&self, r: f64) -> f64 {
        match self.profile {
            ExpProfile::Zero => 0.0,
            ExpProfile::GaussianBump { amplitude, width } => -amplitude * (-r * r / (2.0 * width * width)).exp(),
            ExpProfile::SmoothedIndicator {
                amplitude,
                radius,
                smoothing,
            } => {
                let u = (r - radius) / smoothing;
                // written to avoid overflow of exp for large u
                if u > 0.0 {
                    -amplitude * (-u).exp() / (1.0 + (-u).exp())
                } else {
                    -amplitude / (1.0 + u.exp())
                }
            }
        }
    }

    pub fn phi(&self, x: &[f64]) -> f64 {
        self.phi_radial(norm(x))
    }

    /// `F(γ)`, multiplicities counted.
    pub fn eval(&self, gamma: &Configuration) -> f64 {
        gamma.particles().map(|x| 1.0 + self.phi(x)).product()
    }

    /// `(p_t * φ)(x)` for `|x| = r`.
    pub fn convolved_radial(&self, r: f64, t: f64) -> Result<f64> {
        if !(t > 0.0) {
            return invalid(format!("time must be positive, got {t}"));
        }
        match self.profile {
            ExpProfile::Zero => Ok(0.0),
            ExpProfile::GaussianBump { amplitude, width } => {
                let w2 = width * width + 2.0 * t;
                let scale = (width * width / w2).powf(self.dim as f64 / 2.0);
                Ok(-amplitude * scale * (-r * r / (2.0 * w2)).exp())
            }
            ExpProfile::SmoothedIndicator { .. } => radial_expectation(
                self.dim,
                r,
                (2.0 * t).sqrt(),
                &|s| Ok(self.phi_radial(s)),
                CONVOLUTION_TOL,
            ),
        }
    }

    pub fn convolved(&self, x: &[f64], t: f64) -> Result<f64> {
        self.convolved_radial(norm(x), t)
    }

    /// `(p_s * (p_t * φ))(x)` computed as two separate convolutions.
    pub fn convolved_twice(&self, x: &[f64], t: f64, s: f64) -> Result<f64> {
        if !(s > 0.0) {
            return invalid(format!("time must be positive, got {s}"));
        }
        match self.profile {
            ExpProfile::Zero => Ok(0.0),
            ExpProfile::GaussianBump { amplitude, width } => {
                let w2 = width * width + 2.0 * t;
                let a1 = amplitude * (width * width / w2).powf(self.dim as f64 / 2.0);
                let step = ExpFunctional {
                    dim: self.dim,
                    profile: ExpProfile::GaussianBump {
                        amplitude: a1,
                        width: w2.sqrt(),
                    },
                };
                step.convolved(x, s)
            }
            ExpProfile::SmoothedIndicator { .. } => radial_expectation(
                self.dim,
                norm(x),
                (2.0 * s).sqrt(),
                &|r| self.convolved_radial(r, t),
                CONVOLUTION_TOL,
            ),
        }
    }

    /// `∫_{B(0,R)} φ(x) dx`
    pub fn ball_integral(&self, radius: f64) -> Result<f64> {
        let d = self.dim as i32;
        let (v, _) = integrate(|r| self.phi_radial(r) * r.powi(d - 1), 0.0, radius, 1e-12)?;
        Ok(unit_sphere_area(self.dim) * v)
    }
}

/// `E[f(|x + σZ|)]` for `|x| = r` and standard Gaussian `Z` in ℝ^d, by
/// splitting `Z` into the component along `x` and a χ_{d-1} radial part.
pub(crate) fn radial_expectation(
    dim: usize,
    r: f64,
    sigma: f64,
    f: &dyn Fn(f64) -> Result<f64>,
    tol: f64,
) -> Result<f64> {
    const U_MAX: f64 = 12.0;
    let failure: Cell<Option<Error>> = Cell::new(None);
    let guard = |v: Result<f64>| match v {
        Ok(v) => v,
        Err(e) => {
            failure.set(Some(e));
            0.0
        }
    };
    let normal = |u: f64| (-0.5 * u * u).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let value = if dim == 1 {
        let (v, _) = integrate(|u| normal(u) * guard(f((r + sigma * u).abs())), -U_MAX, U_MAX, tol)?;
        v
    } else {
        let k = (dim - 1) as f64;
        // χ_k density: w^{k-1} e^{-w²/2} / (2^{k/2-1} Γ(k/2))
        let ln_norm = (k / 2.0 - 1.0) * std::f64::consts::LN_2 + ln_gamma(k / 2.0);
        let chi = |w: f64| {
            if w == 0.0 {
                if k == 1.0 {
                    (-ln_norm).exp()
                } else {
                    0.0
                }
            } else {
                ((k - 1.0) * w.ln() - 0.5 * w * w - ln_norm).exp()
            }
        };
        let w_max = k.sqrt() + 12.0;
        let (v, _) = integrate(
            |u| {
                let a = r + sigma * u;
                let inner = integrate(
                    |w| chi(w) * guard(f((a * a + sigma * sigma * w * w).sqrt())),
                    0.0,
                    w_max,
                    tol * 0.1,
                );
                match inner {
                    Ok((v, _)) => normal(u) * v,
                    Err(e) => {
                        failure.set(Some(e));
                        0.0
                    }
                }
            },
            -U_MAX,
            U_MAX,
            tol,
        )?;
        v
    };
    match failure.take() {
        Some(e) => Err(e),
        None => Ok(value),
    }
}

/// `(P_t F)(γ) = Π_{x∈γ} (1 + (p_t * φ)(x))`.
pub fn apply_exact_exponential(ef: &ExpFunctional, gamma: &Configuration, t: f64) -> Result<f64> {
    if gamma.dim() != ef.dim {
        return invalid("functional and configuration dimensions differ");
    }
    let mut prod = 1.0;
    for s in gamma.sites() {
        let v = 1.0 + ef.convolved(s.position, t)?;
        prod *= v.powi(s.multiplicity as i32);
    }
    Ok(prod)
}

/// `P_s(P_t F)(γ)` with the two convolutions carried out one after the
/// other.
pub fn apply_exact_exponential_two_step(ef: &ExpFunctional, gamma: &Configuration, t: f64, s: f64) -> Result<f64> {
    if gamma.dim() != ef.dim {
        return invalid("functional and configuration dimensions differ");
    }
    let mut prod = 1.0;
    for site in gamma.sites() {
        let v = 1.0 + ef.convolved_twice(site.position, t, s)?;
        prod *= v.powi(site.multiplicity as i32);
    }
    Ok(prod)
}

/// Functionals that depend only on the points inside `B(0, radius)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LocalFunctional {
    Constant {
        value: f64,
    },
    /// Number of particles in `B(0, radius)`.
    Count {
        radius: f64,
    },
    /// `Π_{x∈γ, |x|≤radius} (1 + φ(x))`
    WindowedExp {
        functional: ExpFunctional,
        radius: f64,
    },
}

impl LocalFunctional {
    pub fn validate(&self) -> Result<()> {
        match self {
            LocalFunctional::Constant { value } if !value.is_finite() => invalid("constant must be finite"),
            LocalFunctional::Count { radius } | LocalFunctional::WindowedExp { radius, .. } if !(*radius > 0.0) => {
                invalid(format!("window radius must be positive, got {radius}"))
            }
            // deserialized functionals skip the constructor checks
            LocalFunctional::WindowedExp { functional, .. } => {
                ExpFunctional::new(functional.dim, functional.profile.clone()).map(|_| ())
            }
            _ => Ok(()),
        }
    }

    pub fn eval(&self, gamma: &Configuration) -> f64 {
        match self {
            LocalFunctional::Constant { value } => *value,
            LocalFunctional::Count { radius } => gamma.particles().filter(|x| norm(x) <= *radius).count() as f64,
            LocalFunctional::WindowedExp { functional, radius } => gamma
                .particles()
                .filter(|x| norm(x) <= *radius)
                .map(|x| 1.0 + functional.phi(x))
                .product(),
        }
    }

    /// Radius of the window the functional looks at.
    pub fn support_radius(&self) -> f64 {
        match self {
            LocalFunctional::Constant { .. } => 0.0,
            LocalFunctional::Count { radius } | LocalFunctional::WindowedExp { radius, .. } => *radius,
        }
    }

    /// Largest change caused by adding or removing one particle.
    pub fn sensitivity(&self) -> f64 {
        match self {
            LocalFunctional::Constant { .. } => 0.0,
            LocalFunctional::Count { .. } => 1.0,
            LocalFunctional::WindowedExp { functional, .. } => functional.amplitude(),
        }
    }

    /// `E_π[F]` under the Poisson measure of intensity `z`.
    pub fn poisson_mean(&self, dim: usize, z: f64) -> Result<f64> {
        Ok(match self {
            LocalFunctional::Constant { value } => *value,
            LocalFunctional::Count { radius } => z * unit_ball_volume(dim) * radius.powi(dim as i32),
            // Laplace transform: E exp⟨log(1+φ), γ⟩ = exp(z ∫ φ)
            LocalFunctional::WindowedExp { functional, radius } => (z * functional.ball_integral(*radius)?).exp(),
        })
    }
}

/// `P(|x + σZ| ≤ R)` for `Z` standard Gaussian in ℝ^d and `|x| = r`;
/// the ball probability used by count oracles.
pub fn gaussian_ball_probability(dim: usize, r: f64, sigma: f64, radius: f64) -> Result<f64> {
    if !(sigma > 0.0) || !(radius >= 0.0) || !(r >= 0.0) {
        return invalid("ball probability needs σ > 0, radius ≥ 0 and r ≥ 0");
    }
    if dim == 1 {
        return Ok(normal_cdf((radius - r) / sigma) - normal_cdf((-radius - r) / sigma));
    }
    if r == 0.0 {
        return gamma_p(dim as f64 / 2.0, radius * radius / (2.0 * sigma * sigma));
    }
    // component along x is r + σu; the rest is σ χ_{d-1}
    let k = (dim - 1) as f64;
    let failure: Cell<Option<Error>> = Cell::new(None);
    let (v, _) = integrate(
        |u| {
            let a = r + sigma * u;
            let rest = (radius * radius - a * a).max(0.0) / (2.0 * sigma * sigma);
            match gamma_p(k / 2.0, rest) {
                Ok(p) => (-0.5 * u * u).exp() / (2.0 * std::f64::consts::PI).sqrt() * p,
                Err(e) => {
                    failure.set(Some(e));
                    0.0
                }
            }
        },
        (-radius - r) / sigma,
        (radius - r) / sigma,
        1e-12,
    )?;
    match failure.take() {
        Some(e) => Err(e),
        None => Ok(v),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(x: &[f64]) -> Configuration {
        Configuration::from_points_auto(x.len(), &[x.to_vec()]).unwrap()
    }

    #[test]
    fn closed_form_bump_value() {
        let ef = ExpFunctional::new(
            1,
            ExpProfile::GaussianBump {
                amplitude: 0.5,
                width: 1.0,
            },
        )
        .unwrap();
        let v = apply_exact_exponential(&ef, &single(&[0.0]), 0.5).unwrap();
        assert!((v - (1.0 - 0.5 / 2f64.sqrt())).abs() < 1e-15);
        assert!((v - 0.64645).abs() < 1e-5);
    }

    #[test]
    fn trivial_cases() {
        let zero = ExpFunctional::new(2, ExpProfile::Zero).unwrap();
        assert_eq!(apply_exact_exponential(&zero, &single(&[1.0, 2.0]), 1.0).unwrap(), 1.0);
        let ef = ExpFunctional::new(
            2,
            ExpProfile::GaussianBump {
                amplitude: 0.3,
                width: 1.0,
            },
        )
        .unwrap();
        let empty = Configuration::empty(2, 1.0).unwrap();
        assert_eq!(apply_exact_exponential(&ef, &empty, 1.0).unwrap(), 1.0);
        assert!(ExpFunctional::new(
            1,
            ExpProfile::GaussianBump {
                amplitude: 1.0,
                width: 1.0
            }
        )
        .is_err());
    }

    #[test]
    fn quadrature_route_matches_closed_form_on_bumps() {
        for d in 1..=3 {
            let ef = ExpFunctional::new(
                d,
                ExpProfile::GaussianBump {
                    amplitude: 0.7,
                    width: 0.8,
                },
            )
            .unwrap();
            for r in [0.0, 0.4, 1.7] {
                let closed = ef.convolved_radial(r, 0.3).unwrap();
                let quad = radial_expectation(d, r, 0.6f64.sqrt(), &|s| Ok(ef.phi_radial(s)), 1e-11).unwrap();
                assert!((closed - quad).abs() < 1e-10, "d={d} r={r} {closed} {quad}");
            }
        }
    }

    #[test]
    fn smoothed_indicator_two_step() {
        let ef = ExpFunctional::new(
            1,
            ExpProfile::SmoothedIndicator {
                amplitude: 0.4,
                radius: 1.0,
                smoothing: 0.2,
            },
        )
        .unwrap();
        for x in [0.0, 0.9, 2.5] {
            let one = ef.convolved(&[x], 0.35).unwrap();
            let two = ef.convolved_twice(&[x], 0.2, 0.15).unwrap();
            assert!((one - two).abs() < 1e-10, "{one} {two}");
        }
    }

    #[test]
    fn ball_probability_at_origin() {
        // d = 2: 1 - exp(-R²/(2σ²))
        let p = gaussian_ball_probability(2, 0.0, 1.0, 1.5).unwrap();
        assert!((p - (1.0 - (-1.125f64).exp())).abs() < 1e-14);
        let q = gaussian_ball_probability(2, 1e-9, 1.0, 1.5).unwrap();
        assert!((p - q).abs() < 1e-8);
    }

    #[test]
    fn local_functionals() {
        let g = Configuration::new(2, 3.0, vec![(vec![0.5, 0.0], 2), (vec![2.0, 0.0], 1)]).unwrap();
        assert_eq!(LocalFunctional::Count { radius: 1.0 }.eval(&g), 2.0);
        let z = 1.3;
        let m = LocalFunctional::Count { radius: 1.0 }.poisson_mean(2, z).unwrap();
        assert!((m - z * std::f64::consts::PI).abs() < 1e-14);
        let ef = ExpFunctional::new(
            2,
            ExpProfile::GaussianBump {
                amplitude: 0.5,
                width: 1.0,
            },
        )
        .unwrap();
        // ∫_{ℝ²} φ = -a 2π s² (radius large)
        let lf = LocalFunctional::WindowedExp {
            functional: ef,
            radius: 40.0,
        };
        let want = (-z * 0.5 * 2.0 * std::f64::consts::PI).exp();
        assert!((lf.poisson_mean(2, z).unwrap() - want).abs() < 1e-10);
    }
}

//! Special functions: log-gamma, regularized incomplete gamma, erfc and
//! the standard normal tail.

use std::f64::consts::PI;

use crate::error::{Error, Result};

const MAX_ITER: usize = 500;
const EPS: f64 = 1e-16;
const TINY: f64 = 1e-300;

/// Natural log of Γ(x) for x > 0.
pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// Γ(x) for moderate positive x.
pub fn gamma(x: f64) -> f64 {
    ln_gamma(x).exp()
}

/// Regularized upper incomplete gamma Q(a, z) = Γ(a, z) / Γ(a).
pub fn gamma_q(a: f64, z: f64) -> Result<f64> {
    Ok(gamma_pq(a, z)?.1)
}

/// Regularized lower incomplete gamma P(a, z) = γ(a, z) / Γ(a).
pub fn gamma_p(a: f64, z: f64) -> Result<f64> {
    Ok(gamma_pq(a, z)?.0)
}

/// Both P(a, z) and Q(a, z); series below z = a + 1, Lentz continued
/// fraction above, so the small one of the pair never comes from `1 - x`.
fn gamma_pq(a: f64, z: f64) -> Result<(f64, f64)> {
    if !(a > 0.0) || !(z >= 0.0) || !a.is_finite() {
        return Err(Error::InvalidInput(format!(
            "incomplete gamma needs a > 0, z >= 0 (got a={a}, z={z})"
        )));
    }
    if z == 0.0 {
        return Ok((0.0, 1.0));
    }
    if z.is_infinite() {
        return Ok((1.0, 0.0));
    }
    let log_prefactor = -z + a * z.ln() - ln_gamma(a);
    if z < a + 1.0 {
        let mut ap = a;
        let mut term = 1.0 / a;
        let mut sum = term;
        for _ in 0..MAX_ITER {
            ap += 1.0;
            term *= z / ap;
            sum += term;
            if term.abs() < sum.abs() * EPS {
                let p = (log_prefactor.exp() * sum).min(1.0);
                return Ok((p, 1.0 - p));
            }
        }
        Err(Error::Numerical(format!("P({a}, {z}) series did not converge")))
    } else {
        let mut b = z + 1.0 - a;
        let mut c = 1.0 / TINY;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..=MAX_ITER {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < TINY {
                d = TINY;
            }
            c = b + an / c;
            if c.abs() < TINY {
                c = TINY;
            }
            d = 1.0 / d;
            let delta = d * c;
            h *= delta;
            if (delta - 1.0).abs() < EPS {
                let q = (log_prefactor.exp() * h).min(1.0);
                return Ok((1.0 - q, q));
            }
        }
        Err(Error::Numerical(format!(
            "Q({a}, {z}) continued fraction did not converge"
        )))
    }
}

/// Complementary error function.
pub fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}

pub fn erf(x: f64) -> f64 {
    libm::erf(x)
}

/// Standard normal upper tail Φ̄(u) = P(Z > u).
pub fn normal_sf(u: f64) -> f64 {
    0.5 * erfc(u / std::f64::consts::SQRT_2)
}

/// Standard normal CDF Φ(u).
pub fn normal_cdf(u: f64) -> f64 {
    normal_sf(-u)
}

/// Volume of the unit ball in ℝ^d.
pub fn unit_ball_volume(dim: usize) -> f64 {
    let h = dim as f64 / 2.0;
    (h * PI.ln() - ln_gamma(h + 1.0)).exp()
}

/// Surface area of the unit sphere S^{d-1} ⊂ ℝ^d.
pub fn unit_sphere_area(dim: usize) -> f64 {
    dim as f64 * unit_ball_volume(dim)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1e-300)
    }

    #[test]
    fn ln_gamma_matches_factorials() {
        let mut fact = 1.0f64;
        for n in 1..20 {
            assert!(close(ln_gamma(n as f64), fact.ln(), 1e-13) || fact == 1.0);
            fact *= n as f64;
        }
        assert!((ln_gamma(0.5) - PI.sqrt().ln()).abs() < 1e-14);
    }

    #[test]
    fn q_of_one_is_exponential() {
        for &z in &[0.01, 0.5, 1.0, 2.0, 10.0, 50.0] {
            assert!(close(gamma_q(1.0, z).unwrap(), (-z).exp(), 1e-13), "z={z}");
        }
    }

    #[test]
    fn q_three_halves_closed_form() {
        // Q(3/2, z) = erfc(√z) + 2√(z/π) e^{-z}
        for &z in &[0.1f64, 0.7, 2.5, 9.0] {
            let want = erfc(z.sqrt()) + 2.0 * (z / PI).sqrt() * (-z).exp();
            assert!(close(gamma_q(1.5, z).unwrap(), want, 1e-12), "z={z}");
        }
    }

    #[test]
    fn p_plus_q_is_one_across_switch() {
        for &a in &[0.5, 1.0, 1.5, 3.0] {
            for &z in &[a + 0.999, a + 1.0, a + 1.001] {
                let (p, q) = gamma_pq(a, z).unwrap();
                assert!((p + q - 1.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn domain_errors() {
        assert!(gamma_q(0.0, 1.0).is_err());
        assert!(gamma_q(1.0, -1.0).is_err());
        assert_eq!(gamma_q(2.0, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn normal_tail_reference_values() {
        // Φ̄(2) = 0.022750131948179...
        assert!(close(normal_sf(2.0), 0.022_750_131_948_179_2, 1e-12));
        assert!(close(normal_sf(0.0), 0.5, 1e-15));
        assert!(close(erf(1.0), 0.842_700_792_949_714_9, 1e-13));
    }

    #[test]
    fn ball_volumes() {
        assert!(close(unit_ball_volume(1), 2.0, 1e-14));
        assert!(close(unit_ball_volume(2), PI, 1e-14));
        assert!(close(unit_ball_volume(3), 4.0 * PI / 3.0, 1e-14));
    }
}

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::functional::LocalFunctional;
use crate::error::{invalid, Error, Result};
use crate::kernel::HeatKernelParams;
use crate::points::{
    boundary_leakage, default_pad, diffuse_antithetic, diffuse_with_pad, sample_poisson, Configuration, Window,
};
use crate::rng::{substream, StreamRng};
use crate::special::unit_ball_volume;
use crate::stats::{MeanEstimate, Verdict};

/// Runs `job(replica, rng)` for every replica on the rayon pool, each with
/// its own substream of `seed`, and returns the results in replica order.
/// The first failing replica (by index) determines the error.
pub fn par_replicas<T, F>(replicas: usize, seed: u64, job: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, &mut StreamRng) -> Result<T> + Sync,
{
    let results: Vec<Result<T>> = (0..replicas)
        .into_par_iter()
        .map(|r| {
            let mut rng = substream(seed, &[r as u64]);
            job(r, &mut rng)
        })
        .collect();
    results.into_iter().collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McOptions {
    pub replicas: usize,
    pub seed: u64,
    /// Window enlargement of diffused samples; `None` uses the default pad.
    pub pad: Option<f64>,
    /// Average antithetic pairs; one replica is then one pair.
    pub antithetic: bool,
}

impl McOptions {
    pub fn new(replicas: usize, seed: u64) -> Self {
        Self {
            replicas,
            seed,
            pad: None,
            antithetic: false,
        }
    }
}

/// Monte Carlo value of `(P_t F)(γ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemigroupEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub replicas: usize,
    pub seed: u64,
    pub route: String,
    pub truncation_note: String,
}

/// Mean of `F` over independent draws of `diffuse(γ, t)`.
pub fn apply_mc<F>(f: F, gamma: &Configuration, t: f64, opts: &McOptions) -> Result<SemigroupEstimate>
where
    F: Fn(&Configuration) -> f64 + Sync,
{
    if opts.replicas < 2 {
        return invalid(format!("need at least 2 replicas, got {}", opts.replicas));
    }
    HeatKernelParams::new(gamma.dim(), t)?;
    let pad = opts.pad.unwrap_or_else(|| default_pad(gamma.dim(), t));
    let values = par_replicas(opts.replicas, opts.seed, |r, rng| {
        let v = if opts.antithetic {
            let (a, b) = diffuse_antithetic(gamma, t, pad, rng)?;
            0.5 * (f(&a) + f(&b))
        } else {
            f(&diffuse_with_pad(gamma, t, pad, rng)?)
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Evaluation {
                replica: r,
                message: format!("functional returned {v}"),
            })
        }
    })?;
    let est = MeanEstimate::from_values(&values);
    let leak = boundary_leakage(gamma, t, pad)?;
    Ok(SemigroupEstimate {
        mean: est.mean,
        std_error: est.std_error,
        replicas: opts.replicas,
        seed: opts.seed,
        route: if opts.antithetic { "monte-carlo-antithetic" } else { "monte-carlo" }.to_string(),
        truncation_note: format!(
            "particles diffused without truncation: {}; window enlarged by pad {pad}, expected particles beyond it {leak:e}",
            gamma.particle_count()
        ),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InvarianceOptions {
    pub replicas: usize,
    pub seed: u64,
    /// Largest admissible leakage bound.
    pub leakage_tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvarianceReport {
    /// Paired estimates of `E_π[F]` and `E_π[P_t F]`.
    pub mean_f: f64,
    pub mean_ptf: f64,
    pub difference: f64,
    /// Standard error of the paired difference.
    pub std_error: f64,
    pub leakage_bound: f64,
    /// Closed-form `E_π[F]`.
    pub poisson_mean: f64,
    pub inner_radius: f64,
    pub outer_radius: f64,
    pub pad: f64,
    pub replicas: usize,
    pub verdict: Verdict,
}

/// Paired check of `E_π[F] = E_π[P_t F]`: Poisson samples on the outer
/// window are evaluated before and after diffusion.
///
/// Particles from outside the outer window that would have entered the
/// support of `F` are missing; their expected number is at most
/// `z |B(0, R_in)| tail_mass(t, pad)`, and each changes `F` by at most its
/// sensitivity.
pub fn invariance_test(
    f: &LocalFunctional,
    dim: usize,
    outer: &Window,
    t: f64,
    opts: &InvarianceOptions,
) -> Result<InvarianceReport> {
    f.validate()?;
    if opts.replicas < 2 {
        return invalid(format!("need at least 2 replicas, got {}", opts.replicas));
    }
    let k = HeatKernelParams::new(dim, t)?;
    let inner = f.support_radius();
    let pad = outer.radius() - inner;
    if pad < 0.0 {
        return Err(Error::Configuration(format!(
            "outer window radius {} is smaller than the functional's support radius {inner}",
            outer.radius()
        )));
    }
    let z = outer.intensity();
    let inner_mean_count = z * unit_ball_volume(dim) * inner.powi(dim as i32);
    let leakage_bound = f.sensitivity() * inner_mean_count * k.tail_mass(pad)?;
    if leakage_bound > opts.leakage_tolerance {
        return Err(Error::Configuration(format!(
            "pad {pad} leaves a leakage bound {leakage_bound:e} above the tolerance {:e}; enlarge the outer window",
            opts.leakage_tolerance
        )));
    }
    let pairs = par_replicas(opts.replicas, opts.seed, |r, rng| {
        let gamma = sample_poisson(outer, dim, rng)?;
        let moved = diffuse_with_pad(&gamma, t, 0.0, rng)?;
        let (a, b) = (f.eval(&gamma), f.eval(&moved));
        if !(a.is_finite() && b.is_finite()) {
            return Err(Error::Evaluation {
                replica: r,
                message: "functional returned a non-finite value".into(),
            });
        }
        Ok((a, b))
    })?;
    let before: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let after: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let diffs: Vec<f64> = pairs.iter().map(|p| p.1 - p.0).collect();
    let d = MeanEstimate::from_values(&diffs);
    let pass = d.mean.abs() <= 4.0 * d.std_error + leakage_bound;
    Ok(InvarianceReport {
        mean_f: MeanEstimate::from_values(&before).mean,
        mean_ptf: MeanEstimate::from_values(&after).mean,
        difference: d.mean,
        std_error: d.std_error,
        leakage_bound,
        poisson_mean: f.poisson_mean(dim, z)?,
        inner_radius: inner,
        outer_radius: outer.radius(),
        pad,
        replicas: opts.replicas,
        verdict: Verdict::from_pass(pass),
    })
}

#[cfg(test)]
mod tests {
    use super::super::functional::{gaussian_ball_probability, ExpFunctional, ExpProfile};
    use super::*;

    fn gamma() -> Configuration {
        Configuration::from_points_auto(2, &[vec![0.0, 0.0], vec![0.8, -0.3], vec![-1.5, 1.0]]).unwrap()
    }

    #[test]
    fn constant_is_preserved_exactly() {
        let est = apply_mc(|_| 1.0, &gamma(), 0.7, &McOptions::new(1000, 4)).unwrap();
        assert_eq!(est.mean, 1.0);
        assert_eq!(est.std_error, 0.0);
    }

    #[test]
    fn count_matches_ball_probabilities() {
        let g = gamma();
        let t = 0.4;
        let radius = 1.2;
        let est = apply_mc(
            |c| LocalFunctional::Count { radius }.eval(c),
            &g,
            t,
            &McOptions::new(40_000, 9),
        )
        .unwrap();
        let sigma = (2.0 * t).sqrt();
        let want: f64 = g
            .particles()
            .map(|x| gaussian_ball_probability(2, crate::kernel::norm(x), sigma, radius).unwrap())
            .sum();
        assert!((est.mean - want).abs() < 4.0 * est.std_error, "{} vs {want}", est.mean);
    }

    #[test]
    fn non_finite_values_name_the_replica() {
        let err = apply_mc(|_| f64::NAN, &gamma(), 0.1, &McOptions::new(10, 1)).unwrap_err();
        assert!(matches!(err, Error::Evaluation { replica: 0, .. }));
    }

    #[test]
    fn invariance_of_windowed_functionals() {
        let outer = Window::new(1.0 + 6.0, 1.0).unwrap();
        let opts = InvarianceOptions {
            replicas: 20_000,
            seed: 5,
            leakage_tolerance: 1e-3,
        };
        let c = invariance_test(&LocalFunctional::Constant { value: 2.0 }, 2, &outer, 0.5, &opts).unwrap();
        assert_eq!(c.difference, 0.0);
        assert!(c.verdict.is_pass());
        let n = invariance_test(&LocalFunctional::Count { radius: 1.0 }, 2, &outer, 0.5, &opts).unwrap();
        assert!(n.verdict.is_pass(), "{n:?}");
        assert!((n.mean_f - n.poisson_mean).abs() < 4.0 * 0.02);
        let ef = ExpFunctional::new(
            2,
            ExpProfile::GaussianBump {
                amplitude: 0.6,
                width: 0.7,
            },
        )
        .unwrap();
        let w = invariance_test(
            &LocalFunctional::WindowedExp {
                functional: ef,
                radius: 1.0,
            },
            2,
            &outer,
            0.5,
            &opts,
        )
        .unwrap();
        assert!(w.verdict.is_pass(), "{w:?}");
    }

    #[test]
    fn small_pad_is_a_configuration_error() {
        let outer = Window::new(1.5, 1.0).unwrap();
        let opts = InvarianceOptions {
            replicas: 10,
            seed: 0,
            leakage_tolerance: 1e-6,
        };
        let err = invariance_test(&LocalFunctional::Count { radius: 1.0 }, 2, &outer, 0.5, &opts).unwrap_err();
        assert!(matches!(err, Error::Configuration(_)));
    }
}

//! Poisson sampling, heat-kernel diffusion and tail functions.

use confheat_core::kernel::{certify_tail, tau};
use confheat_core::metrics::b_n_with_tail;
use confheat_core::points::{default_pad, diffuse_with_pad, sample_poisson};
use confheat_core::semigroup::par_replicas;
use confheat_core::stats::{MeanEstimate, Verdict};
use confheat_core::{Configuration, HeatKernelParams, Result, Window};

use super::Common;
use crate::params::{Check, ParamReader};
use crate::report::{cell, Report};

pub(super) fn read_dim(r: &mut ParamReader, default: u64) -> usize {
    r.int("dim", default, 1, 16) as usize
}

pub(super) fn configuration(dim: usize, pts: &[Vec<f64>]) -> Result<Configuration> {
    if pts.is_empty() {
        Configuration::empty(dim, 1.0)
    } else {
        Configuration::from_points_auto(dim, pts)
    }
}

fn mean_verdict(est: &MeanEstimate, expected: f64) -> Verdict {
    Verdict::from_pass((est.mean - expected).abs() <= 4.0 * est.std_error + 1e-12 * expected.abs())
}

#[derive(Debug, Clone)]
pub struct SamplePoisson {
    dim: usize,
    radius: f64,
    intensity: f64,
}

impl SamplePoisson {
    pub fn parse(r: &mut ParamReader) -> Self {
        Self {
            dim: read_dim(r, 2),
            radius: r.real("radius", 5.0, Check::Positive),
            intensity: r.real("intensity", 1.0, Check::Positive),
        }
    }

    pub fn run(&self, c: &Common, seed: u64, replicas: usize) -> Result<Report> {
        let w = Window::new(self.radius, self.intensity)?;
        let rows = par_replicas(replicas, seed, |_, rng| {
            let g = sample_poisson(&w, self.dim, rng)?;
            let b = b_n_with_tail(&g, c.n_max)?;
            Ok((g.particle_count() as f64, b.value, b.truncation_error))
        })?;
        let mut rep = Report::new(&["replica", "points", "b_n", "b_n_tail_bound"]);
        for (i, (n, b, e)) in rows.iter().enumerate() {
            rep.row(vec![i.to_string(), cell(*n), cell(*b), cell(*e)]);
        }
        let counts: Vec<f64> = rows.iter().map(|r| r.0).collect();
        let est = MeanEstimate::from_values(&counts);
        let expected = w.mean_count(self.dim);
        rep.put_real("mean_count", est.mean);
        rep.put_real("std_error", est.std_error);
        rep.put_real("expected_count", expected);
        rep.put("b_n_index", c.n_max);
        rep.verdict = mean_verdict(&est, expected);
        Ok(rep)
    }
}

#[derive(Debug, Clone)]
pub struct Diffuse {
    dim: usize,
    points: Vec<Vec<f64>>,
    t: f64,
}

impl Diffuse {
    pub fn parse(r: &mut ParamReader) -> Self {
        let dim = read_dim(r, 2);
        Self {
            dim,
            points: r.points("points", dim, vec![vec![0.0; dim]]),
            t: r.real("t", 1.0, Check::Positive),
        }
    }

    pub fn run(&self, c: &Common, seed: u64, replicas: usize) -> Result<Report> {
        let gamma = configuration(self.dim, &self.points)?;
        let pad = c.pad.unwrap_or_else(|| default_pad(self.dim, self.t));
        let starts: Vec<Vec<f64>> = gamma.particles().map(|p| p.to_vec()).collect();
        let n = starts.len().max(1) * self.dim;
        let rows = par_replicas(replicas, seed, |_, rng| {
            let moved = diffuse_with_pad(&gamma, self.t, pad, rng)?;
            let sq: f64 = moved
                .particles()
                .zip(&starts)
                .map(|(p, s)| p.iter().zip(s).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
                .sum();
            Ok((sq / n as f64, moved.window_radius()))
        })?;
        let mut rep = Report::new(&["replica", "mean_sq_displacement_per_coord", "window_radius"]);
        for (i, (v, w)) in rows.iter().enumerate() {
            rep.row(vec![i.to_string(), cell(*v), cell(*w)]);
        }
        let est = MeanEstimate::from_values(&rows.iter().map(|r| r.0).collect::<Vec<_>>());
        let expected = if starts.is_empty() { 0.0 } else { 2.0 * self.t };
        rep.put_real("mean_sq_displacement_per_coord", est.mean);
        rep.put_real("std_error", est.std_error);
        rep.put_real("expected", expected);
        rep.put_real("pad", pad);
        rep.verdict = mean_verdict(&est, expected);
        Ok(rep)
    }
}

#[derive(Debug, Clone)]
pub struct TailTau {
    dim: usize,
    t: f64,
    radii: Vec<f64>,
    delta: f64,
    r_max: f64,
}

/// Grid points of the tail-certificate check.
const CERTIFICATE_GRID: usize = 401;

impl TailTau {
    pub fn parse(r: &mut ParamReader) -> Self {
        Self {
            dim: read_dim(r, 2),
            t: r.real("t", 0.25, Check::Positive),
            radii: r.real_list("radii", &[0.5, 1.0, 2.0], Check::NonNegative),
            delta: r.real("delta", 0.25, Check::Positive),
            r_max: r.real("r_max", 20.0, Check::Positive),
        }
    }

    pub fn run(&self, _c: &Common, seed: u64, replicas: usize) -> Result<Report> {
        let k = HeatKernelParams::new(self.dim, self.t)?;
        let origin = vec![0.0; self.dim];
        let norms = par_replicas(replicas, seed, |_, rng| {
            let y = k.sample_transition(&origin, rng)?;
            Ok(y.iter().map(|v| v * v).sum::<f64>().sqrt())
        })?;
        let mut rep = Report::new(&["kind", "r", "exact", "estimate", "std_error", "verdict"]);
        let mut verdict = Verdict::Pass;
        for &r in &self.radii {
            let exact = k.tail_mass(r)?;
            let hits: Vec<f64> = norms.iter().map(|&n| if n > r { 1.0 } else { 0.0 }).collect();
            let est = MeanEstimate::from_values(&hits);
            let v = Verdict::from_pass((est.mean - exact).abs() <= 4.0 * est.std_error + 1e-15);
            verdict = verdict.and(v);
            rep.row(vec![
                "tail_mass".into(),
                cell(r),
                cell(exact),
                cell(est.mean),
                cell(est.std_error),
                v.as_str().into(),
            ]);
        }
        let cert = certify_tail(self.dim, self.delta, self.r_max)?;
        let mut worst: f64 = 0.0;
        for i in 0..CERTIFICATE_GRID {
            let r = self.r_max * i as f64 / (CERTIFICATE_GRID - 1) as f64;
            let ratio = tau(self.dim, self.delta, r)? / (cert.c * (-r).exp());
            worst = worst.max(ratio);
        }
        let v = Verdict::from_pass(worst <= 1.0);
        verdict = verdict.and(v);
        rep.row(vec![
            "certificate".into(),
            cell(self.r_max),
            cell(cert.c),
            cell(worst),
            cell(0.0),
            v.as_str().into(),
        ]);
        rep.put_real("certificate_c", cert.c);
        rep.put_real("certificate_worst_ratio", worst);
        rep.put("samples", replicas as u64);
        rep.verdict = verdict;
        Ok(rep)
    }
}

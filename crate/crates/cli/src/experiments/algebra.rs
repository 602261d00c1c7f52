//! Deterministic experiments: configuration metrics, K-transform algebra,
//! correlation functions and permanents.

use confheat_core::harmonic::{
    correlation_bound, correlation_by_enumeration, correlation_by_inclusion_exclusion, inverse_k_transform,
    k_transform, k_transform_points, permanent, FiniteConfiguration, KernelFunction, MAX_PERMANENT_ORDER,
};
use confheat_core::metrics::{d1_truncated, d_infty, flat_metric, kantorovich_flat, rho};
use confheat_core::rng::substream;
use confheat_core::semigroup::{lift_identity, McOptions};
use confheat_core::{Configuration, Result, Verdict};
use rand::Rng;
use serde_json::json;

use super::sampling::{configuration, read_dim};
use super::specs::KernelSpec;
use super::Common;
use crate::params::{Check, ParamReader};
use crate::report::{cell, Report};

/// Relative tolerance of exact algebraic identities.
pub const IDENTITY_TOL: f64 = 1e-9;

/// Largest size checked against the permutation brute force.
pub const BRUTE_FORCE_MAX: usize = 7;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

/// Calls `f` on every permutation of `0..n` (Heap's algorithm).
pub fn for_each_permutation(n: usize, mut f: impl FnMut(&[usize])) {
    let mut p: Vec<usize> = (0..n).collect();
    let mut c = vec![0; n];
    f(&p);
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                p.swap(0, i);
            } else {
                p.swap(c[i], i);
            }
            f(&p);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
}

fn brute_force_rho(a: &Configuration, b: &Configuration) -> f64 {
    let xs: Vec<&[f64]> = a.particles().collect();
    let ys: Vec<&[f64]> = b.particles().collect();
    let mut best = f64::INFINITY;
    for_each_permutation(xs.len(), |p| {
        let s: f64 = p
            .iter()
            .enumerate()
            .map(|(k, &j)| xs[k].iter().zip(ys[j]).map(|(u, v)| (u - v) * (u - v)).sum::<f64>())
            .sum();
        best = best.min(s);
    });
    best.sqrt()
}

#[derive(Debug, Clone)]
pub struct Rho {
    dim: usize,
    a: Vec<Vec<f64>>,
    b: Vec<Vec<f64>>,
}

impl Rho {
    pub fn parse(r: &mut ParamReader) -> Self {
        let dim = read_dim(r, 1);
        Self {
            dim,
            a: r.points("a", dim, vec![vec![0.0; dim], vec![1.0; dim]]),
            b: r.points("b", dim, vec![vec![0.5; dim], vec![2.0; dim]]),
        }
    }

    pub fn run(&self, _c: &Common, _seed: u64, _replicas: usize) -> Result<Report> {
        let a = configuration(self.dim, &self.a)?;
        let b = configuration(self.dim, &self.b)?;
        let value = rho(&a, &b)?;
        let mut rep = Report::new(&["method", "value"]);
        rep.row(vec!["hungarian".into(), cell(value)]);
        rep.put_real("value", value);
        rep.verdict = Verdict::Pass;
        let n = a.particle_count();
        if value.is_finite() && n <= BRUTE_FORCE_MAX {
            let brute = brute_force_rho(&a, &b);
            rep.row(vec!["brute_force".into(), cell(brute)]);
            rep.put_real("brute_force", brute);
            rep.verdict = Verdict::from_pass((brute - value).abs() <= IDENTITY_TOL);
        }
        Ok(rep)
    }
}

#[derive(Debug, Clone)]
pub struct FlatMetric {
    dim: usize,
    a: Vec<Vec<f64>>,
    b: Vec<Vec<f64>>,
}

impl FlatMetric {
    pub fn parse(r: &mut ParamReader) -> Self {
        let dim = read_dim(r, 1);
        Self {
            dim,
            a: r.points("a", dim, vec![vec![0.0; dim]]),
            b: r.points("b", dim, vec![vec![0.5; dim]]),
        }
    }

    pub fn run(&self, c: &Common, _seed: u64, _replicas: usize) -> Result<Report> {
        let a = configuration(self.dim, &self.a)?;
        let b = configuration(self.dim, &self.b)?;
        let mut rep = Report::new(&["i", "d_k_i", "d_k_i_reversed"]);
        let mut asym: f64 = 0.0;
        for i in 1..=c.i_max {
            let ab = flat_metric(&a, &b, i)?;
            let ba = flat_metric(&b, &a, i)?;
            asym = asym.max((ab - ba).abs());
            rep.row(vec![i.to_string(), cell(ab), cell(ba)]);
        }
        let dk = kantorovich_flat(&a, &b, c.i_max)?;
        let one = d1_truncated(&a, &b, c.i_max)?;
        let inf = d_infty(&a, &b, c.i_max, c.n_max)?;
        rep.put_real("d_k", dk.value);
        rep.put_real("d_k_truncation", dk.truncation_error);
        rep.put_real("d1", one.value);
        rep.put_real("d_infty", inf.value);
        rep.put_real("d_infty_truncation", inf.truncation_error);
        rep.put_real("max_asymmetry", asym);
        rep.verdict = Verdict::from_pass(asym <= IDENTITY_TOL && dk.value >= 0.0);
        Ok(rep)
    }
}

#[derive(Debug, Clone)]
pub struct KTransform {
    dim: usize,
    points: Vec<Vec<f64>>,
    kernel: Option<KernelSpec>,
    kernel2: Option<KernelSpec>,
    lift_t: Option<f64>,
    certificate_radius: f64,
}

fn default_kernel(dim: usize) -> serde_json::Value {
    json!({
        "levels": [
            {"kind": "constant", "value": 0.5},
            {"kind": "product", "coefficient": 1.0,
             "factor": {"kind": "gaussian", "center": vec![0.2; dim], "amplitude": 0.8, "width": 0.7}},
            {"kind": "product", "coefficient": -0.5,
             "factor": {"kind": "gaussian", "center": vec![-0.3; dim], "amplitude": 0.6, "width": 0.9}}
        ],
        "certify_eps": 0.5
    })
}

impl KTransform {
    pub fn parse(r: &mut ParamReader) -> Self {
        let dim = read_dim(r, 1);
        let points = r.points("points", dim, vec![vec![0.1; dim], vec![0.7; dim], vec![-0.4; dim]]);
        let kernel: Option<KernelSpec> = r.object("kernel", Some(default_kernel(dim)));
        let kernel2: Option<KernelSpec> = r.object("kernel2", None);
        for (key, k) in [("kernel", &kernel), ("kernel2", &kernel2)] {
            if let Some(Err(e)) = k.as_ref().map(|k| k.build(dim)) {
                r.error(key, e);
            }
        }
        let lift_t = r.opt_real("lift_t", Check::Positive);
        if lift_t.is_some() && kernel.as_ref().is_some_and(|k| k.certify_eps.is_none()) {
            r.error("kernel", "lift_t needs a certified kernel (set certify_eps)");
        }
        Self {
            dim,
            points,
            kernel,
            kernel2,
            lift_t,
            certificate_radius: r.real("certificate_radius", 4.0, Check::Positive),
        }
    }

    pub fn run(&self, c: &Common, seed: u64, replicas: usize) -> Result<Report> {
        let g = self.kernel.as_ref().expect("validated kernel").build(self.dim)?;
        let gamma = configuration(self.dim, &self.points)?;
        let eta = FiniteConfiguration::from_configuration(&gamma)?;
        let pts = eta.points();
        let kg = k_transform(&g, &gamma)?;
        let mut rep = Report::new(&["check", "value", "reference", "error", "verdict"]);
        rep.put_real("k_transform", kg);

        // K⁻¹K on every sub-configuration of η
        let n = pts.len();
        let mut worst: f64 = 0.0;
        for mask in 0u32..(1u32 << n) {
            let sub: Vec<&[f64]> = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| pts[i]).collect();
            let fin = FiniteConfiguration::new(self.dim, sub.iter().map(|p| p.to_vec()).collect())?;
            let back = inverse_k_transform(|q| k_transform_points(&g, q).unwrap_or(f64::NAN), &fin)?;
            let err = rel(back, g.eval(&sub));
            worst = if err.is_nan() { f64::INFINITY } else { worst.max(err) };
        }
        let mut verdict = Verdict::from_pass(worst <= IDENTITY_TOL);
        rep.row(vec![
            "round_trip".into(),
            cell(kg),
            cell(g.eval(&pts)),
            cell(worst),
            verdict.as_str().into(),
        ]);
        rep.put_real("round_trip_error", worst);

        if let Some(spec) = &self.kernel2 {
            let g2 = spec.build(self.dim)?;
            let star = KernelFunction::star(&g, &g2)?;
            let lhs = k_transform(&star, &gamma)?;
            let rhs = kg * k_transform(&g2, &gamma)?;
            let err = rel(lhs, rhs);
            let v = Verdict::from_pass(err <= IDENTITY_TOL);
            verdict = verdict.and(v);
            rep.row(vec![
                "star_product".into(),
                cell(lhs),
                cell(rhs),
                cell(err),
                v.as_str().into(),
            ]);
            rep.put_real("star_product_error", err);
        }

        if let Some(t) = self.lift_t {
            let mut opts = McOptions::new(replicas, seed);
            opts.pad = c.pad;
            let cmp = lift_identity(&g, &gamma, t, &opts)?;
            let v = Verdict::from_pass(cmp.pass);
            verdict = verdict.and(v);
            rep.row(vec![
                "lift_identity".into(),
                cell(cmp.monte_carlo.mean),
                cell(cmp.lifted),
                cell(cmp.monte_carlo.std_error),
                v.as_str().into(),
            ]);
            let lifted = confheat_core::semigroup::lift_kernel(&g, t)?;
            let cert = lifted.check_d_class(self.certificate_radius, 2000, seed)?;
            let v = Verdict::from_pass(cert.pass);
            verdict = verdict.and(v);
            rep.row(vec![
                "lifted_certificate".into(),
                cell(cert.worst_ratio),
                cell(1.0),
                cell(0.0),
                v.as_str().into(),
            ]);
            rep.put_real("lift_mc", cmp.monte_carlo.mean);
            rep.put_real("lift_mc_std_error", cmp.monte_carlo.std_error);
            rep.put_real("lift_exact", cmp.lifted);
            rep.put_real("lifted_certificate_worst_ratio", cert.worst_ratio);
            if let Some(dc) = lifted.d_class() {
                rep.put_real("lifted_certificate_c", dc.c);
                rep.put_real("lifted_certificate_eps", dc.eps);
            }
        }
        rep.verdict = verdict;
        Ok(rep)
    }
}

#[derive(Debug, Clone)]
pub struct Correlation {
    dim: usize,
    gamma: Vec<Vec<f64>>,
    theta: Vec<Vec<f64>>,
    t: f64,
}

impl Correlation {
    pub fn parse(r: &mut ParamReader) -> Self {
        let dim = read_dim(r, 1);
        let gamma = r.points(
            "gamma",
            dim,
            vec![vec![0.0; dim], vec![0.5; dim], vec![-1.0; dim], vec![2.0; dim]],
        );
        let theta = r.points("theta", dim, vec![vec![0.1; dim], vec![0.9; dim]]);
        if theta.is_empty() {
            r.error("theta", "needs at least one point");
        }
        Self {
            dim,
            gamma,
            theta,
            t: r.real("t", 0.5, Check::Positive),
        }
    }

    pub fn run(&self, _c: &Common, _seed: u64, _replicas: usize) -> Result<Report> {
        let gamma = configuration(self.dim, &self.gamma)?;
        let theta = FiniteConfiguration::new(self.dim, self.theta.clone())?;
        let ie = correlation_by_inclusion_exclusion(&gamma, &theta, self.t)?;
        let bound = correlation_bound(&gamma, &theta, self.t)?;
        let mut rep = Report::new(&["method", "value"]);
        rep.row(vec!["inclusion_exclusion".into(), cell(ie)]);
        rep.row(vec!["bound".into(), cell(bound)]);
        let mut ok = ie <= bound * (1.0 + 1e-12);
        match correlation_by_enumeration(&gamma, &theta, self.t) {
            Ok(e) => {
                rep.row(vec!["enumeration".into(), cell(e)]);
                rep.put_real("enumeration", e);
                ok &= rel(e, ie) <= IDENTITY_TOL || (e - ie).abs() <= 1e-300;
            }
            Err(confheat_core::Error::Capacity { .. }) => {}
            Err(e) => return Err(e),
        }
        rep.put_real("inclusion_exclusion", ie);
        rep.put_real("bound", bound);
        rep.verdict = Verdict::from_pass(ok);
        Ok(rep)
    }
}

/// Largest order compared against the `n!` sum.
pub const NAIVE_PERMANENT_MAX: usize = 8;

pub fn naive_permanent(m: &[f64], n: usize) -> f64 {
    let mut sum = 0.0;
    for_each_permutation(n, |p| {
        sum += p.iter().enumerate().map(|(i, &j)| m[i * n + j]).product::<f64>()
    });
    sum
}

#[derive(Debug, Clone)]
pub struct Permanent {
    matrix: Option<Vec<Vec<f64>>>,
    n: usize,
}

impl Permanent {
    pub fn parse(r: &mut ParamReader) -> Self {
        let matrix: Option<Vec<Vec<f64>>> = r.object("matrix", None);
        if let Some(m) = &matrix {
            if m.is_empty() || m.iter().any(|row| row.len() != m.len()) {
                r.error("matrix", "must be a nonempty square array");
            } else if m.len() > MAX_PERMANENT_ORDER {
                r.error("matrix", format!("order above {MAX_PERMANENT_ORDER}"));
            }
        }
        Self {
            matrix,
            n: r.int("n", 6, 1, MAX_PERMANENT_ORDER as u64) as usize,
        }
    }

    pub fn run(&self, _c: &Common, seed: u64, _replicas: usize) -> Result<Report> {
        let (flat, n) = match &self.matrix {
            Some(m) => (m.concat(), m.len()),
            None => {
                let mut rng = substream(seed, &[]);
                ((0..self.n * self.n).map(|_| rng.random::<f64>()).collect(), self.n)
            }
        };
        let ryser = permanent(&flat, n)?;
        let mut rep = Report::new(&["method", "value"]);
        rep.row(vec!["ryser".into(), cell(ryser)]);
        rep.put_real("ryser", ryser);
        rep.put("n", n as u64);
        rep.verdict = Verdict::Pass;
        if n <= NAIVE_PERMANENT_MAX {
            let naive = naive_permanent(&flat, n);
            rep.row(vec!["naive".into(), cell(naive)]);
            rep.put_real("naive", naive);
            rep.verdict = Verdict::from_pass(rel(ryser, naive) <= 1e-10);
        }
        Ok(rep)
    }
}

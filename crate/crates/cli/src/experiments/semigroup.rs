//! Semigroup experiments: exponential functionals, invariance, generator
//! and Feller probes.

use confheat_core::points::{default_pad, diffuse_with_pad};
use confheat_core::semigroup::{
    apply_exact_exponential, apply_exact_exponential_two_step, apply_mc, feller_probe, generator_residual,
    invariance_test, par_replicas, CylinderFunction, ExpFunctional, ExpProfile, GeneratorOptions, InvarianceOptions,
    LocalFunctional, McOptions, OuterFunction, ProbeMetric, TestFunction,
};
use confheat_core::{Configuration, MeanEstimate, Result, Verdict, Window};
use serde_json::json;

use super::sampling::{configuration, read_dim};
use super::specs::{FunctionalSpec, ScheduleSpec};
use super::Common;
use crate::params::{Check, ParamReader};
use crate::report::{cell, Report};

/// Residual allowed between the one-step and two-step exact routes.
pub const TWO_STEP_TOL: f64 = 1e-10;

fn within(diff: f64, se: f64) -> Verdict {
    Verdict::from_pass(diff.abs() <= 4.0 * se + 1e-12)
}

#[derive(Debug, Clone)]
pub struct SemigroupExp {
    dim: usize,
    points: Vec<Vec<f64>>,
    t: f64,
    s: Option<f64>,
    functional: ExpFunctional,
    antithetic: bool,
}

impl SemigroupExp {
    pub fn parse(r: &mut ParamReader) -> Self {
        let dim = read_dim(r, 1);
        let points = r.points("points", dim, vec![vec![0.0; dim]]);
        let t = r.real("t", 0.5, Check::Positive);
        let s = r.opt_real("s", Check::Positive);
        let profile: ExpProfile = r
            .object(
                "profile",
                Some(json!({"kind": "gaussian_bump", "amplitude": 0.5, "width": 1.0})),
            )
            .unwrap_or(ExpProfile::Zero);
        let functional = match ExpFunctional::new(dim, profile) {
            Ok(f) => f,
            Err(e) => {
                r.error("profile", e);
                ExpFunctional::new(dim, ExpProfile::Zero).expect("zero profile is valid")
            }
        };
        Self {
            dim,
            points,
            t,
            s,
            functional,
            antithetic: r.boolean("antithetic", false),
        }
    }

    pub fn run(&self, c: &Common, seed: u64, replicas: usize) -> Result<Report> {
        let gamma = configuration(self.dim, &self.points)?;
        let f = &self.functional;
        let mut opts = McOptions::new(replicas, seed);
        opts.pad = c.pad;
        opts.antithetic = self.antithetic;
        let exact = apply_exact_exponential(f, &gamma, self.t)?;
        let mc = apply_mc(|g| f.eval(g), &gamma, self.t, &opts)?;
        let mut rep = Report::new(&["check", "t", "estimate", "std_error", "reference", "verdict"]);
        let mut verdict = within(mc.mean - exact, mc.std_error);
        rep.row(vec![
            "mc_vs_exact".into(),
            cell(self.t),
            cell(mc.mean),
            cell(mc.std_error),
            cell(exact),
            verdict.as_str().into(),
        ]);
        rep.put_real("exact", exact);
        rep.put_real("estimate", mc.mean);
        rep.put_real("std_error", mc.std_error);
        rep.put("route", mc.route.clone());
        rep.put("truncation_note", mc.truncation_note.clone());
        if let Some(s) = self.s {
            let total = self.t + s;
            let one = apply_exact_exponential(f, &gamma, total)?;
            let two = apply_exact_exponential_two_step(f, &gamma, self.t, s)?;
            let residual = (one - two).abs();
            let v = Verdict::from_pass(residual <= TWO_STEP_TOL * one.abs().max(1.0));
            verdict = verdict.and(v);
            rep.row(vec![
                "exact_two_step".into(),
                cell(total),
                cell(two),
                cell(0.0),
                cell(one),
                v.as_str().into(),
            ]);
            rep.put_real("two_step_residual", residual);

            let pad_t = c.pad.unwrap_or_else(|| default_pad(self.dim, self.t));
            let pad_s = c.pad.unwrap_or_else(|| default_pad(self.dim, s));
            let pad_total = c.pad.unwrap_or_else(|| default_pad(self.dim, total));
            let pairs = par_replicas(replicas, seed, |_, rng| {
                let mid = diffuse_with_pad(&gamma, self.t, pad_t, rng)?;
                let end = diffuse_with_pad(&mid, s, pad_s, rng)?;
                let direct = diffuse_with_pad(&gamma, total, pad_total, rng)?;
                Ok((f.eval(&end), f.eval(&direct)))
            })?;
            let a = MeanEstimate::from_values(&pairs.iter().map(|p| p.0).collect::<Vec<_>>());
            let b = MeanEstimate::from_values(&pairs.iter().map(|p| p.1).collect::<Vec<_>>());
            let v = within(a.mean - b.mean, a.combined_se(&b));
            verdict = verdict.and(v);
            rep.row(vec![
                "mc_two_step".into(),
                cell(total),
                cell(a.mean),
                cell(a.combined_se(&b)),
                cell(b.mean),
                v.as_str().into(),
            ]);
            rep.put_real("mc_two_step_mean", a.mean);
            rep.put_real("mc_one_step_mean", b.mean);
        }
        rep.verdict = verdict;
        Ok(rep)
    }
}

#[derive(Debug, Clone)]
pub struct Invariance {
    dim: usize,
    intensity: f64,
    t: f64,
    functional: LocalFunctional,
    leakage_tolerance: f64,
}

impl Invariance {
    pub fn parse(r: &mut ParamReader) -> Self {
        let dim = read_dim(r, 2);
        let functional: LocalFunctional = r
            .object("functional", Some(json!({"kind": "count", "radius": 1.0})))
            .unwrap_or(LocalFunctional::Constant { value: 1.0 });
        if let Err(e) = functional.validate() {
            r.error("functional", e);
        }
        if let LocalFunctional::WindowedExp { functional: ef, .. } = &functional {
            if ef.dim() != dim {
                r.error(
                    "functional",
                    format!("functional dimension {} differs from dim {dim}", ef.dim()),
                );
            }
        }
        Self {
            dim,
            intensity: r.real("intensity", 1.0, Check::Positive),
            t: r.real("t", 0.5, Check::Positive),
            functional,
            leakage_tolerance: r.real("leakage_tolerance", 1e-6, Check::Positive),
        }
    }

    pub fn run(&self, c: &Common, seed: u64, replicas: usize) -> Result<Report> {
        let pad = c.pad.unwrap_or_else(|| default_pad(self.dim, self.t));
        let outer = Window::new(self.functional.support_radius() + pad, self.intensity)?;
        let opts = InvarianceOptions {
            replicas,
            seed,
            leakage_tolerance: self.leakage_tolerance,
        };
        let r = invariance_test(&self.functional, self.dim, &outer, self.t, &opts)?;
        let mut rep = Report::new(&["quantity", "value"]);
        for (k, v) in [
            ("mean_f", r.mean_f),
            ("mean_ptf", r.mean_ptf),
            ("difference", r.difference),
            ("std_error", r.std_error),
            ("leakage_bound", r.leakage_bound),
            ("poisson_mean", r.poisson_mean),
        ] {
            rep.row(vec![k.into(), cell(v)]);
            rep.put_real(k, v);
        }
        rep.put_real("inner_radius", r.inner_radius);
        rep.put_real("outer_radius", r.outer_radius);
        rep.put_real("pad", r.pad);
        rep.verdict = r.verdict;
        Ok(rep)
    }
}

#[derive(Debug, Clone)]
pub struct Generator {
    dim: usize,
    points: Vec<Vec<f64>>,
    function: Option<CylinderFunction>,
    t_list: Vec<f64>,
}

impl Generator {
    pub fn parse(r: &mut ParamReader) -> Self {
        let dim = read_dim(r, 1);
        let points = r.points("points", dim, vec![vec![0.2; dim], vec![-0.6; dim]]);
        let outer: Option<OuterFunction> = r.object("outer", Some(json!({"kind": "exp", "c": [-0.8]})));
        let inner: Option<Vec<TestFunction>> = r.object(
            "inner",
            Some(json!([{"kind": "gaussian", "center": vec![0.0; dim], "amplitude": 1.0, "width": 0.7}])),
        );
        let t_list = r.real_list("t_list", &[0.1, 0.05, 0.025], Check::Positive);
        if t_list.len() < 2 || t_list.windows(2).any(|w| w[1] >= w[0]) {
            r.error("t_list", "needs at least two strictly decreasing times");
        }
        let function = match (outer, inner) {
            (Some(o), Some(i)) => match CylinderFunction::new(dim, o, i) {
                Ok(f) => Some(f),
                Err(e) => {
                    r.error("inner", e);
                    None
                }
            },
            _ => None,
        };
        Self {
            dim,
            points,
            function,
            t_list,
        }
    }

    pub fn run(&self, _c: &Common, seed: u64, replicas: usize) -> Result<Report> {
        let f = self.function.as_ref().expect("validated cylinder function");
        let gamma = configuration(self.dim, &self.points)?;
        let opts = GeneratorOptions {
            t_list: self.t_list.clone(),
            replicas,
            seed,
        };
        let g = generator_residual(f, &gamma, &opts)?;
        let mut rep = Report::new(&["t", "quotient", "std_error", "residual", "ratio_to_next"]);
        for (k, row) in g.rows.iter().enumerate() {
            let ratio = g.ratios.get(k).copied().map(cell).unwrap_or_default();
            rep.row(vec![
                cell(row.t),
                cell(row.quotient),
                cell(row.std_error),
                cell(row.residual),
                ratio,
            ]);
        }
        rep.put_real("analytic", g.analytic);
        rep.put(
            "ratios",
            g.ratios
                .iter()
                .map(|x| crate::params::real_value(*x))
                .collect::<Vec<_>>(),
        );
        if let Some(note) = &g.note {
            rep.put("note", note.clone());
        }
        rep.verdict = g.verdict;
        Ok(rep)
    }
}

#[derive(Debug, Clone)]
pub struct Feller {
    dim: usize,
    points: Vec<Vec<f64>>,
    t: f64,
    functional: Option<FunctionalSpec>,
    schedule: ScheduleSpec,
    steps: usize,
    metric: ProbeMetric,
    tolerance: f64,
}

fn unit(dim: usize, direction: &Option<Vec<f64>>) -> std::result::Result<Vec<f64>, String> {
    let v = direction.clone().unwrap_or_else(|| {
        let mut e = vec![0.0; dim];
        e[0] = 1.0;
        e
    });
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if v.len() != dim || !(n > 0.0 && n.is_finite()) {
        return Err(format!("direction must be a nonzero vector with {dim} coordinates"));
    }
    Ok(v.iter().map(|x| x / n).collect())
}

impl Feller {
    pub fn parse(r: &mut ParamReader) -> Self {
        let dim = read_dim(r, 1);
        let points = r.points("points", dim, vec![vec![0.0; dim]]);
        let t = r.real("t", 0.5, Check::Positive);
        let functional: Option<FunctionalSpec> = r.object(
            "functional",
            Some(json!({"kind": "exp", "profile": {"kind": "gaussian_bump", "amplitude": 0.5, "width": 1.0}})),
        );
        if let Some(Err(e)) = functional.as_ref().map(|f| f.build(dim)) {
            r.error("functional", e);
        }
        let schedule: ScheduleSpec = r
            .object("schedule", Some(json!({"kind": "shift"})))
            .unwrap_or(ScheduleSpec::Identical);
        let steps = r.int("steps", 10, 2, 52) as usize;
        let metric_name = r.choice("metric", "rho", &["rho", "d1"]);
        let metric = if metric_name == "d1" {
            ProbeMetric::D1
        } else {
            ProbeMetric::Rho
        };
        match &schedule {
            ScheduleSpec::Shift { particle, direction } => {
                if *particle >= points.len() {
                    r.error("schedule", format!("particle {particle} does not exist"));
                }
                if let Err(e) = unit(dim, direction) {
                    r.error("schedule", e);
                }
            }
            ScheduleSpec::FarPoint {
                direction,
                start,
                spacing,
            } => {
                if let Err(e) = unit(dim, direction) {
                    r.error("schedule", e);
                }
                if !(*start >= 0.0 && *spacing > 0.0) {
                    r.error("schedule", "far_point needs start >= 0 and spacing > 0");
                }
                if metric == ProbeMetric::Rho {
                    r.error(
                        "metric",
                        "rho is infinite between configurations of different size; use d1",
                    );
                }
            }
            ScheduleSpec::Identical => {}
        }
        Self {
            dim,
            points,
            t,
            functional,
            schedule,
            steps,
            metric,
            tolerance: r.real("tolerance", 1e-3, Check::Positive),
        }
    }

    fn perturbations(&self) -> Result<Vec<Configuration>> {
        let mut out = Vec::with_capacity(self.steps);
        for j in 1..=self.steps {
            let mut pts = self.points.clone();
            match &self.schedule {
                ScheduleSpec::Shift { particle, direction } => {
                    let u = unit(self.dim, direction).expect("validated direction");
                    let h = 0.5f64.powi(j as i32);
                    for (x, e) in pts[*particle].iter_mut().zip(&u) {
                        *x += h * e;
                    }
                }
                ScheduleSpec::FarPoint {
                    direction,
                    start,
                    spacing,
                } => {
                    let u = unit(self.dim, direction).expect("validated direction");
                    let dist = start + (j - 1) as f64 * spacing;
                    pts.push(u.iter().map(|e| dist * e).collect());
                }
                ScheduleSpec::Identical => {}
            }
            out.push(configuration(self.dim, &pts)?);
        }
        Ok(out)
    }

    pub fn run(&self, c: &Common, seed: u64, replicas: usize) -> Result<Report> {
        let f = self
            .functional
            .as_ref()
            .expect("validated functional")
            .build(self.dim)?;
        let gamma = configuration(self.dim, &self.points)?;
        let perturbed = self.perturbations()?;
        let mut mc = McOptions::new(replicas, seed);
        mc.pad = c.pad;
        let r = feller_probe(&f, &gamma, &perturbed, self.t, self.metric, self.tolerance, &mc)?;
        let mut rep = Report::new(&["step", "metric_gap", "value_gap", "std_error"]);
        for (j, p) in r.points.iter().enumerate() {
            rep.row(vec![
                (j + 1).to_string(),
                cell(p.metric_gap),
                cell(p.value_gap),
                cell(p.std_error),
            ]);
        }
        rep.put("route", r.route.clone());
        rep.put_real("base_value", r.base_value);
        rep.put("gaps_decreasing", r.gaps_decreasing);
        rep.put_real("final_ratio", r.final_ratio);
        rep.verdict = r.verdict;
        Ok(rep)
    }
}

//! Path experiments for the independent particle process.

use confheat_core::process::{
    bn_refinement, collision_experiment, marginal_check, oscillation_check, simulate_paths, PathSpec,
    MIN_OSCILLATION_STEPS,
};
use confheat_core::{Result, Verdict};
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::sampling::{configuration, read_dim};
use super::Common;
use crate::params::{Check, ParamReader};
use crate::report::{cell, Attachment, Report};

fn check_grid(r: &mut ParamReader, horizon: f64, dt: f64, key: &str) {
    if let Err(e) = PathSpec::new(horizon, dt).steps() {
        r.error(key, e);
    }
}

#[derive(Debug, Clone)]
pub struct Process {
    dim: usize,
    points: Vec<Vec<f64>>,
    horizon: f64,
    n: u32,
    dt_coarse: f64,
    dump_paths: usize,
}

impl Process {
    pub fn parse(r: &mut ParamReader) -> Self {
        let dim = read_dim(r, 1);
        let points = r.points("points", dim, vec![vec![0.0; dim]]);
        if points.is_empty() {
            r.error("points", "needs at least one particle");
        }
        let horizon = r.real("horizon", 1.0, Check::Positive);
        let dt_coarse = r.real("dt_coarse", 1e-2, Check::Positive);
        check_grid(r, horizon, dt_coarse, "dt_coarse");
        Self {
            dim,
            points,
            horizon,
            n: r.int("n", 1, 1, 1_000_000) as u32,
            dt_coarse,
            dump_paths: r.int("dump_paths", 0, 0, 1_000_000) as usize,
        }
    }

    pub fn run(&self, c: &Common, seed: u64, replicas: usize) -> Result<Report> {
        let gamma = configuration(self.dim, &self.points)?;
        let spec = PathSpec::new(self.horizon, c.dt);
        let refine = bn_refinement(&gamma, self.n, self.horizon, self.dt_coarse, c.dt, replicas, seed)?;
        let marginal = marginal_check(&gamma, &spec, replicas, seed)?;
        let mut rep = Report::new(&["check", "value", "reference", "verdict"]);
        rep.row(vec![
            "bn_refinement".into(),
            cell(refine.median_fine),
            cell(refine.median_coarse),
            refine.verdict.as_str().into(),
        ]);
        rep.row(vec![
            "marginal_ks_p".into(),
            cell(marginal.ks.p_value),
            cell(confheat_core::process::KS_LEVEL),
            Verdict::from_pass(marginal.ks.p_value > confheat_core::process::KS_LEVEL)
                .as_str()
                .into(),
        ]);
        rep.row(vec![
            "displacement_variance".into(),
            cell(marginal.variance),
            cell(2.0 * marginal.t),
            Verdict::from_pass((marginal.variance - 2.0 * marginal.t).abs() <= 4.0 * marginal.variance_error)
                .as_str()
                .into(),
        ]);
        if let (Some(c), Some(e)) = (marginal.correlation, marginal.correlation_error) {
            rep.row(vec![
                "cross_correlation".into(),
                cell(c),
                cell(0.0),
                Verdict::from_pass(c.abs() <= 4.0 * e).as_str().into(),
            ]);
        }
        rep.put_ser("bn_refinement", &refine);
        rep.put_ser("marginal", &marginal);
        if self.dump_paths > 0 {
            rep.attachments.push(self.dump(&gamma, &spec, seed)?);
        }
        rep.verdict = refine.verdict.and(marginal.verdict);
        Ok(rep)
    }

    fn dump(&self, gamma: &confheat_core::Configuration, spec: &PathSpec, seed: u64) -> Result<Attachment> {
        let mut header = vec!["replica".to_string(), "particle".into(), "step".into(), "time".into()];
        header.extend((0..self.dim).map(|i| format!("x{i}")));
        let mut rows = Vec::new();
        for replica in 0..self.dump_paths {
            let b = simulate_paths(gamma, spec, seed, replica as u64)?;
            for k in 0..b.particles() {
                for s in 0..=b.steps() {
                    let mut row = vec![replica.to_string(), k.to_string(), s.to_string(), cell(b.time(s))];
                    row.extend(b.position(k, s).iter().map(|x| cell(*x)));
                    rows.push(row);
                }
            }
        }
        Ok(Attachment {
            name: "paths".into(),
            header,
            rows,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OscillationCase {
    pub delta: f64,
    pub r: f64,
    /// Interval `[a, b]`; defaults to `[0, δ]`.
    #[serde(default)]
    pub a: f64,
    #[serde(default)]
    pub b: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct Oscillation {
    start: Vec<f64>,
    cases: Vec<OscillationCase>,
    sub_steps: usize,
}

impl Oscillation {
    pub fn parse(r: &mut ParamReader) -> Self {
        let dim = read_dim(r, 1);
        let start = r.point("start", dim, vec![0.0; dim]);
        let cases: Vec<OscillationCase> = r
            .object(
                "cases",
                Some(json!([
                    {"delta": 0.01, "r": 0.5},
                    {"delta": 0.01, "r": 1.0},
                    {"delta": 0.05, "r": 1.0},
                    {"delta": 0.05, "r": 2.0},
                    {"delta": 0.1, "r": 1.0},
                    {"delta": 0.1, "r": 3.0}
                ])),
            )
            .unwrap_or_default();
        for (k, c) in cases.iter().enumerate() {
            let b = c.b.unwrap_or(c.a + c.delta);
            if !(c.delta > 0.0 && c.r > 0.0 && c.a >= 0.0 && b > c.a && b - c.a <= c.delta * (1.0 + 1e-12)) {
                r.error("cases", format!("case {k}: need δ, r > 0 and 0 ≤ a < b ≤ a + δ"));
            }
        }
        Self {
            start,
            cases,
            sub_steps: r.int("sub_steps", 256, MIN_OSCILLATION_STEPS as u64, 1 << 20) as usize,
        }
    }

    pub fn run(&self, _c: &Common, seed: u64, replicas: usize) -> Result<Report> {
        let mut rep = Report::new(&["delta", "r", "a", "b", "empirical", "std_error", "bound", "verdict"]);
        let mut verdict = Verdict::Pass;
        let mut details = Vec::new();
        // every case shares the seed, so rates for nested r are paired
        for c in &self.cases {
            let b = c.b.unwrap_or(c.a + c.delta);
            let o = oscillation_check(&self.start, c.a, b, c.delta, c.r, self.sub_steps, replicas, seed)?;
            verdict = verdict.and(o.verdict);
            rep.row(vec![
                cell(c.delta),
                cell(c.r),
                cell(c.a),
                cell(b),
                cell(o.empirical),
                cell(o.std_error),
                cell(o.bound),
                o.verdict.as_str().into(),
            ]);
            details.push(o);
        }
        rep.put_ser("cases", &details);
        rep.verdict = verdict;
        Ok(rep)
    }
}

#[derive(Debug, Clone)]
pub struct Collision {
    dim: usize,
    points: Vec<Vec<f64>>,
    horizon: f64,
    epsilons: Vec<f64>,
}

impl Collision {
    pub fn parse(r: &mut ParamReader) -> Self {
        let dim = read_dim(r, 2);
        let mut far = vec![0.0; dim];
        far[0] = 0.5;
        let points = r.points("points", dim, vec![vec![0.0; dim], far]);
        if points.len() < 2 {
            r.error("points", "needs at least two particles");
        }
        let epsilons = r.real_list("epsilons", &[0.1, 0.01, 0.001], Check::Positive);
        if epsilons.is_empty() || epsilons.windows(2).any(|w| w[1] >= w[0]) {
            r.error("epsilons", "must be a nonempty strictly decreasing list");
        }
        Self {
            dim,
            points,
            horizon: r.real("horizon", 1.0, Check::Positive),
            epsilons,
        }
    }

    pub fn run(&self, c: &Common, seed: u64, replicas: usize) -> Result<Report> {
        let gamma = configuration(self.dim, &self.points)?;
        let spec = PathSpec::new(self.horizon, c.dt);
        let e = collision_experiment(&gamma, &spec, &self.epsilons, replicas, seed)?;
        let mut rep = Report::new(&["quantity", "epsilon", "value", "std_error"]);
        for k in 0..e.epsilons.len() {
            rep.row(vec![
                "fraction_below".into(),
                cell(e.epsilons[k]),
                cell(e.fractions[k]),
                cell(e.fraction_errors[k]),
            ]);
        }
        if let Some(s) = e.sign_change_fraction {
            rep.row(vec![
                "sign_change_fraction".into(),
                String::new(),
                cell(s),
                String::new(),
            ]);
        }
        if let (Some(f), Some(se)) = (e.crossing_fraction, e.crossing_error) {
            rep.row(vec!["crossing_fraction".into(), String::new(), cell(f), cell(se)]);
        }
        if let Some(v) = e.reflection_value {
            rep.row(vec!["reflection_value".into(), String::new(), cell(v), String::new()]);
        }
        rep.put_ser("collision", &e);
        rep.put(
            "note",
            if self.dim == 1 {
                "crossings between grid times are counted by the Brownian-bridge correction"
            } else {
                "distances are checked at grid times only"
            },
        );
        rep.verdict = e.verdict;
        Ok(rep)
    }
}

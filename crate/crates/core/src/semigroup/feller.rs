use serde::{Deserialize, Serialize};

use super::functional::{apply_exact_exponential, ExpFunctional};
use super::lift::lift_kernel;
use super::mc::{apply_mc, McOptions};
use crate::error::{invalid, Error, Result};
use crate::harmonic::{k_transform, KernelFunction};
use crate::metrics::{d1, rho};
use crate::points::Configuration;
use crate::stats::Verdict;

/// Functional whose semigroup image is probed.
#[derive(Debug, Clone)]
pub enum ProbeFunctional {
    /// `F = K(G)`; exact route through `K(P̃_t G)`.
    Kernel(KernelFunction),
    /// Exponential functional; exact route through the convolved profile.
    Exp(ExpFunctional),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProbeMetric {
    D1,
    Rho,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FellerPoint {
    pub metric_gap: f64,
    pub value_gap: f64,
    /// Standard error of the value gap (0 on the exact route).
    pub std_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FellerReport {
    pub route: String,
    pub base_value: f64,
    pub points: Vec<FellerPoint>,
    pub gaps_decreasing: bool,
    /// Last value gap over the first one (0 when both vanish).
    pub final_ratio: f64,
    pub verdict: Verdict,
}

/// `γ ↦ (value, standard error)`
type Evaluator<'a> = Box<dyn Fn(&Configuration) -> Result<(f64, f64)> + 'a>;

/// Evaluates `(P_t F)(γ)` and `(P_t F)(γ_j)` along a perturbation schedule.
///
/// Metric gaps must be strictly decreasing (or all zero). The verdict
/// passes when the value gaps strictly decrease (or all vanish) and the
/// final gap is below `tolerance` times the initial one. MC is used only
/// when no exact route exists, with the same seed for every evaluation.
pub fn feller_probe(
    f: &ProbeFunctional,
    gamma: &Configuration,
    perturbations: &[Configuration],
    t: f64,
    metric: ProbeMetric,
    tolerance: f64,
    mc: &McOptions,
) -> Result<FellerReport> {
    if perturbations.len() < 2 {
        return invalid("a perturbation schedule needs at least two configurations");
    }
    let gaps = perturbations
        .iter()
        .map(|p| match metric {
            ProbeMetric::D1 => d1(p, gamma).map(|m| m.value),
            ProbeMetric::Rho => rho(p, gamma),
        })
        .collect::<Result<Vec<f64>>>()?;
    let all_zero = gaps.iter().all(|g| *g == 0.0);
    if !all_zero && gaps.windows(2).any(|w| !(w[1] < w[0])) {
        return invalid(format!(
            "metric gaps along the schedule are not strictly decreasing: {gaps:?}"
        ));
    }

    let (route, eval): (&str, Evaluator) = match f {
        ProbeFunctional::Exp(ef) => (
            "exact",
            Box::new(move |c| Ok((apply_exact_exponential(ef, c, t)?, 0.0))),
        ),
        ProbeFunctional::Kernel(g) => match lift_kernel(g, t) {
            Ok(lifted) => ("exact", Box::new(move |c| Ok((k_transform(&lifted, c)?, 0.0)))),
            Err(Error::Capability(_)) => (
                "monte-carlo",
                Box::new(move |c| {
                    let est = apply_mc(|x| k_transform(g, x).unwrap_or(f64::NAN), c, t, mc)?;
                    Ok((est.mean, est.std_error))
                }),
            ),
            Err(e) => return Err(e),
        },
    };
    let (base, base_se) = eval(gamma)?;
    let mut points = Vec::with_capacity(perturbations.len());
    for (p, gap) in perturbations.iter().zip(&gaps) {
        let (v, se) = eval(p)?;
        points.push(FellerPoint {
            metric_gap: *gap,
            value_gap: (v - base).abs(),
            std_error: se.hypot(base_se),
        });
    }
    let first = points[0].value_gap;
    let last = points[points.len() - 1].value_gap;
    let vanish = points.iter().all(|p| p.value_gap == 0.0);
    let gaps_decreasing = vanish || points.windows(2).all(|w| w[1].value_gap < w[0].value_gap);
    let final_ratio = if vanish { 0.0 } else { last / first };
    let pass = gaps_decreasing && (vanish || last < tolerance * first);
    Ok(FellerReport {
        route: route.to_string(),
        base_value: base,
        points,
        gaps_decreasing,
        final_ratio,
        verdict: Verdict::from_pass(pass),
    })
}

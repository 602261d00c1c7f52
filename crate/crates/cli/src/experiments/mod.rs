//! Experiment parameter schemas and runners.

mod algebra;
mod paths;
mod sampling;
mod semigroup;
mod specs;

use confheat_core::Result;

use crate::config::ExperimentConfig;
use crate::params::ParamReader;
use crate::report::Report;

pub use specs::{FunctionalSpec, KernelSpec, LevelSpec, ScheduleSpec};

/// Parameters shared by every experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Common {
    /// Time step of path simulations.
    pub dt: f64,
    /// Window enlargement after diffusion; `None` picks the default.
    pub pad: Option<f64>,
    /// Truncation index of the flat-metric series.
    pub i_max: u32,
    /// Truncation index of the `B_n` series.
    pub n_max: u32,
}

#[derive(Debug, Clone)]
pub enum Params {
    SamplePoisson(sampling::SamplePoisson),
    Diffuse(sampling::Diffuse),
    TailTau(sampling::TailTau),
    SemigroupExp(semigroup::SemigroupExp),
    Invariance(semigroup::Invariance),
    Generator(semigroup::Generator),
    Feller(semigroup::Feller),
    Rho(algebra::Rho),
    FlatMetric(algebra::FlatMetric),
    KTransform(algebra::KTransform),
    Correlation(algebra::Correlation),
    Permanent(algebra::Permanent),
    Process(paths::Process),
    Oscillation(paths::Oscillation),
    Collision(paths::Collision),
}

impl Params {
    pub fn parse(experiment: &str, r: &mut ParamReader) -> Params {
        match experiment {
            "sample-poisson" => Params::SamplePoisson(sampling::SamplePoisson::parse(r)),
            "diffuse" => Params::Diffuse(sampling::Diffuse::parse(r)),
            "tail-tau" => Params::TailTau(sampling::TailTau::parse(r)),
            "semigroup-exp" => Params::SemigroupExp(semigroup::SemigroupExp::parse(r)),
            "invariance" => Params::Invariance(semigroup::Invariance::parse(r)),
            "generator" => Params::Generator(semigroup::Generator::parse(r)),
            "feller" => Params::Feller(semigroup::Feller::parse(r)),
            "rho" => Params::Rho(algebra::Rho::parse(r)),
            "flat-metric" => Params::FlatMetric(algebra::FlatMetric::parse(r)),
            "ktransform" => Params::KTransform(algebra::KTransform::parse(r)),
            "correlation" => Params::Correlation(algebra::Correlation::parse(r)),
            "permanent" => Params::Permanent(algebra::Permanent::parse(r)),
            "process" => Params::Process(paths::Process::parse(r)),
            "oscillation" => Params::Oscillation(paths::Oscillation::parse(r)),
            "collision" => Params::Collision(paths::Collision::parse(r)),
            other => unreachable!("experiment {other} was validated"),
        }
    }
}

/// Runs a validated experiment on the current rayon pool.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Report> {
    let (seed, n) = (cfg.seed, cfg.replicas);
    let c = &cfg.common;
    match &cfg.params {
        Params::SamplePoisson(p) => p.run(c, seed, n),
        Params::Diffuse(p) => p.run(c, seed, n),
        Params::TailTau(p) => p.run(c, seed, n),
        Params::SemigroupExp(p) => p.run(c, seed, n),
        Params::Invariance(p) => p.run(c, seed, n),
        Params::Generator(p) => p.run(c, seed, n),
        Params::Feller(p) => p.run(c, seed, n),
        Params::Rho(p) => p.run(c, seed, n),
        Params::FlatMetric(p) => p.run(c, seed, n),
        Params::KTransform(p) => p.run(c, seed, n),
        Params::Correlation(p) => p.run(c, seed, n),
        Params::Permanent(p) => p.run(c, seed, n),
        Params::Process(p) => p.run(c, seed, n),
        Params::Oscillation(p) => p.run(c, seed, n),
        Params::Collision(p) => p.run(c, seed, n),
    }
}

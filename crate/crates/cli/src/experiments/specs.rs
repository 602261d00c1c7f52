//! JSON shapes of structured parameters.

use confheat_core::harmonic::{Factor, KernelFunction, Level};
use confheat_core::semigroup::{ExpFunctional, ExpProfile, ProbeFunctional};
use confheat_core::Result;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LevelSpec {
    Zero,
    Constant { value: f64 },
    Product { coefficient: f64, factor: Factor },
}

/// `levels[n]` describes `G^(n)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSpec {
    pub levels: Vec<LevelSpec>,
    /// Attach the closed-form decay certificate for this exponent.
    #[serde(default)]
    pub certify_eps: Option<f64>,
}

impl KernelSpec {
    pub fn build(&self, dim: usize) -> Result<KernelFunction> {
        let levels = self
            .levels
            .iter()
            .map(|l| match l {
                LevelSpec::Zero => Level::Zero,
                LevelSpec::Constant { value } => Level::Constant(*value),
                LevelSpec::Product { coefficient, factor } => Level::Product {
                    coefficient: *coefficient,
                    factor: factor.clone(),
                },
            })
            .collect();
        let g = KernelFunction::new(dim, levels)?;
        match self.certify_eps {
            Some(eps) => g.certified(eps),
            None => Ok(g),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FunctionalSpec {
    /// `F = K(G)`
    Kernel {
        levels: Vec<LevelSpec>,
        #[serde(default)]
        certify_eps: Option<f64>,
    },
    /// `F(γ) = Π (1 + φ(x))`
    Exp { profile: ExpProfile },
}

impl FunctionalSpec {
    pub fn build(&self, dim: usize) -> Result<ProbeFunctional> {
        Ok(match self {
            FunctionalSpec::Kernel { levels, certify_eps } => ProbeFunctional::Kernel(
                KernelSpec {
                    levels: levels.clone(),
                    certify_eps: *certify_eps,
                }
                .build(dim)?,
            ),
            FunctionalSpec::Exp { profile } => ProbeFunctional::Exp(ExpFunctional::new(dim, profile.clone())?),
        })
    }
}

/// Perturbation schedule `γ_1, γ_2, …` of a Feller probe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScheduleSpec {
    /// Particle `particle` moved by `2^{-j}` along `direction`.
    Shift {
        #[serde(default)]
        particle: usize,
        #[serde(default)]
        direction: Option<Vec<f64>>,
    },
    /// `γ` plus one point at distance `start + (j-1) spacing` along
    /// `direction`.
    FarPoint {
        #[serde(default)]
        direction: Option<Vec<f64>>,
        #[serde(default = "one")]
        start: f64,
        #[serde(default = "one")]
        spacing: f64,
    },
    /// `γ_j = γ`
    Identical,
}

fn one() -> f64 {
    1.0
}

use super::mc::{apply_mc, McOptions, SemigroupEstimate};
use crate::error::{invalid, Error, Result};
use crate::harmonic::{k_transform, DClass, KernelFunction, Level};
use crate::kernel::HeatKernelParams;
use crate::points::Configuration;
use crate::special::{gamma, unit_sphere_area};

/// `P̃_t G`: every argument of every level convolved with the heat kernel.
///
/// A `𝔻` certificate `(C, ε)` on `G` becomes `(C · C'_t · I_ε, ε/2)` with
/// `C'_t = (4πt)^{-d/2} e^{t(1+ε/2)²}` and `I_ε = ∫ e^{-(ε/2)|y|} dy`.
pub fn lift_kernel(g: &KernelFunction, t: f64) -> Result<KernelFunction> {
    let params = HeatKernelParams::new(g.dim(), t)?;
    let dim = g.dim();
    let lifted = g.map_levels(|_, level| {
        Ok(match level {
            Level::Zero => Level::Zero,
            Level::Constant(c) => Level::Constant(*c),
            Level::Product { coefficient, factor } => Level::Product {
                coefficient: *coefficient,
                factor: factor.heat_convolved(dim, t)?,
            },
            Level::Custom(_) => {
                return Err(Error::Capability(
                    "custom kernel levels have no heat-convolution rule".into(),
                ))
            }
        })
    })?;
    Ok(match g.d_class() {
        Some(dc) => lifted.with_d_class(degraded_certificate(&params, dc)),
        None => lifted,
    })
}

pub fn degraded_certificate(params: &HeatKernelParams, dc: DClass) -> DClass {
    let d = params.dim() as f64;
    let t = params.t();
    let k = 1.0 + dc.eps / 2.0;
    let c_t = (4.0 * std::f64::consts::PI * t).powf(-d / 2.0) * (t * k * k).exp();
    let i_eps = unit_sphere_area(params.dim()) * gamma(d) * (2.0 / dc.eps).powf(d);
    DClass {
        c: dc.c * c_t * i_eps,
        eps: dc.eps / 2.0,
    }
}

/// Both sides of `P_t(KG)(γ) = K(P̃_t G)(γ)`.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LiftComparison {
    pub monte_carlo: SemigroupEstimate,
    pub lifted: f64,
    pub pass: bool,
}

pub fn lift_identity(g: &KernelFunction, gamma: &Configuration, t: f64, opts: &McOptions) -> Result<LiftComparison> {
    if !gamma.is_simple() {
        return invalid("lift identity needs a simple configuration");
    }
    let lifted = k_transform(&lift_kernel(g, t)?, gamma)?;
    let mc = apply_mc(|c| k_transform(g, c).unwrap_or(f64::NAN), gamma, t, opts)?;
    let pass = (mc.mean - lifted).abs() <= 4.0 * mc.std_error;
    Ok(LiftComparison {
        monte_carlo: mc,
        lifted,
        pass,
    })
}

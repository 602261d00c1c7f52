//! The heat semigroup `P_t` acting on functions of configurations.

mod feller;
mod functional;
mod generator;
mod lift;
mod mc;

pub use feller::{feller_probe, FellerPoint, FellerReport, ProbeFunctional, ProbeMetric};
pub use functional::{
    apply_exact_exponential, apply_exact_exponential_two_step, gaussian_ball_probability, ExpFunctional, ExpProfile,
    LocalFunctional, CONVOLUTION_TOL,
};
pub use generator::{
    generator_residual, CylinderFunction, GeneratorOptions, GeneratorReport, GeneratorRow, OuterFunction, TestFunction,
    DERIVATIVE_CHECK_TOL, RATIO_RANGE,
};
pub use lift::{degraded_certificate, lift_identity, lift_kernel, LiftComparison};
pub use mc::{
    apply_mc, invariance_test, par_replicas, InvarianceOptions, InvarianceReport, McOptions, SemigroupEstimate,
};

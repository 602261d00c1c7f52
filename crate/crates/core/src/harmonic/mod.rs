//! K-transform calculus on finite configurations and the correlation
//! functions of the kernel measures `P_{t,γ}`.

mod correlation;
mod kernel_fn;
mod transform;

pub use correlation::{
    correlation_bound, correlation_by_enumeration, correlation_by_inclusion_exclusion, correlation_function, permanent,
    permanent_kernel, MAX_PERMANENT_ORDER,
};
pub use kernel_fn::{DClass, DClassReport, Factor, FiniteConfiguration, KernelFunction, Level, LevelFn};
pub use transform::{
    inverse_k_transform, k_transform, k_transform_points, lebesgue_poisson_integral, star_convolution, IntegrationSpec,
    LebesguePoissonReport, MAX_INVERSE_SIZE, MAX_STAR_SIZE, MAX_SUBSETS,
};

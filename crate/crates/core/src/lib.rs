//! Heat semigroup on configuration spaces over ℝ^d.
//!
//! The crate simulates the kernel measures `P_{t,γ}` (every point of a
//! configuration moved independently by the Gaussian heat kernel), the
//! K-transform calculus on finite configurations, the configuration
//! metrics `d_K`, `d_1`, `d_∞` and `ρ`, and the independent infinite
//! particle process, together with checks of the identities that tie them
//! together.

#![allow(clippy::excessive_precision, clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod harmonic;
pub mod kernel;
pub mod metrics;
pub mod points;
pub mod process;
pub mod quad;
pub mod rng;
pub mod semigroup;
pub mod special;
pub mod stats;

pub use error::{Error, Result};
pub use kernel::{BoundCertificate, HeatKernelParams, TailCertificate, TailFunction};
pub use points::{Configuration, TailModel, Window};
pub use stats::{MeanEstimate, Verdict};

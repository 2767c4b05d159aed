//! Langevin sampling with an exactly solved prior diffusion.
//!
//! Targets have the form `p∗ ∝ exp(−f(w) − (m/2)‖w‖²)`. Each iteration of the
//! sampler takes a gradient step on `f` and then runs the Ornstein–Uhlenbeck
//! flow of the quadratic prior exactly:
//!
//! ```text
//! w'  = w − η̃ ∇f(w),             η̃ = (e^{mη} − 1)/m
//! w⁺  = e^{−mη} w' + √((1 − e^{−2mη})/m) ξ,   ξ ~ N(0, I)
//! ```
//!
//! Modules:
//! - [`targets`]: potentials, gradients, Hessians and spectral constants.
//! - [`sampler`]: the two-stage sampler, the unadjusted Langevin baseline,
//!   fixed and varying step rules, and ensemble driving.
//! - [`kernel`]: the closed-form one-step transition law and the affine SDE
//!   that interpolates it.
//! - [`metrics`]: exact Gaussian-chain oracles, KL/W2 estimators and the
//!   convergence bounds.
//! - [`harness`]: JSON experiment configs, runs, sweeps, validation suites
//!   and CSV output.

pub mod error;
pub mod harness;
pub mod kernel;
pub mod metrics;
pub mod oracle;
pub mod rng;
pub mod sampler;
pub mod targets;

pub use error::{Error, Result};
pub use kernel::{InterpolatingSde, TransitionKernel};
pub use metrics::{BoundEvaluation, GaussianMoments};
pub use sampler::{ChainState, NoiseMode, Sampler, ScheduleKind, ScheduleSpec};
pub use targets::{GaussianMixtureTarget, Potential, QuadraticTarget, TargetConstants, TargetModel};

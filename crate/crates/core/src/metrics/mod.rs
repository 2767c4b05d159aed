//! Convergence measures: exact Gaussian-chain moments and KL, the theorem
//! bounds, and sample-based estimators for non-Gaussian targets.

mod bounds;
mod empirical;
mod gaussian;

pub use bounds::{theorem_fixed_bound, theorem_varying_bound, BoundEvaluation};
pub use empirical::{hist_kl_1d, sliced_w2, DEFAULT_BINS};
pub use gaussian::{gaussian_chain_advance, gaussian_kl, ula_chain_advance, GaussianMoments};

/// Metric names as they appear in the CSV `metric` column.
pub mod names {
    pub const KL_EXACT: &str = "kl_exact";
    pub const KL_BOUND_FIXED: &str = "kl_bound_fixed";
    pub const KL_BOUND_VARYING: &str = "kl_bound_varying";
    pub const KL_HIST1D: &str = "kl_hist1d";
    pub const SLICED_W2: &str = "sliced_w2";
    pub const COORD_VAR_BIAS: &str = "coord_var_bias";

    pub const ALL: [&str; 6] =
        [KL_EXACT, KL_BOUND_FIXED, KL_BOUND_VARYING, KL_HIST1D, SLICED_W2, COORD_VAR_BIAS];
}

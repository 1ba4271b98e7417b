//! Activity and lifetime distributions with their power-law and skewed
//! Gaussian fits.

mod activity;
mod histogram;
mod lifetime;
mod powerlaw;
pub(crate) mod simplex;
mod skewnormal;

pub use activity::{activity_distribution, activity_values, ActivityMeasure};
pub(crate) use histogram::{edge as log_edge, log_bin as log_bin_index};
pub use histogram::{BinScale, Histogram};
pub use lifetime::{
    post_lifetime, subreddit_mean_user_lifetimes, user_lifetime, Lifetime, SECONDS_PER_DAY,
};
pub use powerlaw::{
    fit_double_power_law, fit_double_power_law_points, fit_power_law, fit_power_law_points,
    BrokenPowerLawFit, PowerLawFit,
};
pub use skewnormal::{
    fit_skew_gaussian, skewness_of_shape, SkewGaussianFit, SkewNormal, MAX_SKEWNESS,
};

use thiserror::Error;

pub const DEFAULT_BINS_PER_DECADE: usize = 10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("empty input")]
    EmptyInput,
    #[error("insufficient support: need {needed} nonzero points, found {found}")]
    InsufficientSupport { needed: usize, found: usize },
    #[error("fit did not converge after {iterations} iterations")]
    NonConvergence { iterations: usize },
}

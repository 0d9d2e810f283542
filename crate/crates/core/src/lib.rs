//! Ordinal-pattern entropy statistics: Bandt–Pompe symbolization, moments of
//! the plug-in entropy of a multinomial sample (approximate, asymptotic and
//! exact in arbitrary precision), tests on entropy differences and the
//! Monte Carlo machinery used to assess them.
//!
//! The crate is `no_std` and needs only `alloc`.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

mod bigfloat;
pub mod entropy;
pub mod error;
pub mod exact;
pub mod inference;
pub mod montecarlo;
pub mod ordinal;
pub mod simplex;

pub use entropy::{
    asymptotic_variance, asymptotic_variance_plugin, basharin_moments, corrected_model,
    entropy_of_counts, hutcheson_approx_moments, normalize, shannon_entropy, ApproxOrder, Method,
    MomentEstimate, NormalModel,
};
pub use error::{Error, Result};
pub use exact::{
    enumerate_moments, exact_mean, exact_variance, feasibility_probe, Certified, PrecisionConfig,
};
pub use inference::{
    bonferroni, compare_entropies, compare_entropies_with, entropy_ci, std_normal_cdf,
    std_normal_quantile, ConfidenceInterval, TestOptions, TestResult, ZeroBinPolicy,
};
pub use montecarlo::{
    accuracy_grid, lre, re, replicate_entropy, sample_multinomial, ReplicateSummary, Scenario,
};
pub use ordinal::{
    histogram, sample_size_warning, symbolize, tied_windows, PatternHistogram, PatternSequence, TiePolicy,
    TimeSeries,
};
pub use simplex::ProbabilityVector;

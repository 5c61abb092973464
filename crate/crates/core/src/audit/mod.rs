//! Empirical restricted-isometry audits and numeric bound evaluators.
//!
//! Distortion estimates are maxima over finite samples and therefore only
//! lower-bound the true isometry constant of an operator on a set. The bound
//! evaluators plug user-supplied constants into closed-form expressions whose
//! absolute constants are unspecified; they are scaling calculators, not
//! certified thresholds.

mod bounds;
mod covering;
mod distortion;

pub use bounds::{eval_m_bound, BoundConstants, BoundFormula, BoundInputs, BoundReport};
pub use covering::{
    adaptive_simpson, dudley_estimate, dudley_integrand, eval_covering_bound, CoveringSet,
};
pub use distortion::{
    coherence_check, estimate_distortion, max_coherence, pairwise_distortion, relative_distortion,
    sample_s1, sample_s2, sample_s2_pair, DistortionEstimate, SampleSet, SAMPLED_LOWER_BOUND_NOTE,
};

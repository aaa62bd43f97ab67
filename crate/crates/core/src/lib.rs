//! Worst-case n-term approximation errors on weighted sequence spaces.
//!
//! For a nondecreasing weight sequence `w` with `w_1 >= 1` and `0 < p <= inf`,
//! this crate computes, bounds and certifies
//! `sigma_n(U(lp(w))) = sup { sigma_n(x) : ||x||_{lp(w)} <= 1 }`
//! where `sigma_n(x)` is the l2 norm of `x` with its `n` largest entries
//! removed.

pub mod bounds;
pub mod cumulative;
pub mod error;
pub mod exponent;
mod golden;
pub mod oracle;
mod quadrature;
pub mod ratefit;
pub mod seqcore;
mod serde_util;
pub mod summation;
pub mod weights;

pub use bounds::{
    class_bounds, class_error_infty, default_m_max, sandwich_width, BoundResult, BoundStatus, BoundsEngine,
    InfinityBound, ScanSettings, TailPolicy, TailStatus,
};
pub use cumulative::CumulativeWeightTable;
pub use error::{Error, Result};
pub use exponent::Exponent;
pub use oracle::{
    certify, random_search_oracle, structure_oracle, CertificationReport, Check, OracleConfig, RandomSearchResult,
    StructureResult,
};
pub use ratefit::{bound_samples, dyadic_grid, fit_rate, ratio_envelope, Envelope, RateFit, RateModel};
pub use seqcore::{
    decreasing_rearrangement, extremal_sequence, flatten_head, sigma_n_exact, sigma_n_sq, tail_energy_profile,
    weighted_lp_norm, CoefficientSequence, Rearranged,
};
pub use weights::{predicted_rate, RatePrediction, WeightFamily, WeightModel, WeightSpec};

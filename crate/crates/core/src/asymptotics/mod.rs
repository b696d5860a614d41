//! Self-similar rescaling and the long-time verdicts in both decay regimes.

mod barenblatt;
mod exponents;
mod profile;
mod verdict;

pub use barenblatt::{barenblatt_profile, barenblatt_profiles, BarenblattProfile};
pub use exponents::{scaling_exponents, separable_constant, ScalingExponents};
pub use profile::{
    distance_weight, interpolate, rescaled_profile, weighted_l1_distance, weighted_l1_norm, MaskedField,
};
pub use verdict::{
    fast_decay_verdict, slow_decay_verdict, AsymptoticVerdict, BoundCheck, HistoryPoint, Regime, BOUND_SLACK,
    FAST_THRESHOLD, INNER_FRACTION, MIN_DYADIC_TIMES, MONOTONE_SLACK, SLOW_THRESHOLD,
};

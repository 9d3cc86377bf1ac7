//! Approximation experiments: smooth approximation of supersolutions,
//! convergence-rate fits, integrability scans and the compactness run.
//! Everything here works in `f64`.

mod approx;
mod compactness;
mod integrability;
mod report;

pub use approx::{
    approximate_superharmonic, approximate_superparabolic, approximate_supersolution, decreasing_within,
    obstacle_ordering_gap, rate_experiment, rate_fit, ApproxLevel, ApproxSequence, EllipticSequence, LevelNorms,
    ObstacleStage, ParabolicSequence, RateFit, SuperharmonicSchedule,
};
pub use compactness::{
    compactness_experiment, density_tol, truncated_barenblatt_family, CompactnessOutcome, CompactnessSetup,
};
pub use integrability::{
    critical_exponent, increment_exponent, integrability_experiment, Classification, IntegrabilityKind, QOutcome,
};
pub use report::{Cell, ExperimentReport};

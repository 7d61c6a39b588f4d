//! Loss-based risk measures and their robustness properties.
//!
//! The crate evaluates risk measures that depend on a position only through
//! its loss part X ^ 0: scenario margins, put premia, expected tail loss,
//! spectral measures, loss certainty equivalents, quantile losses, and
//! general measures given by a finite penalty family. On top of the
//! evaluators it provides delta-truncation as a robustification, analytic
//! and numeric sensitivity functions for contamination by a point mass, and
//! a Monte-Carlo laboratory measuring robustness and consistency of the
//! plug-in estimators.

pub mod catalog;
pub mod dist;
pub mod error;
pub mod measures;
pub mod piecewise;
pub mod roblab;
pub mod robustify;
pub mod sensitivity;

pub use dist::{
    contaminate_quantile, derivative_at, levy_prokhorov, ContaminationSpec,
    EmpiricalDistribution, Interpolation, QuantileFn,
};
pub use error::{Error, Result};
pub use measures::{
    axiom_suite, eval, eval_etl, eval_general_fenchel, eval_loss_ce, eval_put_premium, eval_span,
    eval_spectral, holder_dual_check, AxiomReport, AxiomStatus, EvalInput, LossUtility,
    MeasureOn01, PenaltyEntry, PenaltyFamily, RiskMeasureSpec, Segment, SpectralDensity,
};
pub use catalog::{default_label, parse_catalog, parse_measure};
pub use roblab::{
    consistency_curve, estimator_law, lebesgue_condition, parse_experiment_config,
    robustness_experiment, thread_cap, weak_continuity_condition, ConsistencyPoint,
    ContaminationSweep, ExperimentConfig, LebesgueProfile, PiecewiseBase, RobustnessReport,
    RobustnessRow, WeakContinuityReport, RNG_NAME, RNG_SPLIT,
};
pub use robustify::{
    alt_truncate, pi_map, pi_map_measure, truncate_family, truncated_equals_representation,
    AltWeight, TruncatedFamily,
};
pub use sensitivity::{
    boundedness_report, sensitivity_ce, sensitivity_numeric, sensitivity_truncated_ce,
    sensitivity_truncated_ce_with_derivative, sensitivity_var, BoundednessReport,
    NumericSensitivity, DEFAULT_LADDER,
};

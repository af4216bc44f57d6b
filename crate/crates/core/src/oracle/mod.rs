//! Exact oracles for the quadratic case, Gaussian divergences, schedule
//! planners and statistical diagnostics.

mod diagnostics;
mod gaussian;
mod planner;
mod quadratic;

pub use diagnostics::{
    batch_variance_ratio, independence_diagnostic, report_document, unbiasedness_test, CorrelationCheck,
    IndependenceReport, StructuralCheck, UnbiasednessReport, VarianceRatioReport, REPORT_SCHEMA_VERSION,
    UNBIASED_RTOL, UNBIASED_Z,
};
pub use gaussian::{kl_gaussian, w2_gaussian, GaussianRecord, GaussianSummary};
pub use planner::{
    mfnn_lipschitz, plan_schedule_mfnn, plan_schedule_pairwise, MfnnPlanInputs, PairwisePlanInputs, PlanInputs,
    PlannerConstants, SchedulePlan,
};
pub use quadratic::{
    affine_recursion_oracle, pmkv_moments, quadratic_lsi_constant, quadratic_mkv_flow, quadratic_stationary,
    vpsa_moments, ExchangeableMoments, LsiConstant,
};

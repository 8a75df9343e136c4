//! Exact matrix constants, closed-form error bounds and stability certificates.

pub mod certify;
pub mod constants;
pub mod formulas;

pub use certify::{
    certify, implied_alpha_del, support_error_metrics, verify_conclusions, ConditionEntry, ConditionKind, ConditionReport, Relation,
    TheoremParams, TraceRecord, Variant,
};
pub use constants::{matrix_fingerprint, rip_delta, roc_theta, MatrixConstants, DEFAULT_BUDGET};
pub use formulas::{c1, c2, cdprime, cprime, csres_error_bound, csres_error_bound_max, ls_step_error_bound, modcs_error_bound};

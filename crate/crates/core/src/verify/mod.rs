//! Empirical characteristic functions and the hypothesis tests built on them.

mod ecf;
mod report;
mod hypothesis;

pub use ecf::{distinguished_log, ecf_estimate, ecf_from_columns, EcfEstimate, LogEcf, CF_FLOOR};
pub use report::{Decision, TestReport};
pub use hypothesis::{
    analytic_factorization_residual, default_probes, idt_property_test, increment_dependence_stat, joint_mimic_test,
    marginal_mimic_test, tsd_factorization_test, DependenceStat, MIN_SAMPLES,
};

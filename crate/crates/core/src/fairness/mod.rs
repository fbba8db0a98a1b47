//! Envy and maximin-share checkers.

pub mod envy;
pub mod mms;
pub mod report;

pub use envy::{
    ef_c_check, is_def_c, is_ef_c, is_sd_def_c, is_sd_ef_c, sd_ef_c_check, sd_ef_c_check_with, EnvyDetail,
    EnvyWitness,
};
pub use mms::{
    mms_solution, mms_value, mms_value_with, mms_values, unconstrained_share, weak_mms_partition, weak_mms_value,
    weak_mms_value_with, ShareOptions, ShareSolution,
};
pub use report::{dmms_alpha, fairness_report, FairnessReport, ReportOptions};

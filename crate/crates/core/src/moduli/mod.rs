//! Bounds and exact values of the calmness modulus at the nominal point.

mod bounds;
mod directional;
mod gauvin;
mod kkt;
mod report;
mod sampling;

pub use bounds::{c3_upper_bound, li_gamma, lip_lower_bound, MaxInverseNorm};
pub use directional::{c1_directional, c1_directional_exact, clm_level_set, pattern_sup, DirectionalResult, PatternSup};
pub use gauvin::{alpha, c2_upper_bound, lambda_bar, C2Bound, GauvinData};
pub use kkt::{enumerate_k, enumerate_t, KKTIndexSet, MAX_CANDIDATES};
pub use sampling::{c1_sampling, SamplingConfig, SamplingResult};
pub use report::{
    compute_report, csv_field, inequality_chain, ChainViolation, ConstantEntry, KSetSummary, ModulusReport, ReportOptions,
    CHAIN_TOL, EMPIRICAL_TOL,
};

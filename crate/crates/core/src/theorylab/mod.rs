//! Numerical experiments: a brute-force oracle, the AQ error rate in m, the
//! failure of non-adaptive quadrature as groups grow, and a repeated
//! simulate-and-fit study.

pub mod oracle;
pub mod rate;
pub mod study;

pub use oracle::{oracle_group_loglik, oracle_log_integral};
pub use rate::{gq_divergence_demo, rate_check, GqDemoReport, GqDemoRow, RateReport};
pub use study::{
    simulate_study, KSummary, Quantiles, ReplicateFit, SimStudyConfig, SimStudyReport,
};

//! Metric kernels and statistical model comparison.

mod compare;
mod metrics;
mod report;
mod tdist;

use thiserror::Error;

pub use compare::{
    compare_models, is_significant, mean_and_ci, paired_t_test, Comparison, ComparisonVerdict,
    CorrectionScope, EvalReport, MeanCi, Metric, MetricSummary, TTest,
};
pub use metrics::{confusion, macro_f1, micro_f1, ConfusionMatrix};
pub use report::{comparison_table, results_table};
pub use tdist::{
    ln_gamma, regularized_incomplete_beta, student_t_cdf, student_t_quantile, t_two_sided_p,
    T_975_TABLE,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("no instances to evaluate")]
    Empty,
    #[error("need at least 2 folds (got {0})")]
    TooFewFolds(usize),
    #[error("confidence level {0} outside (0, 1)")]
    InvalidConfidence(f64),
    #[error("reports were produced on different fold plans: {0}")]
    MismatchedFoldPlans(String),
}

use serde::{Deserialize, Serialize};

use super::tdist::{student_t_quantile, t_two_sided_p};
use super::StatsError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanCi {
    pub mean: f64,
    /// Sample standard deviation (divisor `k - 1`).
    pub sd: f64,
    pub ci_half_width: f64,
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn sample_sd(xs: &[f64], m: f64) -> f64 {
    let ss: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    (ss / (xs.len() - 1) as f64).sqrt()
}

/// Mean, sample standard deviation and Student-t confidence half-width of
/// per-fold scores.
pub fn mean_and_ci(fold_scores: &[f64], confidence: f64) -> Result<MeanCi, StatsError> {
    let k = fold_scores.len();
    if k < 2 {
        return Err(StatsError::TooFewFolds(k));
    }
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(StatsError::InvalidConfidence(confidence));
    }
    let m = mean(fold_scores);
    let sd = sample_sd(fold_scores, m);
    let t = student_t_quantile((1.0 + confidence) / 2.0, (k - 1) as f64);
    Ok(MeanCi {
        mean: m,
        sd,
        ci_half_width: t * sd / (k as f64).sqrt(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTest {
    pub t: f64,
    pub df: usize,
    pub p_value: f64,
    /// Differences were constant and non-zero: `t` is infinite and `p = 0`.
    pub degenerate_variance: bool,
}

/// Two-sided paired t-test on fold-aligned scores.
pub fn paired_t_test(a: &[f64], b: &[f64]) -> Result<TTest, StatsError> {
    if a.len() != b.len() {
        return Err(StatsError::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let k = a.len();
    if k < 2 {
        return Err(StatsError::TooFewFolds(k));
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let md = mean(&d);
    let sd = sample_sd(&d, md);
    let df = k - 1;
    if sd == 0.0 {
        return Ok(if md == 0.0 {
            TTest { t: 0.0, df, p_value: 1.0, degenerate_variance: false }
        } else {
            TTest {
                t: f64::INFINITY.copysign(md),
                df,
                p_value: 0.0,
                degenerate_variance: true,
            }
        });
    }
    let t = md / (sd / (k as f64).sqrt());
    Ok(TTest {
        t,
        df,
        p_value: t_two_sided_p(t, df as f64),
        degenerate_variance: false,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    MacroF1,
    MicroF1,
}

impl Metric {
    pub const ALL: [Metric; 2] = [Metric::MacroF1, Metric::MicroF1];

    pub fn label(self) -> &'static str {
        match self {
            Metric::MacroF1 => "Macro-F1",
            Metric::MicroF1 => "Micro-F1",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub per_fold: Vec<f64>,
    pub mean: f64,
    pub sd: f64,
    pub ci_half_width: f64,
}

impl MetricSummary {
    pub fn new(per_fold: Vec<f64>) -> Result<Self, StatsError> {
        let ci = mean_and_ci(&per_fold, 0.95)?;
        Ok(Self {
            per_fold,
            mean: ci.mean,
            sd: ci.sd,
            ci_half_width: ci.ci_half_width,
        })
    }
}

/// Cross-validated scores of one model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub model: String,
    pub k: usize,
    /// Fingerprint of the fold plan the scores were measured on.
    pub plan_fingerprint: String,
    pub macro_f1: MetricSummary,
    pub micro_f1: MetricSummary,
}

impl EvalReport {
    pub fn new(
        model: impl Into<String>,
        plan_fingerprint: impl Into<String>,
        macro_per_fold: Vec<f64>,
        micro_per_fold: Vec<f64>,
    ) -> Result<Self, StatsError> {
        if macro_per_fold.len() != micro_per_fold.len() {
            return Err(StatsError::LengthMismatch {
                left: macro_per_fold.len(),
                right: micro_per_fold.len(),
            });
        }
        Ok(Self {
            model: model.into(),
            k: macro_per_fold.len(),
            plan_fingerprint: plan_fingerprint.into(),
            macro_f1: MetricSummary::new(macro_per_fold)?,
            micro_f1: MetricSummary::new(micro_per_fold)?,
        })
    }

    pub fn metric(&self, metric: Metric) -> &MetricSummary {
        match metric {
            Metric::MacroF1 => &self.macro_f1,
            Metric::MicroF1 => &self.micro_f1,
        }
    }
}

/// Which family of tests the Bonferroni correction divides alpha across.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CorrectionScope {
    /// `m` = number of model pairs; each metric is its own family.
    #[default]
    PerMetric,
    /// `m` = model pairs x metrics.
    AcrossMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonVerdict {
    pub model_a: String,
    pub model_b: String,
    pub metric: Metric,
    pub mean_difference: f64,
    pub t_statistic: f64,
    pub degrees_freedom: usize,
    pub p_value: f64,
    pub alpha: f64,
    pub m: usize,
    pub adjusted_alpha: f64,
    pub significant: bool,
    pub degenerate_variance: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub alpha: f64,
    pub scope: CorrectionScope,
    pub m: usize,
    pub adjusted_alpha: f64,
    pub verdicts: Vec<ComparisonVerdict>,
    /// True when no pair differs significantly on any metric.
    pub statistically_equivalent: bool,
}

/// Bonferroni decision: reject when `p < alpha / m`.
pub fn is_significant(p_value: f64, alpha: f64, m: usize) -> bool {
    p_value < alpha / m.max(1) as f64
}

/// Paired t-tests on every unordered model pair for both metrics, with
/// Bonferroni-adjusted significance.
pub fn compare_models(
    reports: &[EvalReport],
    alpha: f64,
    scope: CorrectionScope,
) -> Result<Comparison, StatsError> {
    if let Some(first) = reports.first() {
        for r in &reports[1..] {
            if r.k != first.k || r.plan_fingerprint != first.plan_fingerprint {
                return Err(StatsError::MismatchedFoldPlans(format!(
                    "`{}` (k={}, plan {}) vs `{}` (k={}, plan {})",
                    first.model, first.k, first.plan_fingerprint, r.model, r.k, r.plan_fingerprint
                )));
            }
        }
    }
    let n = reports.len();
    let pairs = n * n.saturating_sub(1) / 2;
    let m = match scope {
        CorrectionScope::PerMetric => pairs,
        CorrectionScope::AcrossMetrics => pairs * Metric::ALL.len(),
    };
    let adjusted_alpha = alpha / m.max(1) as f64;
    let mut verdicts = Vec::with_capacity(pairs * 2);
    for metric in Metric::ALL {
        for i in 0..n {
            for j in i + 1..n {
                let a = reports[i].metric(metric);
                let b = reports[j].metric(metric);
                let test = paired_t_test(&a.per_fold, &b.per_fold)?;
                verdicts.push(ComparisonVerdict {
                    model_a: reports[i].model.clone(),
                    model_b: reports[j].model.clone(),
                    metric,
                    mean_difference: a.mean - b.mean,
                    t_statistic: test.t,
                    degrees_freedom: test.df,
                    p_value: test.p_value,
                    alpha,
                    m,
                    adjusted_alpha,
                    significant: is_significant(test.p_value, alpha, m),
                    degenerate_variance: test.degenerate_variance,
                });
            }
        }
    }
    let statistically_equivalent = verdicts.iter().all(|v| !v.significant);
    Ok(Comparison {
        alpha,
        scope,
        m,
        adjusted_alpha,
        verdicts,
        statistically_equivalent,
    })
}

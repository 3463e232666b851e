use std::fmt::Write;

use super::compare::{Comparison, EvalReport, Metric, MetricSummary};

fn pct_cell(s: &MetricSummary) -> String {
    format!("{:.2}({:.2})", 100.0 * s.mean, 100.0 * s.ci_half_width)
}

/// Results table: `Model | Macro-F1 | Micro-F1` with cells `mean(hw)` in
/// percent, followed by mean, standard deviation and half-width per metric.
pub fn results_table(reports: &[EvalReport]) -> String {
    let width = reports
        .iter()
        .map(|r| r.model.chars().count())
        .max()
        .unwrap_or(0)
        .max("Model".len());
    let mut out = String::new();
    let _ = writeln!(out, "{:<width$} | {:<14} | {:<14}", "Model", "Macro-F1", "Micro-F1");
    let _ = writeln!(out, "{}-+-{}-+-{}", "-".repeat(width), "-".repeat(14), "-".repeat(14));
    for r in reports {
        let _ = writeln!(
            out,
            "{:<width$} | {:<14} | {:<14}",
            r.model,
            pct_cell(&r.macro_f1),
            pct_cell(&r.micro_f1)
        );
    }
    let _ = writeln!(out, "\nValues are mean(95% CI half-width) over {} folds, in percent.\n", reports.first().map_or(0, |r| r.k));
    let _ = writeln!(out, "{:<width$} | {:<9} | {:>8} | {:>8} | {:>8}", "Model", "Metric", "mean", "sd", "ci95");
    for r in reports {
        for metric in Metric::ALL {
            let s = r.metric(metric);
            let _ = writeln!(
                out,
                "{:<width$} | {:<9} | {:>8.4} | {:>8.4} | {:>8.4}",
                r.model,
                metric.label(),
                s.mean,
                s.sd,
                s.ci_half_width
            );
        }
    }
    out
}

/// One line per paired test plus an overall verdict.
pub fn comparison_table(cmp: &Comparison) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "Paired t-tests, alpha = {}, Bonferroni m = {}, adjusted alpha = {:.6}",
        cmp.alpha, cmp.m, cmp.adjusted_alpha
    );
    for v in &cmp.verdicts {
        let _ = writeln!(
            out,
            "{} vs {} [{}]: diff = {:+.4}, t = {:.4}, df = {}, p = {:.6} -> {}{}",
            v.model_a,
            v.model_b,
            v.metric.label(),
            v.mean_difference,
            v.t_statistic,
            v.degrees_freedom,
            v.p_value,
            if v.significant { "significant" } else { "not significant" },
            if v.degenerate_variance { " (degenerate variance)" } else { "" }
        );
    }
    if cmp.verdicts.is_empty() {
        let _ = writeln!(out, "Fewer than two models: nothing to compare.");
    } else if cmp.statistically_equivalent {
        let _ = writeln!(out, "Verdict: all models are statistically equivalent.");
    } else {
        let _ = writeln!(out, "Verdict: at least one pair differs significantly.");
    }
    out
}

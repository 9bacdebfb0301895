//! Rendering of evaluation reports.

use std::fmt::Write as _;

use pertext_core::types::label_set_for;
use pertext_core::EvalReport;
use serde::Serialize;

/// Percentage of a ratio, rounded to two decimals.
pub fn percent(ratio: f64) -> f64 {
    (ratio * 10_000.0).round() / 100.0
}

#[derive(Debug, Serialize)]
struct ClassRow {
    label: &'static str,
    precision: f64,
    recall: f64,
    f1: f64,
    support: u64,
    predicted: u64,
    correct: u64,
}

#[derive(Debug, Serialize)]
struct JsonReport {
    task: &'static str,
    per_class: Vec<ClassRow>,
    macro_f1: f64,
    accuracy: f64,
    token_total: u64,
    labels: Vec<&'static str>,
    confusion: Vec<Vec<u64>>,
}

/// JSON mirror of the report; metrics are percentages, `confusion[gold][pred]`
/// counts follow `labels`.
pub fn to_json(report: &EvalReport) -> String {
    let json = JsonReport {
        task: report.task.as_str(),
        per_class: report
            .per_class
            .iter()
            .map(|c| ClassRow {
                label: c.label.name(),
                precision: percent(c.precision),
                recall: percent(c.recall),
                f1: percent(c.f1),
                support: c.support,
                predicted: c.predicted,
                correct: c.correct,
            })
            .collect(),
        macro_f1: percent(report.macro_f1),
        accuracy: percent(report.accuracy),
        token_total: report.token_total,
        labels: label_set_for(report.task).classes.to_vec(),
        confusion: report.confusion.clone(),
    };
    serde_json::to_string(&json).expect("report serializes")
}

pub fn to_table(report: &EvalReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "task: {}  tokens: {}", report.task, report.token_total);
    let _ = writeln!(out, "{:<10} {:>9} {:>9} {:>9} {:>9}", "class", "precision", "recall", "f1", "support");
    for c in &report.per_class {
        let _ = writeln!(
            out,
            "{:<10} {:>9.2} {:>9.2} {:>9.2} {:>9}",
            c.label.name(),
            percent(c.precision),
            percent(c.recall),
            percent(c.f1),
            c.support
        );
    }
    let _ = writeln!(out, "macro-F1: {:.2}", percent(report.macro_f1));
    let _ = writeln!(out, "accuracy: {:.2}", percent(report.accuracy));
    out
}

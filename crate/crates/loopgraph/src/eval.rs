//! Detection metrics and the evaluation report format.

use std::collections::BTreeSet;
use std::fs;
use std::io;
use std::path::Path;

/// Precision/recall with raw counts. A zero denominator yields a metric
/// of 0.0 and sets the corresponding degenerate flag.
#[derive(Debug, Clone, PartialEq)]
pub struct PrSummary {
    pub precision: f64,
    pub recall: f64,
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub precision_degenerate: bool,
    pub recall_degenerate: bool,
}

/// Matches predictions to ground-truth pairs and counts hits.
///
/// A prediction matches a truth pair when both frame ids are within
/// `tolerance`. Matching is greedy and one-to-one: predictions are
/// processed in sorted order and each consumes the first (sorted,
/// still unconsumed) truth pair inside its window.
pub fn precision_recall(predicted: &[(u32, u32)], truth: &BTreeSet<(u32, u32)>, tolerance: u32) -> PrSummary {
    let mut preds: Vec<(u32, u32)> = predicted.to_vec();
    preds.sort_unstable();
    let truths: Vec<(u32, u32)> = truth.iter().copied().collect();
    let mut consumed = vec![false; truths.len()];
    let mut tp = 0usize;
    for (pi, pj) in &preds {
        let hit = truths.iter().enumerate().position(|(k, (ti, tj))| {
            !consumed[k] && pi.abs_diff(*ti) <= tolerance && pj.abs_diff(*tj) <= tolerance
        });
        if let Some(k) = hit {
            consumed[k] = true;
            tp += 1;
        }
    }
    let fp = preds.len() - tp;
    let fn_ = truths.len() - tp;
    let precision_degenerate = tp + fp == 0;
    let recall_degenerate = tp + fn_ == 0;
    PrSummary {
        precision: if precision_degenerate { 0.0 } else { tp as f64 / (tp + fp) as f64 },
        recall: if recall_degenerate { 0.0 } else { tp as f64 / (tp + fn_) as f64 },
        tp,
        fp,
        fn_,
        precision_degenerate,
        recall_degenerate,
    }
}

/// Earliest frame at which any candidate fires: the smallest second
/// (later) frame id over all predicted pairs.
pub fn first_detection(predicted: &[(u32, u32)]) -> Option<u32> {
    predicted.iter().map(|&(_, j)| j).min()
}

/// One evaluated mode in a report.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalRow {
    pub mode: String,
    pub precision: f64,
    pub recall: f64,
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub first_kf: Option<u32>,
    pub runtime_s: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub dataset_id: String,
    pub rows: Vec<EvalRow>,
    /// Full key-value dump of the configuration the report was produced
    /// with; written next to the CSV as `config.snapshot`.
    pub config_snapshot: String,
}

/// Writes `report.csv` (rows sorted by mode name, metrics at four
/// fractional digits) and a sibling `config.snapshot` with the exact
/// configuration. Timings stay empty unless they were recorded, so the
/// bytes of a default run are reproducible.
pub fn write_report_csv(report: &EvalReport, path: &Path) -> io::Result<()> {
    let mut rows: Vec<&EvalRow> = report.rows.iter().collect();
    rows.sort_by(|a, b| a.mode.cmp(&b.mode));
    let mut out = String::from("mode,precision,recall,tp,fp,fn,first_kf,runtime_s\n");
    for r in rows {
        let first = r.first_kf.map(|v| v.to_string()).unwrap_or_default();
        let runtime = r.runtime_s.map(|v| format!("{v:.4}")).unwrap_or_default();
        out.push_str(&format!(
            "{},{:.4},{:.4},{},{},{},{},{}\n",
            r.mode, r.precision, r.recall, r.tp, r.fp, r.fn_, first, runtime
        ));
    }
    fs::write(path, out)?;
    let snapshot_path = path.with_file_name("config.snapshot");
    fs::write(snapshot_path, &report.config_snapshot)
}

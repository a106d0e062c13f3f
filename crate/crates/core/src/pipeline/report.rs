use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{collect_cases, run_pipeline, CaseInput, CaseResult, CaseStatus, PipelineConfig, PipelineError};
use crate::cost::{aggregate, Aggregate, Metrics};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub case: String,
    pub status: CaseStatus,
    pub before: Metrics,
    pub after: Metrics,
    pub patches: usize,
    pub rules: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub seed: u64,
    pub rows: Vec<BenchRow>,
    /// Absent for an empty corpus.
    pub aggregate: Option<Aggregate>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableStyle {
    /// Wires and cells.
    Short,
    /// Area and delay.
    Long,
}

impl BenchReport {
    pub fn from_results(seed: u64, results: &[CaseResult]) -> BenchReport {
        let rows: Vec<BenchRow> = results
            .iter()
            .map(|r| BenchRow {
                case: r.case.clone(),
                status: r.status,
                before: Metrics::from(&r.before),
                after: Metrics::from(&r.after),
                patches: r.patches.len(),
                rules: r.rule_ids().into_iter().collect(),
            })
            .collect();
        let aggregate = (!rows.is_empty()).then(|| {
            let after: Vec<Metrics> = rows.iter().map(|r| r.after).collect();
            let before: Vec<Metrics> = rows.iter().map(|r| r.before).collect();
            aggregate(&after, &before).expect("equal lengths")
        });
        BenchReport { seed, rows, aggregate }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn num(x: f64) -> String {
    if x.fract() == 0.0 && x.abs() < 1e15 {
        format!("{x:.0}")
    } else {
        format!("{x:.2}")
    }
}

/// Aligned text table: one row per case, then GeoMean and Ratio rows.
/// Failed cases are marked with `*` and show their original numbers.
pub fn render_table(report: &BenchReport, style: TableStyle) -> String {
    let (a, b): (&str, &str) = match style {
        TableStyle::Short => ("Wires", "Cells"),
        TableStyle::Long => ("Area", "Delay"),
    };
    let pick = |m: &Metrics| match style {
        TableStyle::Short => (m.wires, m.cells),
        TableStyle::Long => (m.area, m.delay),
    };
    let header = vec![
        "Case".to_string(),
        format!("{a} base"),
        format!("{a} ours"),
        format!("{b} base"),
        format!("{b} ours"),
    ];
    let mut rows = vec![header];
    for r in &report.rows {
        let (ba, bb) = pick(&r.before);
        let (oa, ob) = pick(&r.after);
        let mark = if r.status == CaseStatus::Failed { "*" } else { "" };
        rows.push(vec![format!("{}{mark}", r.case), num(ba), num(oa), num(bb), num(ob)]);
    }
    if let Some(agg) = &report.aggregate {
        let (ba, bb) = pick(&agg.baseline);
        let (oa, ob) = pick(&agg.ours);
        let (ra, rb) = pick(&agg.ratio);
        rows.push(vec!["GeoMean".into(), format!("{ba:.2}"), format!("{oa:.2}"), format!("{bb:.2}"), format!("{ob:.2}")]);
        rows.push(vec!["Ratio".into(), "1.00".into(), format!("{ra:.2}"), "1.00".into(), format!("{rb:.2}")]);
    }
    let widths: Vec<usize> = (0..5)
        .map(|c| rows.iter().map(|r| r[c].len()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for row in &rows {
        let mut line = format!("{:<w$}", row[0], w = widths[0]);
        for (c, cell) in row.iter().enumerate().skip(1) {
            let _ = write!(line, "  {:>w$}", cell, w = widths[c]);
        }
        out.push_str(line.trim_end());
        out.push('\n');
    }
    out
}

/// Optimize the given cases and tabulate before/after metrics.
pub fn bench_files(inputs: &[CaseInput], cfg: &PipelineConfig) -> Result<BenchReport, PipelineError> {
    let mut cfg = cfg.clone();
    cfg.report_timings = false;
    let results = run_pipeline(inputs, &cfg)?;
    Ok(BenchReport::from_results(cfg.verify.seed, &results))
}

/// Optimize every `.v` file in `corpus_dir`.
pub fn bench(corpus_dir: &Path, cfg: &PipelineConfig) -> Result<BenchReport, PipelineError> {
    bench_files(&collect_cases(corpus_dir)?, cfg)
}

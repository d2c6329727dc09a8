//! Analysis reports and their renderings.
//!
//! A report is self-contained for replication: it carries the seed, the
//! permutation count, the crate version and a hash of the full
//! configuration. Rendering is deterministic, so identical configurations
//! produce byte-identical files.

use serde::Serialize;

use crate::error::Result;

#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub seed: u64,
    pub permutations: usize,
    pub version: String,
    pub config_hash: String,
}

/// Stage-1 whole-domain test of one dataset.
#[derive(Debug, Clone, Serialize)]
pub struct GlobalTest {
    pub statistic: f64,
    pub raw_p: f64,
    /// `min(1, D * raw_p)` across the `D` datasets of the run.
    pub bonferroni_p: f64,
    pub significant: bool,
}

/// Stage-2 result for one interval.
#[derive(Debug, Clone, Serialize)]
pub struct IntervalResult {
    pub name: String,
    pub a: f64,
    pub b: f64,
    pub statistic: f64,
    pub raw_p: f64,
    pub adjusted_p: f64,
    /// The intersection node whose p-value attains the adjustment.
    pub achieving_node: String,
    pub rejected_at_alpha: bool,
}

/// Stage-3 result for one group pair within an interval.
#[derive(Debug, Clone, Serialize)]
pub struct PairResult {
    pub groups: (String, String),
    pub statistic: f64,
    pub raw_p: f64,
    pub adjusted_p: f64,
    pub achieving_node: String,
    pub rejected_at_alpha: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct PairwiseResult {
    pub interval: String,
    /// The interval-level adjusted p-value pinned to the top node.
    pub top_p: f64,
    pub pairs: Vec<PairResult>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DatasetReport {
    pub name: String,
    pub path: String,
    pub groups: Vec<String>,
    /// Snapping notices from the interval partition.
    pub warnings: Vec<String>,
    pub global: GlobalTest,
    /// Absent when the Bonferroni gate failed.
    pub intervals: Option<Vec<IntervalResult>>,
    pub pairwise: Vec<PairwiseResult>,
    /// "no further analysis" when stages 2 and 3 were skipped.
    pub note: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalysisReport {
    pub alpha: f64,
    pub method: crate::closure::ClosureMethod,
    pub provenance: Provenance,
    pub datasets: Vec<DatasetReport>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ReportFormat {
    Json,
    Text,
    Csv,
}

/// Render a report in the requested format.
pub fn render_report(report: &AnalysisReport, format: ReportFormat) -> Result<String> {
    match format {
        ReportFormat::Json => Ok(serde_json::to_string_pretty(report)?),
        ReportFormat::Text => Ok(render_text(report)),
        ReportFormat::Csv => Ok(render_csv(report)),
    }
}

fn mark(rejected: bool) -> &'static str {
    if rejected {
        "[REJECT]"
    } else {
        "[keep]"
    }
}

fn render_text(report: &AnalysisReport) -> String {
    use std::fmt::Write;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "analysis at alpha={:.3}, method={:?}, seed={}, B={}",
        report.alpha, report.method, report.provenance.seed, report.provenance.permutations
    );
    for ds in &report.datasets {
        let _ = writeln!(out, "\ndataset {} ({})", ds.name, ds.groups.join(", "));
        for w in &ds.warnings {
            let _ = writeln!(out, "  warning: {w}");
        }
        let g = &ds.global;
        let _ = writeln!(
            out,
            "  global: T={:.4} p={:.3} bonferroni={:.3} {}",
            g.statistic,
            g.raw_p,
            g.bonferroni_p,
            mark(g.significant)
        );
        if let Some(note) = &ds.note {
            let _ = writeln!(out, "  {note}");
        }
        if let Some(intervals) = &ds.intervals {
            let _ = writeln!(out, "  intervals:");
            for iv in intervals {
                let _ = writeln!(
                    out,
                    "    {:<12} [{:>6.1}, {:>6.1}] p={:.3} adj={:.3} via {{{}}} {}",
                    iv.name,
                    iv.a,
                    iv.b,
                    iv.raw_p,
                    iv.adjusted_p,
                    iv.achieving_node,
                    mark(iv.rejected_at_alpha)
                );
            }
        }
        for pw in &ds.pairwise {
            let _ = writeln!(
                out,
                "  pairwise in '{}' (top p={:.3}):",
                pw.interval, pw.top_p
            );
            for pair in &pw.pairs {
                let _ = writeln!(
                    out,
                    "    {:<24} p={:.3} adj={:.3} via {{{}}} {}",
                    format!("{}={}", pair.groups.0, pair.groups.1),
                    pair.raw_p,
                    pair.adjusted_p,
                    pair.achieving_node,
                    mark(pair.rejected_at_alpha)
                );
            }
        }
    }
    out
}

fn csv_escape(s: &str) -> String {
    if s.contains(',') || s.contains('"') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn render_csv(report: &AnalysisReport) -> String {
    use std::fmt::Write;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "dataset,level,hypothesis,statistic,raw_p,adjusted_p,achieving,rejected"
    );
    for ds in &report.datasets {
        let _ = writeln!(
            out,
            "{},global,all,{},{},{},,{}",
            csv_escape(&ds.name),
            ds.global.statistic,
            ds.global.raw_p,
            ds.global.bonferroni_p,
            ds.global.significant
        );
        if let Some(intervals) = &ds.intervals {
            for iv in intervals {
                let _ = writeln!(
                    out,
                    "{},interval,{},{},{},{},{},{}",
                    csv_escape(&ds.name),
                    csv_escape(&iv.name),
                    iv.statistic,
                    iv.raw_p,
                    iv.adjusted_p,
                    csv_escape(&iv.achieving_node),
                    iv.rejected_at_alpha
                );
            }
        }
        for pw in &ds.pairwise {
            for pair in &pw.pairs {
                let _ = writeln!(
                    out,
                    "{},pairwise:{},{}={},{},{},{},{},{}",
                    csv_escape(&ds.name),
                    csv_escape(&pw.interval),
                    csv_escape(&pair.groups.0),
                    csv_escape(&pair.groups.1),
                    pair.statistic,
                    pair.raw_p,
                    pair.adjusted_p,
                    csv_escape(&pair.achieving_node),
                    pair.rejected_at_alpha
                );
            }
        }
    }
    out
}

/// FNV-1a over the canonical JSON of a serializable value, as a hex string.
pub fn config_hash<T: Serialize>(value: &T) -> Result<String> {
    let json = serde_json::to_string(value)?;
    let mut hash: u64 = 0xcbf29ce484222325;
    for byte in json.as_bytes() {
        hash ^= *byte as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    Ok(format!("{hash:016x}"))
}

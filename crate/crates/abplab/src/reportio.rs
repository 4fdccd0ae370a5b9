//! Report aggregation and the on-disk artifacts: a JSON envelope with the
//! resolved config and every check, plus a one-row-per-check CSV summary.

use abplab_core::report::CheckReport;
use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub config: String,
    pub reports: Vec<CheckReport>,
    pub all_passed: bool,
}

impl RunReport {
    pub fn new(config: String, reports: Vec<CheckReport>) -> Self {
        let reports = merge_reports(reports);
        let all_passed = reports.iter().all(|r| r.passed);
        RunReport { config, reports, all_passed }
    }
}

/// Sorts by (suite, operator) and disambiguates colliding ids by suffixing
/// the suite with `#2`, `#3`, ... in encounter order (stable sort, so input
/// order breaks ties deterministically).
pub fn merge_reports(mut reports: Vec<CheckReport>) -> Vec<CheckReport> {
    reports.sort_by(|a, b| (&a.suite, &a.operator).cmp(&(&b.suite, &b.operator)));
    let mut i = 0;
    while i < reports.len() {
        let mut j = i + 1;
        while j < reports.len()
            && reports[j].suite == reports[i].suite
            && reports[j].operator == reports[i].operator
        {
            j += 1;
        }
        for (count, r) in reports[i..j].iter_mut().enumerate().skip(1) {
            r.suite = format!("{}#{}", r.suite, count + 1);
        }
        i = j;
    }
    // no re-sort after suffixing: "tame#2" stays next to its sibling
    reports
}

pub fn write_report_json(report: &RunReport, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(report).context("serializing report")?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn write_summary_csv(reports: &[CheckReport], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["suite", "operator", "samples", "min_slack", "tol", "pass"])?;
    for r in reports {
        w.write_record([
            r.suite.as_str(),
            r.operator.as_str(),
            &r.samples.to_string(),
            &format!("{:e}", r.min_slack),
            &format!("{:e}", r.tolerance),
            &r.passed.to_string(),
        ])?;
    }
    let out = w.into_inner().context("flushing summary csv")?;
    std::fs::write(path, out).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stub(suite: &str, op: &str, passed: bool) -> CheckReport {
        CheckReport {
            suite: suite.into(),
            operator: op.into(),
            samples: 3,
            min_slack: 0.5,
            max_slack: 1.0,
            tolerance: 1e-9,
            passed,
            skipped: None,
            witness: None,
            notes: vec![],
            elapsed: None,
        }
    }

    #[test]
    fn merge_sorts_and_suffixes_duplicates() {
        let merged = merge_reports(vec![
            stub("solve", "det:n=2", true),
            stub("majorize", "sigma:k=2,n=3", true),
            stub("majorize", "det:n=2", true),
            stub("majorize", "det:n=2", false),
        ]);
        let ids: Vec<(String, String)> =
            merged.iter().map(|r| (r.suite.clone(), r.operator.clone())).collect();
        assert_eq!(
            ids,
            vec![
                ("majorize".into(), "det:n=2".into()),
                ("majorize#2".into(), "det:n=2".into()),
                ("majorize".into(), "sigma:k=2,n=3".into()),
                ("solve".into(), "det:n=2".into()),
            ]
        );
        // the duplicate keeps encounter order: the passing one came first
        assert!(merged[0].passed && !merged[1].passed);
    }

    #[test]
    fn artifacts_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let report = RunReport::new("seed = 1\n".into(), vec![stub("tame", "det:n=2", true)]);
        let jpath = dir.path().join("report.json");
        let cpath = dir.path().join("summary.csv");
        write_report_json(&report, &jpath).unwrap();
        write_summary_csv(&report.reports, &cpath).unwrap();

        let back: RunReport =
            serde_json::from_str(&std::fs::read_to_string(&jpath).unwrap()).unwrap();
        assert!(back.all_passed);
        assert_eq!(back.reports.len(), 1);
        let summary = std::fs::read_to_string(&cpath).unwrap();
        assert!(summary.starts_with("suite,operator,samples,min_slack,tol,pass\n"));
        assert!(summary.contains("tame,det:n=2,3,"));
    }
}

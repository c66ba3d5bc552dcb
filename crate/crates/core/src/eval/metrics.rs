//! CSV output for experiment runs.
//!
//! `metrics.csv` is a pure function of the configuration and seeds. Wall-clock
//! durations go to `timings.csv` so that reruns produce byte-identical metrics.

use std::fmt::Write as _;
use std::path::Path;

use super::experiment::{ExperimentReport, MetricsRecord, Summary};
use crate::{Error, Result};

pub const METRICS_HEADER: &str = "trial,phase,epoch,L_a,L_h1,L_h2,L_h,L,accuracy";
pub const SUMMARY_HEADER: &str = "trials,completed,failed,partial,mean_accuracy,std_accuracy";
pub const TIMINGS_HEADER: &str = "trial,seconds";

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn metrics_rows(record: &MetricsRecord, out: &mut String) {
    for row in &record.history {
        let l = &row.loss;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},",
            record.trial, row.phase, row.epoch, l.l_a, l.l_h1, l.l_h2, l.l_h, l.l
        );
    }
    match &record.error {
        None => {
            let _ = writeln!(out, "{},final,,,,,,,{}", record.trial, opt(record.accuracy));
        }
        Some(_) => {
            let _ = writeln!(out, "{},failed,,,,,,,", record.trial);
        }
    }
}

pub fn metrics_csv(records: &[MetricsRecord]) -> String {
    let mut out = format!("{METRICS_HEADER}\n");
    for r in records {
        metrics_rows(r, &mut out);
    }
    out
}

pub fn summary_csv(s: &Summary) -> String {
    format!(
        "{SUMMARY_HEADER}\n{},{},{},{},{},{}\n",
        s.trials,
        s.completed,
        s.failed,
        s.partial,
        opt(s.mean_accuracy),
        opt(s.std_accuracy)
    )
}

pub fn timings_csv(records: &[MetricsRecord]) -> String {
    let mut out = format!("{TIMINGS_HEADER}\n");
    for r in records {
        let _ = writeln!(out, "{},{:.3}", r.trial, r.seconds);
    }
    out
}

/// Writes `metrics.csv`, `summary.csv` and `timings.csv` into `dir`, creating it.
pub fn write_report(report: &ExperimentReport, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let files = [
        ("metrics.csv", metrics_csv(&report.records)),
        ("summary.csv", summary_csv(&report.summary)),
        ("timings.csv", timings_csv(&report.records)),
    ];
    for (name, body) in files {
        let path = dir.join(name);
        std::fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}

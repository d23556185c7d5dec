use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::report::SolveReport;

pub const HISTORY_HEADER: &str = "iteration,residual_norm,true_residual_norm";

/// The history as CSV text: one row per iteration, the true residual only
/// on audited rows.
pub fn history_csv(report: &SolveReport) -> String {
    let mut out = String::with_capacity(48 * report.residual_history.len());
    out.push_str(HISTORY_HEADER);
    out.push('\n');
    let mut audits = report.audits.iter().peekable();
    for (j, r) in report.residual_history.iter().enumerate() {
        let _ = write!(out, "{j},{r:.16e},");
        while audits.peek().is_some_and(|a| a.iteration < j) {
            audits.next();
        }
        if let Some(a) = audits.peek().filter(|a| a.iteration == j) {
            let _ = write!(out, "{:.16e}", a.true_residual);
        }
        out.push('\n');
    }
    out
}

pub fn write_history_csv(report: &SolveReport, path: &Path) -> Result<()> {
    fs::write(path, history_csv(report)).map_err(|e| Error::io(path, e))
}

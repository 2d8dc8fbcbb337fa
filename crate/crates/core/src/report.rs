//! Files written for a finished run.
//!
//! * `summary.json`: the [`VerificationReport`], pretty-printed, no timestamps.
//! * `diagnostics.csv`: one row per stored step with columns
//!   `t, max_f, bound, margin, jbar, min_j`. `max_f` is the maximum of `F` over the check
//!   region, `bound` the gradient bound at `t`, `margin = bound − max_f`, `jbar` the `J̄(t)`
//!   entering `F`, `min_j` the minimum of the solved `J` (or `J̄` when `J` is not solved).
//!   Undefined values (the bound at `t = 0`) are written as `NaN`.
//! * `plot.csv`: `t, max_f, bound` for external plotting.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::experiment::{DiagnosticRow, Experiment, VerificationReport};

pub const DIAGNOSTICS_HEADER: &str = "t,max_f,bound,margin,jbar,min_j";

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.display().to_string(),
        source,
    }
}

pub fn summary_json(report: &VerificationReport) -> Result<String> {
    let mut s = serde_json::to_string_pretty(report)?;
    s.push('\n');
    Ok(s)
}

pub fn parse_summary(text: &str) -> Result<VerificationReport> {
    Ok(serde_json::from_str(text)?)
}

pub fn diagnostics_csv(rows: &[DiagnosticRow]) -> String {
    let mut s = String::from(DIAGNOSTICS_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(s, "{},{},{},{},{},{}", r.t, r.max_f, r.bound, r.margin, r.jbar, r.min_j);
    }
    s
}

pub fn plot_csv(rows: &[DiagnosticRow]) -> String {
    let mut s = String::from("t,max_f,bound\n");
    for r in rows {
        let _ = writeln!(s, "{},{},{}", r.t, r.max_f, r.bound);
    }
    s
}

/// Writes the report files into `dir`, creating it if needed, and returns their paths.
pub fn emit_report(exp: &Experiment, dir: &Path, plot: bool) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut files = vec![
        (dir.join("summary.json"), summary_json(&exp.report)?),
        (dir.join("diagnostics.csv"), diagnostics_csv(&exp.diagnostics)),
    ];
    if plot {
        files.push((dir.join("plot.csv"), plot_csv(&exp.diagnostics)));
    }
    let mut out = Vec::new();
    for (path, text) in files {
        fs::write(&path, text).map_err(io_err(&path))?;
        out.push(path);
    }
    Ok(out)
}

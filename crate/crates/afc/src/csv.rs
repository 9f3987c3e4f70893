//! Result tables. Floats are written with 17 significant digits so that a
//! table round-trips to the exact doubles that produced it.

use std::io::{self, Write};

use afc_core::benchmarks::ErrorRecord;
use afc_core::solver::DmpAudit;

pub const REPORT_HEADER: &str = "level,ndof,h,l2_error,eoc_l2,l1_error,eoc_l1,iterations,converged";
pub const AUDIT_HEADER: &str = "check,applicable,violations,max_violation";

/// One row of `report.csv`. Errors are absent for problems without an exact
/// solution, rates for the first level of a study.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub level: u32,
    pub ndof: usize,
    pub h: f64,
    pub l2_error: Option<f64>,
    pub eoc_l2: Option<f64>,
    pub l1_error: Option<f64>,
    pub eoc_l1: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl From<&ErrorRecord> for ReportRow {
    fn from(r: &ErrorRecord) -> Self {
        ReportRow {
            level: r.level,
            ndof: r.ndof,
            h: r.h,
            l2_error: Some(r.l2),
            eoc_l2: r.eoc_l2,
            l1_error: Some(r.l1),
            eoc_l1: r.eoc_l1,
            iterations: r.iterations,
            converged: r.converged,
        }
    }
}

fn float(x: f64) -> String {
    format!("{x:.16e}")
}

fn optional(x: Option<f64>) -> String {
    x.map(float).unwrap_or_default()
}

pub fn write_report<W: Write>(rows: &[ReportRow], mut out: W) -> io::Result<()> {
    writeln!(out, "{REPORT_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.level,
            r.ndof,
            float(r.h),
            optional(r.l2_error),
            optional(r.eoc_l2),
            optional(r.l1_error),
            optional(r.eoc_l1),
            r.iterations,
            r.converged
        )?;
    }
    out.flush()
}

pub fn write_audit<W: Write>(audit: &DmpAudit, mut out: W) -> io::Result<()> {
    writeln!(out, "{AUDIT_HEADER}")?;
    for c in &audit.checks {
        writeln!(
            out,
            "{},{},{},{}",
            c.name,
            c.applicable,
            c.violations,
            float(c.max_violation)
        )?;
    }
    out.flush()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn render(rows: &[ReportRow]) -> String {
        let mut buf = Vec::new();
        write_report(rows, &mut buf).unwrap();
        String::from_utf8(buf).unwrap()
    }

    fn row(level: u32) -> ReportRow {
        ReportRow {
            level,
            ndof: 25,
            h: core::f64::consts::SQRT_2 / 4.0,
            l2_error: Some(0.1),
            eoc_l2: None,
            l1_error: Some(1.0 / 3.0),
            eoc_l1: None,
            iterations: 7,
            converged: true,
        }
    }

    #[test]
    fn empty_study_is_header_only() {
        assert_eq!(render(&[]), format!("{REPORT_HEADER}\n"));
    }

    #[test]
    fn first_level_has_empty_rates() {
        let text = render(&[row(2)]);
        assert_eq!(text.lines().count(), 2);
        let fields: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
        assert_eq!(fields.len(), 9);
        assert_eq!(fields[4], "");
        assert_eq!(fields[6], "");
        assert_eq!(fields[8], "true");
    }

    #[test]
    fn floats_round_trip() {
        let text = render(&[row(2)]);
        let fields: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
        assert_eq!(
            fields[2].parse::<f64>().unwrap(),
            core::f64::consts::SQRT_2 / 4.0
        );
        assert_eq!(fields[5].parse::<f64>().unwrap(), 1.0 / 3.0);
    }
}

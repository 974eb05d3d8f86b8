//! CSV writers. Numbers carry 12 significant digits; lines end in LF.

use std::fs::File;
use std::path::Path;

use csv::{Terminator, Writer, WriterBuilder};

use mdc_core::bounds::{SweepRow, TailBound};
use mdc_core::montecarlo::TailCheckRow;
use mdc_core::VerificationReport;

use crate::error::CliError;

/// Rounds to 12 significant digits and prints the shortest representation,
/// switching to exponent form outside `[1e-4, 1e15)`.
pub fn fmt_num(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let rounded: f64 = format!("{v:.11e}").parse().expect("formatted float parses");
    let mag = rounded.abs();
    if mag != 0.0 && !(1e-4..1e15).contains(&mag) {
        format!("{rounded:e}")
    } else {
        format!("{rounded}")
    }
}

fn fmt_index(i: Option<usize>) -> String {
    i.map(|i| (i + 1).to_string()).unwrap_or_default()
}

pub fn writer(path: &Path) -> Result<Writer<File>, CliError> {
    Ok(WriterBuilder::new()
        .terminator(Terminator::Any(b'\n'))
        .from_path(path)?)
}

/// `i,j,value` with 1-based indices; zero entries omitted.
pub fn write_sparse(path: &Path, entries: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<(), CliError> {
    let mut w = writer(path)?;
    w.write_record(["i", "j", "value"])?;
    for (i, j, v) in entries {
        if v != 0.0 {
            w.write_record([(i + 1).to_string(), (j + 1).to_string(), fmt_num(v)])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_bounds(path: &Path, bounds: &[TailBound], t: &[f64]) -> Result<(), CliError> {
    let mut w = writer(path)?;
    w.write_record(["bound", "proxy", "applicable", "reason", "t", "delta"])?;
    for b in bounds {
        for &ti in t {
            w.write_record([
                b.name().to_string(),
                fmt_num(b.proxy),
                b.is_applicable().to_string(),
                b.reason().to_string(),
                fmt_num(ti),
                fmt_num(b.delta_at(ti)),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_verification(path: &Path, report: &VerificationReport) -> Result<(), CliError> {
    let mut w = writer(path)?;
    w.write_record(["check", "k", "j", "observed", "bound", "slack", "pass"])?;
    for r in &report.records {
        w.write_record([
            r.check.clone(),
            fmt_index(r.k),
            fmt_index(r.j),
            fmt_num(r.observed),
            fmt_num(r.bound),
            fmt_num(r.slack),
            r.pass.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_tail(path: &Path, rows: &[TailCheckRow]) -> Result<(), CliError> {
    let mut w = writer(path)?;
    w.write_record(["t", "empirical", "stderr", "bound_name", "bound_value", "pass"])?;
    for r in rows {
        w.write_record([
            fmt_num(r.t),
            fmt_num(r.empirical),
            fmt_num(r.stderr),
            r.bound_name.clone(),
            fmt_num(r.bound_value),
            r.pass.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_sweep(path: &Path, rows: &[SweepRow]) -> Result<(), CliError> {
    let mut w = writer(path)?;
    w.write_record(["N", "mdc_proxy", "scalar_collapse_proxy", "sparse_terminal_bound"])?;
    for r in rows {
        w.write_record([
            r.n.to_string(),
            fmt_num(r.mdc_proxy),
            fmt_num(r.scalar_collapse_proxy),
            r.sparse_terminal_bound.map(fmt_num).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(fmt_num(0.7), "0.7");
        assert_eq!(fmt_num(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt_num(8.686100000000001), "8.6861");
        assert_eq!(fmt_num(123_456_789.123_456_79), "123456789.123");
        assert_eq!(fmt_num(f64::INFINITY), "inf");
        assert_eq!(fmt_num(0.0), "0");
        assert_eq!(fmt_num(9.999983063841e-10), "9.99998306384e-10");
        assert_eq!(fmt_num(-2.5e20), "-2.5e20");
    }
}

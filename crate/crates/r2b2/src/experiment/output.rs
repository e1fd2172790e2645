//! Result emission. CSV and JSON carry the same fields with the same
//! 17-significant-digit number formatting, so the two formats agree
//! value-for-value and re-parse to the exact in-memory doubles.

use std::fmt::Write as _;
use std::path::Path;

use crate::trace::fmt_f64;

use super::runner::AggregateResult;
use super::ExperimentError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl std::str::FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(format!("unknown format `{other}` (expected csv or json)")),
        }
    }
}

/// CSV with columns `iteration,metric_mean,metric_stderr,n_replications`;
/// the stderr column is omitted entirely for single-replication runs.
pub fn to_csv(result: &AggregateResult) -> String {
    let with_stderr = result.rows.iter().any(|r| r.stderr.is_some());
    let mut out = String::new();
    if with_stderr {
        out.push_str("iteration,metric_mean,metric_stderr,n_replications\n");
    } else {
        out.push_str("iteration,metric_mean,n_replications\n");
    }
    for row in &result.rows {
        if with_stderr {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                row.iteration,
                fmt_f64(row.mean),
                fmt_f64(row.stderr.unwrap_or(0.0)),
                row.n
            );
        } else {
            let _ = writeln!(out, "{},{},{}", row.iteration, fmt_f64(row.mean), row.n);
        }
    }
    out
}

/// JSON mirror of the CSV fields, numbers formatted identically.
pub fn to_json(result: &AggregateResult) -> String {
    let mut out = String::new();
    let _ = write!(
        out,
        "{{\"schema_version\":1,\"metric\":\"{}\",\"agent\":{},\"rows\":[",
        result.metric.as_str(),
        result.agent
    );
    for (i, row) in result.rows.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        let _ = write!(
            out,
            "{{\"iteration\":{},\"metric_mean\":{}",
            row.iteration,
            fmt_f64(row.mean)
        );
        if let Some(se) = row.stderr {
            let _ = write!(out, ",\"metric_stderr\":{}", fmt_f64(se));
        }
        let _ = write!(out, ",\"n_replications\":{}}}", row.n);
    }
    out.push_str("]}\n");
    out
}

/// Writes the result in the requested format.
pub fn emit_results(
    result: &AggregateResult,
    format: OutputFormat,
    path: &Path,
) -> Result<(), ExperimentError> {
    if result.rows.is_empty() {
        return Err(ExperimentError::Validation {
            field: "result".into(),
            constraint: "no rows to emit".into(),
        });
    }
    let text = match format {
        OutputFormat::Csv => to_csv(result),
        OutputFormat::Json => to_json(result),
    };
    std::fs::write(path, text)?;
    Ok(())
}

//! Plain-text artifacts: CSV tables with a `#` comment header and JSON estimate
//! records. Every artifact carries the tool version, the resolved config, the
//! master seed and a timestamp.

use std::io::{self, Write};

use serde::Serialize;
use time::format_description::well_known::Rfc3339;
use time::OffsetDateTime;

use crate::geodesic::Trajectory;
use crate::metric::FinslerMetric;
use crate::study::{ConvergenceTable, ExitTable};
use crate::walk::WalkPath;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Header {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: Option<u64>,
    pub timestamp: String,
    /// The fully resolved configuration as structured text.
    pub config: String,
}

impl Header {
    pub fn new(command: &str, seed: Option<u64>, config: impl Into<String>) -> Self {
        Header {
            tool: "geowalk".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            seed,
            timestamp: timestamp(),
            config: config.into(),
        }
    }
}

/// RFC 3339 UTC time, taken from `SOURCE_DATE_EPOCH` when it is set.
pub fn timestamp() -> String {
    let now = std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|s| s.trim().parse::<i64>().ok())
        .and_then(|secs| OffsetDateTime::from_unix_timestamp(secs).ok())
        .unwrap_or_else(OffsetDateTime::now_utc);
    now.replace_nanosecond(0).unwrap_or(now).format(&Rfc3339).unwrap_or_default()
}

pub fn write_header<W: Write>(w: &mut W, header: &Header) -> io::Result<()> {
    writeln!(w, "# {} {}", header.tool, header.version)?;
    writeln!(w, "# command: {}", header.command)?;
    match header.seed {
        Some(seed) => writeln!(w, "# seed: {seed}")?,
        None => writeln!(w, "# seed: none")?,
    }
    writeln!(w, "# timestamp: {}", header.timestamp)?;
    writeln!(w, "# config:")?;
    for line in header.config.lines() {
        writeln!(w, "#   {line}")?;
    }
    Ok(())
}

fn numbered(prefix: &str, n: usize) -> impl Iterator<Item = String> + '_ {
    (1..=n).map(move |i| format!("{prefix}{i}"))
}

/// Rows `t, chart, x1.., y1.., F` for each integration node.
pub fn write_trajectory<W: Write>(w: &mut W, metric: &dyn FinslerMetric, trajectory: &Trajectory) -> io::Result<()> {
    let m = metric.dim();
    let mut out = csv::Writer::from_writer(w);
    let mut head = vec!["t".to_string(), "chart".to_string()];
    head.extend(numbered("x", m));
    head.extend(numbered("y", m));
    head.push("F".into());
    out.write_record(&head)?;
    for s in &trajectory.states {
        let mut row = vec![s.t.to_string(), s.point.chart.to_string()];
        row.extend(s.point.coords.as_slice().iter().map(|v| v.to_string()));
        row.extend(s.velocity.as_slice().iter().map(|v| v.to_string()));
        row.push(metric.eval(s.point.chart, &s.point.coords, &s.velocity).to_string());
        out.write_record(&row)?;
    }
    out.flush()
}

/// Rows `path, kind, t, chart, x1..` for every record of every path.
pub fn write_paths<W: Write>(w: &mut W, dim: usize, paths: &[(u64, WalkPath)]) -> io::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut head = vec!["path".to_string(), "kind".to_string(), "t".to_string(), "chart".to_string()];
    head.extend(numbered("x", dim));
    out.write_record(&head)?;
    for (id, path) in paths {
        for r in &path.records {
            let mut row =
                vec![id.to_string(), path.kind.label().to_string(), r.t.to_string(), r.point.chart.to_string()];
            row.extend(r.point.coords.as_slice().iter().map(|v| v.to_string()));
            out.write_record(&row)?;
        }
    }
    out.flush()
}

/// `N, sup_error` rows followed by a `# slope` footer.
pub fn write_convergence<W: Write>(w: &mut W, table: &ConvergenceTable) -> io::Result<()> {
    {
        let mut out = csv::Writer::from_writer(&mut *w);
        for row in &table.rows {
            out.serialize(row)?;
        }
        out.flush()?;
    }
    writeln!(w, "# slope: {}", table.slope)
}

/// Exit probabilities with Wilson intervals, then the per-`δ` fits `P ≈ C t`.
pub fn write_exit_table<W: Write>(w: &mut W, table: &ExitTable) -> io::Result<()> {
    {
        let mut out = csv::Writer::from_writer(&mut *w);
        for row in &table.rows {
            out.serialize(row)?;
        }
        out.flush()?;
    }
    for (delta, c) in &table.linear_fit {
        writeln!(w, "# linear fit: delta = {delta}, C = {c}")?;
    }
    Ok(())
}

#[derive(Serialize)]
struct EstimateDocument<'a, T> {
    header: &'a Header,
    estimates: &'a [T],
}

/// JSON document `{ "header": …, "estimates": [...] }`; matrices are row-major.
pub fn write_estimates_json<W: Write, T: Serialize>(w: &mut W, header: &Header, estimates: &[T]) -> io::Result<()> {
    serde_json::to_writer_pretty(&mut *w, &EstimateDocument { header, estimates })?;
    writeln!(w)
}

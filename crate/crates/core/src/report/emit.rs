//! Report serialization. JSON is one document with fixed key order; CSV is
//! one row per (category, metric). Floats are rounded to 9 decimals in both.

use std::io::Write;
use std::str::FromStr;

use serde::Serialize;
use serde_json::Value;

use super::{AduxReport, Metric, Unavailable};
use crate::error::{Error, Result};

pub const DECIMALS: i32 = 9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReportFormat {
    #[default]
    Json,
    Csv,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(Self::Json),
            "csv" => Ok(Self::Csv),
            other => Err(Error::UnknownFormat(other.to_owned())),
        }
    }
}

pub fn round9(x: f64) -> f64 {
    if !x.is_finite() {
        return x;
    }
    let scale = 10f64.powi(DECIMALS);
    let r = (x * scale).round() / scale;
    // avoid printing -0
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

/// Formats a float the way both emitters print it.
pub fn fmt_num(x: f64) -> String {
    let r = round9(x);
    if r.fract() == 0.0 && r.abs() < 1e15 {
        format!("{r:.1}")
    } else {
        format!("{r}")
    }
}

fn round_in_place(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().expect("f64 number");
            if let Some(r) = serde_json::Number::from_f64(round9(x)) {
                *n = r;
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_in_place),
        Value::Object(map) => map.values_mut().for_each(round_in_place),
        _ => {}
    }
}

pub(crate) fn rounded_value<T: Serialize>(item: &T) -> Value {
    let mut v = serde_json::to_value(item).expect("report serializes");
    round_in_place(&mut v);
    v
}

pub fn emit_report<W: Write>(report: &AduxReport, format: ReportFormat, mut out: W) -> Result<()> {
    match format {
        ReportFormat::Json => {
            let v = rounded_value(report);
            serde_json::to_writer_pretty(&mut out, &v).map_err(std::io::Error::from)?;
            out.write_all(b"\n")?;
        }
        ReportFormat::Csv => write_csv(report, &mut out)?,
    }
    out.flush()?;
    Ok(())
}

pub const CSV_HEADER: [&str; 9] = [
    "category", "metric", "status", "reason", "estimate", "lower", "upper", "n", "details",
];

fn reason_code(r: Unavailable) -> String {
    serde_json::to_value(r)
        .ok()
        .and_then(|v| v.as_str().map(str::to_owned))
        .unwrap_or_default()
}

fn write_csv<W: Write>(report: &AduxReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Io(e.into());
    w.write_record(CSV_HEADER).map_err(io)?;

    for cat in &report.categories {
        let name = cat.name.as_str();
        w.write_record([
            name,
            "iei",
            "ok",
            "",
            &fmt_num(cat.iei.bits),
            "",
            "",
            &cat.iei.n.to_string(),
            &format!("normalized={}", fmt_num(cat.iei.normalized)),
        ])
        .map_err(io)?;

        match &cat.tdc {
            Metric::Available(t) => w.write_record([
                name,
                "tdc",
                "ok",
                "",
                &fmt_num(t.beta1),
                &fmt_num(t.ci95[0]),
                &fmt_num(t.ci95[1]),
                &t.n_points.to_string(),
                &format!(
                    "beta0={};stderr={};r2={}",
                    fmt_num(t.beta0),
                    fmt_num(t.stderr),
                    fmt_num(t.r2)
                ),
            ]),
            Metric::Unavailable { unavailable } => w.write_record([
                name,
                "tdc",
                "unavailable",
                &reason_code(*unavailable),
                "",
                "",
                "",
                "",
                "",
            ]),
        }
        .map_err(io)?;

        match &cat.bucs {
            Metric::Available(b) => w.write_record([
                name,
                "bucs",
                "ok",
                "",
                &fmt_num(b.mean),
                &fmt_num(b.interval.lower),
                &fmt_num(b.interval.upper),
                "",
                &format!(
                    "alpha={};beta={};mass={};kind={};unique={}",
                    fmt_num(b.posterior.alpha),
                    fmt_num(b.posterior.beta),
                    fmt_num(b.interval.mass),
                    b.interval.kind,
                    b.interval.unique
                ),
            ]),
            Metric::Unavailable { unavailable } => w.write_record([
                name,
                "bucs",
                "unavailable",
                &reason_code(*unavailable),
                "",
                "",
                "",
                "",
                "",
            ]),
        }
        .map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

//! Session log readers (CSV and JSON lines) and the session CSV writer.

use std::io::{BufRead, BufReader, Read, Write};
use std::str::FromStr;

use chrono::DateTime;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::model::{
    validate_rows, Dataset, RawRow, Rejection, ResponseSpace, Strictness, Validated,
};

/// One calendar day, in seconds.
pub const DEFAULT_PERIOD_WINDOW_SECS: u64 = 86_400;

const REQUIRED_COLUMNS: [&str; 4] = ["session_id", "category", "period", "rating"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InputFormat {
    #[default]
    Csv,
    JsonLines,
}

impl FromStr for InputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Self::Csv),
            "jsonl" | "json-lines" | "ndjson" => Ok(Self::JsonLines),
            other => Err(Error::UnknownFormat(other.to_owned())),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IngestOptions {
    pub format: InputFormat,
    pub space: ResponseSpace,
    pub strictness: Strictness,
    /// Width of one period when rows carry a timestamp instead of a period.
    /// Period `k` covers `[k·w, (k+1)·w)` seconds after the Unix epoch, so
    /// the default is the UTC calendar day.
    pub period_window_secs: u64,
}

impl Default for IngestOptions {
    fn default() -> Self {
        Self {
            format: InputFormat::Csv,
            space: ResponseSpace::five_point(),
            strictness: Strictness::Strict,
            period_window_secs: DEFAULT_PERIOD_WINDOW_SECS,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Loaded {
    pub dataset: Dataset,
    pub rejections: Vec<Rejection>,
    /// Data rows seen, valid or not.
    pub rows_read: usize,
}

/// Fills an empty `period` from `timestamp` (RFC 3339).
fn resolve_period(
    mut row: RawRow,
    timestamp: Option<String>,
    window: u64,
) -> Result<RawRow, Rejection> {
    let has_period = row.period.as_deref().is_some_and(|p| !p.trim().is_empty());
    let ts = timestamp.filter(|t| !t.trim().is_empty());
    if has_period {
        return Ok(row);
    }
    if let Some(ts) = ts {
        let parsed = DateTime::parse_from_rfc3339(ts.trim()).map_err(|e| {
            Rejection::malformed(row.line, format!("timestamp `{ts}` is not RFC 3339: {e}"))
        })?;
        let period = parsed.timestamp().div_euclid(window as i64);
        row.period = Some(period.to_string());
    }
    Ok(row)
}

fn read_csv<R: Read>(input: R, window: u64) -> Result<Vec<Result<RawRow, Rejection>>> {
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(input);
    let headers = reader.headers().map_err(csv_error)?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    for name in REQUIRED_COLUMNS {
        if col(name).is_none() {
            return Err(Error::MalformedRow {
                line: 1,
                reason: format!("header is missing required column `{name}`"),
            });
        }
    }
    let [sid, cat, per, rat] = REQUIRED_COLUMNS.map(|c| col(c).expect("checked above"));
    let task = col("task_completed");
    let stamp = col("timestamp");

    let mut rows = Vec::new();
    for record in reader.records() {
        let record = match record {
            Ok(r) => r,
            Err(e) => match e.kind() {
                csv::ErrorKind::Io(_) => return Err(csv_error(e)),
                _ => {
                    let line = e.position().map_or(0, |p| p.line() as usize);
                    rows.push(Err(Rejection::malformed(line, e.to_string())));
                    continue;
                }
            },
        };
        let line = record.position().map_or(0, |p| p.line() as usize);
        let field = |idx: Option<usize>| idx.and_then(|i| record.get(i)).map(str::to_owned);
        let raw = RawRow {
            line,
            session_id: field(Some(sid)),
            category: field(Some(cat)),
            period: field(Some(per)),
            rating: field(Some(rat)),
            task_completed: field(task),
        };
        rows.push(resolve_period(raw, field(stamp), window));
    }
    Ok(rows)
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map_or(1, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::MalformedRow {
            line,
            reason: format!("{other:?}"),
        },
    }
}

fn json_field(obj: &serde_json::Map<String, Value>, key: &str) -> Option<String> {
    match obj.get(key)? {
        Value::Null => None,
        Value::String(s) => Some(s.clone()),
        other => Some(other.to_string()),
    }
}

fn read_json_lines<R: Read>(input: R, window: u64) -> Result<Vec<Result<RawRow, Rejection>>> {
    let mut rows = Vec::new();
    for (idx, line) in BufReader::new(input).lines().enumerate() {
        let line_no = idx + 1;
        let text = line?;
        if text.trim().is_empty() {
            continue;
        }
        let obj = match serde_json::from_str::<Value>(&text) {
            Ok(Value::Object(map)) => map,
            Ok(_) => {
                rows.push(Err(Rejection::malformed(line_no, "expected a JSON object")));
                continue;
            }
            Err(e) => {
                rows.push(Err(Rejection::malformed(
                    line_no,
                    format!("invalid JSON: {e}"),
                )));
                continue;
            }
        };
        let raw = RawRow {
            line: line_no,
            session_id: json_field(&obj, "session_id"),
            category: json_field(&obj, "category"),
            period: json_field(&obj, "period"),
            rating: json_field(&obj, "rating"),
            task_completed: json_field(&obj, "task_completed"),
        };
        rows.push(resolve_period(raw, json_field(&obj, "timestamp"), window));
    }
    Ok(rows)
}

/// Parses a session log and validates it against `opts.space`.
pub fn load_sessions<R: Read>(input: R, opts: &IngestOptions) -> Result<Loaded> {
    if opts.period_window_secs == 0 {
        return Err(Error::InvalidParameter(
            "period window must be positive".into(),
        ));
    }
    let rows = match opts.format {
        InputFormat::Csv => read_csv(input, opts.period_window_secs)?,
        InputFormat::JsonLines => read_json_lines(input, opts.period_window_secs)?,
    };
    let rows_read = rows.len();
    let Validated {
        dataset,
        rejections,
    } = validate_rows(rows, &opts.space, opts.strictness)?;
    Ok(Loaded {
        dataset,
        rejections,
        rows_read,
    })
}

/// Writes `dataset` in the session CSV layout, one row per observation.
pub fn write_sessions_csv<W: Write>(dataset: &Dataset, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "session_id",
        "category",
        "period",
        "rating",
        "task_completed",
    ])
    .map_err(csv_error)?;
    for o in dataset.observations() {
        let task = o.task_completed.map(|b| b.to_string()).unwrap_or_default();
        w.write_record([
            o.session_id.as_str(),
            o.category.as_str(),
            &o.period.to_string(),
            &o.rating.to_string(),
            &task,
        ])
        .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts(format: InputFormat) -> IngestOptions {
        IngestOptions {
            format,
            ..IngestOptions::default()
        }
    }

    const CSV: &str = "session_id,category,period,rating,task_completed\n\
                       s1,chat,0,4,true\n\
                       s2,chat,1,2,\n\
                       s3,form,0,5,false\n";

    const JSONL: &str = r#"{"session_id":"s1","category":"chat","period":0,"rating":4,"task_completed":true}
{"session_id":"s2","category":"chat","period":1,"rating":2,"task_completed":null}

{"session_id":"s3","category":"form","period":0,"rating":5,"task_completed":false}
"#;

    #[test]
    fn csv_and_jsonl_agree() {
        let a = load_sessions(CSV.as_bytes(), &opts(InputFormat::Csv)).unwrap();
        let b = load_sessions(JSONL.as_bytes(), &opts(InputFormat::JsonLines)).unwrap();
        assert_eq!(a.dataset.len(), 3);
        assert_eq!(a.rows_read, 3);
        assert_eq!(a.dataset, b.dataset);
        assert_eq!(a.dataset.observations()[1].task_completed, None);
    }

    #[test]
    fn missing_rating_field_names_the_line() {
        let text = "session_id,category,period,rating\ns1,chat,0,4\ns2,chat,1\n";
        match load_sessions(text.as_bytes(), &opts(InputFormat::Csv)).unwrap_err() {
            Error::MalformedRow { line, reason } => {
                assert_eq!(line, 3);
                assert!(reason.contains("rating"), "{reason}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_header_column() {
        let text = "session_id,category,period\ns1,chat,0\n";
        assert!(matches!(
            load_sessions(text.as_bytes(), &opts(InputFormat::Csv)),
            Err(Error::MalformedRow { line: 1, .. })
        ));
    }

    #[test]
    fn skip_invalid_collects_all_problems() {
        let text = "session_id,category,period,rating,task_completed\n\
                    a,chat,0,4,\n\
                    b,chat,-1,4,\n\
                    c,chat,0,9,\n\
                    d,chat,x,4,\n\
                    e,chat,1,3,true\n";
        let mut o = opts(InputFormat::Csv);
        o.strictness = Strictness::SkipInvalid;
        let loaded = load_sessions(text.as_bytes(), &o).unwrap();
        assert_eq!(loaded.dataset.len(), 2);
        assert_eq!(loaded.rows_read, 5);
        let lines: Vec<usize> = loaded.rejections.iter().map(|r| r.line).collect();
        assert_eq!(lines, vec![3, 4, 5]);
    }

    #[test]
    fn timestamps_bucket_into_days() {
        let text = "session_id,category,period,rating,timestamp\n\
                    a,chat,,4,1970-01-03T23:59:59Z\n\
                    b,chat,,4,1970-01-04T00:00:00+00:00\n\
                    c,chat,7,4,2024-01-01T00:00:00Z\n\
                    d,chat,,4,1970-01-02T05:00:00+06:00\n";
        let loaded = load_sessions(text.as_bytes(), &opts(InputFormat::Csv)).unwrap();
        let periods: Vec<u64> = loaded
            .dataset
            .observations()
            .iter()
            .map(|o| o.period)
            .collect();
        // the explicit period wins; 05:00+06:00 on Jan 2 is 23:00 UTC on Jan 1
        assert_eq!(&periods[..3], &[2, 3, 7]);
        assert_eq!(loaded.dataset.len(), 4);
        assert_eq!(periods[3], 0);

        let bad = "session_id,category,period,rating,timestamp\na,chat,,4,yesterday\n";
        assert!(matches!(
            load_sessions(bad.as_bytes(), &opts(InputFormat::Csv)),
            Err(Error::MalformedRow { line: 2, .. })
        ));
    }

    #[test]
    fn pre_epoch_timestamp_is_negative_period() {
        let text = "session_id,category,period,rating,timestamp\na,chat,,4,1969-12-31T12:00:00Z\n";
        assert!(matches!(
            load_sessions(text.as_bytes(), &opts(InputFormat::Csv)),
            Err(Error::NegativePeriod { period: -1, .. })
        ));
    }

    #[test]
    fn broken_json_line() {
        let text = "{\"session_id\":\"a\",\"category\":\"c\",\"period\":0,\"rating\":1}\n{oops\n";
        assert!(matches!(
            load_sessions(text.as_bytes(), &opts(InputFormat::JsonLines)),
            Err(Error::MalformedRow { line: 2, .. })
        ));
    }

    #[test]
    fn format_names() {
        assert_eq!(
            "jsonl".parse::<InputFormat>().unwrap(),
            InputFormat::JsonLines
        );
        assert_eq!("CSV".parse::<InputFormat>().unwrap(), InputFormat::Csv);
        assert!(matches!(
            "xml".parse::<InputFormat>(),
            Err(Error::UnknownFormat(_))
        ));
    }

    #[test]
    fn writer_round_trips_through_reader() {
        let a = load_sessions(CSV.as_bytes(), &opts(InputFormat::Csv)).unwrap();
        let mut buf = Vec::new();
        write_sessions_csv(&a.dataset, &mut buf).unwrap();
        let b = load_sessions(buf.as_slice(), &opts(InputFormat::Csv)).unwrap();
        assert_eq!(a.dataset, b.dataset);
    }
}

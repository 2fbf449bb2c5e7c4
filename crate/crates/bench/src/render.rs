//! Report output as a text table, CSV or JSON.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use crate::harness::{Report, Row, VerifyStatus};

/// CSV header, in column order.
pub const CSV_COLUMNS: [&str; 7] =
    ["dataset", "technique", "build_ns", "ns_per_lookup", "size_overhead_pct", "mean_probes", "verify"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Table,
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "table" => Ok(Format::Table),
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(format!("unknown format '{other}' (expected table, csv or json)")),
        }
    }
}

/// Latency class of one entry relative to the fastest in its dataset row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mark {
    Best,
    /// Slower than the best but by less than 2x.
    Plain,
    /// Between 2x and 3x the best, inclusive.
    Slower2To3,
    /// More than 3x the best.
    SlowerOver3,
}

impl Mark {
    fn symbol(self) -> &'static str {
        match self {
            Mark::Best => "*",
            Mark::Plain => " ",
            Mark::Slower2To3 => "+",
            Mark::SlowerOver3 => "!",
        }
    }

    fn color(self) -> Option<&'static str> {
        match self {
            Mark::Best => Some("\x1b[1;32m"),
            Mark::Plain => None,
            Mark::Slower2To3 => Some("\x1b[33m"),
            Mark::SlowerOver3 => Some("\x1b[31m"),
        }
    }
}

/// Marks each latency against the row minimum. Missing values get no mark;
/// with fewer than two values nothing is marked.
pub fn classify(latencies: &[Option<f64>]) -> Vec<Option<Mark>> {
    let present: Vec<f64> = latencies.iter().flatten().copied().collect();
    if present.len() < 2 {
        return vec![None; latencies.len()];
    }
    let best = present.iter().copied().fold(f64::INFINITY, f64::min);
    latencies
        .iter()
        .map(|v| {
            v.map(|v| {
                let ratio = if best > 0.0 {
                    v / best
                } else if v > 0.0 {
                    f64::INFINITY
                } else {
                    1.0
                };
                if v <= best {
                    Mark::Best
                } else if ratio < 2.0 {
                    Mark::Plain
                } else if ratio <= 3.0 {
                    Mark::Slower2To3
                } else {
                    Mark::SlowerOver3
                }
            })
        })
        .collect()
}

pub fn render(report: &Report, format: Format, color: bool) -> String {
    match format {
        Format::Table => render_table(report, color),
        Format::Csv => render_csv(report),
        Format::Json => render_json(report),
    }
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map_or_else(String::new, |v| v.to_string())
}

/// CSV with the fixed [`CSV_COLUMNS`]; platform counters are not included.
pub fn render_csv(report: &Report) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_COLUMNS).expect("in-memory write");
    for r in &report.rows {
        w.write_record([
            r.dataset.clone(),
            r.technique.clone(),
            opt(r.build_ns),
            opt(r.ns_per_lookup),
            opt(r.size_overhead_pct),
            opt(r.mean_probes),
            r.verify.to_string(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is utf-8")
}

#[derive(Debug, thiserror::Error)]
pub enum ParseError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("unexpected CSV header {0:?}")]
    Header(Vec<String>),
    #[error("line {line}: bad {column} value '{value}'")]
    Value { line: u64, column: &'static str, value: String },
}

/// Parses CSV produced by [`render_csv`].
pub fn parse_csv(text: &str) -> Result<Report, ParseError> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    if header != CSV_COLUMNS {
        return Err(ParseError::Header(header));
    }
    let mut report = Report::default();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let field = |i: usize| rec.get(i).unwrap_or("");
        fn num<T: FromStr>(s: &str, line: u64, column: &'static str) -> Result<Option<T>, ParseError> {
            if s.is_empty() {
                return Ok(None);
            }
            s.parse().map(Some).map_err(|_| ParseError::Value { line, column, value: s.to_owned() })
        }
        report.rows.push(Row {
            dataset: field(0).to_owned(),
            technique: field(1).to_owned(),
            build_ns: num(field(2), line, "build_ns")?,
            ns_per_lookup: num(field(3), line, "ns_per_lookup")?,
            size_overhead_pct: num(field(4), line, "size_overhead_pct")?,
            mean_probes: num(field(5), line, "mean_probes")?,
            verify: field(6).parse::<VerifyStatus>().map_err(|_| ParseError::Value {
                line,
                column: "verify",
                value: field(6).to_owned(),
            })?,
            counters: BTreeMap::new(),
        });
    }
    Ok(report)
}

pub fn render_json(report: &Report) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serializes");
    s.push('\n');
    s
}

/// Distinct values in first-seen order.
fn ordered<'a>(items: impl Iterator<Item = &'a str>) -> Vec<&'a str> {
    let mut out: Vec<&str> = Vec::new();
    for s in items {
        if !out.contains(&s) {
            out.push(s);
        }
    }
    out
}

/// Dataset-by-technique matrices for latency, size, build time and probes.
/// Latency cells carry the marks from [`classify`].
pub fn render_table(report: &Report, color: bool) -> String {
    let datasets = ordered(report.rows.iter().map(|r| r.dataset.as_str()));
    let techniques = ordered(report.rows.iter().map(|r| r.technique.as_str()));
    let cell = |d: &str, t: &str| report.rows.iter().find(|r| r.dataset == d && r.technique == t);
    let width = techniques.iter().map(|t| t.len()).max().unwrap_or(0).max(10) + 2;
    let first = datasets.iter().map(|d| d.len()).max().unwrap_or(0).max(8) + 2;

    let mut out = String::new();
    let header = |out: &mut String, title: &str| {
        let _ = writeln!(out, "{title}");
        let _ = write!(out, "{:<first$}", "dataset");
        for t in &techniques {
            let _ = write!(out, "{t:>width$}");
        }
        out.push('\n');
    };

    header(&mut out, "lookup latency, ns (* fastest, + 2-3x slower, ! >3x slower)");
    for d in &datasets {
        let rows: Vec<Option<&Row>> = techniques.iter().map(|t| cell(d, t)).collect();
        let lat: Vec<Option<f64>> = rows.iter().map(|r| r.and_then(|r| r.ns_per_lookup)).collect();
        let marks = classify(&lat);
        let _ = write!(out, "{d:<first$}");
        for (row, mark) in rows.iter().zip(marks) {
            let text = match row {
                None => "-".to_owned(),
                Some(r) if r.verify == VerifyStatus::Fail => "FAIL".to_owned(),
                Some(r) if r.verify == VerifyStatus::Error => "ERROR".to_owned(),
                Some(r) => format!("{:.1}{}", r.ns_per_lookup.unwrap_or(f64::NAN), mark.map_or(" ", Mark::symbol)),
            };
            let padded = format!("{text:>width$}");
            match mark.and_then(Mark::color) {
                Some(c) if color => {
                    let _ = write!(out, "{c}{padded}\x1b[0m");
                }
                _ => out.push_str(&padded),
            }
        }
        out.push('\n');
    }

    let metric = |out: &mut String, title: &str, f: &dyn Fn(&Row) -> Option<String>| {
        out.push('\n');
        header(out, title);
        for d in &datasets {
            let _ = write!(out, "{d:<first$}");
            for t in &techniques {
                let text = cell(d, t).and_then(f).unwrap_or_else(|| "-".to_owned());
                let _ = write!(out, "{text:>width$}");
            }
            out.push('\n');
        }
    };
    metric(&mut out, "size overhead, % of data", &|r| r.size_overhead_pct.map(|v| format!("{v:.2}% ")));
    metric(&mut out, "build time, ms", &|r| r.build_ns.map(|v| format!("{:.3} ", v as f64 / 1e6)));
    metric(&mut out, "mean probes per lookup", &|r| r.mean_probes.map(|v| format!("{v:.2} ")));

    let counter_names: Vec<&str> = ordered(report.rows.iter().flat_map(|r| r.counters.keys().map(String::as_str)));
    for name in counter_names {
        metric(&mut out, &format!("{name} per lookup"), &|r| r.counters.get(name).map(|v| format!("{v:.2} ")));
    }
    out
}

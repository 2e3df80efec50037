//! Rendering result rows as CSV, JSON or a markdown table.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::analyze::ResultRow;

/// CSV column order: the published table layout with the adjusted p-value
/// and exclusion count appended.
pub const CSV_COLUMNS: [&str; 10] = [
    "model",
    "prompting_method",
    "n12",
    "n21",
    "n_star",
    "z_stat",
    "p_value",
    "reject",
    "p_value_adjusted",
    "excluded_pairs",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    #[default]
    Csv,
    Json,
    Markdown,
}

impl FromStr for ReportFormat {
    type Err = ReportError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            "markdown" | "md" => Ok(Self::Markdown),
            _ => Err(ReportError::UnknownFormat(s.to_string())),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("unknown report format `{0}` (expected csv, json or markdown)")]
    UnknownFormat(String),
    #[error("no result rows to report")]
    Empty,
    #[error("malformed CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("malformed CSV value `{value}` in column {column}")]
    Value { column: &'static str, value: String },
}

fn fixed6(x: f64) -> String {
    format!("{x:.6}")
}

fn py_bool(b: bool) -> &'static str {
    if b {
        "True"
    } else {
        "False"
    }
}

fn cells(row: &ResultRow) -> [String; 10] {
    [
        row.model.clone(),
        row.prompting_method.clone(),
        row.n12.to_string(),
        row.n21.to_string(),
        row.n_star.to_string(),
        fixed6(row.z_stat),
        fixed6(row.p_value),
        py_bool(row.reject).to_string(),
        fixed6(row.p_value_adjusted),
        row.excluded_pairs.to_string(),
    ]
}

/// Round to six decimals the same way the text formats do.
pub fn round6(x: f64) -> f64 {
    fixed6(x).parse().expect("formatted float parses")
}

/// The row as it reads back from any rendered format.
pub fn rounded(row: &ResultRow) -> ResultRow {
    ResultRow {
        z_stat: round6(row.z_stat),
        p_value: round6(row.p_value),
        p_value_adjusted: round6(row.p_value_adjusted),
        ..row.clone()
    }
}

pub fn report(rows: &[ResultRow], format: ReportFormat) -> Result<String, ReportError> {
    if rows.is_empty() {
        return Err(ReportError::Empty);
    }
    Ok(match format {
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(CSV_COLUMNS)?;
            for row in rows {
                w.write_record(cells(row))?;
            }
            String::from_utf8(w.into_inner().expect("in-memory writer")).expect("utf-8 cells")
        }
        ReportFormat::Json => {
            let rounded: Vec<ResultRow> = rows.iter().map(rounded).collect();
            serde_json::to_string_pretty(&rounded).expect("rows serialize") + "\n"
        }
        ReportFormat::Markdown => {
            let mut out = format!("| {} |\n|{}\n", CSV_COLUMNS.join(" | "), "---|".repeat(CSV_COLUMNS.len()));
            for row in rows {
                let _ = writeln!(out, "| {} |", cells(row).join(" | "));
            }
            out
        }
    })
}

fn parse_field<T: FromStr>(column: &'static str, value: &str) -> Result<T, ReportError> {
    value.parse().map_err(|_| ReportError::Value { column, value: value.to_string() })
}

/// Read rows back from CSV produced by [`report`].
pub fn parse_csv(text: &str) -> Result<Vec<ResultRow>, ReportError> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header = reader.headers()?.clone();
    if header.iter().ne(CSV_COLUMNS) {
        return Err(ReportError::Value { column: "header", value: header.iter().collect::<Vec<_>>().join(",") });
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let r = record?;
        let reject = match &r[7] {
            "True" | "true" => true,
            "False" | "false" => false,
            other => return Err(ReportError::Value { column: "reject", value: other.to_string() }),
        };
        rows.push(ResultRow {
            model: r[0].to_string(),
            prompting_method: r[1].to_string(),
            n12: parse_field("n12", &r[2])?,
            n21: parse_field("n21", &r[3])?,
            n_star: parse_field("n_star", &r[4])?,
            z_stat: parse_field("z_stat", &r[5])?,
            p_value: parse_field("p_value", &r[6])?,
            reject,
            p_value_adjusted: parse_field("p_value_adjusted", &r[8])?,
            excluded_pairs: parse_field("excluded_pairs", &r[9])?,
        });
    }
    Ok(rows)
}

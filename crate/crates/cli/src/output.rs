//! Report files and the CSV tables mirroring the paper's layouts.
//!
//! Floats are written with Rust's shortest round-trip formatting, so every
//! table parses back to the exact values that produced it.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use xmeter_core::MetricReport;

use crate::error::{config_err, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
    Both,
}

impl Format {
    pub fn parse(s: Option<&str>) -> CliResult<Self> {
        match s.unwrap_or("both") {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            "both" => Ok(Format::Both),
            other => Err(config_err(format!(
                "unknown format `{other}` (json, csv or both)"
            ))),
        }
    }
}

/// One row of the attribution table: `Method,C,M,EC,NS[,PT]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttrRow {
    pub method: String,
    pub complexity: usize,
    pub monotonicity: f64,
    pub effective_complexity: usize,
    pub non_sensitivity: usize,
    pub perturbation: Option<f64>,
}

/// One row of the example-based table: `Method,NR,D`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExampleRow {
    pub method: String,
    pub non_representativeness: f64,
    pub diversity: f64,
}

/// One point of the metrics-versus-n curve: `Method,n,NR,D`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub method: String,
    pub n: usize,
    pub non_representativeness: f64,
    pub diversity: f64,
}

/// One row of the mutual-information table: `Extractor,MI(X, Z),MI(Z, Y)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MiRow {
    pub extractor: String,
    pub mi_xz: f64,
    pub mi_zy: f64,
}

fn write_rows(header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    let bytes = w.into_inner().map_err(|e| config_err(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| config_err(e.to_string()))
}

fn read_rows(text: &str, expected: &[&str]) -> CliResult<(Vec<String>, Vec<csv::StringRecord>)> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header.len() < expected.len() || header.iter().zip(expected).any(|(a, b)| a != b) {
        return Err(config_err(format!("unexpected CSV header {header:?}")));
    }
    let rows = r.records().collect::<Result<Vec<_>, _>>()?;
    Ok((header, rows))
}

fn num<T: std::str::FromStr>(field: &str) -> CliResult<T> {
    field
        .parse()
        .map_err(|_| config_err(format!("`{field}` is not a number")))
}

const ATTR_HEADER: [&str; 5] = ["Method", "C", "M", "EC", "NS"];

pub fn attr_csv(rows: &[AttrRow]) -> CliResult<String> {
    let with_pt = rows.iter().any(|r| r.perturbation.is_some());
    let mut header = ATTR_HEADER.to_vec();
    if with_pt {
        header.push("PT");
    }
    write_rows(
        &header,
        rows.iter().map(|r| {
            let mut v = vec![
                r.method.clone(),
                r.complexity.to_string(),
                r.monotonicity.to_string(),
                r.effective_complexity.to_string(),
                r.non_sensitivity.to_string(),
            ];
            if with_pt {
                v.push(r.perturbation.map(|p| p.to_string()).unwrap_or_default());
            }
            v
        }),
    )
}

pub fn parse_attr_csv(text: &str) -> CliResult<Vec<AttrRow>> {
    let (header, rows) = read_rows(text, &ATTR_HEADER)?;
    let with_pt = header.get(5).is_some_and(|h| h == "PT");
    rows.iter()
        .map(|r| {
            Ok(AttrRow {
                method: r[0].to_string(),
                complexity: num(&r[1])?,
                monotonicity: num(&r[2])?,
                effective_complexity: num(&r[3])?,
                non_sensitivity: num(&r[4])?,
                perturbation: match (with_pt, r.get(5)) {
                    (true, Some(f)) if !f.is_empty() => Some(num(f)?),
                    _ => None,
                },
            })
        })
        .collect()
}

const EXAMPLE_HEADER: [&str; 3] = ["Method", "NR", "D"];

pub fn example_csv(rows: &[ExampleRow]) -> CliResult<String> {
    write_rows(
        &EXAMPLE_HEADER,
        rows.iter().map(|r| {
            vec![
                r.method.clone(),
                r.non_representativeness.to_string(),
                r.diversity.to_string(),
            ]
        }),
    )
}

pub fn parse_example_csv(text: &str) -> CliResult<Vec<ExampleRow>> {
    let (_, rows) = read_rows(text, &EXAMPLE_HEADER)?;
    rows.iter()
        .map(|r| {
            Ok(ExampleRow {
                method: r[0].to_string(),
                non_representativeness: num(&r[1])?,
                diversity: num(&r[2])?,
            })
        })
        .collect()
}

const CURVE_HEADER: [&str; 4] = ["Method", "n", "NR", "D"];

pub fn curve_csv(rows: &[CurveRow]) -> CliResult<String> {
    write_rows(
        &CURVE_HEADER,
        rows.iter().map(|r| {
            vec![
                r.method.clone(),
                r.n.to_string(),
                r.non_representativeness.to_string(),
                r.diversity.to_string(),
            ]
        }),
    )
}

pub fn parse_curve_csv(text: &str) -> CliResult<Vec<CurveRow>> {
    let (_, rows) = read_rows(text, &CURVE_HEADER)?;
    rows.iter()
        .map(|r| {
            Ok(CurveRow {
                method: r[0].to_string(),
                n: num(&r[1])?,
                non_representativeness: num(&r[2])?,
                diversity: num(&r[3])?,
            })
        })
        .collect()
}

const MI_HEADER: [&str; 3] = ["Extractor", "MI(X, Z)", "MI(Z, Y)"];

pub fn mi_csv(rows: &[MiRow]) -> CliResult<String> {
    write_rows(
        &MI_HEADER,
        rows.iter().map(|r| {
            vec![
                r.extractor.clone(),
                r.mi_xz.to_string(),
                r.mi_zy.to_string(),
            ]
        }),
    )
}

pub fn parse_mi_csv(text: &str) -> CliResult<Vec<MiRow>> {
    let (_, rows) = read_rows(text, &MI_HEADER)?;
    rows.iter()
        .map(|r| {
            Ok(MiRow {
                extractor: r[0].to_string(),
                mi_xz: num(&r[1])?,
                mi_zy: num(&r[2])?,
            })
        })
        .collect()
}

/// Writes `<stem>.json` and/or the given CSV tables into `dir`; returns the
/// written paths.
pub fn write_outputs(
    dir: &Path,
    stem: &str,
    report: &MetricReport,
    tables: &[(&str, String)],
    format: Format,
) -> CliResult<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    if format != Format::Csv {
        let p = dir.join(format!("{stem}.json"));
        std::fs::write(&p, report.to_json()?)?;
        written.push(p);
    }
    if format != Format::Json {
        for (name, text) in tables {
            let p = dir.join(format!("{name}.csv"));
            std::fs::write(&p, text)?;
            written.push(p);
        }
    }
    Ok(written)
}

/// Plain-text rendering of a CSV table for the terminal.
pub fn render(csv_text: &str) -> String {
    let rows: Vec<Vec<String>> = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_reader(csv_text.as_bytes())
        .records()
        .filter_map(Result::ok)
        .map(|r| {
            r.iter()
                .map(|f| match f.parse::<f64>() {
                    Ok(v) if f.contains('.') || f.contains('e') => format!("{v:.4}"),
                    _ => f.to_string(),
                })
                .collect()
        })
        .collect();
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols)
        .map(|c| {
            rows.iter()
                .filter_map(|r| r.get(c))
                .map(String::len)
                .max()
                .unwrap_or(0)
        })
        .collect();
    let mut out = String::new();
    for r in &rows {
        for (c, f) in r.iter().enumerate() {
            let _ = write!(out, "{f:>w$}  ", w = widths[c]);
        }
        out.truncate(out.trim_end().len());
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn attr_table_round_trips() {
        let rows = vec![
            AttrRow {
                method: "Saliency".into(),
                complexity: 4,
                monotonicity: 0.9852117,
                effective_complexity: 3,
                non_sensitivity: 0,
                perturbation: Some(0.1 + 0.2),
            },
            AttrRow {
                method: "Random".into(),
                complexity: 6,
                monotonicity: -1.0 / 3.0,
                effective_complexity: 6,
                non_sensitivity: 2,
                perturbation: None,
            },
        ];
        let text = attr_csv(&rows).unwrap();
        assert!(text.starts_with("Method,C,M,EC,NS,PT\n"));
        assert_eq!(parse_attr_csv(&text).unwrap(), rows);
        let no_pt: Vec<AttrRow> = rows
            .iter()
            .cloned()
            .map(|r| AttrRow {
                perturbation: None,
                ..r
            })
            .collect();
        let text = attr_csv(&no_pt).unwrap();
        assert!(text.starts_with("Method,C,M,EC,NS\n"));
        assert_eq!(parse_attr_csv(&text).unwrap(), no_pt);
    }

    #[test]
    fn other_tables_round_trip() {
        let ex = vec![ExampleRow {
            method: "K-medoids".into(),
            non_representativeness: 1.0 / 7.0,
            diversity: 8.81,
        }];
        assert_eq!(parse_example_csv(&example_csv(&ex).unwrap()).unwrap(), ex);
        let curve = vec![CurveRow {
            method: "MMD".into(),
            n: 3,
            non_representativeness: 0.3,
            diversity: 2.0_f64.sqrt(),
        }];
        assert_eq!(parse_curve_csv(&curve_csv(&curve).unwrap()).unwrap(), curve);
        let mi = vec![MiRow {
            extractor: "Identity".into(),
            mi_xz: 8.8,
            mi_zy: std::f64::consts::LN_2,
        }];
        let text = mi_csv(&mi).unwrap();
        assert!(text.starts_with("Extractor,\"MI(X, Z)\",\"MI(Z, Y)\"\n"));
        assert_eq!(parse_mi_csv(&text).unwrap(), mi);
        assert!(parse_mi_csv("a,b\n").is_err());
    }

    #[test]
    fn render_aligns_columns() {
        let out = render("Method,C\nSaliency,4\nRandom,6\n");
        assert_eq!(out, "  Method  C\nSaliency  4\n  Random  6\n");
    }
}

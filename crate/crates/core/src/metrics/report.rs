//! Report files: aggregate CSV and text tables, per-episode rows and the
//! cross-evaluation matrices.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::logger::{AggregateReport, EpisodeMetrics, Indicators};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Csv,
    Table,
}

const TABLE_HEADERS: [&str; 8] = [
    "speed",
    "pk. jerk",
    "tot. jerk",
    "tot. distance",
    "tot. steering",
    "runtime",
    "onlane rate",
    "col. rate",
];

/// Fixed-notation rendering (never exponent form), shortest round-trip digits.
pub fn fmt_value(v: f64) -> String {
    format!("{v}")
}

pub fn render_report(report: &AggregateReport, format: ReportFormat) -> Result<String> {
    if report.runs == 0 {
        return Err(Error::InvalidArgument("report has no runs".into()));
    }
    let values = report.means.values().map(fmt_value);
    Ok(match format {
        ReportFormat::Csv => format!("{}\n{}\n", Indicators::NAMES.join(","), values.join(",")),
        ReportFormat::Table => {
            let widths: Vec<usize> = TABLE_HEADERS
                .iter()
                .zip(&values)
                .map(|(h, v)| h.len().max(v.len()))
                .collect();
            let row = |cells: &[String]| {
                let mut line = String::from("|");
                for (c, w) in cells.iter().zip(&widths) {
                    let _ = write!(line, " {c:>w$} |");
                }
                line + "\n"
            };
            let headers: Vec<String> = TABLE_HEADERS.iter().map(|h| h.to_string()).collect();
            let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
            let mut out = row(&headers);
            out += &row(&rule);
            out += &row(&values);
            let _ = writeln!(out, "runs: {}", report.runs);
            out
        }
    })
}

pub fn export_report(report: &AggregateReport, path: &Path, format: ReportFormat) -> Result<()> {
    let text = render_report(report, format)?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Parses the indicator row of an aggregate CSV report.
pub fn parse_report_csv(text: &str) -> Result<Indicators> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let headers = rdr.headers()?.clone();
    if headers.iter().ne(Indicators::NAMES) {
        return Err(Error::InvalidArgument(format!("unexpected report header {headers:?}")));
    }
    let record = rdr
        .records()
        .next()
        .ok_or_else(|| Error::InvalidArgument("report has no data row".into()))??;
    let mut values = [0.0; 8];
    for (slot, cell) in values.iter_mut().zip(record.iter()) {
        *slot = cell
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("bad report cell {cell:?}")))?;
    }
    Ok(Indicators::from_values(values))
}

/// One CSV row per evaluation episode.
pub fn write_episodes_csv(path: &Path, episodes: &[EpisodeMetrics]) -> Result<()> {
    let mut out = String::from(
        "run,speed,pk_jerk,tot_jerk,tot_distance,tot_steering,runtime,onlane_rate,collided\n",
    );
    for (i, e) in episodes.iter().enumerate() {
        let _ = writeln!(
            out,
            "{i},{},{},{},{},{},{},{},{}",
            fmt_value(e.avg_speed),
            fmt_value(e.peak_jerk),
            fmt_value(e.total_jerk),
            fmt_value(e.total_distance),
            fmt_value(e.total_steering),
            e.runtime,
            fmt_value(e.onlane_rate),
            e.collided
        );
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// One aggregate report for a (model, evaluation scenario) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossEvalCell {
    /// Row label, unique per model.
    pub model: String,
    pub algo: String,
    pub trained_on: String,
    pub scenario: String,
    pub report: AggregateReport,
}

/// Writes `<dir>/<indicator>.csv` for every indicator: one row per model,
/// one column per evaluation scenario in first-seen order. Returns the paths.
pub fn write_cross_eval(dir: &Path, cells: &[CrossEvalCell]) -> Result<Vec<PathBuf>> {
    if cells.is_empty() {
        return Err(Error::InvalidArgument("no cross-evaluation cells".into()));
    }
    let mut models: Vec<&CrossEvalCell> = Vec::new();
    let mut scenarios: Vec<&str> = Vec::new();
    for c in cells {
        if !models.iter().any(|m| m.model == c.model) {
            models.push(c);
        }
        if !scenarios.contains(&c.scenario.as_str()) {
            scenarios.push(&c.scenario);
        }
    }
    let mut paths = Vec::new();
    for (k, name) in Indicators::NAMES.iter().enumerate() {
        let mut out = format!("model,algo,trained_on,{}\n", scenarios.join(","));
        for row in &models {
            let _ = write!(out, "{},{},{}", row.model, row.algo, row.trained_on);
            for sc in &scenarios {
                let cell = cells.iter().find(|c| c.model == row.model && c.scenario == *sc);
                let v = cell.map(|c| fmt_value(c.report.means.values()[k]));
                let _ = write!(out, ",{}", v.unwrap_or_default());
            }
            out.push('\n');
        }
        let path = dir.join(format!("{name}.csv"));
        std::fs::write(&path, out).map_err(|e| Error::io(&path, e))?;
        paths.push(path);
    }
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report(col_rate: f64, runs: usize) -> AggregateReport {
        AggregateReport {
            means: Indicators::from_values([
                21.25, 0.5, 12.0, 300.125, 4.0, 200.0, 0.975, col_rate,
            ]),
            runs,
        }
    }

    #[test]
    fn csv_header_and_fixed_notation() {
        let text = render_report(&report(0.07, 10), ReportFormat::Csv).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "speed,pk_jerk,tot_jerk,tot_distance,tot_steering,runtime,onlane_rate,col_rate"
        );
        assert!(lines.next().unwrap().ends_with(",0.07"));
        assert_eq!(fmt_value(1e-7), "0.0000001");
    }

    #[test]
    fn csv_round_trip() {
        let r = report(0.3, 10);
        let back = parse_report_csv(&render_report(&r, ReportFormat::Csv).unwrap()).unwrap();
        for (a, b) in back.values().iter().zip(r.means.values()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn empty_report_writes_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        assert!(matches!(
            export_report(&report(0.0, 0), &path, ReportFormat::Csv),
            Err(Error::InvalidArgument(_))
        ));
        assert!(!path.exists());
    }

    #[test]
    fn table_keeps_column_order() {
        let text = render_report(&report(0.1, 3), ReportFormat::Table).unwrap();
        let header = text.lines().next().unwrap();
        let mut last = 0;
        for h in TABLE_HEADERS {
            let at = header.find(h).unwrap();
            assert!(at >= last);
            last = at;
        }
        assert!(text.contains("runs: 3"));
    }

    #[test]
    fn cross_eval_matrix_layout() {
        let dir = tempfile::tempdir().unwrap();
        let cell = |model: &str, algo: &str, sc: &str, onlane: f64| CrossEvalCell {
            model: model.into(),
            algo: algo.into(),
            trained_on: model.split('/').next().unwrap().into(),
            scenario: sc.into(),
            report: AggregateReport {
                means: Indicators::from_values([0.0, 0.0, 0.0, 0.0, 0.0, 0.0, onlane, 0.0]),
                runs: 10,
            },
        };
        let cells = [
            cell("complexroads/model_0", "trpo", "racetrack", 1.0),
            cell("complexroads/model_0", "trpo", "intersection", 0.5),
            cell("merge/model_0", "dqn", "racetrack", 0.25),
        ];
        let paths = write_cross_eval(dir.path(), &cells).unwrap();
        assert_eq!(paths.len(), 8);
        let text = std::fs::read_to_string(dir.path().join("onlane_rate.csv")).unwrap();
        assert_eq!(
            text,
            "model,algo,trained_on,racetrack,intersection\n\
             complexroads/model_0,trpo,complexroads,1,0.5\n\
             merge/model_0,dqn,merge,0.25,\n"
        );
    }
}

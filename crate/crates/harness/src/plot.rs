//! Plot-ready CSV extracted from reports.

use std::path::Path;

use serde_json::Value;

use crate::report::{write_atomic, Report};
use crate::HarnessError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum PlotKind {
    Tail,
    Speed,
    Growth,
    Scaling,
}

impl PlotKind {
    pub fn name(self) -> &'static str {
        match self {
            PlotKind::Tail => "tail",
            PlotKind::Speed => "speed",
            PlotKind::Growth => "growth",
            PlotKind::Scaling => "scaling",
        }
    }

    pub fn header(self) -> &'static [&'static str] {
        match self {
            PlotKind::Tail => &["t", "survival"],
            PlotKind::Speed => &["trial", "speed"],
            PlotKind::Growth => &["n", "M_n"],
            PlotKind::Scaling => &["word_length", "nonsolution_length", "attempts"],
        }
    }
}

fn field<'a>(v: &'a Value, key: &str) -> Result<&'a Value, HarnessError> {
    v.get(key)
        .ok_or_else(|| HarnessError::Domain(format!("report result has no {key:?} field")))
}

fn array<'a>(v: &'a Value, key: &str) -> Result<&'a Vec<Value>, HarnessError> {
    field(v, key)?
        .as_array()
        .ok_or_else(|| HarnessError::Domain(format!("{key:?} is not an array")))
}

fn cell(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Rows of the CSV, in report order.
pub fn plot_rows(report: &Report, kind: PlotKind) -> Result<Vec<Vec<String>>, HarnessError> {
    if report.kind != kind.name() {
        return Err(HarnessError::KindMismatch {
            expected: kind.name().into(),
            found: report.kind.clone(),
        });
    }
    let r = &report.result;
    let rows = match kind {
        PlotKind::Tail => array(r, "survival")?
            .iter()
            .map(|p| vec![cell(&p[0]), cell(&p[1])])
            .collect(),
        PlotKind::Speed => array(field(r, "speed")?, "speeds")?
            .iter()
            .enumerate()
            .map(|(i, s)| vec![i.to_string(), cell(s)])
            .collect(),
        PlotKind::Growth => array(r, "records")?
            .iter()
            .map(|g| Ok(vec![cell(field(g, "n")?), cell(field(g, "value")?)]))
            .collect::<Result<_, HarnessError>>()?,
        PlotKind::Scaling => array(r, "searches")?
            .iter()
            .map(|s| {
                Ok(vec![
                    cell(field(s, "word_length")?),
                    cell(field(s, "nonsolution_length")?),
                    cell(field(s, "attempts")?),
                ])
            })
            .collect::<Result<_, HarnessError>>()?,
    };
    Ok(rows)
}

/// Writes the CSV for `kind` and returns the number of data rows.
pub fn emit_plot_data(report: &Report, kind: PlotKind, path: &Path) -> Result<usize, HarnessError> {
    let rows = plot_rows(report, kind)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(kind.header())?;
    for row in &rows {
        w.write_record(row)?;
    }
    let bytes = w.into_inner().map_err(|e| HarnessError::Io(e.into_error()))?;
    write_atomic(path, &bytes)?;
    Ok(rows.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ConfigOverrides;

    fn report(kind: &str, result: Value) -> Report {
        let cfg = ConfigOverrides::default().resolve().unwrap();
        Report::new("test", vec![], kind, &cfg, &result, None).unwrap()
    }

    #[test]
    fn tail_and_growth_columns() {
        let dir = tempfile::tempdir().unwrap();
        let tail = report(
            "tail",
            serde_json::json!({ "survival": [[0, 1.0], [1, 0.25], [2, 0.0]] }),
        );
        let path = dir.path().join("tail.csv");
        assert_eq!(emit_plot_data(&tail, PlotKind::Tail, &path).unwrap(), 3);
        assert_eq!(
            std::fs::read_to_string(&path).unwrap(),
            "t,survival\n0,1.0\n1,0.25\n2,0.0\n"
        );

        let growth = report(
            "growth",
            serde_json::json!({ "records": [{ "n": 1, "value": 1 }, { "n": 2, "value": 2 }] }),
        );
        let path = dir.path().join("growth.csv");
        emit_plot_data(&growth, PlotKind::Growth, &path).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "n,M_n\n1,1\n2,2\n");
    }

    #[test]
    fn scaling_columns() {
        let r = report(
            "scaling",
            serde_json::json!({ "searches": [{ "word_length": 34, "nonsolution_length": 40, "attempts": 1, "extra": 0 }] }),
        );
        assert_eq!(plot_rows(&r, PlotKind::Scaling).unwrap(), vec![vec!["34", "40", "1"]]);
    }

    #[test]
    fn mismatched_kind_is_refused() {
        let r = report("growth", serde_json::json!({ "records": [] }));
        let err = plot_rows(&r, PlotKind::Tail).unwrap_err();
        assert!(matches!(err, HarnessError::KindMismatch { .. }), "{err}");
    }
}

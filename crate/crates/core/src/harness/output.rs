use std::fs;
use std::path::{Path, PathBuf};

use serde_json::json;

use crate::error::Result;
use crate::io::fmt_f64;

use super::{Cell, ExperimentResult, Series};

fn cell_text(c: &Cell) -> String {
    match c {
        Cell::Int(i) => i.to_string(),
        Cell::Float(x) => fmt_f64(*x),
        Cell::Text(s) => s.clone(),
        Cell::Missing => String::new(),
    }
}

fn series_file(result: &ExperimentResult, s: &Series) -> String {
    format!("{}_{}.csv", result.id, s.name)
}

/// Writes `<id>_<series>.csv` for every series, `<id>_schema.json` describing
/// their columns and `<id>_summary.json` with verdicts and provenance.
/// Returns the paths written. Output contains no timestamps, so reruns are
/// byte-identical.
pub fn write_result(result: &ExperimentResult, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for s in &result.series {
        let path = dir.join(series_file(result, s));
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(s.columns.iter().map(|(c, _)| c.as_str()))?;
        for row in &s.rows {
            w.write_record(row.iter().map(cell_text))?;
        }
        w.flush()?;
        written.push(path);
    }

    let schema = json!({
        "experiment": result.id,
        "series": result.series.iter().map(|s| json!({
            "name": s.name,
            "file": series_file(result, s),
            "columns": s.columns.iter().map(|(c, d)| json!({"name": c, "description": d})).collect::<Vec<_>>(),
        })).collect::<Vec<_>>(),
    });
    let path = dir.join(format!("{}_schema.json", result.id));
    fs::write(&path, serde_json::to_string_pretty(&schema)? + "\n")?;
    written.push(path);

    let summary = json!({
        "experiment": result.id,
        "bound_violations": result.bound_violations,
        "passed": result.passed(),
        "verdicts": result.verdicts,
        "provenance": result.provenance,
    });
    let path = dir.join(format!("{}_summary.json", result.id));
    fs::write(&path, serde_json::to_string_pretty(&summary)? + "\n")?;
    written.push(path);
    Ok(written)
}

//! Markdown tables over saved run reports.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use log::warn;

use super::ModelKind;
use crate::error::{Error, Result};
use crate::metrics::EvalReport;

#[derive(Debug)]
pub struct ReportTable {
    pub markdown: String,
    pub warnings: Vec<String>,
    /// Files that could not be read or parsed; the rest are still rendered.
    pub failures: Vec<(PathBuf, Error)>,
}

type RowKey = (String, usize, usize, usize);
type ColKey = (u8, String, String);

fn column_key(r: &EvalReport) -> ColKey {
    let order = match r.info.model.parse::<ModelKind>() {
        Ok(ModelKind::Nn) => 0,
        Ok(ModelKind::Wnn) => 1,
        Ok(ModelKind::Dnn) => 2,
        Ok(ModelKind::Knn) => 3,
        Err(_) => 4,
    };
    (order, r.info.model.clone(), r.info.variant.clone())
}

fn column_label((_, model, variant): &ColKey) -> String {
    match model.as_str() {
        "knn" => format!("K-NN ({variant})"),
        m => format!("{}-{variant}", m.to_uppercase()),
    }
}

/// Rows are `(field, n, m, samples)`, columns `(model, variant)`; the best
/// cell of each row is bold. A later file for the same cell replaces an
/// earlier one with a warning.
pub fn render_report(paths: &[PathBuf]) -> Result<ReportTable> {
    if paths.is_empty() {
        return Err(Error::Usage("report needs at least one report file".into()));
    }
    let mut warnings = Vec::new();
    let mut failures = Vec::new();
    let mut cells: BTreeMap<RowKey, BTreeMap<ColKey, (f64, PathBuf)>> = BTreeMap::new();

    for path in paths {
        let parsed = fs::read_to_string(path)
            .map_err(|e| Error::io(path, e))
            .and_then(|text| EvalReport::parse(&text));
        let report = match parsed {
            Ok(r) => r,
            Err(e) => {
                warn!("skipping {}: {e}", path.display());
                failures.push((path.clone(), e));
                continue;
            }
        };
        let row = (
            report.info.field.to_string(),
            report.info.n,
            report.info.m,
            report.info.samples,
        );
        let col = column_key(&report);
        let label = column_label(&col);
        if let Some((_, earlier)) = cells
            .entry(row.clone())
            .or_default()
            .insert(col, (report.mean_error, path.clone()))
        {
            let msg = format!(
                "{} replaces {} for {label} at field={} n={} samples={}",
                path.display(),
                earlier.display(),
                row.0,
                row.1,
                row.3
            );
            warn!("{msg}");
            warnings.push(msg);
        }
    }

    let columns: Vec<ColKey> = {
        let mut set: Vec<ColKey> = cells.values().flat_map(|r| r.keys().cloned()).collect();
        set.sort();
        set.dedup();
        set
    };
    let mut md = String::from("| field | n | m | samples |");
    for c in &columns {
        let _ = write!(md, " {} |", column_label(c));
    }
    md.push_str("\n|---|---|---|---|");
    md.push_str(&"---|".repeat(columns.len()));
    md.push('\n');
    for ((field, n, m, samples), row) in &cells {
        let best = row.values().map(|(e, _)| *e).fold(f64::INFINITY, f64::min);
        let _ = write!(md, "| {field} | {n} | {m} | {samples} |");
        for c in &columns {
            match row.get(c) {
                Some((e, _)) if *e == best => {
                    let _ = write!(md, " **{e:.4}** |");
                }
                Some((e, _)) => {
                    let _ = write!(md, " {e:.4} |");
                }
                None => md.push_str(" - |"),
            }
        }
        md.push('\n');
    }
    Ok(ReportTable {
        markdown: md,
        warnings,
        failures,
    })
}

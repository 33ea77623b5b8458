use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::{Format, RecoveryKind};
use super::run::{FileEntry, RunOutput};
use super::svg::{Chart, Series};
use crate::error::{Error, Result};
use crate::inequalities::{fmt_f64, write_reports, CSV_HEADER};
use crate::recovery::{RecoveryEstimate, ScanRow, SCAN_CSV_HEADER};

/// Recovery results of a run: one row per `(point, direction)` cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecoveryOutput {
    pub kind: RecoveryKind,
    /// `[(inf, se), (sup, se)]` for a scan.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bracket: Option<[(f64, f64); 2]>,
    pub rows: Vec<ScanRow>,
}

pub const QUOTIENT_CSV_HEADER: [&str; 6] = ["point", "direction", "method", "t", "quotient", "se"];

fn io(e: impl std::fmt::Display) -> Error {
    Error::Io(e.to_string())
}

fn write_csv<const N: usize>(path: &Path, header: [&str; N], rows: impl Iterator<Item = [String; N]>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.write_record(&r).map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, v: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(v).map_err(io)?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

/// File-name friendly form of a family label: `poincare'(1.5)` becomes
/// `poincare_prime_1.5`.
pub fn slug(label: &str) -> String {
    let s = label.replace('\'', "_prime").replace('(', "_").replace(')', "");
    s.chars().map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '_' { c } else { '-' }).collect()
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| fmt_f64(*x)).collect::<Vec<_>>().join(";")
}

/// One row per `(point, direction, method, t)`.
fn quotient_rows(rows: &[ScanRow]) -> impl Iterator<Item = [String; 6]> + '_ {
    rows.iter().flat_map(|r| {
        let e = &r.estimate;
        (0..e.t_grid.len()).map(move |k| {
            [
                join(&r.point),
                join(&r.direction),
                e.method.clone(),
                fmt_f64(e.t_grid[k]),
                fmt_f64(e.quotients[k]),
                fmt_f64(e.quotient_se[k]),
            ]
        })
    })
}

/// LHS and RHS with `±z·SE` bands against `t`, one chart per family.
fn family_charts(out: &RunOutput, z: f64) -> BTreeMap<String, Chart> {
    let mut groups: BTreeMap<String, Vec<&crate::inequalities::InequalityReport>> = BTreeMap::new();
    for r in &out.reports {
        groups.entry(format!("{}_{}", r.theorem, r.family)).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|(key, mut reps)| {
            reps.sort_by(|a, b| a.diagnostics.t.total_cmp(&b.diagnostics.t));
            let t: Vec<f64> = reps.iter().map(|r| r.diagnostics.t).collect();
            let side = |label: &str, colour, v: &dyn Fn(&&crate::inequalities::InequalityReport) -> (f64, f64)| {
                let (y, se): (Vec<f64>, Vec<f64>) = reps.iter().map(v).unzip();
                Series {
                    label: format!("{label} ± {z} SE"),
                    colour,
                    x: t.clone(),
                    band: Some((
                        y.iter().zip(&se).map(|(y, s)| y - z * s).collect(),
                        y.iter().zip(&se).map(|(y, s)| y + z * s).collect(),
                    )),
                    y,
                    points_only: false,
                }
            };
            let chart = Chart {
                title: format!("{} {}", reps[0].theorem, reps[0].family),
                x_label: "t".into(),
                y_label: "value".into(),
                series: vec![
                    side("LHS", "#1f77b4", &|r| (r.lhs, r.se_lhs)),
                    side("RHS", "#d62728", &|r| (r.rhs, r.se_rhs)),
                ],
            };
            (slug(&key), chart)
        })
        .collect()
}

/// Grid quotients with error bars, the intercept and a line through it
/// (slope by least squares with the intercept held fixed).
fn fit_chart(title: String, e: &RecoveryEstimate, z: f64) -> Chart {
    let x: Vec<f64> = e.t_grid.iter().map(|t| if e.sqrt_fit { t.sqrt() } else { *t }).collect();
    let (num, den) = x.iter().zip(&e.quotients).fold((0.0, 0.0), |(n, d), (x, q)| (n + x * (q - e.value), d + x * x));
    let slope = if den > 0.0 { num / den } else { 0.0 };
    let x_max = x.iter().copied().fold(0.0, f64::max);
    let band = |v: &[f64], s: &[f64]| -> (Vec<f64>, Vec<f64>) {
        (v.iter().zip(s).map(|(v, s)| v - z * s).collect(), v.iter().zip(s).map(|(v, s)| v + z * s).collect())
    };
    Chart {
        title,
        x_label: if e.sqrt_fit { "sqrt(t)".into() } else { "t".into() },
        y_label: "quotient".into(),
        series: vec![
            Series {
                label: "quotients".into(),
                colour: "#1f77b4",
                band: Some(band(&e.quotients, &e.quotient_se)),
                x,
                y: e.quotients.clone(),
                points_only: true,
            },
            Series {
                label: format!("intercept {:.4}", e.value),
                colour: "#d62728",
                band: Some(band(&[e.value], &[e.se])),
                x: vec![0.0],
                y: vec![e.value],
                points_only: true,
            },
            Series {
                label: "fit".into(),
                colour: "#7f7f7f",
                x: vec![0.0, x_max],
                y: vec![e.value, e.value + slope * x_max],
                band: None,
                points_only: false,
            },
        ],
    }
}

/// Writes the selected formats into `dir` and returns the file index.
/// File names and contents depend only on the results, so identical
/// runs give identical files.
pub fn emit_report(out: &RunOutput, dir: &Path, formats: &[Format], z: f64) -> Result<Vec<FileEntry>> {
    let mut files = Vec::new();
    let mut add = |path: String, kind: &str| files.push(FileEntry { path, kind: kind.into() });
    let has = |f: Format| formats.contains(&f);
    let with_reports = !out.reports.is_empty();
    if has(Format::Json) {
        if with_reports {
            std::fs::write(dir.join("reports.json"), write_reports(&out.reports))?;
            add("reports.json".into(), "reports_json");
        }
        if let Some(rec) = &out.recovery {
            write_json(&dir.join("recovery.json"), rec)?;
            add("recovery.json".into(), "recovery_json");
        }
    }
    if has(Format::Csv) {
        if with_reports {
            write_csv(&dir.join("reports.csv"), CSV_HEADER, out.reports.iter().map(|r| r.csv_record()))?;
            add("reports.csv".into(), "reports_csv");
        }
        if let Some(rec) = &out.recovery {
            write_csv(&dir.join("recovery.csv"), SCAN_CSV_HEADER, rec.rows.iter().map(|r| r.csv_record()))?;
            add("recovery.csv".into(), "recovery_csv");
            write_csv(&dir.join("recovery_quotients.csv"), QUOTIENT_CSV_HEADER, quotient_rows(&rec.rows))?;
            add("recovery_quotients.csv".into(), "recovery_csv");
        }
    }
    if has(Format::Svg) {
        for (name, chart) in family_charts(out, z) {
            let path = format!("ineq_{name}.svg");
            std::fs::write(dir.join(&path), chart.render())?;
            add(path, "svg");
        }
        if let Some(rec) = &out.recovery {
            for (i, r) in rec.rows.iter().enumerate() {
                let title = format!("{} at ({}) along ({})", r.estimate.method, join(&r.point), join(&r.direction));
                let path = format!("recovery_fit_{i:03}.svg");
                std::fs::write(dir.join(&path), fit_chart(title, &r.estimate, z).render())?;
                add(path, "svg");
            }
        }
    }
    Ok(files)
}

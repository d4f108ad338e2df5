//! Comma-separated tables and SVG figures.
//!
//! Floats are written in Rust's shortest round-trip form and undefined
//! values as empty cells, so reading a table back recovers the aggregates
//! exactly.

use std::fs::File;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::noise::NoiseReport;
use super::scaling::ScalingReport;
use super::svg::{LineChart, Series};
use super::sweep::{DeltaN, SweepPoint, SweepResult};
use super::{HarnessError, Result};
use crate::estimators::EstimatorKind;

pub const ACCURACY_HEADER: [&str; 5] = ["estimator", "n", "replicates", "mean", "se"];
pub const N_STAR_HEADER: [&str; 4] = ["source", "estimator", "tau", "n_star"];
pub const DELTA_N_HEADER: [&str; 5] = ["estimator", "tau", "n_cot", "n_direct", "delta_n"];
pub const NOISE_HEADER: [&str; 8] = ["p", "delta_p", "delta_q", "ratio", "tau", "n_direct", "n_cot", "delta_n"];
pub const SCALING_HEADER: [&str; 3] = ["estimator", "T", "n_star"];
pub const FIT_HEADER: [&str; 7] = ["estimator", "slope", "intercept", "defined_points", "band_lo", "band_hi", "verdict"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExportFormat {
    Table,
    Figure,
}

/// One row of the threshold table. `source` is `empirical` for grid-resolved
/// `n*(tau)` and `theory` for a rate bound evaluated at `delta = 1 - tau`.
#[derive(Debug, Clone, PartialEq)]
pub struct NStarRow {
    pub source: String,
    pub estimator: EstimatorKind,
    pub tau: f64,
    pub n_star: Option<f64>,
}

fn sanitize(part: &str) -> String {
    part.chars().map(|c| if c.is_ascii_alphanumeric() || "-.".contains(c) { c } else { '_' }).collect()
}

fn stem(experiment: &str, condition: &str, metric: &str) -> String {
    format!("{}_{}_{}", sanitize(experiment), sanitize(condition), sanitize(metric))
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))
}

fn write_table(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<PathBuf> {
    let file = File::create(path).map_err(|e| HarnessError::io(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    let csv_err = |e: csv::Error| HarnessError::Table(format!("{}: {e}", path.display()));
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))?;
    Ok(path.to_path_buf())
}

fn write_text(path: &Path, text: &str) -> Result<PathBuf> {
    std::fs::write(path, text).map_err(|e| HarnessError::io(path, e))?;
    Ok(path.to_path_buf())
}

fn read_table(path: &Path, header: &[&str]) -> Result<Vec<csv::StringRecord>> {
    let file = File::open(path).map_err(|e| HarnessError::io(path, e))?;
    let mut r = csv::Reader::from_reader(file);
    let bad = |msg: String| HarnessError::Table(format!("{}: {msg}", path.display()));
    let found = r.headers().map_err(|e| bad(e.to_string()))?.clone();
    if found.iter().ne(header.iter().copied()) {
        return Err(bad(format!("expected header {header:?}, found {found:?}")));
    }
    r.records().map(|rec| rec.map_err(|e| bad(e.to_string()))).collect()
}

fn cell<T: FromStr>(rec: &csv::StringRecord, i: usize) -> Result<T> {
    let raw = rec.get(i).unwrap_or_default();
    raw.parse().map_err(|_| HarnessError::Table(format!("cannot parse {raw:?} in column {i}")))
}

fn opt_cell<T: FromStr>(rec: &csv::StringRecord, i: usize) -> Result<Option<T>> {
    if rec.get(i).unwrap_or_default().is_empty() {
        Ok(None)
    } else {
        cell(rec, i).map(Some)
    }
}

fn estimator_cell(rec: &csv::StringRecord, i: usize) -> Result<EstimatorKind> {
    let raw = rec.get(i).unwrap_or_default();
    EstimatorKind::parse(raw).ok_or_else(|| HarnessError::Table(format!("unknown estimator {raw:?}")))
}

fn sweep_stem(r: &SweepResult) -> String {
    stem(&r.experiment, &r.condition, r.metric.name())
}

/// Theory rows of the threshold table, one per `(bound, tau)`.
pub(crate) fn theory_rows(r: &SweepResult) -> Vec<NStarRow> {
    let cot = r.cot_estimator();
    r.bounds
        .iter()
        .flat_map(|b| {
            let tau = 1.0 - b.delta;
            let tau = r.thresholds.iter().copied().find(|t| (1.0 - t - b.delta).abs() < 1e-15).unwrap_or(tau);
            let mut rows = vec![(EstimatorKind::Direct, b.n_direct)];
            match cot {
                Some(EstimatorKind::CotHomogeneous) => rows.push((EstimatorKind::CotHomogeneous, b.n_homogeneous)),
                Some(EstimatorKind::CotHeterogeneous) => {
                    rows.push((EstimatorKind::CotHeterogeneous, b.n_heterogeneous))
                }
                _ => {}
            }
            rows.into_iter()
                .map(move |(estimator, n)| NStarRow { source: "theory".into(), estimator, tau, n_star: n })
        })
        .collect()
}

/// Writes the accuracy, threshold and `Delta_n` tables of a sweep.
pub fn write_sweep_tables(r: &SweepResult, dir: &Path) -> Result<Vec<PathBuf>> {
    create_dir(dir)?;
    let stem = sweep_stem(r);
    let accuracy: Vec<Vec<String>> = r
        .points
        .iter()
        .map(|p| vec![p.estimator.to_string(), p.n.to_string(), p.replicates.to_string(), p.mean.to_string(), p.se.to_string()])
        .collect();
    let mut n_star: Vec<Vec<String>> = r
        .n_star
        .iter()
        .map(|s| vec!["empirical".into(), s.estimator.to_string(), s.tau.to_string(), opt(s.n_star)])
        .collect();
    n_star.extend(
        theory_rows(r)
            .into_iter()
            .map(|t| vec![t.source, t.estimator.to_string(), t.tau.to_string(), opt(t.n_star)]),
    );
    let delta: Vec<Vec<String>> = r
        .delta_n
        .iter()
        .map(|d| vec![d.estimator.to_string(), d.tau.to_string(), opt(d.n_cot), opt(d.n_direct), opt(d.delta_n)])
        .collect();
    Ok(vec![
        write_table(&dir.join(format!("{stem}.csv")), &ACCURACY_HEADER, &accuracy)?,
        write_table(&dir.join(format!("{stem}_nstar.csv")), &N_STAR_HEADER, &n_star)?,
        write_table(&dir.join(format!("{stem}_deltan.csv")), &DELTA_N_HEADER, &delta)?,
    ])
}

pub fn read_accuracy_csv(path: &Path) -> Result<Vec<SweepPoint>> {
    read_table(path, &ACCURACY_HEADER)?
        .iter()
        .map(|rec| {
            Ok(SweepPoint {
                estimator: estimator_cell(rec, 0)?,
                n: cell(rec, 1)?,
                replicates: cell(rec, 2)?,
                mean: cell(rec, 3)?,
                se: cell(rec, 4)?,
            })
        })
        .collect()
}

pub fn read_n_star_csv(path: &Path) -> Result<Vec<NStarRow>> {
    read_table(path, &N_STAR_HEADER)?
        .iter()
        .map(|rec| {
            Ok(NStarRow {
                source: rec.get(0).unwrap_or_default().to_string(),
                estimator: estimator_cell(rec, 1)?,
                tau: cell(rec, 2)?,
                n_star: opt_cell(rec, 3)?,
            })
        })
        .collect()
}

pub fn read_delta_n_csv(path: &Path) -> Result<Vec<DeltaN>> {
    read_table(path, &DELTA_N_HEADER)?
        .iter()
        .map(|rec| {
            Ok(DeltaN {
                estimator: estimator_cell(rec, 0)?,
                tau: cell(rec, 1)?,
                n_cot: opt_cell(rec, 2)?,
                n_direct: opt_cell(rec, 3)?,
                delta_n: opt_cell(rec, 4)?,
            })
        })
        .collect()
}

/// Accuracy-vs-`n` with SE bands, `Delta_n` vs `tau`, and the overlay of
/// empirical `n*(tau)` against the rate bounds.
pub fn write_sweep_figures(r: &SweepResult, dir: &Path) -> Result<Vec<PathBuf>> {
    create_dir(dir)?;
    let stem = sweep_stem(r);
    let estimators = r.estimators();

    let accuracy = LineChart {
        title: format!("{} / {}", r.experiment, r.condition),
        x_label: "context samples n".into(),
        y_label: r.metric.name().into(),
        series: estimators
            .iter()
            .map(|&e| {
                let curve = r.curve(e);
                let mut s = Series::new(e.name(), curve.iter().map(|p| (p.n as f64, p.mean)).collect());
                s.band = Some(curve.iter().map(|p| (p.n as f64, p.mean - p.se, p.mean + p.se)).collect());
                s.markers = true;
                s
            })
            .collect(),
        annotations: vec![format!("{} replicates, band = 1 SE", r.replicates)],
        y_range: Some((0.0, 1.0)),
        ..LineChart::default()
    };

    let delta = LineChart {
        title: format!("{} / {}: CoT minus direct", r.experiment, r.condition),
        x_label: "target tau".into(),
        y_label: "delta n (grid-resolved)".into(),
        series: estimators
            .iter()
            .filter(|&&e| e != EstimatorKind::Direct)
            .map(|&e| {
                let pts = r
                    .delta_n
                    .iter()
                    .filter(|d| d.estimator == e)
                    .filter_map(|d| d.delta_n.map(|v| (d.tau, v as f64)))
                    .collect();
                Series { markers: true, ..Series::new(e.name(), pts) }
            })
            .collect(),
        ..LineChart::default()
    };

    let theory = theory_rows(r);
    let constant = r.bounds.first().map(|b| b.constant).unwrap_or(1.0);
    let mut overlay_series: Vec<Series> = estimators
        .iter()
        .map(|&e| {
            let pts = r
                .n_star
                .iter()
                .filter(|s| s.estimator == e)
                .filter_map(|s| s.n_star.map(|n| (s.tau, n as f64)))
                .collect();
            Series { markers: true, ..Series::new(format!("{} empirical", e.name()), pts) }
        })
        .collect();
    overlay_series.extend(estimators.iter().map(|&e| {
        let pts = theory
            .iter()
            .filter(|t| t.estimator == e)
            .filter_map(|t| t.n_star.map(|n| (t.tau, n)))
            .collect();
        Series { dashed: true, markers: true, ..Series::new(format!("{} bound", e.name()), pts) }
    }));
    let overlay = LineChart {
        title: format!("{} / {}: n*(tau) against rate bounds", r.experiment, r.condition),
        x_label: "target tau (bound at delta = 1 - tau)".into(),
        y_label: "samples".into(),
        series: overlay_series,
        annotations: vec![format!("C = {constant}")],
        log_y: true,
        ..LineChart::default()
    };

    Ok(vec![
        write_text(&dir.join(format!("{stem}.svg")), &accuracy.render())?,
        write_text(&dir.join(format!("{stem}_deltan.svg")), &delta.render())?,
        write_text(&dir.join(format!("{stem}_overlay.svg")), &overlay.render())?,
    ])
}

/// Writes the requested artifacts of a sweep.
pub fn export_sweep(r: &SweepResult, dir: &Path, formats: &[ExportFormat]) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    if formats.contains(&ExportFormat::Table) {
        out.extend(write_sweep_tables(r, dir)?);
    }
    if formats.contains(&ExportFormat::Figure) {
        out.extend(write_sweep_figures(r, dir)?);
    }
    Ok(out)
}

pub fn write_noise_tables(r: &NoiseReport, dir: &Path, formats: &[ExportFormat]) -> Result<Vec<PathBuf>> {
    create_dir(dir)?;
    let metric = r.sweeps.first().map(|s| s.metric.name()).unwrap_or("query_accuracy");
    let stem = stem(&r.experiment, "levels", metric);
    let mut out = Vec::new();
    if formats.contains(&ExportFormat::Table) {
        let rows: Vec<Vec<String>> = r
            .rows
            .iter()
            .map(|x| {
                vec![
                    x.p.to_string(),
                    x.delta_p.to_string(),
                    x.delta_q.to_string(),
                    x.ratio.to_string(),
                    x.tau.to_string(),
                    opt(x.n_direct),
                    opt(x.n_cot),
                    opt(x.delta_n),
                ]
            })
            .collect();
        out.push(write_table(&dir.join(format!("{stem}.csv")), &NOISE_HEADER, &rows)?);
    }
    if formats.contains(&ExportFormat::Figure) {
        let mut taus: Vec<f64> = r.rows.iter().map(|x| x.tau).collect();
        taus.dedup();
        let chart = LineChart {
            title: format!("{}: delta n by noise level", r.experiment),
            x_label: "rule probability p".into(),
            y_label: "delta n (CoT minus direct)".into(),
            series: taus
                .iter()
                .map(|&tau| {
                    let pts = r.rows_at(tau).iter().filter_map(|x| x.delta_n.map(|d| (x.p, d as f64))).collect();
                    Series { markers: true, ..Series::new(format!("tau = {tau}"), pts) }
                })
                .collect(),
            ..LineChart::default()
        };
        out.push(write_text(&dir.join(format!("{stem}_deltan.svg")), &chart.render())?);
    }
    for sweep in &r.sweeps {
        out.extend(export_sweep(sweep, dir, formats)?);
    }
    Ok(out)
}

pub fn write_scaling_tables(r: &ScalingReport, dir: &Path, formats: &[ExportFormat]) -> Result<Vec<PathBuf>> {
    create_dir(dir)?;
    let stem = stem(&r.experiment, &r.family, r.metric.name());
    let mut out = Vec::new();
    if formats.contains(&ExportFormat::Table) {
        let per_t: Vec<Vec<String>> = r
            .fits
            .iter()
            .flat_map(|f| {
                r.t_grid.iter().zip(&f.n_star).map(move |(t, n)| vec![f.estimator.to_string(), t.to_string(), opt(*n)])
            })
            .collect();
        let fits: Vec<Vec<String>> = r
            .fits
            .iter()
            .map(|f| {
                vec![
                    f.estimator.to_string(),
                    opt(f.slope),
                    opt(f.intercept),
                    f.defined_points.to_string(),
                    r.band[0].to_string(),
                    r.band[1].to_string(),
                    opt(f.verdict),
                ]
            })
            .collect();
        out.push(write_table(&dir.join(format!("{stem}_scaling.csv")), &SCALING_HEADER, &per_t)?);
        out.push(write_table(&dir.join(format!("{stem}_fit.csv")), &FIT_HEADER, &fits)?);
    }
    if formats.contains(&ExportFormat::Figure) {
        let chart = LineChart {
            title: format!("{}: n*({}) against T", r.family, r.tau),
            x_label: "horizon T".into(),
            y_label: "n*".into(),
            series: r
                .fits
                .iter()
                .map(|f| {
                    let pts = r
                        .t_grid
                        .iter()
                        .zip(&f.n_star)
                        .filter_map(|(&t, n)| n.map(|n| (t as f64, n as f64)))
                        .collect();
                    let label = match f.slope {
                        Some(s) => format!("{} (slope {s:.3})", f.estimator),
                        None => f.estimator.to_string(),
                    };
                    Series { markers: true, ..Series::new(label, pts) }
                })
                .collect(),
            annotations: vec![format!("band [{}, {}]", r.band[0], r.band[1])],
            log_x: true,
            log_y: true,
            ..LineChart::default()
        };
        out.push(write_text(&dir.join(format!("{stem}_scaling.svg")), &chart.render())?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchgen::Alignment;
    use crate::harness::config::{InstanceSource, SweepConfig, SyntheticSpec};
    use crate::harness::sweep::run_sweep;

    fn result() -> SweepResult {
        let mut c = SweepConfig::new("fig2", InstanceSource::Synthetic(SyntheticSpec::new(Alignment::Diff, 2)));
        c.replicates = 7;
        c.n_grid = vec![4, 8, 1000];
        run_sweep(&c).unwrap()
    }

    #[test]
    fn tables_round_trip_exactly() {
        let r = result();
        let dir = tempfile::tempdir().unwrap();
        let paths = write_sweep_tables(&r, dir.path()).unwrap();
        assert!(paths[0].ends_with("fig2_diff_query_accuracy.csv"));
        assert_eq!(read_accuracy_csv(&paths[0]).unwrap(), r.points);
        assert_eq!(read_delta_n_csv(&paths[2]).unwrap(), r.delta_n);
        let rows = read_n_star_csv(&paths[1]).unwrap();
        let empirical: Vec<_> = rows.iter().filter(|x| x.source == "empirical").collect();
        assert_eq!(empirical.len(), r.n_star.len());
        for (row, s) in empirical.iter().zip(&r.n_star) {
            assert_eq!((row.estimator, row.tau, row.n_star), (s.estimator, s.tau, s.n_star.map(|n| n as f64)));
        }
        let theory: Vec<_> = rows.into_iter().filter(|x| x.source == "theory").collect();
        assert_eq!(theory, theory_rows(&r));
        assert!(theory.iter().all(|t| t.n_star.is_some()));
    }

    #[test]
    fn header_mismatch_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.csv");
        std::fs::write(&p, "a,b\n1,2\n").unwrap();
        assert!(matches!(read_accuracy_csv(&p), Err(HarnessError::Table(_))));
    }

    #[test]
    fn figures_are_standalone_svg() {
        let r = result();
        let dir = tempfile::tempdir().unwrap();
        let paths = write_sweep_figures(&r, dir.path()).unwrap();
        assert_eq!(paths.len(), 3);
        for p in &paths {
            let text = std::fs::read_to_string(p).unwrap();
            assert!(text.starts_with("<svg") && text.trim_end().ends_with("</svg>"));
            assert!(!text.contains("href") && !text.contains("http://www.w3.org/1999"));
        }
        let overlay = std::fs::read_to_string(&paths[2]).unwrap();
        assert!(overlay.contains("C = 1") && overlay.contains("bound"));
    }

    #[test]
    fn unwritable_directory_is_io_failure() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        std::fs::write(&blocker, "x").unwrap();
        let err = write_sweep_tables(&result(), &blocker.join("sub")).unwrap_err();
        assert!(err.is_io());
    }
}

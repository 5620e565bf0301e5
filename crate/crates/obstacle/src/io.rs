//! File formats: grid-function CSV and JSON, sweep tables, trajectories and
//! growth profiles.
//!
//! Numbers are written as `{:.16e}` (17 significant digits) so finite doubles
//! read back bit-exactly.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use obstacle_core::parabolic::Trajectory;
use obstacle_core::penalty::SweepRow;
use obstacle_core::regularity::GrowthProfile;
use obstacle_core::{Grid, GridFunction};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
}

pub type Result<T> = std::result::Result<T, IoError>;

pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn file_err(path: &Path) -> impl FnOnce(io::Error) -> IoError + '_ {
    move |source| IoError::File { path: path.to_path_buf(), source }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> IoError + '_ {
    move |source| IoError::Csv { path: path.to_path_buf(), source }
}

fn json_err(path: &Path) -> impl FnOnce(serde_json::Error) -> IoError + '_ {
    move |source| IoError::Json { path: path.to_path_buf(), source }
}

fn format_err(path: &Path, message: impl Into<String>) -> IoError {
    IoError::Format { path: path.to_path_buf(), message: message.into() }
}

fn create_parent(path: &Path) -> Result<()> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => fs::create_dir_all(dir).map_err(file_err(dir)),
        _ => Ok(()),
    }
}

fn header(grid: &Grid) -> &'static [&'static str] {
    if grid.dim() == 2 {
        &["x", "y", "value"]
    } else {
        &["x", "value"]
    }
}

/// Writes `x[,y],value`, one row per node in index order.
pub fn write_grid_csv(path: &Path, f: &GridFunction) -> Result<()> {
    create_parent(path)?;
    let grid = f.grid();
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(header(grid)).map_err(csv_err(path))?;
    for k in 0..grid.len() {
        let p = grid.point(k);
        let mut row = vec![num(p[0])];
        if grid.dim() == 2 {
            row.push(num(p[1]));
        }
        row.push(num(f.value(k)));
        w.write_record(&row).map_err(csv_err(path))?;
    }
    w.flush().map_err(file_err(path))
}

fn node_for(grid: &Grid, p: [f64; 2], path: &Path, line: usize) -> Result<usize> {
    let k = grid
        .nearest_node(p)
        .ok_or_else(|| format_err(path, format!("row {line}: point {p:?} is not a grid node")))?;
    let q = grid.point(k);
    if (q[0] - p[0]).abs() > 1e-9 || (q[1] - p[1]).abs() > 1e-9 {
        return Err(format_err(path, format!("row {line}: point {p:?} is off the grid")));
    }
    Ok(k)
}

/// Reads a CSV written by [`write_grid_csv`] onto `grid`. Every node must
/// appear exactly once; rows may come in any order.
pub fn read_grid_csv(path: &Path, grid: &Arc<Grid>) -> Result<GridFunction> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let found: Vec<String> = r.headers().map_err(csv_err(path))?.iter().map(str::to_string).collect();
    if found != header(grid) {
        return Err(format_err(path, format!("expected header {:?}, found {found:?}", header(grid))));
    }
    let mut values = vec![f64::NAN; grid.len()];
    let mut seen = vec![false; grid.len()];
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err(path))?;
        let nums = rec
            .iter()
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<f64>, _>>()
            .map_err(|e| format_err(path, format!("row {}: {e}", line + 1)))?;
        let (p, v) = if grid.dim() == 2 { ([nums[0], nums[1]], nums[2]) } else { ([nums[0], 0.0], nums[1]) };
        let k = node_for(grid, p, path, line + 1)?;
        if seen[k] {
            return Err(format_err(path, format!("row {}: node listed twice", line + 1)));
        }
        seen[k] = true;
        values[k] = v;
    }
    if let Some(k) = seen.iter().position(|s| !s) {
        return Err(format_err(path, format!("node {k} at {:?} is missing", grid.point(k))));
    }
    GridFunction::new(grid.clone(), values).map_err(|e| format_err(path, e.to_string()))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Record {
    x: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    y: Option<f64>,
    value: f64,
}

/// JSON array of `{x[, y], value}` records.
pub fn write_grid_json(path: &Path, f: &GridFunction) -> Result<()> {
    create_parent(path)?;
    let grid = f.grid();
    let records: Vec<Record> = (0..grid.len())
        .map(|k| {
            let p = grid.point(k);
            Record { x: p[0], y: (grid.dim() == 2).then_some(p[1]), value: f.value(k) }
        })
        .collect();
    let text = serde_json::to_string_pretty(&records).map_err(json_err(path))?;
    fs::write(path, text).map_err(file_err(path))
}

pub fn read_grid_json(path: &Path, grid: &Arc<Grid>) -> Result<GridFunction> {
    let text = fs::read_to_string(path).map_err(file_err(path))?;
    let records: Vec<Record> = serde_json::from_str(&text).map_err(json_err(path))?;
    if records.len() != grid.len() {
        return Err(format_err(path, format!("expected {} records, found {}", grid.len(), records.len())));
    }
    let mut values = vec![f64::NAN; grid.len()];
    for (i, r) in records.iter().enumerate() {
        values[node_for(grid, [r.x, r.y.unwrap_or(0.0)], path, i + 1)?] = r.value;
    }
    GridFunction::new(grid.clone(), values).map_err(|e| format_err(path, e.to_string()))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    create_parent(path)?;
    let text = serde_json::to_string_pretty(value).map_err(json_err(path))?;
    fs::write(path, text + "\n").map_err(file_err(path))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(file_err(path))?;
    serde_json::from_str(&text).map_err(json_err(path))
}

pub fn write_sweep_csv(path: &Path, rows: &[SweepRow]) -> Result<()> {
    create_parent(path)?;
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(["epsilon", "dist_to_vi", "sup_penalty_term", "newton_iters", "converged"])
        .map_err(csv_err(path))?;
    for r in rows {
        w.write_record([
            num(r.epsilon),
            num(r.dist_to_vi),
            num(r.sup_penalty_term),
            r.newton_iters.to_string(),
            r.converged.to_string(),
        ])
        .map_err(csv_err(path))?;
    }
    w.flush().map_err(file_err(path))
}

pub fn read_sweep_csv(path: &Path) -> Result<Vec<SweepRow>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let mut rows = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err(path))?;
        let bad = |what: &str| format_err(path, format!("row {}: bad {what}", line + 1));
        let f = |i: usize, what: &str| rec.get(i).and_then(|s| s.parse::<f64>().ok()).ok_or_else(|| bad(what));
        rows.push(SweepRow {
            epsilon: f(0, "epsilon")?,
            dist_to_vi: f(1, "dist_to_vi")?,
            sup_penalty_term: f(2, "sup_penalty_term")?,
            newton_iters: rec.get(3).and_then(|s| s.parse().ok()).ok_or_else(|| bad("newton_iters"))?,
            converged: rec.get(4).and_then(|s| s.parse().ok()).ok_or_else(|| bad("converged"))?,
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceEntry {
    pub t: f64,
    pub file: String,
}

/// Writes `dir/slice_NNNNN.csv` per slice and `dir/index.json`; returns the
/// written paths.
pub fn write_trajectory(dir: &Path, traj: &Trajectory) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(file_err(dir))?;
    let mut written = Vec::new();
    let mut index = Vec::new();
    for (i, (t, slice)) in traj.times.iter().zip(&traj.slices).enumerate() {
        let file = format!("slice_{i:05}.csv");
        let path = dir.join(&file);
        write_grid_csv(&path, slice)?;
        written.push(path);
        index.push(SliceEntry { t: *t, file });
    }
    let path = dir.join("index.json");
    write_json(&path, &index)?;
    written.push(path);
    Ok(written)
}

/// Reads slices back from a directory written by [`write_trajectory`]. Step
/// reports are not stored, so the returned trajectory has none.
pub fn read_trajectory(dir: &Path, grid: &Arc<Grid>) -> Result<Trajectory> {
    let index: Vec<SliceEntry> = read_json(&dir.join("index.json"))?;
    let mut times = Vec::with_capacity(index.len());
    let mut slices = Vec::with_capacity(index.len());
    for e in index {
        times.push(e.t);
        slices.push(read_grid_csv(&dir.join(&e.file), grid)?);
    }
    if times.is_empty() || times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(format_err(dir, "slice times must be nonempty and strictly increasing"));
    }
    Ok(Trajectory { times, slices, reports: Vec::new(), failure: None })
}

/// `r,sup,bound`; `bound` is the fitted `C r^β` or empty without a fit.
pub fn write_profile_csv(path: &Path, profile: &GrowthProfile) -> Result<()> {
    create_parent(path)?;
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(["r", "sup", "bound"]).map_err(csv_err(path))?;
    for &(r, sup) in &profile.rows {
        let bound = profile.bound(r).map(num).unwrap_or_default();
        w.write_record([num(r), num(sup), bound]).map_err(csv_err(path))?;
    }
    w.flush().map_err(file_err(path))
}

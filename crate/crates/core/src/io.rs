//! Plain-text file formats: state CSVs, snapshot directories and JSON lines.

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{wave_speed, FieldState, RadialGrid};

/// Formats a float with 17 significant digits.
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

/// CSV with header `r,phi,phit`, plus `c` when `p` is given.
pub fn state_csv(state: &FieldState, p: Option<u32>) -> String {
    let mut s = String::with_capacity(state.grid.len() * 72);
    s.push_str(if p.is_some() { "r,phi,phit,c\n" } else { "r,phi,phit\n" });
    for i in 0..state.grid.len() {
        s.push_str(&num(state.grid.r(i)));
        s.push(',');
        s.push_str(&num(state.phi[i]));
        s.push(',');
        s.push_str(&num(state.phit[i]));
        if let Some(p) = p {
            s.push(',');
            s.push_str(&num(wave_speed(state.phit[i], p)));
        }
        s.push('\n');
    }
    s
}

pub fn write_state_csv(path: &Path, state: &FieldState, p: Option<u32>) -> Result<()> {
    fs::write(path, state_csv(state, p)).map_err(|e| Error::io(path, e))
}

/// Reads a state written by [`write_state_csv`]; the grid must be uniform
/// and start at the origin.
pub fn read_state_csv(path: &Path, t: f64) -> Result<FieldState> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_state_csv(&text, t).map_err(|m| Error::parse(path, m))
}

fn parse_state_csv(text: &str, t: f64) -> std::result::Result<FieldState, String> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or("empty file")?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    let col = |name: &str| cols.iter().position(|c| *c == name).ok_or(format!("missing column `{name}`"));
    let (ir, iphi, iphit) = (col("r")?, col("phi")?, col("phit")?);
    let (mut r, mut phi, mut phit) = (Vec::new(), Vec::new(), Vec::new());
    for (k, line) in lines {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != cols.len() {
            return Err(format!("line {}: expected {} fields, found {}", k + 1, cols.len(), fields.len()));
        }
        let get = |i: usize| -> std::result::Result<f64, String> {
            fields[i]
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or(format!("line {}: bad number `{}`", k + 1, fields[i]))
        };
        r.push(get(ir)?);
        phi.push(get(iphi)?);
        phit.push(get(iphit)?);
    }
    if r.len() < 2 {
        return Err("need at least two grid points".into());
    }
    let n = r.len() - 1;
    let grid = RadialGrid::new(r[n], n).map_err(|e| e.to_string())?;
    for (i, &ri) in r.iter().enumerate() {
        if (ri - grid.r(i)).abs() > 1e-9 * grid.h {
            return Err(format!("grid is not uniform from r = 0: row {i} has r = {ri}"));
        }
    }
    let mut state = FieldState::zeros(t, grid);
    state.phi = phi;
    state.phit = phit;
    Ok(state)
}

pub fn snapshot_name(t: f64) -> String {
    format!("snap_t{t:.9}.csv")
}

fn snapshot_time(name: &str) -> Option<f64> {
    name.strip_prefix("snap_t")?.strip_suffix(".csv")?.parse().ok()
}

/// Exact snapshot times, keyed by file name.
pub const SNAPSHOT_INDEX: &str = "snapshots.json";

/// Every `snap_t<t>.csv` in `dir`, sorted by time. Times come from
/// `snapshots.json` when present, otherwise from the file names.
pub fn snapshot_files(dir: &Path) -> Result<Vec<(f64, PathBuf)>> {
    let index_path = dir.join(SNAPSHOT_INDEX);
    let index: Vec<(String, f64)> = if index_path.exists() {
        read_json(&index_path)?
    } else {
        Vec::new()
    };
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let name = entry.file_name();
        let Some(name) = name.to_str() else { continue };
        if let Some(t) = snapshot_time(name) {
            let exact = index.iter().find(|(n, _)| n == name).map_or(t, |e| e.1);
            out.push((exact, entry.path()));
        }
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(out)
}

pub fn load_snapshots(dir: &Path) -> Result<Vec<FieldState>> {
    snapshot_files(dir)?
        .into_iter()
        .map(|(t, path)| read_state_csv(&path, t))
        .collect()
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("value serializes");
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::parse(path, e.to_string()))
}

pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    let mut s = String::new();
    for item in items {
        s.push_str(&serde_json::to_string(item).expect("value serializes"));
        s.push('\n');
    }
    fs::write(path, s).map_err(|e| Error::io(path, e))
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(k, l)| serde_json::from_str(l).map_err(|e| Error::parse(path, format!("line {}: {e}", k + 1))))
        .collect()
}

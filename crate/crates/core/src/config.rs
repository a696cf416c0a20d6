//! Flat `key = value` configuration files with optional `[section]` headers.
//!
//! Lists are comma separated (`p = 1,2,3`), `#` starts a comment. Unknown
//! keys, malformed values and out-of-range settings are rejected with the
//! offending line number.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::GeometryConfig;
use crate::pipeline::{BumpSpec, Resolution, RunSpec};
use crate::profiles::DataParams;
use crate::solver::SolverConfig;
use crate::stencil::Order;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Section {
    Data,
    Solver,
    Geometry,
    Sweep,
}

impl Section {
    fn parse(name: &str) -> Option<Self> {
        match name {
            "data" => Some(Section::Data),
            "solver" => Some(Section::Solver),
            "geometry" => Some(Section::Geometry),
            "sweep" => Some(Section::Sweep),
            _ => None,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Section::Data => "data",
            Section::Solver => "solver",
            Section::Geometry => "geometry",
            Section::Sweep => "sweep",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Entry {
    line: usize,
    value: String,
}

/// Raw key-value pairs grouped by section.
#[derive(Debug, Clone, Default)]
struct Document {
    entries: BTreeMap<(Section, String), Entry>,
}

fn tokenize(text: &str, default: Section, allowed: &[Section]) -> Result<Document> {
    let mut doc = Document::default();
    let mut section = default;
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(rest) = content.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| Error::config(line, format!("malformed section header `{content}`")))?
                .trim();
            section = Section::parse(name)
                .filter(|s| allowed.contains(s))
                .ok_or_else(|| Error::config(line, format!("unknown section [{name}]")))?;
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| Error::config(line, format!("expected `key = value`, got `{content}`")))?;
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        if key.is_empty() {
            return Err(Error::config(line, "empty key"));
        }
        if value.is_empty() {
            return Err(Error::config(line, format!("missing value for `{key}`")));
        }
        if let Some(prev) = doc.entries.get(&(section, key.clone())) {
            return Err(Error::config(
                line,
                format!("`{key}` already set on line {}", prev.line),
            ));
        }
        doc.entries.insert((section, key), Entry { line, value });
    }
    Ok(doc)
}

/// Typed access that consumes entries so leftovers can be reported.
struct Reader {
    doc: Document,
}

impl Reader {
    fn take(&mut self, section: Section, key: &str) -> Option<Entry> {
        self.doc.entries.remove(&(section, key.to_string()))
    }

    fn f64(&mut self, section: Section, key: &str) -> Result<Option<(f64, usize)>> {
        self.take(section, key)
            .map(|e| parse_f64(&e.value, key, e.line).map(|v| (v, e.line)))
            .transpose()
    }

    fn uint(&mut self, section: Section, key: &str) -> Result<Option<(u64, usize)>> {
        self.take(section, key)
            .map(|e| parse_uint(&e.value, key, e.line).map(|v| (v, e.line)))
            .transpose()
    }

    fn bool(&mut self, section: Section, key: &str) -> Result<Option<bool>> {
        self.take(section, key)
            .map(|e| match e.value.as_str() {
                "true" | "yes" | "on" | "1" => Ok(true),
                "false" | "no" | "off" | "0" => Ok(false),
                other => Err(Error::config(e.line, format!("`{key}` expects true or false, got `{other}`"))),
            })
            .transpose()
    }

    fn f64_list(&mut self, section: Section, key: &str) -> Result<Option<(Vec<f64>, usize)>> {
        self.take(section, key)
            .map(|e| {
                split_list(&e.value, key, e.line)?
                    .into_iter()
                    .map(|v| parse_f64(v, key, e.line))
                    .collect::<Result<Vec<_>>>()
                    .map(|v| (v, e.line))
            })
            .transpose()
    }

    fn uint_list(&mut self, section: Section, key: &str) -> Result<Option<(Vec<u64>, usize)>> {
        self.take(section, key)
            .map(|e| {
                split_list(&e.value, key, e.line)?
                    .into_iter()
                    .map(|v| parse_uint(v, key, e.line))
                    .collect::<Result<Vec<_>>>()
                    .map(|v| (v, e.line))
            })
            .transpose()
    }

    fn finish(self) -> Result<()> {
        match self.doc.entries.iter().min_by_key(|(_, e)| e.line) {
            Some(((section, key), e)) => Err(Error::config(
                e.line,
                format!("unknown key `{key}` in [{}]", section.name()),
            )),
            None => Ok(()),
        }
    }
}

fn split_list<'a>(value: &'a str, key: &str, line: usize) -> Result<Vec<&'a str>> {
    let items: Vec<&str> = value.split(',').map(str::trim).collect();
    if items.iter().any(|s| s.is_empty()) {
        return Err(Error::config(line, format!("empty item in list `{key}`")));
    }
    Ok(items)
}

fn parse_f64(value: &str, key: &str, line: usize) -> Result<f64> {
    let v: f64 = value
        .parse()
        .map_err(|_| Error::config(line, format!("`{key}` expects a number, got `{value}`")))?;
    if !v.is_finite() {
        return Err(Error::config(line, format!("`{key}` must be finite")));
    }
    Ok(v)
}

fn parse_uint(value: &str, key: &str, line: usize) -> Result<u64> {
    value
        .parse()
        .map_err(|_| Error::config(line, format!("`{key}` expects a non-negative integer, got `{value}`")))
}

fn check(ok: bool, line: usize, msg: impl FnOnce() -> String) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::config(line, msg()))
    }
}

fn check_p(p: u64, line: usize) -> Result<u32> {
    check((1..=64).contains(&p), line, || format!("p must be a positive integer, got {p}"))?;
    Ok(p as u32)
}

fn check_eps0(eps0: f64, line: usize) -> Result<f64> {
    check(eps0 > 0.0 && eps0 < 1.0, line, || format!("eps0 must lie in (0, 1), got {eps0}"))?;
    Ok(eps0)
}

fn check_delta(delta: f64, line: usize) -> Result<f64> {
    check(delta > 0.0 && delta < 1.0, line, || format!("delta must lie in (0, 1), got {delta}"))?;
    Ok(delta)
}

/// Solver and geometry settings shared by run and sweep files.
fn read_solver(r: &mut Reader, p: u32, t_max_default: f64) -> Result<SolverConfig> {
    let s = Section::Solver;
    let mut cfg = SolverConfig::new(p, t_max_default);
    if let Some((v, line)) = r.uint(s, "order")? {
        cfg.order = Order::from_int(v as u32)
            .ok_or_else(|| Error::config(line, format!("order must be 2 or 4, got {v}")))?;
    }
    if let Some((v, line)) = r.f64(s, "cfl")? {
        check(v > 0.0 && v <= 0.9, line, || format!("cfl must lie in (0, 0.9], got {v}"))?;
        cfg.cfl = v;
    }
    if let Some((v, line)) = r.f64(s, "t_max")? {
        check(v > 1.0, line, || format!("t_max must exceed 1, got {v}"))?;
        cfg.t_max = v;
    }
    if let Some((v, line)) = r.f64(s, "blowup_grad_cap")? {
        check(v > 0.0, line, || format!("blowup_grad_cap must be positive, got {v}"))?;
        cfg.blowup_grad_cap = v;
    }
    if let Some((v, line)) = r.f64(s, "grad_growth_cap")? {
        check(v == 0.0 || v > 1.0, line, || format!("grad_growth_cap must exceed 1 (0 disables), got {v}"))?;
        cfg.grad_growth_cap = (v > 0.0).then_some(v);
    }
    if let Some((v, line)) = r.f64(s, "hyp_floor")? {
        check(v > 0.0 && v < 1.0, line, || format!("hyp_floor must lie in (0, 1), got {v}"))?;
        cfg.hyp_floor = v;
    }
    if let Some((v, line)) = r.f64(s, "mu_floor")? {
        check(v > 0.0 && v < 1.0, line, || format!("mu_floor must lie in (0, 1), got {v}"))?;
        cfg.mu_floor = v;
    }
    if let Some((v, line)) = r.f64(s, "dt_floor")? {
        check(v > 0.0, line, || format!("dt_floor must be positive, got {v}"))?;
        cfg.dt_floor = v;
    }
    if let Some((v, _)) = r.uint(s, "snapshot_stride")? {
        cfg.snapshot_stride = v as usize;
    }
    if let Some((v, line)) = r.uint(s, "diag_stride")? {
        check(v >= 1, line, || "diag_stride must be at least 1".into())?;
        cfg.diag_stride = v as usize;
    }
    Ok(cfg)
}

fn read_geometry(r: &mut Reader) -> Result<Option<GeometryConfig>> {
    let s = Section::Geometry;
    let enabled = r.bool(s, "enabled")?.unwrap_or(true);
    let mut g = GeometryConfig::default();
    if let Some((v, line)) = r.uint(s, "curves")? {
        check(v >= 2, line, || format!("curves must be at least 2, got {v}"))?;
        g.curves = v as usize;
    }
    if let Some((v, line)) = r.uint(s, "record_stride")? {
        check(v >= 1, line, || "record_stride must be at least 1".into())?;
        g.record_stride = v as usize;
    }
    if let Some((v, _)) = r.uint(s, "band_margin_cells")? {
        g.band_margin_cells = v as usize;
    }
    if let Some(v) = r.bool(s, "eikonal")? {
        g.eikonal = v;
    }
    Ok(enabled.then_some(g))
}

/// Default `t_max` when a file does not set one.
pub const DEFAULT_T_MAX: f64 = 4.0;

/// Parses a run configuration. Keys before any header belong to `[data]`.
pub fn parse_run_config(text: &str) -> Result<RunSpec> {
    let doc = tokenize(text, Section::Data, &[Section::Data, Section::Solver, Section::Geometry])?;
    let mut r = Reader { doc };
    let d = Section::Data;
    let (p, p_line) = r.uint(d, "p")?.ok_or_else(|| Error::config(0, "missing required key `p`"))?;
    let p = check_p(p, p_line)?;
    let (eps0, e_line) = r.f64(d, "eps0")?.ok_or_else(|| Error::config(0, "missing required key `eps0`"))?;
    let eps0 = check_eps0(eps0, e_line)?;
    let (delta, d_line) = r.f64(d, "delta")?.ok_or_else(|| Error::config(0, "missing required key `delta`"))?;
    let delta = check_delta(delta, d_line)?;
    let mut bump = BumpSpec::default();
    if let Some((v, _)) = r.f64(d, "center")? {
        bump.center = v;
    }
    if let Some((v, line)) = r.f64(d, "width")? {
        check(v > 0.0, line, || format!("width must be positive, got {v}"))?;
        bump.width = v;
    }
    if let Some((v, _)) = r.f64(d, "amplitude")? {
        bump.amplitude = v;
    }
    crate::profiles::bump_profile(bump.center, bump.width, bump.amplitude)
        .map_err(|e| Error::config(0, e.to_string()))?;
    let grid_n = r.uint(d, "grid_n")?;
    let per_delta = r.f64(d, "cells_per_delta")?;
    let resolution = match (grid_n, per_delta) {
        (Some(_), Some((_, line))) => {
            return Err(Error::config(line, "set either grid_n or cells_per_delta, not both"))
        }
        (Some((n, line)), None) => {
            check(n >= 8, line, || format!("grid_n must be at least 8, got {n}"))?;
            Resolution::Cells(n as usize)
        }
        (None, Some((k, line))) => {
            check(k > 0.0, line, || format!("cells_per_delta must be positive, got {k}"))?;
            Resolution::PerDelta(k)
        }
        (None, None) => Resolution::PerDelta(64.0),
    };
    let r_max = match r.f64(d, "r_max")? {
        Some((v, line)) => {
            check(v > 1.0, line, || format!("r_max must exceed 1, got {v}"))?;
            Some(v)
        }
        None => None,
    };
    let solver = read_solver(&mut r, p, DEFAULT_T_MAX)?;
    let geometry = read_geometry(&mut r)?;
    r.finish()?;
    let params = DataParams::new(delta, eps0, p)?;
    Ok(RunSpec {
        params,
        bump,
        resolution,
        r_max,
        solver,
        geometry,
    })
}

/// Parameter lists of a sweep plus the settings shared by every job.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub p: Vec<u32>,
    pub eps0: Vec<f64>,
    pub delta: Vec<f64>,
    pub amplitude: Vec<f64>,
    pub grid_n: Vec<usize>,
    pub cells_per_delta: f64,
    pub t_max: f64,
    pub center: f64,
    pub width: f64,
    /// `(p, eps0)` pairs left out of the product.
    pub exclude: Vec<(u32, f64)>,
    pub solver: SolverConfig,
    pub geometry: Option<GeometryConfig>,
}

/// Parses a sweep configuration. Keys before any header belong to `[sweep]`.
pub fn parse_sweep_config(text: &str) -> Result<SweepConfig> {
    let doc = tokenize(text, Section::Sweep, &[Section::Sweep, Section::Solver, Section::Geometry])?;
    let mut r = Reader { doc };
    let s = Section::Sweep;
    let nonempty = |name: &str, line: usize, len: usize| {
        check(len > 0, line, || format!("`{name}` must list at least one value"))
    };
    let (p, line) = r.uint_list(s, "p")?.ok_or_else(|| Error::config(0, "missing required key `p`"))?;
    nonempty("p", line, p.len())?;
    let p = p.into_iter().map(|v| check_p(v, line)).collect::<Result<Vec<_>>>()?;
    let (eps0, line) = r.f64_list(s, "eps0")?.ok_or_else(|| Error::config(0, "missing required key `eps0`"))?;
    let eps0 = eps0.into_iter().map(|v| check_eps0(v, line)).collect::<Result<Vec<_>>>()?;
    let (delta, line) = r.f64_list(s, "delta")?.ok_or_else(|| Error::config(0, "missing required key `delta`"))?;
    let delta = delta.into_iter().map(|v| check_delta(v, line)).collect::<Result<Vec<_>>>()?;
    let amplitude = r.f64_list(s, "amplitude")?.map_or(vec![1.0], |v| v.0);
    let grid_n = match r.uint_list(s, "grid_n")? {
        Some((v, line)) => {
            for &n in &v {
                check(n >= 8, line, || format!("grid_n must be at least 8, got {n}"))?;
            }
            v.into_iter().map(|n| n as usize).collect()
        }
        None => Vec::new(),
    };
    let cells_per_delta = match r.f64(s, "cells_per_delta")? {
        Some((v, line)) => {
            check(v > 0.0, line, || format!("cells_per_delta must be positive, got {v}"))?;
            v
        }
        None => 64.0,
    };
    let t_max = match r.f64(s, "t_max")? {
        Some((v, line)) => {
            check(v > 1.0, line, || format!("t_max must exceed 1, got {v}"))?;
            v
        }
        None => DEFAULT_T_MAX,
    };
    let center = r.f64(s, "center")?.map_or(BumpSpec::default().center, |v| v.0);
    let width = r.f64(s, "width")?.map_or(BumpSpec::default().width, |v| v.0);
    let exclude = match r.take(s, "exclude") {
        Some(e) => split_list(&e.value, "exclude", e.line)?
            .into_iter()
            .map(|item| {
                let (a, b) = item
                    .split_once(':')
                    .ok_or_else(|| Error::config(e.line, format!("exclude items look like `p:eps0`, got `{item}`")))?;
                let p = check_p(parse_uint(a.trim(), "exclude", e.line)?, e.line)?;
                let eps = check_eps0(parse_f64(b.trim(), "exclude", e.line)?, e.line)?;
                Ok((p, eps))
            })
            .collect::<Result<Vec<_>>>()?,
        None => Vec::new(),
    };
    let mut solver = read_solver(&mut r, 1, t_max)?;
    solver.t_max = t_max;
    let geometry = read_geometry(&mut r)?;
    r.finish()?;
    for (name, list) in [("eps0", &eps0), ("delta", &delta), ("amplitude", &amplitude)] {
        if list.is_empty() {
            return Err(Error::config(0, format!("`{name}` must list at least one value")));
        }
    }
    Ok(SweepConfig {
        p,
        eps0,
        delta,
        amplitude,
        grid_n,
        cells_per_delta,
        t_max,
        center,
        width,
        exclude,
        solver,
        geometry,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line_of(e: Error) -> usize {
        match e {
            Error::ConfigError { line, .. } => line,
            other => panic!("expected a config error, got {other:?}"),
        }
    }

    #[test]
    fn minimal_run_config_takes_defaults() {
        let spec = parse_run_config("p = 3\neps0 = 0.5\ndelta = 0.05\n").unwrap();
        assert_eq!(spec.params.p, 3);
        assert_eq!(spec.solver.cfl, 0.4);
        assert_eq!(spec.solver.order, Order::Fourth);
        assert_eq!(spec.bump, BumpSpec::default());
        assert!(spec.geometry.is_some());
    }

    #[test]
    fn sections_and_comments() {
        let text = "# pulse\n[data]\np = 1\neps0 = 0.5  # half\ndelta = 0.1\n\n[solver]\norder = 2\ncfl = 0.3\n[geometry]\nenabled = false\n";
        let spec = parse_run_config(text).unwrap();
        assert_eq!(spec.solver.order, Order::Second);
        assert_eq!(spec.solver.cfl, 0.3);
        assert!(spec.geometry.is_none());
    }

    #[test]
    fn range_and_type_errors_carry_lines() {
        assert_eq!(line_of(parse_run_config("p = 3\neps0 = 1.2\ndelta = 0.05").unwrap_err()), 2);
        assert_eq!(line_of(parse_run_config("p = 2.5\neps0 = 0.5\ndelta = 0.05").unwrap_err()), 1);
        assert_eq!(line_of(parse_run_config("p = 3\neps0 = 0.5\ndelta = 0.05\n[solver]\ncfl = 0.95").unwrap_err()), 5);
        assert_eq!(line_of(parse_run_config("p = 3\neps0 = 0.5\ndelta = 0.05\nspeed = 2").unwrap_err()), 4);
        assert_eq!(line_of(parse_run_config("p = 3\n[colour]\n").unwrap_err()), 2);
        assert_eq!(line_of(parse_run_config("p = 3\np = 4\n").unwrap_err()), 2);
        assert!(parse_run_config("p = 3\neps0 = 0.5\n").is_err());
    }

    #[test]
    fn sweep_lists() {
        let cfg = parse_sweep_config("p = 1,3\neps0 = 0.5\ndelta = 0.1, 0.05\nexclude = 1:0.25\n").unwrap();
        assert_eq!(cfg.p, vec![1, 3]);
        assert_eq!(cfg.delta, vec![0.1, 0.05]);
        assert_eq!(cfg.exclude, vec![(1, 0.25)]);
        let err = parse_sweep_config("p = 1\neps0 = 0.5\ndelta = \n").unwrap_err();
        assert_eq!(line_of(err), 3);
        assert!(parse_sweep_config("p = 1\neps0 = 0.5\ndelta = 0.1,,0.2\n").is_err());
    }
}

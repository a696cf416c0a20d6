//! Parameter sweeps: planning, a parallel executor over an append-only
//! store, resumption and the phase report.

use std::collections::{BTreeMap, HashSet};
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::SweepConfig;
use crate::diagnostics::{regime, Regime};
use crate::error::{Error, Result};
use crate::field::RadialGrid;
use crate::pipeline::{self, BumpSpec, Resolution, RunSpec};
use crate::profiles::DataParams;
use crate::solver::{Signal, Verdict};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JobParams {
    pub p: u32,
    pub eps0: f64,
    pub delta: f64,
    pub amplitude: f64,
    pub grid_n: usize,
    pub t_max: f64,
    pub center: f64,
    pub width: f64,
}

impl JobParams {
    /// Text the job id is hashed from; floats keep all 17 significant digits.
    pub fn canonical(&self) -> String {
        format!(
            "p={};eps0={:.16e};delta={:.16e};amplitude={:.16e};grid_n={};t_max={:.16e};center={:.16e};width={:.16e}",
            self.p, self.eps0, self.delta, self.amplitude, self.grid_n, self.t_max, self.center, self.width
        )
    }

    pub fn id(&self) -> String {
        let digest = Sha256::digest(self.canonical().as_bytes());
        digest[..16].iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Job {
    pub id: String,
    pub params: JobParams,
}

/// Default radius of the computational domain for a job.
fn default_r_max(t_max: f64, delta: f64) -> f64 {
    1.0 + 1.05 * t_max + 8.0 * delta
}

/// Cartesian product of the configured lists minus exclusions, ordered by id.
pub fn plan(cfg: &SweepConfig) -> Result<Vec<Job>> {
    for (name, empty) in [
        ("p", cfg.p.is_empty()),
        ("eps0", cfg.eps0.is_empty()),
        ("delta", cfg.delta.is_empty()),
        ("amplitude", cfg.amplitude.is_empty()),
    ] {
        if empty {
            return Err(Error::config(0, format!("`{name}` must list at least one value")));
        }
    }
    if !(cfg.t_max > 1.0) {
        return Err(Error::config(0, format!("t_max must exceed 1, got {}", cfg.t_max)));
    }
    let mut jobs = BTreeMap::new();
    for &p in &cfg.p {
        if p < 1 {
            return Err(Error::config(0, "p must be a positive integer"));
        }
        for &eps0 in &cfg.eps0 {
            if !(eps0 > 0.0 && eps0 < 1.0) {
                return Err(Error::config(0, format!("eps0 must lie in (0, 1), got {eps0}")));
            }
            if cfg.exclude.iter().any(|&(xp, xe)| xp == p && xe == eps0) {
                continue;
            }
            for &delta in &cfg.delta {
                if !(delta > 0.0 && delta < 1.0) {
                    return Err(Error::config(0, format!("delta must lie in (0, 1), got {delta}")));
                }
                let ns = if cfg.grid_n.is_empty() {
                    let r_max = default_r_max(cfg.t_max, delta);
                    vec![RadialGrid::resolving(r_max, delta, cfg.cells_per_delta)?.n]
                } else {
                    cfg.grid_n.clone()
                };
                for &amplitude in &cfg.amplitude {
                    for &grid_n in &ns {
                        let params = JobParams {
                            p,
                            eps0,
                            delta,
                            amplitude,
                            grid_n,
                            t_max: cfg.t_max,
                            center: cfg.center,
                            width: cfg.width,
                        };
                        let id = params.id();
                        jobs.insert(id.clone(), Job { id, params });
                    }
                }
            }
        }
    }
    Ok(jobs.into_values().collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JobStatus {
    Done,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobResult {
    pub verdict: Verdict,
    pub t_star: Option<f64>,
    pub blowup_radius: Option<f64>,
    pub termination: String,
    pub signals: Vec<Signal>,
    pub steps: usize,
    pub t_final: f64,
    pub mu_min: Option<f64>,
    pub mu_min_eikonal: Option<f64>,
    /// Decay exponent of `sup |d phi|` for global runs.
    pub alpha: Option<f64>,
    pub lhs_max: f64,
    pub predicate_satisfied: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobRecord {
    pub id: String,
    pub params: JobParams,
    pub status: JobStatus,
    pub error: Option<String>,
    pub result: Option<JobResult>,
}

impl JobRecord {
    pub fn failed(job: &Job, reason: impl Into<String>) -> Self {
        JobRecord {
            id: job.id.clone(),
            params: job.params,
            status: JobStatus::Failed,
            error: Some(reason.into()),
            result: None,
        }
    }
}

/// Builds the run for a job from the shared sweep settings.
pub fn job_spec(cfg: &SweepConfig, params: &JobParams) -> Result<RunSpec> {
    let data = DataParams::new(params.delta, params.eps0, params.p)?;
    let mut solver = cfg.solver;
    solver.p = params.p;
    solver.t_max = params.t_max;
    Ok(RunSpec {
        params: data,
        bump: BumpSpec {
            center: params.center,
            width: params.width,
            amplitude: params.amplitude,
        },
        resolution: Resolution::Cells(params.grid_n),
        r_max: None,
        solver,
        geometry: cfg.geometry,
    })
}

/// Runs one job end to end.
pub fn run_job(cfg: &SweepConfig, job: &Job) -> JobRecord {
    let run = job_spec(cfg, &job.params).and_then(|spec| pipeline::execute(&spec));
    match run {
        Err(e) => JobRecord::failed(job, e.to_string()),
        Ok(art) => {
            let s = art.summary;
            let o = s.outcome;
            JobRecord {
                id: job.id.clone(),
                params: job.params,
                status: JobStatus::Done,
                error: None,
                result: Some(JobResult {
                    verdict: o.label,
                    t_star: o.t_star,
                    blowup_radius: o.blowup_radius,
                    termination: serde_json::to_value(&o.termination)
                        .ok()
                        .and_then(|v| v.get("kind").and_then(|k| k.as_str()).map(String::from))
                        .unwrap_or_default(),
                    signals: o.signals,
                    steps: o.steps,
                    t_final: o.t_final,
                    mu_min: s.geometry.map(|g| g.mu_min),
                    mu_min_eikonal: s.geometry.and_then(|g| g.mu_min_eikonal),
                    alpha: o.decay.map(|d| d.exponent),
                    lhs_max: s.predicate.lhs_max,
                    predicate_satisfied: s.predicate.satisfied,
                }),
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Manifest {
    format: u32,
    jobs: Vec<Job>,
}

const RESULTS: &str = "results.jsonl";
const MANIFEST: &str = "manifest.json";
const MERGED: &str = "merged.jsonl";
const LOG: &str = "sweep.log";

/// Directory holding `manifest.json`, the append-only `results.jsonl`, the
/// canonical `merged.jsonl` and a timing log.
#[derive(Debug)]
pub struct Store {
    dir: PathBuf,
}

impl Store {
    /// Opens or creates a store, discarding a partially written last record.
    pub fn open(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref().to_path_buf();
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        let store = Store { dir };
        store.repair()?;
        Ok(store)
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn results_path(&self) -> PathBuf {
        self.dir.join(RESULTS)
    }

    pub fn merged_path(&self) -> PathBuf {
        self.dir.join(MERGED)
    }

    fn repair(&self) -> Result<()> {
        let path = self.results_path();
        let bytes = match fs::read(&path) {
            Ok(b) => b,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(()),
            Err(e) => return Err(Error::io(&path, e)),
        };
        let mut keep = 0;
        for line in bytes.split_inclusive(|&b| b == b'\n') {
            let complete = line.ends_with(b"\n") && serde_json::from_slice::<JobRecord>(line).is_ok();
            if !complete {
                break;
            }
            keep += line.len();
        }
        if keep < bytes.len() {
            let f = OpenOptions::new().write(true).open(&path).map_err(|e| Error::io(&path, e))?;
            f.set_len(keep as u64).map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }

    /// Records the plan; an existing manifest must describe the same jobs.
    pub fn write_manifest(&self, jobs: &[Job]) -> Result<()> {
        let path = self.dir.join(MANIFEST);
        let manifest = Manifest {
            format: 1,
            jobs: jobs.to_vec(),
        };
        if let Ok(text) = fs::read_to_string(&path) {
            let old: Manifest = serde_json::from_str(&text).map_err(|e| Error::parse(&path, e.to_string()))?;
            if old != manifest {
                return Err(Error::InvalidConfig(format!(
                    "store {} was planned from a different sweep",
                    self.dir.display()
                )));
            }
            return Ok(());
        }
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))
    }

    /// Every complete record in append order.
    pub fn records(&self) -> Result<Vec<JobRecord>> {
        let path = self.results_path();
        let file = match File::open(&path) {
            Ok(f) => f,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(Error::io(&path, e)),
        };
        let mut out = Vec::new();
        for line in BufReader::new(file).lines() {
            let line = line.map_err(|e| Error::io(&path, e))?;
            match serde_json::from_str(&line) {
                Ok(r) => out.push(r),
                Err(_) => break,
            }
        }
        Ok(out)
    }

    /// Records deduplicated by id (first wins) and sorted by id.
    pub fn merged(&self) -> Result<Vec<JobRecord>> {
        let mut by_id = BTreeMap::new();
        for r in self.records()? {
            by_id.entry(r.id.clone()).or_insert(r);
        }
        Ok(by_id.into_values().collect())
    }

    /// Writes the canonical merged view and returns its path.
    pub fn write_merged(&self) -> Result<PathBuf> {
        let mut text = String::new();
        for r in self.merged()? {
            text.push_str(&serde_json::to_string(&r).expect("record serializes"));
            text.push('\n');
        }
        let path = self.merged_path();
        fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }

    fn appender(&self) -> Result<(File, File)> {
        let open = |name: &str| {
            let path = self.dir.join(name);
            OpenOptions::new()
                .create(true)
                .append(true)
                .open(&path)
                .map_err(|e| Error::io(&path, e))
        };
        Ok((open(RESULTS)?, open(LOG)?))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub planned: usize,
    pub skipped: usize,
    pub completed: usize,
    pub failed: usize,
}

/// Runs the jobs of `jobs` not yet in `store` on `workers` threads.
pub fn execute(cfg: &SweepConfig, jobs: &[Job], workers: usize, store: &Store) -> Result<SweepSummary> {
    execute_with(jobs, workers, store, None, |job| run_job(cfg, job))
}

/// Like [`execute`] with a custom job runner. `limit` stops dispatching
/// after that many jobs, leaving the rest pending.
pub fn execute_with<F>(
    jobs: &[Job],
    workers: usize,
    store: &Store,
    limit: Option<usize>,
    runner: F,
) -> Result<SweepSummary>
where
    F: Fn(&Job) -> JobRecord + Sync,
{
    if workers == 0 {
        return Err(Error::InvalidConfig("worker count must be at least 1".into()));
    }
    let ids: HashSet<&str> = jobs.iter().map(|j| j.id.as_str()).collect();
    if ids.len() != jobs.len() {
        return Err(Error::InvalidConfig("job list contains duplicate ids".into()));
    }
    let done: HashSet<String> = store.records()?.into_iter().map(|r| r.id).collect();
    let pending: Vec<&Job> = jobs.iter().filter(|j| !done.contains(&j.id)).collect();
    let dispatch = limit.map_or(pending.len(), |l| l.min(pending.len()));
    let mut summary = SweepSummary {
        planned: jobs.len(),
        skipped: jobs.len() - pending.len(),
        ..Default::default()
    };
    if dispatch == 0 {
        return Ok(summary);
    }
    let (mut results, mut log) = store.appender()?;
    let next = AtomicUsize::new(0);
    let start = Instant::now();
    let (tx, rx) = mpsc::channel::<(JobRecord, f64)>();
    let mut write_err = None;
    std::thread::scope(|scope| {
        for _ in 0..workers.min(dispatch) {
            let tx = tx.clone();
            let (next, pending, runner) = (&next, &pending, &runner);
            scope.spawn(move || loop {
                let k = next.fetch_add(1, Ordering::SeqCst);
                if k >= dispatch {
                    break;
                }
                let job = pending[k];
                let began = Instant::now();
                let record = panic::catch_unwind(AssertUnwindSafe(|| runner(job))).unwrap_or_else(|payload| {
                    let msg = payload
                        .downcast_ref::<&str>()
                        .map(|s| s.to_string())
                        .or_else(|| payload.downcast_ref::<String>().cloned())
                        .unwrap_or_else(|| "unknown panic".into());
                    JobRecord::failed(job, format!("panic: {msg}"))
                });
                if tx.send((record, began.elapsed().as_secs_f64())).is_err() {
                    break;
                }
            });
        }
        drop(tx);
        for (record, secs) in rx {
            if write_err.is_some() {
                continue;
            }
            let mut line = serde_json::to_string(&record).expect("record serializes");
            line.push('\n');
            let path = store.results_path();
            if let Err(e) = results.write_all(line.as_bytes()).and_then(|_| results.sync_data()) {
                write_err = Some(Error::io(path, e));
                continue;
            }
            let _ = writeln!(
                log,
                "{} {:?} {:.3}s elapsed={:.3}s",
                record.id,
                record.status,
                secs,
                start.elapsed().as_secs_f64()
            );
            match record.status {
                JobStatus::Done => summary.completed += 1,
                JobStatus::Failed => summary.failed += 1,
            }
        }
    });
    if let Some(e) = write_err {
        return Err(e);
    }
    store.write_merged()?;
    Ok(summary)
}

/// One row of the phase table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseRow {
    pub p: u32,
    pub eps0: f64,
    pub delta: f64,
    pub amplitude: f64,
    pub verdict: Verdict,
    pub t_star: Option<f64>,
    pub mu_min: Option<f64>,
    pub alpha: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseCell {
    pub p: u32,
    pub eps0: f64,
    pub p_critical: f64,
    pub predicted: Regime,
    /// `(delta, amplitude, verdict)` in table order.
    pub verdicts: Vec<(f64, f64, Verdict)>,
    pub needs_refinement: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseReport {
    pub rows: Vec<PhaseRow>,
    pub cells: Vec<PhaseCell>,
    pub failed: Vec<String>,
}

/// Side of the critical exponent `1 / (1 - eps0)` that `p` falls on.
pub fn predicted_side(p: u32, eps0: f64) -> Regime {
    regime(&DataParams { delta: 0.0, eps0, p })
}

fn disagrees(predicted: Regime, r: &JobResult) -> bool {
    match (predicted, r.verdict) {
        (_, Verdict::Inconclusive) => true,
        (Regime::Supercritical, Verdict::Blowup) => true,
        (Regime::Subcritical, Verdict::Global) => r.predicate_satisfied == Some(true),
        _ => false,
    }
}

/// Observed verdicts per `(p, eps0)` against the predicted side.
pub fn phase_report(records: &[JobRecord]) -> PhaseReport {
    let mut done: Vec<(&JobParams, &JobResult)> = records
        .iter()
        .filter_map(|r| r.result.as_ref().map(|res| (&r.params, res)))
        .collect();
    done.sort_by(|a, b| {
        (a.0.p, a.0.eps0)
            .partial_cmp(&(b.0.p, b.0.eps0))
            .unwrap()
            .then(b.0.delta.total_cmp(&a.0.delta))
            .then(a.0.amplitude.total_cmp(&b.0.amplitude))
            .then(a.0.grid_n.cmp(&b.0.grid_n))
    });
    let rows = done
        .iter()
        .map(|(q, r)| PhaseRow {
            p: q.p,
            eps0: q.eps0,
            delta: q.delta,
            amplitude: q.amplitude,
            verdict: r.verdict,
            t_star: r.t_star,
            mu_min: r.mu_min,
            alpha: r.alpha,
        })
        .collect();
    let mut cells: Vec<PhaseCell> = Vec::new();
    for (q, r) in &done {
        let predicted = predicted_side(q.p, q.eps0);
        let flag = disagrees(predicted, r);
        match cells.last_mut() {
            Some(c) if c.p == q.p && c.eps0 == q.eps0 => {
                c.verdicts.push((q.delta, q.amplitude, r.verdict));
                c.needs_refinement |= flag;
            }
            _ => cells.push(PhaseCell {
                p: q.p,
                eps0: q.eps0,
                p_critical: 1.0 / (1.0 - q.eps0),
                predicted,
                verdicts: vec![(q.delta, q.amplitude, r.verdict)],
                needs_refinement: flag,
            }),
        }
    }
    let mut failed: Vec<String> = records
        .iter()
        .filter(|r| r.status == JobStatus::Failed)
        .map(|r| format!("{}: {}", r.id, r.error.as_deref().unwrap_or("unknown")))
        .collect();
    failed.sort();
    PhaseReport { rows, cells, failed }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.16e}")).unwrap_or_default()
}

fn side_name(r: Regime) -> &'static str {
    match r {
        Regime::Supercritical => "global",
        Regime::Critical => "critical boundary",
        Regime::Subcritical => "blowup-capable",
    }
}

impl PhaseReport {
    pub fn csv(&self) -> String {
        let mut s = String::from("p,eps0,delta,verdict,t_star,mu_min,alpha\n");
        for r in &self.rows {
            s.push_str(&format!(
                "{},{:.16e},{:.16e},{},{},{},{}\n",
                r.p,
                r.eps0,
                r.delta,
                r.verdict,
                opt(r.t_star),
                opt(r.mu_min),
                opt(r.alpha)
            ));
        }
        s
    }

    pub fn markdown(&self) -> String {
        let mut s = String::from("| p | eps0 | p_c | predicted | observed (delta: verdict) | status |\n");
        s.push_str("|---|---|---|---|---|---|\n");
        for c in &self.cells {
            let observed: Vec<String> = c
                .verdicts
                .iter()
                .map(|(d, a, v)| format!("{d}: {v} (A={a})"))
                .collect();
            s.push_str(&format!(
                "| {} | {} | {:.4} | {} | {} | {} |\n",
                c.p,
                c.eps0,
                c.p_critical,
                side_name(c.predicted),
                observed.join(", "),
                if c.needs_refinement { "**needs refinement**" } else { "consistent" }
            ));
        }
        if !self.failed.is_empty() {
            s.push_str("\nFailed jobs:\n\n");
            for f in &self.failed {
                s.push_str(&format!("- {f}\n"));
            }
        }
        s
    }
}

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use pulse_critic::config::{self, SweepConfig, DEFAULT_T_MAX};
use pulse_critic::diagnostics::{default_window, fit_decay, DecayFit};
use pulse_critic::field::{FieldState, RadialGrid};
use pulse_critic::geometry::{trchi, GeometryStats, SolutionHistory};
use pulse_critic::io::{self, num};
use pulse_critic::pipeline::{self, BumpSpec, RunSpec, RunSummary};
use pulse_critic::profiles::{build_initial_data, bump_profile, check_outgoing_constraint, DataParams, PulseProfile};
use pulse_critic::solver::RunOutcome;
use pulse_critic::sweep::{self, Store};
use pulse_critic::Error;

#[derive(Parser)]
#[command(name = "pulse-critic", version, about = "Short-pulse quasilinear wave laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample constrained short-pulse data at t = 1.
    GenData(GenData),
    /// Evolve data and classify the run.
    Run(RunArgs),
    /// Trace characteristics and the optical function through a run's snapshots.
    Eikonal(EikonalArgs),
    /// Run a parameter sweep into a resumable store.
    Sweep(SweepArgs),
    /// Fit power-law decay rates to a run's diagnostic series.
    FitDecay(FitArgs),
    /// Summarize a run directory or a sweep store as markdown.
    Report(ReportArgs),
}

#[derive(Args)]
struct GenData {
    #[arg(long)]
    p: u32,
    #[arg(long)]
    eps0: f64,
    #[arg(long)]
    delta: f64,
    #[arg(long, default_value_t = -0.5, allow_negative_numbers = true)]
    center: f64,
    #[arg(long, default_value_t = 0.4)]
    width: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    amplitude: f64,
    /// Cell count; defaults to 64 cells across delta.
    #[arg(long)]
    grid_n: Option<usize>,
    /// Outer radius; defaults to what a run to --t-max needs.
    #[arg(long)]
    r_max: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_T_MAX)]
    t_max: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Data CSV from gen-data; built from the config when absent.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct EikonalArgs {
    #[arg(long)]
    run_dir: PathBuf,
    #[arg(long, default_value_t = 65)]
    curves: usize,
    /// Output directory; defaults to the run directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    #[arg(long)]
    store: PathBuf,
    /// Continue a store that already holds results.
    #[arg(long)]
    resume: bool,
}

#[derive(Args)]
struct FitArgs {
    #[arg(long)]
    run_dir: PathBuf,
    /// Series columns to fit.
    #[arg(long, value_delimiter = ',', default_value = "dphi,ltilde_phit")]
    quantity: Vec<String>,
    /// Fit window `lo,hi`; defaults to the last three quarters of the run.
    #[arg(long, value_delimiter = ',')]
    window: Option<Vec<f64>>,
    /// Output file; defaults to `fits.json` in the run directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long, conflicts_with = "store", required_unless_present = "store")]
    run_dir: Option<PathBuf>,
    #[arg(long)]
    store: Option<PathBuf>,
    /// Markdown output; printed to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Run(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::ConfigError { .. } | Error::InvalidConfig(_) => Failure::Usage(e.to_string()),
            other => Failure::Run(other),
        }
    }
}

type CliResult<T = ()> = Result<T, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::GenData(a) => gen_data(a),
        Command::Run(a) => run(a),
        Command::Eikonal(a) => eikonal(a),
        Command::Sweep(a) => sweep_cmd(a),
        Command::FitDecay(a) => fit_cmd(a),
        Command::Report(a) => report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Run(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn mkdir(dir: &Path) -> CliResult {
    fs::create_dir_all(dir).map_err(|e| Failure::Run(Error::Io {
        path: dir.into(),
        message: e.to_string(),
    }))
}

fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| {
        Failure::Run(Error::Io {
            path: path.into(),
            message: e.to_string(),
        })
    })
}

#[derive(Serialize, Deserialize)]
struct DataSidecar {
    params: DataParams,
    bump: BumpSpec,
    n: usize,
    r_max: f64,
    h: f64,
    res1: f64,
    res2: f64,
}

fn gen_data(a: GenData) -> CliResult {
    let params = DataParams::new(a.delta, a.eps0, a.p)?;
    let bump = BumpSpec {
        center: a.center,
        width: a.width,
        amplitude: a.amplitude,
    };
    let r_max = a.r_max.unwrap_or(1.0 + 1.05 * a.t_max + 8.0 * a.delta);
    let grid = match a.grid_n {
        Some(n) => RadialGrid::new(r_max, n)?,
        None => RadialGrid::resolving(r_max, a.delta, 64.0)?,
    };
    let profile = PulseProfile::constrained(bump_profile(a.center, a.width, a.amplitude)?, params);
    let state = build_initial_data(&profile, &params, &grid)?;
    let residuals = check_outgoing_constraint(&state, &params);
    if let Some(dir) = a.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        mkdir(dir)?;
    }
    io::write_state_csv(&a.out, &state, None)?;
    let sidecar = DataSidecar {
        params,
        bump,
        n: grid.n,
        r_max: grid.r_max,
        h: grid.h,
        res1: residuals.res1,
        res2: residuals.res2,
    };
    io::write_json(&a.out.with_extension("json"), &sidecar)?;
    println!(
        "wrote {} ({} cells, {:.1} per delta), constraint residuals {:.3e} {:.3e}",
        a.out.display(),
        grid.n,
        grid.cells_across(a.delta),
        residuals.res1,
        residuals.res2
    );
    Ok(())
}

/// Run metadata without the time series.
#[derive(Serialize, Deserialize)]
struct RunRecord {
    spec: RunSpec,
    n: usize,
    h: f64,
    r_max: f64,
    constraint: pulse_critic::profiles::ConstraintResiduals,
    predicate: pulse_critic::diagnostics::BlowupPredicate,
    geometry: Option<GeometryStats>,
}

fn run(a: RunArgs) -> CliResult {
    let spec = config::parse_run_config(&read_text(&a.config)?)?;
    let initial = match &a.data {
        Some(path) => io::read_state_csv(path, 1.0)?,
        None => pipeline::initial_state(&spec)?.1,
    };
    mkdir(&a.out_dir)?;
    let p = spec.params.p;
    let mut index: Vec<(String, f64)> = Vec::new();
    let mut write_err = None;
    let mut save = |s: &FieldState| {
        let name = io::snapshot_name(s.t);
        if let Err(e) = io::write_state_csv(&a.out_dir.join(&name), s, Some(p)) {
            write_err.get_or_insert(e);
        }
        index.push((name, s.t));
    };
    save(&initial);
    let art = pipeline::execute_from(&spec, initial, Some(&mut save))?;
    if let Some(e) = write_err {
        return Err(e.into());
    }
    io::write_json(&a.out_dir.join(io::SNAPSHOT_INDEX), &index)?;
    let RunSummary {
        spec,
        n,
        h,
        constraint,
        predicate,
        mut outcome,
        geometry,
    } = art.summary;
    io::write_jsonl(&a.out_dir.join("series.jsonl"), &outcome.series)?;
    outcome.series.clear();
    io::write_json(&a.out_dir.join("outcome.json"), &outcome)?;
    let record = RunRecord {
        spec,
        n,
        h,
        r_max: art.initial.grid.r_max,
        constraint,
        predicate,
        geometry,
    };
    io::write_json(&a.out_dir.join("run.json"), &record)?;
    println!(
        "{}: t_final = {}, t* = {}, {} steps",
        outcome.label,
        outcome.t_final,
        outcome.t_star.map_or("none".into(), |t| t.to_string()),
        outcome.steps
    );
    Ok(())
}

fn eikonal(a: EikonalArgs) -> CliResult {
    let record: RunRecord = io::read_json(&a.run_dir.join("run.json"))?;
    let frames = io::load_snapshots(&a.run_dir)?;
    if frames.is_empty() {
        return Err(Failure::Run(Error::HistoryGap { t: 1.0, r: 1.0 }));
    }
    let mut cfg = record.spec.geometry.unwrap_or_default();
    cfg.curves = a.curves;
    let history = SolutionHistory::new(frames)?;
    let tracker = history.track(&record.spec.params, record.spec.solver.order, cfg)?;
    let out = a.out.unwrap_or(a.run_dir);
    mkdir(&out)?;
    let mut csv = String::from("u,t,r,mu,trchi\n");
    let mut curves = Vec::new();
    for ch in tracker.curves() {
        for (k, &(t, r)) in ch.path.iter().enumerate() {
            let c = ch.speed[k];
            csv.push_str(&format!("{},{},{},{},{}\n", num(ch.u_label), num(t), num(r), num(ch.mu[k]), num(trchi(c, r))));
        }
        let mu_min = ch.mu.iter().copied().fold(f64::INFINITY, f64::min);
        curves.push(json!({
            "u": ch.u_label,
            "mu_min": mu_min,
            "mu_final": ch.mu.last(),
            "alive": ch.alive,
            "collapse_t": ch.collapse_t,
        }));
    }
    let path = out.join("characteristics.csv");
    fs::write(&path, csv).map_err(|e| Failure::Run(Error::Io {
        path: path.clone(),
        message: e.to_string(),
    }))?;
    let summary = json!({
        "stats": tracker.stats(),
        "curves": curves,
    });
    io::write_json(&out.join("mu_summary.json"), &summary)?;
    let s = tracker.stats();
    println!(
        "mu_min = {} at t = {}, u = {}; eikonal mu_min = {}",
        s.mu_min,
        s.mu_min_t,
        s.mu_min_u,
        s.mu_min_eikonal.map_or("n/a".into(), |m| m.to_string())
    );
    Ok(())
}

fn sweep_cmd(a: SweepArgs) -> CliResult {
    let cfg: SweepConfig = config::parse_sweep_config(&read_text(&a.config)?)?;
    let workers = match std::env::var("PULSE_CRITIC_THREADS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&w| w >= 1)
            .ok_or_else(|| Failure::Usage(format!("PULSE_CRITIC_THREADS must be a positive integer, got `{v}`")))?,
        Err(_) => a.workers,
    };
    if workers == 0 {
        return Err(Failure::Usage("--workers must be at least 1".into()));
    }
    let jobs = sweep::plan(&cfg)?;
    let store = Store::open(&a.store)?;
    if !a.resume && !store.records()?.is_empty() {
        return Err(Failure::Usage(format!(
            "store {} already holds results; pass --resume to continue it",
            a.store.display()
        )));
    }
    store.write_manifest(&jobs)?;
    let summary = sweep::execute(&cfg, &jobs, workers, &store)?;
    let merged = store.merged()?;
    let failed = merged.iter().filter(|r| r.status == sweep::JobStatus::Failed).count();
    println!(
        "{} jobs: {} skipped, {} ran, {} failed in this pass; {} failed overall",
        summary.planned,
        summary.skipped,
        summary.completed + summary.failed,
        summary.failed,
        failed
    );
    if failed > 0 {
        for r in merged.iter().filter(|r| r.status == sweep::JobStatus::Failed) {
            eprintln!("failed {}: {}", r.id, r.error.as_deref().unwrap_or(""));
        }
        return Err(Failure::Run(Error::InvalidParams(format!("{failed} job(s) failed"))));
    }
    Ok(())
}

fn fit_cmd(a: FitArgs) -> CliResult {
    let series: Vec<Value> = io::read_jsonl(&a.run_dir.join("series.jsonl"))?;
    let t_last = series.iter().filter_map(|v| v["t"].as_f64()).fold(1.0, f64::max);
    let window = match a.window.as_deref() {
        Some([lo, hi]) => (*lo, *hi),
        Some(w) => return Err(Failure::Usage(format!("--window takes `lo,hi`, got {} value(s)", w.len()))),
        None => default_window(t_last),
    };
    let mut fits: BTreeMap<String, Value> = BTreeMap::new();
    for q in &a.quantity {
        let samples: Vec<(f64, f64)> = series
            .iter()
            .filter_map(|v| Some((v["t"].as_f64()?, v.get(q)?.as_f64()?)))
            .collect();
        if samples.is_empty() {
            return Err(Failure::Usage(format!("series has no column `{q}`")));
        }
        let entry = match fit_decay(&samples, window) {
            Ok(f) => json!({ "fit": f }),
            Err(e) => json!({ "error": e.to_string() }),
        };
        fits.insert(q.clone(), entry);
    }
    let out = a.out.unwrap_or_else(|| a.run_dir.join("fits.json"));
    io::write_json(&out, &fits)?;
    for (q, v) in &fits {
        match v.get("fit") {
            Some(f) => println!("{q}: exponent {}", f["exponent"]),
            None => println!("{q}: {}", v["error"]),
        }
    }
    Ok(())
}

fn report(a: ReportArgs) -> CliResult {
    let text = match (&a.run_dir, &a.store) {
        (Some(dir), _) => run_report(dir)?,
        (None, Some(store_dir)) => {
            let store = Store::open(store_dir)?;
            let rep = sweep::phase_report(&store.merged()?);
            let csv = store_dir.join("phase.csv");
            fs::write(&csv, rep.csv()).map_err(|e| Failure::Run(Error::Io {
                path: csv,
                message: e.to_string(),
            }))?;
            rep.markdown()
        }
        (None, None) => return Err(Failure::Usage("pass --run-dir or --store".into())),
    };
    match a.out {
        Some(path) => fs::write(&path, text).map_err(|e| {
            Failure::Run(Error::Io {
                path,
                message: e.to_string(),
            })
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run_report(dir: &Path) -> CliResult<String> {
    let record: RunRecord = io::read_json(&dir.join("run.json"))?;
    let outcome: RunOutcome = io::read_json(&dir.join("outcome.json"))?;
    let q = record.spec.params;
    let mut s = format!("# Run report: p = {}, eps0 = {}, delta = {}\n\n", q.p, q.eps0, q.delta);
    s.push_str(&format!(
        "- grid: n = {}, h = {:.3e}, r_max = {}\n- data: center {}, width {}, amplitude {}\n- constraint residuals: {:.3e}, {:.3e}\n",
        record.n,
        record.h,
        record.r_max,
        record.spec.bump.center,
        record.spec.bump.width,
        record.spec.bump.amplitude,
        record.constraint.res1,
        record.constraint.res2
    ));
    s.push_str(&format!(
        "- breakdown predicate: max = {:.4} ({:?}, threshold {})\n\n",
        record.predicate.lhs_max,
        record.predicate.regime,
        record.predicate.threshold.map_or("none".into(), |t| format!("{t:.4}"))
    ));
    s.push_str(&format!(
        "## Outcome\n\n- verdict: **{}**\n- t_final = {}, steps = {}\n- t* = {}, radius = {}\n",
        outcome.label,
        outcome.t_final,
        outcome.steps,
        outcome.t_star.map_or("none".into(), |t| t.to_string()),
        outcome.blowup_radius.map_or("none".into(), |r| r.to_string())
    ));
    for sig in &outcome.signals {
        s.push_str(&format!("- signal {:?} at t = {}, r = {}, value {:.4e}\n", sig.kind, sig.t, sig.r, sig.value));
    }
    if let Some(d) = outcome.decay {
        s.push_str(&format!("- decay of sup |d phi|: exponent {:.4} (r2 {:.4})\n", d.exponent, d.r2));
    }
    if let Some(g) = record.geometry {
        s.push_str(&format!(
            "\n## Geometry\n\n- mu_min = {:.6} at t = {:.4}, u = {:.4}\n- eikonal mu_min = {}\n- sup |mu - 1| = {:.4e}\n- straightness = {:.3e}\n- mu discrepancy = {}\n",
            g.mu_min,
            g.mu_min_t,
            g.mu_min_u,
            g.mu_min_eikonal.map_or("n/a".into(), |m| format!("{m:.6}")),
            g.mu_deviation,
            g.straightness,
            g.mu_discrepancy.map_or("n/a".into(), |m| format!("{m:.3e}"))
        ));
    }
    let fits_path = dir.join("fits.json");
    if fits_path.exists() {
        let fits: BTreeMap<String, Value> = io::read_json(&fits_path)?;
        s.push_str("\n## Decay fits\n\n| quantity | exponent | amplitude | window | r2 |\n|---|---|---|---|---|\n");
        for (q, v) in fits {
            match serde_json::from_value::<DecayFit>(v["fit"].clone()) {
                Ok(f) => s.push_str(&format!(
                    "| {q} | {:.4} | {:.4e} | [{}, {}] | {:.4} |\n",
                    f.exponent, f.amplitude, f.window.0, f.window.1, f.r2
                )),
                Err(_) => s.push_str(&format!("| {q} | {} | | | |\n", v["error"])),
            }
        }
    }
    Ok(s)
}

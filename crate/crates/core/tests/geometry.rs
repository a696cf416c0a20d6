use pulse_critic::field::FieldState;
use pulse_critic::geometry::{GeometryStats, SolutionHistory};
use pulse_critic::pipeline::{self, BumpSpec, Resolution, RunSpec};
use pulse_critic::profiles::DataParams;
use pulse_critic::solver::Verdict;

fn spec(cells: f64) -> RunSpec {
    let params = DataParams::new(0.1, 0.5, 3).unwrap();
    let bump = BumpSpec {
        amplitude: 0.3,
        ..BumpSpec::default()
    };
    let mut s = RunSpec::new(params, bump, 1.6);
    s.resolution = Resolution::PerDelta(cells);
    s
}

fn stats(cells: f64) -> (f64, GeometryStats) {
    let art = pipeline::execute(&spec(cells)).unwrap();
    assert_eq!(art.summary.outcome.label, Verdict::Global);
    (art.summary.h, art.summary.geometry.unwrap())
}

#[test]
fn foliation_stays_ordered_and_monotone() {
    let (h, g) = stats(64.0);
    assert_eq!(g.crossings, 0);
    assert_eq!(g.foliation_events, 0);
    assert!(g.collapse.is_none());
    assert!(g.u_drift.unwrap() < 5.0 * h);
    assert!(g.mu_min > 0.5 && g.mu_min < 1.0);
}

#[test]
fn density_cross_check_is_first_order() {
    let (_, coarse) = stats(64.0);
    let (_, fine) = stats(128.0);
    let (a, b) = (coarse.mu_discrepancy.unwrap(), fine.mu_discrepancy.unwrap());
    assert!(b < 0.02);
    assert!(b <= 0.6 * a, "{a:e} -> {b:e}");
}

#[test]
fn replaying_every_step_reproduces_the_live_tracker() {
    let mut s = spec(64.0);
    s.solver.snapshot_stride = 1;
    let mut frames: Vec<FieldState> = Vec::new();
    let art = pipeline::execute_with(&s, Some(|f: &FieldState| frames.push(f.clone()))).unwrap();
    frames.insert(0, art.initial.clone());
    let live = art.summary.geometry.unwrap();
    let history = SolutionHistory::new(frames).unwrap();
    let replay = history.track(&s.params, s.solver.order, s.geometry.unwrap()).unwrap();
    let offline = replay.stats();
    assert!((offline.mu_min - live.mu_min).abs() < 1e-12, "{} vs {}", offline.mu_min, live.mu_min);
    assert_eq!(offline.mu_min_eikonal, live.mu_min_eikonal);
    assert_eq!(replay.curves().len(), art.tracker.unwrap().curves().len());
}

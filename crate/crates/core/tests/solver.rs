mod common;

use common::LinearOracle;
use pulse_critic::diagnostics::{convergence_order, ProbeRun};
use pulse_critic::field::{FieldState, RadialGrid};
use pulse_critic::pipeline::{self, BumpSpec, Resolution, RunSpec};
use pulse_critic::profiles::DataParams;
use pulse_critic::solver::{self, RunOutcome, SolverConfig, Verdict};
use pulse_critic::stencil::Order;

fn spec(p: u32, delta: f64, amplitude: f64, t_max: f64, cells: f64) -> RunSpec {
    let params = DataParams::new(delta, 0.5, p).unwrap();
    let bump = BumpSpec {
        amplitude,
        ..BumpSpec::default()
    };
    let mut s = RunSpec::new(params, bump, t_max);
    s.resolution = Resolution::PerDelta(cells);
    s.geometry = None;
    s
}

fn evolve(s: &RunSpec) -> (FieldState, RunOutcome) {
    let art = pipeline::execute(s).unwrap();
    let mut outcome = art.summary.outcome;
    let last = outcome.final_state.take().expect("final state");
    (last, outcome)
}

/// Gaussian pulse of width `delta / 4` centred inside `(1 - delta, 1)`.
fn gaussian_pulse(amp: f64, delta: f64, t_max: f64, n: usize) -> (FieldState, LinearOracle) {
    let (r0, w) = (1.0 - 0.5 * delta, delta / 4.0);
    let g = move |r: f64| amp * (-((r - r0) / w).powi(2)).exp();
    let dg = move |r: f64| -2.0 * (r - r0) / (w * w) * g(r);
    let r_max = 1.0 + 1.05 * (t_max - 1.0) + 8.0 * delta;
    let grid = RadialGrid::new(r_max, n).unwrap();
    let state = FieldState::from_fn(1.0, grid, |r| (g(r), -dg(r)));
    let oracle = LinearOracle::new(
        Box::new(g),
        Box::new(dg),
        Box::new(move |r| -dg(r)),
        (r0 - 10.0 * w, r0 + 10.0 * w),
    );
    (state, oracle)
}

#[test]
fn linear_regime_matches_spherical_means() {
    let (initial, oracle) = gaussian_pulse(1e-6, 0.1, 2.0, 4096);
    assert!(oracle.relative_error(&initial) < 1e-13);
    let cfg = SolverConfig::new(3, 2.0);
    let outcome = solver::run(&cfg, initial).unwrap();
    assert_eq!(outcome.label, Verdict::Global);
    let last = outcome.final_state.unwrap();
    assert!((last.t - 2.0).abs() < 1e-12);
    let err = oracle.relative_error(&last);
    assert!(err < 1e-4, "relative error {err:e}");
}

#[test]
fn linear_pulse_data_match_spherical_means() {
    let s = spec(3, 0.1, 1e-6, 2.0, 256.0);
    let (last, _) = evolve(&s);
    let oracle = LinearOracle::from_profile(s.profile().unwrap(), s.params);
    let err = oracle.relative_error(&last);
    assert!(err < 2e-3, "relative error {err:e}");
}

#[test]
fn oracle_reproduces_the_data() {
    let s = spec(3, 0.1, 1e-6, 2.0, 64.0);
    let (_, initial) = pipeline::initial_state(&s).unwrap();
    let oracle = LinearOracle::from_profile(s.profile().unwrap(), s.params);
    let err = oracle.relative_error(&initial);
    assert!(err < 1e-13, "{err:e}");
}

fn observed_order(order: Order, n: usize) -> f64 {
    let finals: Vec<RunOutcome> = [1, 2, 4]
        .iter()
        .map(|k| {
            let (initial, _) = gaussian_pulse(0.003, 0.1, 1.5, n * k);
            let mut cfg = SolverConfig::new(3, 1.5);
            cfg.order = order;
            solver::run(&cfg, initial).unwrap()
        })
        .collect();
    let runs = [0, 1, 2].map(|k| ProbeRun {
        state: finals[k].final_state.as_ref().unwrap(),
        guard_fired_at: finals[k].signals.first().map(|g| g.t),
    });
    convergence_order(runs, 1.5).unwrap()
}

#[test]
fn fourth_order_scheme_converges_at_fourth_order() {
    let q = observed_order(Order::Fourth, 1024);
    assert!((q - 4.0).abs() <= 0.3, "observed order {q}");
}

#[test]
fn second_order_scheme_converges_at_second_order() {
    let q = observed_order(Order::Second, 1024);
    assert!((q - 2.0).abs() <= 0.3, "observed order {q}");
}

#[test]
fn forward_then_backward_returns_the_state() {
    let grid = RadialGrid::new(8.0, 800).unwrap();
    let initial = FieldState::from_fn(1.0, grid, |r| {
        let g = 0.05 * (-4.0 * (r - 4.0) * (r - 4.0)).exp();
        (g, -8.0 * (r - 4.0) * g)
    });
    let dt = 0.05 * grid.h;
    let mut state = initial.clone();
    for _ in 0..10 {
        state = solver::step(&state, dt, 3, Order::Fourth, 0.1).unwrap();
    }
    for _ in 0..10 {
        state = solver::step(&state, -dt, 3, Order::Fourth, 0.1).unwrap();
    }
    assert!((state.t - 1.0).abs() < 1e-14);
    let scale = initial.phit.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let err = state
        .phit
        .iter()
        .zip(&initial.phit)
        .chain(state.phi.iter().zip(&initial.phi))
        .fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
    // 20 steps, each amplifying roundoff by at most the stencil norm
    let bound = 10.0 * f64::EPSILON * 20.0 * 8.0;
    assert!(err / scale < bound, "relative return error {:e}", err / scale);
}

#[test]
fn zero_data_stays_zero() {
    let s = spec(3, 0.1, 0.0, 1.5, 32.0);
    let (last, outcome) = evolve(&s);
    assert_eq!(outcome.label, Verdict::Global);
    assert!(last.phi.iter().chain(&last.phit).all(|v| *v == 0.0));
    assert!(outcome.series.iter().all(|d| d.norms.dphi == 0.0 && d.energy == 0.0));
}

#[test]
fn small_pulse_stays_inside_its_light_cone() {
    let s = spec(3, 0.05, 1e-6, 2.0, 128.0);
    let (_, outcome) = evolve(&s);
    let worst = outcome.series.iter().map(|d| d.outside_envelope).fold(0.0, f64::max);
    assert!(worst < 1e-12, "outside envelope {worst:e}");
}

#[test]
fn light_cone_leak_shrinks_with_the_grid() {
    let leak = |cells: f64| {
        let (_, outcome) = evolve(&spec(3, 0.1, 0.3, 1.5, cells));
        outcome.series.iter().map(|d| d.outside_envelope).fold(0.0, f64::max)
    };
    let (coarse, fine) = (leak(64.0), leak(128.0));
    assert!(fine < coarse / 16.0, "leak {coarse:e} -> {fine:e}");
}

#[test]
fn linear_energy_is_conserved() {
    let (_, outcome) = evolve(&spec(3, 0.1, 1e-6, 2.0, 128.0));
    let e0 = outcome.series[0].energy;
    let drift = outcome.series.iter().map(|d| (d.energy - e0).abs() / e0).fold(0.0, f64::max);
    assert!(drift < 1e-3, "energy drift {drift:e}");
}

#[test]
fn global_nonlinear_energy_stays_bounded() {
    let (_, outcome) = evolve(&spec(3, 0.1, 0.3, 3.0, 64.0));
    assert_eq!(outcome.label, Verdict::Global);
    let e0 = outcome.series[0].energy;
    let drift = outcome.series.iter().map(|d| (d.energy - e0).abs() / e0).fold(0.0, f64::max);
    assert!(drift < 0.05, "energy drift {drift}");
}

//! Method-of-lines evolution of the radially reduced equation
//! `(1 + phit^p) phi_tt = phi_rr + (2/r) phi_r` from `t = 1`, with
//! hyperbolicity guards and breakdown detection.

mod integrator;

use serde::{Deserialize, Serialize};

pub use integrator::Rk4;

use crate::diagnostics::{self, DecayFit, SupNorms};
use crate::error::{Error, Result};
use crate::field::{wave_speed, FieldState};
use crate::stencil::{self, Order};

/// Extra cells kept live ahead of the propagation envelope.
const ENVELOPE_MARGIN_CELLS: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub p: u32,
    pub order: Order,
    pub cfl: f64,
    pub t_max: f64,
    /// Absolute cap on `sup |d_r d_t phi|`.
    pub blowup_grad_cap: f64,
    /// Cap on the growth of `t sup |d_r d_t phi|` relative to its value at
    /// the start of the run; `None` disables it.
    pub grad_growth_cap: Option<f64>,
    pub hyp_floor: f64,
    pub mu_floor: f64,
    pub dt_floor: f64,
    /// Envelope speed used for the live window and the finite-propagation check.
    pub envelope_speed: f64,
    /// Emit a snapshot every this many steps; 0 disables snapshots.
    pub snapshot_stride: usize,
    pub diag_stride: usize,
}

impl SolverConfig {
    pub fn new(p: u32, t_max: f64) -> Self {
        SolverConfig {
            p,
            order: Order::Fourth,
            cfl: 0.4,
            t_max,
            blowup_grad_cap: 1e6,
            grad_growth_cap: Some(4.0),
            hyp_floor: 0.1,
            mu_floor: 1e-3,
            dt_floor: 1e-10,
            envelope_speed: 1.05,
            snapshot_stride: 0,
            diag_stride: 10,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.p < 1 {
            return bad("p must be at least 1".into());
        }
        if !(self.cfl > 0.0 && self.cfl <= 0.9) {
            return bad(format!("cfl must lie in (0, 0.9], got {}", self.cfl));
        }
        if !(self.blowup_grad_cap > 0.0) {
            return bad(format!("blowup_grad_cap must be positive, got {}", self.blowup_grad_cap));
        }
        if let Some(g) = self.grad_growth_cap {
            if !(g > 1.0) {
                return bad(format!("grad_growth_cap must exceed 1, got {g}"));
            }
        }
        if !(self.hyp_floor > 0.0 && self.hyp_floor < 1.0) {
            return bad(format!("hyp_floor must lie in (0, 1), got {}", self.hyp_floor));
        }
        if !(self.mu_floor > 0.0 && self.mu_floor < 1.0) {
            return bad(format!("mu_floor must lie in (0, 1), got {}", self.mu_floor));
        }
        if !(self.dt_floor > 0.0) {
            return bad(format!("dt_floor must be positive, got {}", self.dt_floor));
        }
        if !(self.t_max.is_finite() && self.t_max > 0.0) {
            return bad(format!("t_max must be positive, got {}", self.t_max));
        }
        if !(self.envelope_speed >= 1.0) {
            return bad(format!("envelope_speed must be at least 1, got {}", self.envelope_speed));
        }
        if self.diag_stride == 0 {
            return bad("diag_stride must be at least 1".into());
        }
        Ok(())
    }

    /// Outer radius a grid must reach so the pulse never meets the edge.
    pub fn required_r_max(&self) -> f64 {
        1.0 + self.envelope_speed * self.t_max
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Global,
    Blowup,
    Inconclusive,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Global => "global",
            Verdict::Blowup => "blowup",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignalKind {
    GradientCap,
    MuCollapse,
    DtCollapse,
}

/// A breakdown guard that fired.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Signal {
    pub kind: SignalKind,
    pub t: f64,
    pub r: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Termination {
    ReachedTMax,
    Certified,
    DtCollapse { t: f64, dt: f64 },
    HyperbolicityLoss { t: f64, r: f64, value: f64 },
    NumericalBreakdown { t: f64 },
    MonitorFailure { message: String },
}

/// One row of the diagnostic time series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagRecord {
    pub t: f64,
    pub dt: f64,
    #[serde(flatten)]
    pub norms: SupNorms,
    /// `sup |d_r d_t phi|`.
    pub grad: f64,
    pub energy: f64,
    /// Largest field value outside the propagation envelope.
    pub outside_envelope: f64,
    pub mu_min: Option<f64>,
    pub mu_min_eikonal: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOutcome {
    pub label: Verdict,
    pub t_star: Option<f64>,
    pub blowup_radius: Option<f64>,
    pub termination: Termination,
    pub signals: Vec<Signal>,
    pub steps: usize,
    pub t_final: f64,
    /// Decay fit of `sup |d phi|` over `[t_max/4, t_max]` for global runs.
    pub decay: Option<DecayFit>,
    pub series: Vec<DiagRecord>,
    #[serde(skip)]
    pub final_state: Option<FieldState>,
}

impl RunOutcome {
    pub fn first_signal(&self, kind: SignalKind) -> Option<&Signal> {
        self.signals.iter().find(|s| s.kind == kind)
    }

    /// Earliest time any guard or error interrupted smooth evolution.
    pub fn first_guard_time(&self) -> Option<f64> {
        let signal = self.signals.iter().map(|s| s.t).reduce(f64::min);
        let error = match self.termination {
            Termination::HyperbolicityLoss { t, .. }
            | Termination::NumericalBreakdown { t }
            | Termination::DtCollapse { t, .. } => Some(t),
            _ => None,
        };
        match (signal, error) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        }
    }
}

/// What a step observer reports back to the integrator.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MonitorReport {
    /// Current minimum of the inverse foliation density and where it sits.
    pub mu_min: Option<(f64, f64)>,
    pub mu_min_eikonal: Option<f64>,
}

/// Hook called after every accepted step.
pub trait StepMonitor {
    /// Next time after `t` the integrator must land on exactly.
    fn next_stop(&self, t: f64) -> Option<f64>;

    fn observe(&mut self, prev: &FieldState, next: &FieldState) -> Result<MonitorReport>;
}

/// Integrator front end: configuration plus optional observers.
pub struct Solver<'a> {
    config: SolverConfig,
    monitor: Option<&'a mut dyn StepMonitor>,
    on_snapshot: Option<Box<dyn FnMut(&FieldState) + 'a>>,
}

impl<'a> Solver<'a> {
    pub fn new(config: SolverConfig) -> Result<Self> {
        config.validate()?;
        Ok(Solver {
            config,
            monitor: None,
            on_snapshot: None,
        })
    }

    pub fn with_monitor(mut self, monitor: &'a mut dyn StepMonitor) -> Self {
        self.monitor = Some(monitor);
        self
    }

    pub fn on_snapshot(mut self, f: impl FnMut(&FieldState) + 'a) -> Self {
        self.on_snapshot = Some(Box::new(f));
        self
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    /// Integrates until `t_max` or until a guard ends the run. Errors are
    /// folded into the outcome.
    pub fn run(mut self, initial: FieldState) -> RunOutcome {
        let cfg = self.config;
        let grid = initial.grid;
        let h = grid.h;
        let t0 = initial.t;
        let front0 = initial.support_end().map_or(0.0, |i| grid.r(i));
        let window_end = |t: f64| {
            let r = front0 + cfg.envelope_speed * (t - t0).max(0.0);
            ((r / h).ceil() as usize + ENVELOPE_MARGIN_CELLS).min(grid.n)
        };

        let mut rk = Rk4::new(grid, cfg.order, cfg.p, cfg.hyp_floor);
        let mut state = initial;
        let mut signals: Vec<Signal> = Vec::new();
        let mut series = Vec::new();
        let mut steps = 0usize;
        let mut last_dt = 0.0;
        let mut report = MonitorReport::default();

        let (grad_start, _) = grad_sup(&state, cfg.order, window_end(state.t));
        let grad_ref = grad_start * state.t;

        let record = |state: &FieldState, dt: f64, report: &MonitorReport| DiagRecord {
            t: state.t,
            dt,
            norms: diagnostics::sup_norms_with(state, cfg.p, cfg.order),
            grad: grad_sup(state, cfg.order, grid.n).0,
            energy: diagnostics::energy(state, cfg.p),
            outside_envelope: outside_envelope(state, front0, t0, cfg.envelope_speed),
            mu_min: report.mu_min.map(|m| m.0),
            mu_min_eikonal: report.mu_min_eikonal,
        };
        series.push(record(&state, 0.0, &report));

        let termination = loop {
            if state.t >= cfg.t_max * (1.0 - 1e-14) {
                break Termination::ReachedTMax;
            }
            let hi = window_end(state.t);
            let c_max = state.phit[..=hi]
                .iter()
                .map(|&v| wave_speed(v, cfg.p))
                .fold(1.0f64, |a, c| if c.is_nan() { f64::NAN } else { a.max(c) });
            if c_max.is_nan() {
                break Termination::HyperbolicityLoss {
                    t: state.t,
                    r: f64::NAN,
                    value: f64::NAN,
                };
            }
            let dt_cfl = cfg.cfl * h / c_max;
            if dt_cfl < cfg.dt_floor {
                signals.push(Signal {
                    kind: SignalKind::DtCollapse,
                    t: state.t,
                    r: f64::NAN,
                    value: dt_cfl,
                });
                break Termination::DtCollapse { t: state.t, dt: dt_cfl };
            }
            let mut stop = cfg.t_max;
            if let Some(s) = self.monitor.as_ref().and_then(|m| m.next_stop(state.t)) {
                if s > state.t {
                    stop = stop.min(s);
                }
            }
            let dt = if state.t + dt_cfl >= stop { stop - state.t } else { dt_cfl };

            let mut next = match rk.step(&state, dt, hi) {
                Ok(next) => next,
                Err(e) => break termination_of(e),
            };
            if next.t > stop - 1e-13 * stop.abs().max(1.0) {
                next.t = stop;
            }
            steps += 1;
            last_dt = dt;

            let hi_next = window_end(next.t);
            let (grad, r_grad) = grad_sup(&next, cfg.order, hi_next);
            if !grad.is_finite() {
                state = next;
                break Termination::NumericalBreakdown { t: state.t };
            }
            let over_cap = grad > cfg.blowup_grad_cap;
            let over_growth = cfg
                .grad_growth_cap
                .is_some_and(|g| grad_ref > 0.0 && grad * next.t > g * grad_ref);
            if (over_cap || over_growth) && !has(&signals, SignalKind::GradientCap) {
                signals.push(Signal {
                    kind: SignalKind::GradientCap,
                    t: next.t,
                    r: r_grad,
                    value: grad,
                });
            }

            if let Some(monitor) = self.monitor.as_deref_mut() {
                match monitor.observe(&state, &next) {
                    Ok(r) => report = r,
                    Err(e) => {
                        state = next;
                        break Termination::MonitorFailure { message: e.to_string() };
                    }
                }
                if let Some((mu, r_mu)) = report.mu_min {
                    if mu < cfg.mu_floor && !has(&signals, SignalKind::MuCollapse) {
                        signals.push(Signal {
                            kind: SignalKind::MuCollapse,
                            t: next.t,
                            r: r_mu,
                            value: mu,
                        });
                    }
                }
            }

            state = next;
            if steps % cfg.diag_stride == 0 {
                series.push(record(&state, dt, &report));
            }
            if cfg.snapshot_stride > 0 && steps % cfg.snapshot_stride == 0 {
                if let Some(f) = self.on_snapshot.as_mut() {
                    f(&state);
                }
            }
            if certified(&signals) {
                break Termination::Certified;
            }
        };

        if series.last().map_or(true, |r| r.t != state.t) && state.is_finite() {
            series.push(record(&state, last_dt, &report));
        }
        if let Some(f) = self.on_snapshot.as_mut() {
            if cfg.snapshot_stride > 0 && steps % cfg.snapshot_stride != 0 && state.is_finite() {
                f(&state);
            }
        }

        classify(cfg, termination, signals, series, steps, state)
    }
}

fn has(signals: &[Signal], kind: SignalKind) -> bool {
    signals.iter().any(|s| s.kind == kind)
}

/// Breakdown needs the gradient guard corroborated by a second, independent signal.
fn certified(signals: &[Signal]) -> bool {
    has(signals, SignalKind::GradientCap)
        && (has(signals, SignalKind::MuCollapse) || has(signals, SignalKind::DtCollapse))
}

fn termination_of(e: Error) -> Termination {
    match e {
        Error::HyperbolicityLoss { t, r, value } => Termination::HyperbolicityLoss { t, r, value },
        Error::NumericalBreakdown { t } => Termination::NumericalBreakdown { t },
        other => Termination::MonitorFailure {
            message: other.to_string(),
        },
    }
}

fn classify(
    cfg: SolverConfig,
    termination: Termination,
    signals: Vec<Signal>,
    series: Vec<DiagRecord>,
    steps: usize,
    state: FieldState,
) -> RunOutcome {
    let first = signals
        .iter()
        .copied()
        .reduce(|a, b| if b.t < a.t { b } else { a });
    let label = if certified(&signals) {
        Verdict::Blowup
    } else if termination == Termination::ReachedTMax && signals.is_empty() {
        Verdict::Global
    } else {
        Verdict::Inconclusive
    };
    let (t_star, blowup_radius) = match (label, first) {
        (Verdict::Blowup, Some(s)) => {
            let r = if s.r.is_finite() {
                s.r
            } else {
                signals.iter().find(|x| x.r.is_finite()).map_or(f64::NAN, |x| x.r)
            };
            (Some(s.t), Some(r))
        }
        _ => (None, None),
    };
    let decay = if label == Verdict::Global {
        let samples: Vec<(f64, f64)> = series.iter().map(|r| (r.t, r.norms.dphi)).collect();
        diagnostics::fit_decay(&samples, diagnostics::default_window(cfg.t_max)).ok()
    } else {
        None
    };
    RunOutcome {
        label,
        t_star,
        blowup_radius,
        termination,
        signals,
        steps,
        t_final: state.t,
        decay,
        series,
        final_state: Some(state),
    }
}

/// `sup |d_r d_t phi|` over nodes `0..=hi` and where it is attained.
pub fn grad_sup(state: &FieldState, order: Order, hi: usize) -> (f64, f64) {
    let g = order.ghosts();
    let hi = hi.min(state.grid.n);
    let mut buf = Vec::new();
    stencil::pad_into(&state.phit[..], g, &mut buf);
    let inv_h = 1.0 / state.grid.h;
    let mut best = (0.0f64, 0.0);
    for i in 0..=hi {
        let d = stencil::d1_at(&buf, i + g, inv_h, order).abs();
        if d.is_nan() {
            return (f64::NAN, state.grid.r(i));
        }
        if d > best.0 {
            best = (d, state.grid.r(i));
        }
    }
    best
}

/// Largest `|phi|, |phit|` beyond `front0 + speed (t - t0)`.
pub fn outside_envelope(state: &FieldState, front0: f64, t0: f64, speed: f64) -> f64 {
    let edge = front0 + speed * (state.t - t0) + 4.0 * state.grid.h;
    state
        .grid
        .nodes()
        .enumerate()
        .filter(|(_, r)| *r > edge)
        .map(|(i, _)| state.phi[i].abs().max(state.phit[i].abs()))
        .fold(0.0, f64::max)
}

/// Right-hand side `(d_t phi, d_t phit)` of the radial equation on the whole grid.
pub fn rhs(state: &FieldState, p: u32, order: Order, hyp_floor: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    Rk4::new(state.grid, order, p, hyp_floor).rhs_of(state)
}

/// A single RK4 step over the whole grid.
pub fn step(state: &FieldState, dt: f64, p: u32, order: Order, hyp_floor: f64) -> Result<FieldState> {
    let mut rk = Rk4::new(state.grid, order, p, hyp_floor);
    rk.step(state, dt, state.grid.n)
}

/// Runs without observers.
pub fn run(config: &SolverConfig, initial: FieldState) -> Result<RunOutcome> {
    Ok(Solver::new(*config)?.run(initial))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::RadialGrid;

    #[test]
    fn zero_state_has_zero_rhs_and_stays_zero() {
        let grid = RadialGrid::new(4.0, 400).unwrap();
        let zero = FieldState::zeros(1.0, grid);
        let (a, b) = rhs(&zero, 3, Order::Fourth, 0.1).unwrap();
        assert!(a.iter().chain(&b).all(|&v| v == 0.0));
        let next = step(&zero, 0.004, 3, Order::Fourth, 0.1).unwrap();
        assert_eq!(next.phi, zero.phi);
        assert_eq!(next.phit, zero.phit);
    }

    #[test]
    fn quadratic_profile_has_laplacian_six() {
        let grid = RadialGrid::new(2.0, 200).unwrap();
        let state = FieldState::from_fn(1.0, grid, |r| (r * r, 0.0));
        for order in [Order::Second, Order::Fourth] {
            let (dphi, dphit) = rhs(&state, 3, order, 0.1).unwrap();
            assert!(dphi.iter().all(|&v| v == 0.0));
            for v in &dphit[..grid.len() - order.ghosts()] {
                assert!((v - 6.0).abs() < 1e-10, "{v}");
            }
        }
    }

    #[test]
    fn one_step_on_quadratic_is_exact() {
        let grid = RadialGrid::new(2.0, 200).unwrap();
        let state = FieldState::from_fn(1.0, grid, |r| (r * r, 0.0));
        let dt = 0.004;
        let next = step(&state, dt, 8, Order::Fourth, 0.1).unwrap();
        for i in 0..grid.len() - 8 {
            assert!((next.phit[i] - 6.0 * dt).abs() < 1e-12);
            let r = grid.r(i);
            assert!((next.phi[i] - (r * r + 3.0 * dt * dt)).abs() < 1e-12);
        }
    }

    #[test]
    fn hyperbolicity_loss_is_located() {
        let grid = RadialGrid::new(2.0, 200).unwrap();
        let state = FieldState::from_fn(1.0, grid, |r| (0.0, if (r - 1.0).abs() < 0.05 { -0.99 } else { 0.0 }));
        match rhs(&state, 1, Order::Fourth, 0.1) {
            Err(Error::HyperbolicityLoss { r, .. }) => assert!((r - 1.0).abs() < 0.06),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn config_validation() {
        let mut cfg = SolverConfig::new(3, 2.0);
        assert!(cfg.validate().is_ok());
        cfg.cfl = 0.95;
        assert!(cfg.validate().is_err());
        cfg.cfl = 0.4;
        cfg.hyp_floor = 1.0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn zero_data_runs_global_with_zero_series() {
        let grid = RadialGrid::new(3.2, 320).unwrap();
        let mut cfg = SolverConfig::new(3, 2.0);
        cfg.grad_growth_cap = None;
        let out = run(&cfg, FieldState::zeros(1.0, grid)).unwrap();
        assert_eq!(out.label, Verdict::Global);
        assert!(out.series.iter().all(|r| r.norms.dphi == 0.0 && r.energy == 0.0 && r.grad == 0.0));
        assert!((out.t_final - 2.0).abs() < 1e-12);
    }
}

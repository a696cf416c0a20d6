//! Outgoing characteristics, the optical function and the inverse foliation
//! density `mu`, computed two ways: along traced curves and from an upwind
//! eikonal solve.

mod eikonal;
mod slab;

use serde::{Deserialize, Serialize};

pub use eikonal::{EikonalField, FoliationDegenerate};
pub use slab::{BandFrame, Slab};

use crate::error::{Error, Result};
use crate::field::{wave_speed, FieldState};
use crate::profiles::DataParams;
use crate::solver::{MonitorReport, StepMonitor};
use crate::stencil::Order;

pub const DEFAULT_CURVES: usize = 65;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeometryConfig {
    pub curves: usize,
    /// Keep every this many substeps of each curve's path.
    pub record_stride: usize,
    /// Eikonal band extends this many cells past the outermost curves.
    pub band_margin_cells: usize,
    pub cfl: f64,
    pub eikonal: bool,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        GeometryConfig {
            curves: DEFAULT_CURVES,
            record_stride: 10,
            band_margin_cells: 16,
            cfl: 0.4,
            eikonal: true,
        }
    }
}

impl GeometryConfig {
    pub fn validate(&self) -> Result<()> {
        if self.curves < 2 {
            return Err(Error::InvalidConfig(format!("at least 2 curves needed, got {}", self.curves)));
        }
        if self.record_stride == 0 {
            return Err(Error::InvalidConfig("record_stride must be at least 1".into()));
        }
        if !(self.cfl > 0.0 && self.cfl <= 0.9) {
            return Err(Error::InvalidConfig(format!("geometry cfl must lie in (0, 0.9], got {}", self.cfl)));
        }
        Ok(())
    }
}

/// One traced outgoing characteristic `dr/dt = c`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Characteristic {
    pub u_label: f64,
    /// Recorded `(t, r)` samples.
    pub path: Vec<(f64, f64)>,
    pub mu: Vec<f64>,
    /// Wave speed at the recorded samples.
    pub speed: Vec<f64>,
    pub alive: bool,
    pub collapse_t: Option<f64>,
    t: f64,
    r: f64,
    /// `ln(mu / c)`, which obeys `d/dt ln(mu / c) = d_r c`.
    log_ratio: f64,
    c: f64,
}

/// Values below this count as a collapsed density.
const MU_DEAD: f64 = 1e-12;

impl Characteristic {
    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn current_mu(&self) -> f64 {
        self.c * self.log_ratio.exp()
    }

    pub fn current_speed(&self) -> f64 {
        self.c
    }

    fn record(&mut self) {
        if self.path.last().map_or(true, |&(t, _)| t != self.t) {
            self.path.push((self.t, self.r));
            self.mu.push(self.current_mu());
            self.speed.push(self.c);
        }
    }
}

/// Start time of the foliation, `1 + 2 delta`.
pub fn foliation_start(delta: f64) -> f64 {
    1.0 + 2.0 * delta
}

/// Seeds `count` curves with labels spread evenly over `[0, 4 delta]` at
/// `r = 1 + 2 delta - u`, with `mu = c` there. `state` must sit at the
/// foliation start.
pub fn seed_characteristics(delta: f64, count: usize, p: u32, state: &FieldState) -> Result<Vec<Characteristic>> {
    if count < 2 {
        return Err(Error::InvalidConfig(format!("at least 2 curves needed, got {count}")));
    }
    let t0 = foliation_start(delta);
    if (state.t - t0).abs() > 1e-12 * t0 {
        return Err(Error::HistoryGap { t: t0, r: t0 });
    }
    let n = state.grid.n;
    let i = ((1.0 + 2.0 * delta) / state.grid.h).ceil() as usize + 4;
    let j = ((1.0 - 2.0 * delta) / state.grid.h).floor() as usize;
    if i > n || j < 4 {
        return Err(Error::HistoryGap { t: t0, r: 1.0 + 2.0 * delta });
    }
    let frame = BandFrame::new(state, j - 4, i, Order::Fourth);
    let slab = Slab {
        before: frame.clone(),
        after: frame,
        p,
    };
    (0..count)
        .map(|k| {
            let u = 4.0 * delta * k as f64 / (count - 1) as f64;
            let r = t0 - u;
            let (c, _) = slab.speed(t0, r)?;
            let mut ch = Characteristic {
                u_label: u,
                path: Vec::new(),
                mu: Vec::new(),
                speed: Vec::new(),
                alive: true,
                collapse_t: None,
                t: t0,
                r,
                log_ratio: 0.0,
                c,
            };
            ch.record();
            Ok(ch)
        })
        .collect()
}

/// One RK4 step of `(r, ln(mu/c))` across `[slab.before.t, slab.after.t]`
/// restricted to `[t_a, t_b]`.
pub fn advance_characteristic(ch: &mut Characteristic, slab: &Slab, t_b: f64) -> Result<()> {
    if !ch.alive {
        return Ok(());
    }
    let t_a = ch.t;
    let dt = t_b - t_a;
    let f = |t: f64, r: f64| slab.speed(t, r);
    let (c1, g1) = f(t_a, ch.r)?;
    let (c2, g2) = f(t_a + 0.5 * dt, ch.r + 0.5 * dt * c1)?;
    let (c3, g3) = f(t_a + 0.5 * dt, ch.r + 0.5 * dt * c2)?;
    let (c4, g4) = f(t_b, ch.r + dt * c3)?;
    ch.r += dt / 6.0 * (c1 + 2.0 * (c2 + c3) + c4);
    ch.log_ratio += dt / 6.0 * (g1 + 2.0 * (g2 + g3) + g4);
    ch.t = t_b;
    ch.c = f(t_b, ch.r)?.0;
    let mu = ch.current_mu();
    if !(mu > MU_DEAD) {
        ch.alive = false;
        ch.collapse_t = Some(t_b);
        ch.record();
    }
    Ok(())
}

/// `(mu_min, t, u)` over every recorded sample; `None` for an empty bundle.
pub fn min_mu(curves: &[Characteristic]) -> Option<(f64, f64, f64)> {
    curves
        .iter()
        .flat_map(|ch| ch.path.iter().zip(&ch.mu).map(move |(&(t, _), &m)| (m, t, ch.u_label)))
        .reduce(|a, b| if b.0 < a.0 { b } else { a })
}

/// Null expansion along a curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrChiSeries {
    pub t: Vec<f64>,
    pub trchi: Vec<f64>,
    /// `trchi - 2 / (t - u)`.
    pub trchi_check: Vec<f64>,
    /// Largest defect of the radial transport law
    /// `L trchi = c^-1 (L c) trchi - trchi^2 / 2` over interior samples.
    pub residual: f64,
}

pub fn trchi(c: f64, r: f64) -> f64 {
    2.0 * c / r
}

pub fn trchi_check(c: f64, r: f64, t: f64, u: f64) -> f64 {
    trchi(c, r) - 2.0 / (t - u)
}

pub fn radial_trchi(ch: &Characteristic) -> TrChiSeries {
    let t: Vec<f64> = ch.path.iter().map(|p| p.0).collect();
    let tr: Vec<f64> = ch.path.iter().zip(&ch.speed).map(|(&(_, r), &c)| trchi(c, r)).collect();
    let check = ch
        .path
        .iter()
        .zip(&ch.speed)
        .map(|(&(t, r), &c)| trchi_check(c, r, t, ch.u_label))
        .collect();
    let mut residual: f64 = 0.0;
    for k in 1..t.len().saturating_sub(1) {
        let span = t[k + 1] - t[k - 1];
        if !(span > 0.0) {
            continue;
        }
        let l_tr = (tr[k + 1] - tr[k - 1]) / span;
        let l_c = (ch.speed[k + 1] - ch.speed[k - 1]) / span;
        let rhs = l_c / ch.speed[k] * tr[k] - 0.5 * tr[k] * tr[k];
        residual = residual.max((l_tr - rhs).abs());
    }
    TrChiSeries {
        t,
        trchi: tr,
        trchi_check: check,
        residual,
    }
}

/// Gaussian curvature `(1/2) c^-2 ((tr chi)^2 - |chi|^2)` of the sphere of
/// radius `r` with radial `|chi|^2 = (tr chi)^2 / 2`.
pub fn gaussian_curvature(c: f64, r: f64) -> f64 {
    let tr = trchi(c, r);
    let norm_sq = 0.5 * tr * tr;
    0.5 * (tr * tr - norm_sq) / (c * c)
}

/// Running extrema gathered while tracking.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeometryStats {
    pub t0: f64,
    pub t_last: f64,
    pub mu_min: f64,
    pub mu_min_t: f64,
    pub mu_min_u: f64,
    pub mu_min_eikonal: Option<f64>,
    /// `sup |mu - 1|` over curves and time.
    pub mu_deviation: f64,
    /// `sup t^2 |trchi_check|`.
    pub trchi_check_weighted: f64,
    /// `sup |(t - r) - 2 delta|` on the middle curve `u = 2 delta`.
    pub straightness: f64,
    /// `sup |mu_eikonal / mu - 1|` at the curves.
    pub mu_discrepancy: Option<f64>,
    /// `sup |u(t, r(t)) - u_label|`.
    pub u_drift: Option<f64>,
    pub crossings: usize,
    pub foliation_events: usize,
    pub collapse: Option<(f64, f64)>,
}

impl GeometryStats {
    fn new(t0: f64) -> Self {
        GeometryStats {
            t0,
            t_last: t0,
            mu_min: f64::INFINITY,
            mu_min_t: t0,
            mu_min_u: 0.0,
            mu_min_eikonal: None,
            mu_deviation: 0.0,
            trchi_check_weighted: 0.0,
            straightness: 0.0,
            mu_discrepancy: None,
            u_drift: None,
            crossings: 0,
            foliation_events: 0,
            collapse: None,
        }
    }
}

fn max_opt(a: Option<f64>, b: f64) -> Option<f64> {
    Some(a.map_or(b, |a| a.max(b)))
}

/// Follows the solver clock, seeding at `1 + 2 delta` and then advancing
/// curves and the eikonal band over each stored step.
pub struct GeometryTracker {
    config: GeometryConfig,
    delta: f64,
    p: u32,
    order: Order,
    t0: f64,
    curves: Vec<Characteristic>,
    eikonal: Option<EikonalField>,
    stats: GeometryStats,
    substeps: usize,
    middle: usize,
    c_nodes: Vec<f64>,
}

impl GeometryTracker {
    pub fn new(params: &DataParams, order: Order, config: GeometryConfig) -> Result<Self> {
        config.validate()?;
        let t0 = foliation_start(params.delta);
        Ok(GeometryTracker {
            config,
            delta: params.delta,
            p: params.p,
            order,
            t0,
            curves: Vec::new(),
            eikonal: None,
            stats: GeometryStats::new(t0),
            substeps: 0,
            middle: config.curves / 2,
            c_nodes: Vec::new(),
        })
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn curves(&self) -> &[Characteristic] {
        &self.curves
    }

    pub fn eikonal(&self) -> Option<&EikonalField> {
        self.eikonal.as_ref()
    }

    pub fn stats(&self) -> &GeometryStats {
        &self.stats
    }

    pub fn is_seeded(&self) -> bool {
        !self.curves.is_empty()
    }

    fn comoving_band(&self, t: f64, h: f64) -> Option<(isize, isize)> {
        let (lo, hi) = radial_span(&self.curves)?;
        let shift = t - self.t0;
        let m = self.config.band_margin_cells as isize;
        Some((
            ((lo - shift) / h).floor() as isize - m,
            ((hi - shift) / h).ceil() as isize + m,
        ))
    }

    /// Seeds from `state`, which must sit at the foliation start.
    pub fn seed(&mut self, state: &FieldState) -> Result<()> {
        self.curves = seed_characteristics(self.delta, self.config.curves, self.p, state)?;
        let h = state.grid.h;
        if self.config.eikonal {
            let (lo, hi) = self.comoving_band(self.t0, h).ok_or(Error::HistoryGap { t: self.t0, r: self.t0 })?;
            if lo < 0 || hi as usize > state.grid.n {
                return Err(Error::HistoryGap { t: self.t0, r: hi as f64 * h });
            }
            let t0 = self.t0;
            let mut e = EikonalField::new(t0, h, lo, hi, |r| t0 - r);
            self.c_nodes.clear();
            self.c_nodes
                .extend(state.phit[lo as usize..=hi as usize].iter().map(|&v| wave_speed(v, self.p)));
            e.update_mu(&self.c_nodes);
            self.eikonal = Some(e);
        }
        self.update_stats(self.t0);
        Ok(())
    }

    /// Advances everything from `prev.t` to `next.t`, seeding on the way if
    /// the step crosses the foliation start.
    pub fn advance(&mut self, prev: &FieldState, next: &FieldState) -> Result<MonitorReport> {
        let tol = 1e-12 * self.t0;
        if !self.is_seeded() {
            if next.t < self.t0 - tol {
                return Ok(MonitorReport::default());
            }
            if (prev.t - self.t0).abs() <= tol {
                self.seed(prev)?;
            } else if (next.t - self.t0).abs() <= tol {
                self.seed(next)?;
                return Ok(self.report());
            } else if prev.t < self.t0 {
                let w = (self.t0 - prev.t) / (next.t - prev.t);
                let mid = blend(prev, next, w, self.t0);
                self.seed(&mid)?;
                return self.advance_from(&mid, next);
            } else {
                return Err(Error::HistoryGap { t: self.t0, r: self.t0 });
            }
        }
        self.advance_from(prev, next)
    }

    fn advance_from(&mut self, prev: &FieldState, next: &FieldState) -> Result<MonitorReport> {
        let grid = prev.grid;
        let h = grid.h;
        let span = next.t - prev.t;
        if !(span > 0.0) {
            return Ok(self.report());
        }
        let Some((mut lo, mut hi)) = radial_span(&self.curves) else {
            return Ok(self.report());
        };
        if let Some(e) = self.eikonal.as_ref() {
            lo = lo.min(e.node_r_at(0, prev.t));
            hi = hi.max(e.node_r_at(e.u.len() - 1, next.t));
        }
        let m = self.config.band_margin_cells as f64 + 8.0;
        let s_lo = ((lo / h).floor() - m).max(0.0) as usize;
        let s_hi = (((hi + 4.0 * span) / h).ceil() + m).min(grid.n as f64) as usize;
        let slab = Slab::new(prev, next, s_lo, s_hi, self.order, self.p);

        let c_max = slab
            .before
            .phit
            .iter()
            .chain(&slab.after.phit)
            .map(|&v| wave_speed(v, self.p))
            .fold(1.0f64, f64::max);
        let n_sub = ((span * c_max / (self.config.cfl * h)) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
        for k in 1..=n_sub {
            let t_a = prev.t + span * (k - 1) as f64 / n_sub as f64;
            let t_b = if k == n_sub { next.t } else { prev.t + span * k as f64 / n_sub as f64 };
            self.substep(&slab, t_a, t_b)?;
        }
        Ok(self.report())
    }

    fn substep(&mut self, slab: &Slab, t_a: f64, t_b: f64) -> Result<()> {
        let h = slab.before.h;
        let band = self.comoving_band(t_a, h);
        if let (Some(e), Some((lo, hi))) = (self.eikonal.as_mut(), band) {
            e.shift_to(lo, hi);
            let speeds = |e: &EikonalField, t: f64| -> Result<Vec<f64>> {
                (0..e.u.len()).map(|k| Ok(slab.speed(t, e.node_r_at(k, t))?.0)).collect()
            };
            let c = speeds(e, t_a)?;
            e.step(t_b - t_a, &c);
            e.t = t_b;
            let c = speeds(e, t_b)?;
            e.update_mu(&c);
        }
        for ch in self.curves.iter_mut() {
            advance_characteristic(ch, slab, t_b)?;
        }
        self.substeps += 1;
        if self.substeps % self.config.record_stride == 0 {
            for ch in self.curves.iter_mut().filter(|c| c.alive) {
                ch.record();
            }
        }
        self.update_stats(t_b);
        Ok(())
    }

    fn update_stats(&mut self, t: f64) {
        let s = &mut self.stats;
        s.t_last = t;
        let mut prev_r = f64::INFINITY;
        for (k, ch) in self.curves.iter().enumerate() {
            if !ch.alive {
                if s.collapse.is_none() {
                    s.collapse = ch.collapse_t.map(|t| (t, ch.u_label));
                }
                s.mu_min = 0.0;
                continue;
            }
            let mu = ch.current_mu();
            if mu < s.mu_min {
                s.mu_min = mu;
                s.mu_min_t = t;
                s.mu_min_u = ch.u_label;
            }
            s.mu_deviation = s.mu_deviation.max((mu - 1.0).abs());
            let check = trchi_check(ch.c, ch.r, t, ch.u_label);
            s.trchi_check_weighted = s.trchi_check_weighted.max(t * t * check.abs());
            if k == self.middle {
                s.straightness = s.straightness.max(((t - ch.r) - 2.0 * self.delta).abs());
            }
            if ch.r >= prev_r {
                s.crossings += 1;
            }
            prev_r = ch.r;
            if let Some(e) = self.eikonal.as_ref() {
                if let Some(mu_e) = e.mu_at(ch.r) {
                    s.mu_discrepancy = max_opt(s.mu_discrepancy, (mu_e / mu - 1.0).abs());
                }
                if let Some(u) = e.u_at(ch.r) {
                    s.u_drift = max_opt(s.u_drift, (u - ch.u_label).abs());
                }
            }
        }
        if let Some(e) = self.eikonal.as_ref() {
            s.foliation_events = e.degenerate_steps;
            let (r_in, r_out) = self.curves.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), c| {
                (a.min(c.r), b.max(c.r))
            });
            if let Some(m) = e.min_mu_between(r_in, r_out) {
                s.mu_min_eikonal = Some(s.mu_min_eikonal.map_or(m, |x: f64| x.min(m)));
            }
        }
    }

    fn report(&self) -> MonitorReport {
        let current = self
            .curves
            .iter()
            .map(|c| if c.alive { (c.current_mu(), c.r) } else { (0.0, c.r) })
            .reduce(|a, b| if b.0 < a.0 { b } else { a });
        MonitorReport {
            mu_min: current,
            mu_min_eikonal: self.stats.mu_min_eikonal,
        }
    }

    /// Records the final position of every live curve.
    pub fn finish(&mut self) {
        for ch in self.curves.iter_mut().filter(|c| c.alive) {
            ch.record();
        }
    }
}

fn radial_span(curves: &[Characteristic]) -> Option<(f64, f64)> {
    let (lo, hi) = curves
        .iter()
        .filter(|c| c.alive)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), c| (a.min(c.r), b.max(c.r)));
    lo.is_finite().then_some((lo, hi))
}

fn blend(a: &FieldState, b: &FieldState, w: f64, t: f64) -> FieldState {
    let mix = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| p + w * (q - p)).collect();
    FieldState {
        t,
        grid: a.grid,
        phi: mix(&a.phi, &b.phi),
        phit: mix(&a.phit, &b.phit),
    }
}

impl StepMonitor for GeometryTracker {
    fn next_stop(&self, t: f64) -> Option<f64> {
        (t < self.t0).then_some(self.t0)
    }

    fn observe(&mut self, prev: &FieldState, next: &FieldState) -> Result<MonitorReport> {
        self.advance(prev, next)
    }
}

/// Stored solver frames, replayed through a tracker.
#[derive(Debug, Clone, Default)]
pub struct SolutionHistory {
    pub frames: Vec<FieldState>,
}

impl SolutionHistory {
    pub fn new(mut frames: Vec<FieldState>) -> Result<Self> {
        frames.sort_by(|a, b| a.t.total_cmp(&b.t));
        if let Some(w) = frames.windows(2).find(|w| w[0].grid != w[1].grid) {
            return Err(Error::InvalidGrid(format!("frames at t = {} and {} use different grids", w[0].t, w[1].t)));
        }
        Ok(SolutionHistory { frames })
    }

    /// Runs curves and the eikonal band across every stored interval.
    pub fn track(&self, params: &DataParams, order: Order, config: GeometryConfig) -> Result<GeometryTracker> {
        let mut tracker = GeometryTracker::new(params, order, config)?;
        let t0 = tracker.t0();
        match self.frames.first() {
            Some(f) if f.t <= t0 + 1e-12 * t0 => {}
            _ => return Err(Error::HistoryGap { t: t0, r: t0 }),
        }
        for w in self.frames.windows(2) {
            tracker.advance(&w[0], &w[1])?;
        }
        if !tracker.is_seeded() {
            if let Some(last) = self.frames.last().filter(|f| (f.t - t0).abs() <= 1e-12 * t0) {
                tracker.seed(last)?;
            } else {
                return Err(Error::HistoryGap { t: t0, r: t0 });
            }
        }
        tracker.finish();
        Ok(tracker)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::RadialGrid;

    fn params(delta: f64) -> DataParams {
        DataParams::new(delta, 0.5, 3).unwrap()
    }

    #[test]
    fn seeds_on_the_initial_cone() {
        let grid = RadialGrid::new(3.0, 600).unwrap();
        let s = FieldState::zeros(1.2, grid);
        let curves = seed_characteristics(0.1, 5, 3, &s).unwrap();
        assert_eq!(curves.len(), 5);
        assert!((curves[0].r() - 1.2).abs() < 1e-15);
        assert!((curves[2].r() - 1.0).abs() < 1e-15);
        assert!((curves[4].u_label - 0.4).abs() < 1e-15);
        assert!(curves.iter().all(|c| c.current_mu() == 1.0));
        let early = FieldState::zeros(1.0, grid);
        assert!(matches!(seed_characteristics(0.1, 5, 3, &early), Err(Error::HistoryGap { .. })));
    }

    #[test]
    fn flat_speed_gives_straight_cones() {
        let grid = RadialGrid::new(4.0, 800).unwrap();
        let frames: Vec<FieldState> = (0..=40).map(|k| FieldState::zeros(1.0 + 0.05 * k as f64, grid)).collect();
        let history = SolutionHistory::new(frames).unwrap();
        let tracker = history.track(&params(0.05), Order::Fourth, GeometryConfig::default()).unwrap();
        let st = tracker.stats();
        assert!(st.mu_deviation < 1e-14);
        assert!(st.straightness < 1e-12);
        assert!(st.u_drift.unwrap() < 1e-12);
        assert!(st.mu_discrepancy.unwrap() < 1e-9);
        for ch in tracker.curves() {
            let (t, r) = *ch.path.last().unwrap();
            assert!((t - 3.0).abs() < 1e-12);
            assert!((r - (1.1 - ch.u_label + 1.9)).abs() < 1e-12);
        }
    }

    #[test]
    fn uniform_speed_scales_mu_with_c() {
        let grid = RadialGrid::new(6.0, 600).unwrap();
        let a = |t: f64| 0.3 * (t - 1.0).sin();
        let frames: Vec<FieldState> = (0..=200)
            .map(|k| {
                let t = 1.1 + 0.01 * k as f64;
                FieldState::from_fn(t, grid, |_| (0.0, a(t)))
            })
            .collect();
        let history = SolutionHistory::new(frames).unwrap();
        let cfg = GeometryConfig {
            curves: 3,
            record_stride: 1,
            ..GeometryConfig::default()
        };
        let tracker = history.track(&params(0.05), Order::Fourth, cfg).unwrap();
        let c0 = wave_speed(a(1.1), 3);
        for ch in tracker.curves() {
            for (&(t, _), &mu) in ch.path.iter().zip(&ch.mu) {
                let k = ((t - 1.1) / 0.01).round();
                if (t - 1.1 - 0.01 * k).abs() > 1e-12 {
                    continue;
                }
                let ratio = wave_speed(a(t), 3) / c0;
                assert!((mu / c0 - ratio).abs() < 1e-12, "t {t}: {mu}");
            }
        }
    }

    #[test]
    fn gaussian_curvature_of_round_spheres() {
        for (c, r) in [(1.0, 2.0), (0.8, 1.3), (1.2, 7.5)] {
            let k = gaussian_curvature(c, r);
            assert!((k - 1.0 / (r * r)).abs() < 1e-15 * k);
        }
    }

    #[test]
    fn straight_cone_has_vanishing_check() {
        assert_eq!(trchi_check(1.0, 2.5, 2.5, 0.0), 0.0);
        assert!((trchi_check(1.0, 2.4, 2.5, 0.1)).abs() < 1e-15);
    }

    #[test]
    fn min_mu_of_empty_bundle() {
        assert_eq!(min_mu(&[]), None);
    }
}

//! Quantitative read-outs of runs: sup norms, energy, power-law fits in `t`
//! and in `delta`, observed convergence order and the breakdown predicate
//! for the data.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{wave_speed, FieldState};
use crate::profiles::{DataParams, PulseProfile};
use crate::stencil::{self, Order};

/// Grid-point sup norms; `ltilde` is `d_t + d_r`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SupNorms {
    pub phi: f64,
    pub phit: f64,
    pub phir: f64,
    /// `max(|d_t phi|, |d_r phi|)`.
    pub dphi: f64,
    pub ltilde_phi: f64,
    pub ltilde_phit: f64,
}

pub fn sup_norms(state: &FieldState, p: u32) -> SupNorms {
    sup_norms_with(state, p, Order::Fourth)
}

pub fn sup_norms_with(state: &FieldState, p: u32, order: Order) -> SupNorms {
    let h = state.grid.h;
    let phir = stencil::d1(&state.phi, h, order);
    let phitr = stencil::d1(&state.phit, h, order);
    let lap = stencil::radial_laplacian(&state.phi, h, order);
    let mut n = SupNorms::default();
    for i in 0..state.grid.len() {
        let (u, v) = (state.phi[i], state.phit[i]);
        if u == 0.0 && v == 0.0 && phir[i] == 0.0 && phitr[i] == 0.0 && lap[i] == 0.0 {
            continue;
        }
        let c = wave_speed(v, p);
        n.phi = n.phi.max(u.abs());
        n.phit = n.phit.max(v.abs());
        n.phir = n.phir.max(phir[i].abs());
        n.ltilde_phi = n.ltilde_phi.max((v + phir[i]).abs());
        n.ltilde_phit = n.ltilde_phit.max((c * c * lap[i] + phitr[i]).abs());
    }
    n.dphi = n.phit.max(n.phir);
    n
}

/// `int (c^-2 phit^2 + phi_r^2) r^2 dr` by the trapezoidal rule.
pub fn energy(state: &FieldState, p: u32) -> f64 {
    let h = state.grid.h;
    let phir = stencil::d1(&state.phi, h, Order::Fourth);
    let last = state.grid.n;
    let mut sum = 0.0;
    for i in 0..=last {
        let v = state.phit[i];
        if v == 0.0 && phir[i] == 0.0 {
            continue;
        }
        let r = state.grid.r(i);
        let density = ((1.0 + v.powi(p as i32)) * v * v + phir[i] * phir[i]) * r * r;
        sum += if i == 0 || i == last { 0.5 * density } else { density };
    }
    sum * h
}

/// Least-squares fit `v ~ C t^-alpha` in log-log coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub exponent: f64,
    pub amplitude: f64,
    pub window: (f64, f64),
    pub r2: f64,
    pub samples: usize,
}

pub const MIN_FIT_SAMPLES: usize = 10;

/// `[t_max / 4, t_max]`, skipping the near-field transient.
pub fn default_window(t_max: f64) -> (f64, f64) {
    (0.25 * t_max, t_max)
}

/// Ordinary least squares `y = a + b x`; returns `(a, b, r2)`.
fn linear_fit(points: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    let b = sxy / sxx;
    let a = my - b * mx;
    let ss_res: f64 = points.iter().map(|p| (p.1 - a - b * p.0).powi(2)).sum();
    let r2 = if syy > 0.0 { (1.0 - ss_res / syy).clamp(0.0, 1.0) } else { 1.0 };
    (a, b, r2)
}

/// Fits `samples = [(t, v)]` restricted to `window`.
pub fn fit_decay(samples: &[(f64, f64)], window: (f64, f64)) -> Result<DecayFit> {
    let (lo, hi) = window;
    let tol = 1e-12 * hi.abs().max(1.0);
    let mut points = Vec::new();
    for &(t, v) in samples {
        if t < lo - tol || t > hi + tol {
            continue;
        }
        if !(v > 0.0) || !(t > 0.0) {
            return Err(Error::FitDomainError { t, value: v });
        }
        points.push((t.ln(), v.ln()));
    }
    if points.len() < MIN_FIT_SAMPLES {
        return Err(Error::InsufficientSamples {
            found: points.len(),
            required: MIN_FIT_SAMPLES,
        });
    }
    let (a, b, r2) = linear_fit(&points);
    Ok(DecayFit {
        exponent: -b,
        amplitude: a.exp(),
        window,
        r2,
        samples: points.len(),
    })
}

/// One run entering a `delta`-scaling fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingSample {
    pub delta: f64,
    pub value: f64,
    pub p: u32,
    pub eps0: f64,
    /// Identifies the profile; runs in one fit must agree on it.
    pub profile: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub quantity: String,
    pub exponent: f64,
    pub samples: Vec<(f64, f64)>,
    /// Root-mean-square residual of the log-log fit.
    pub residual: f64,
}

/// Log-log slope of `value` against `delta` over a geometric ladder.
pub fn delta_scaling(quantity: &str, runs: &[ScalingSample]) -> Result<ScalingFit> {
    if runs.len() < 3 {
        return Err(Error::InsufficientSamples {
            found: runs.len(),
            required: 3,
        });
    }
    let first = &runs[0];
    for r in runs {
        if r.p != first.p {
            return Err(Error::MixedSweepError(format!("p ({} vs {})", r.p, first.p)));
        }
        if r.eps0 != first.eps0 {
            return Err(Error::MixedSweepError(format!("eps0 ({} vs {})", r.eps0, first.eps0)));
        }
        if r.profile != first.profile {
            return Err(Error::MixedSweepError(format!("profile ({} vs {})", r.profile, first.profile)));
        }
        if !(r.value > 0.0 && r.delta > 0.0) {
            return Err(Error::FitDomainError { t: r.delta, value: r.value });
        }
    }
    let mut sorted: Vec<&ScalingSample> = runs.iter().collect();
    sorted.sort_by(|a, b| b.delta.total_cmp(&a.delta));
    let ratio = sorted[1].delta / sorted[0].delta;
    for w in sorted.windows(2) {
        let q = w[1].delta / w[0].delta;
        if (q / ratio - 1.0).abs() > 1e-6 || q >= 1.0 {
            return Err(Error::MixedSweepError(format!(
                "delta ladder is not geometric ({} -> {})",
                w[0].delta, w[1].delta
            )));
        }
    }
    let points: Vec<(f64, f64)> = sorted.iter().map(|r| (r.delta.ln(), r.value.ln())).collect();
    let (a, b, _) = linear_fit(&points);
    let residual =
        (points.iter().map(|p| (p.1 - a - b * p.0).powi(2)).sum::<f64>() / points.len() as f64).sqrt();
    Ok(ScalingFit {
        quantity: quantity.to_string(),
        exponent: b,
        samples: sorted.iter().map(|r| (r.delta, r.value)).collect(),
        residual,
    })
}

/// A state at the probe time plus the first time a guard fired in its run.
#[derive(Debug, Clone, Copy)]
pub struct ProbeRun<'a> {
    pub state: &'a FieldState,
    pub guard_fired_at: Option<f64>,
}

/// Three-grid observed order `log2(|u_h - u_h/2| / |u_h/2 - u_h/4|)` on the
/// coarse nodes, using the discrete L2 norm of `phi`.
pub fn convergence_order(runs: [ProbeRun<'_>; 3], probe_time: f64) -> Result<f64> {
    for run in &runs {
        if let Some(t) = run.guard_fired_at {
            if t <= probe_time {
                return Err(Error::NotSmoothError { probe: probe_time, fired_at: t });
            }
        }
    }
    let [a, b, c] = runs.map(|r| r.state);
    if b.grid.n != 2 * a.grid.n || c.grid.n != 2 * b.grid.n {
        return Err(Error::InvalidGrid("convergence runs must halve h twice".into()));
    }
    for s in [a, b, c] {
        if (s.t - probe_time).abs() > 1e-9 * probe_time.max(1.0) {
            return Err(Error::InvalidGrid(format!("state at t = {} is not at the probe time", s.t)));
        }
    }
    let mut e1 = 0.0;
    let mut e2 = 0.0;
    for i in 0..a.grid.len() {
        e1 += (a.phi[i] - b.phi[2 * i]).powi(2);
        e2 += (b.phi[2 * i] - c.phi[4 * i]).powi(2);
    }
    Ok((e1 / e2).sqrt().log2())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Subcritical,
    Critical,
    Supercritical,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlowupPredicate {
    pub lhs_max: f64,
    pub s_at: f64,
    pub regime: Regime,
    /// `None` when no breakdown prediction applies (`p > p_c`).
    pub threshold: Option<f64>,
    pub satisfied: Option<bool>,
}

pub fn regime(params: &DataParams) -> Regime {
    let pc = params.p_critical();
    let p = params.p as f64;
    if (p - pc).abs() <= 1e-12 * pc {
        Regime::Critical
    } else if p < pc {
        Regime::Subcritical
    } else {
        Regime::Supercritical
    }
}

/// Breakdown threshold for `phi1^(p-1) d_s phi1`: `2/p` below the critical
/// exponent and `(p-1) 2^p / (p (2^(p-1) - 1))` at it.
pub fn blowup_threshold(params: &DataParams) -> Option<f64> {
    let p = params.p as f64;
    match regime(params) {
        Regime::Subcritical => Some(2.0 / p),
        Regime::Critical => Some((p - 1.0) * 2f64.powf(p) / (p * (2f64.powf(p - 1.0) - 1.0))),
        Regime::Supercritical => None,
    }
}

/// Evaluates `max_s phi1^(p-1) d_s phi1` on `samples` points across the support.
pub fn blowup_predicate(profile: &PulseProfile, params: &DataParams, samples: usize) -> Result<BlowupPredicate> {
    let (lo, hi) = profile.phi0.support();
    let n = samples.max(3);
    let mut best = (f64::NEG_INFINITY, lo);
    for k in 1..n {
        let s = lo + (hi - lo) * k as f64 / n as f64;
        let y = profile.phi1(s)?;
        let v = y.value.powi(params.p as i32 - 1) * y.ds;
        if v > best.0 {
            best = (v, s);
        }
    }
    let threshold = blowup_threshold(params);
    Ok(BlowupPredicate {
        lhs_max: best.0,
        s_at: best.1,
        regime: regime(params),
        threshold,
        satisfied: threshold.map(|th| best.0 > th),
    })
}

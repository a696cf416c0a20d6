//! Short-pulse profiles and the constrained initial data built from them.
//!
//! The data at `t = 1` are
//! `phi = delta^(2 - eps0) phi0((r - 1)/delta)` and
//! `phi_t = delta^(1 - eps0) phi1((r - 1)/delta)`, where `phi1` is fixed
//! pointwise by the implicit relation
//!
//! ```text
//! F(phi1, delta) = phi0' + delta phi0 + phi1 + delta^((1-eps0) p) / (2 (p+1)) phi1^(p+1) = 0
//! ```
//!
//! which makes `(d_t + d_r)^k phi(1, .)` small for `k = 1, 2`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{wave_speed, FieldState, RadialGrid};
use crate::stencil::{self, Order};

/// Minimum number of grid cells across the pulse width `delta`.
pub const MIN_CELLS_PER_DELTA: usize = 32;

pub const NEWTON_TOL: f64 = 1e-12;
pub const NEWTON_MAX_ITER: usize = 50;

/// Exponents of the short-pulse scaling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DataParams {
    pub delta: f64,
    pub eps0: f64,
    pub p: u32,
}

impl DataParams {
    pub fn new(delta: f64, eps0: f64, p: u32) -> Result<Self> {
        if !(delta.is_finite() && delta > 0.0) {
            return Err(Error::InvalidParams(format!("delta must be positive, got {delta}")));
        }
        Self::checked(delta, eps0, p)
    }

    /// The `delta -> 0` limit, where `phi1 = -phi0'` exactly. Only meaningful
    /// for evaluating the implicit relation; no grid can resolve it.
    pub fn zero_delta(eps0: f64, p: u32) -> Result<Self> {
        Self::checked(0.0, eps0, p)
    }

    fn checked(delta: f64, eps0: f64, p: u32) -> Result<Self> {
        if !(eps0 > 0.0 && eps0 < 1.0) {
            return Err(Error::InvalidParams(format!("eps0 must lie in (0, 1), got {eps0}")));
        }
        if p < 1 {
            return Err(Error::InvalidParams("p must be a positive integer".into()));
        }
        Ok(DataParams { delta, eps0, p })
    }

    /// Critical exponent `1 / (1 - eps0)`.
    pub fn p_critical(&self) -> f64 {
        1.0 / (1.0 - self.eps0)
    }

    /// Amplitude of `phi`: `delta^(2 - eps0)`.
    pub fn phi_scale(&self) -> f64 {
        self.delta.powf(2.0 - self.eps0)
    }

    /// Amplitude of `d_t phi`: `delta^(1 - eps0)`.
    pub fn phit_scale(&self) -> f64 {
        self.delta.powf(1.0 - self.eps0)
    }

    /// Coefficient `delta^((1 - eps0) p)` of the nonlinear term in `F`.
    pub fn nonlinear_weight(&self) -> f64 {
        self.delta.powf((1.0 - self.eps0) * self.p as f64)
    }
}

/// `A exp(-1 / (1 - x^2))`, `x = (s - center) / width`, with exact derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub center: f64,
    pub width: f64,
    pub amplitude: f64,
}

/// Builds the base pulse `phi0`. The support `[center - width, center + width]`
/// must sit strictly inside `(-1, 0)`.
pub fn bump_profile(center: f64, width: f64, amplitude: f64) -> Result<Bump> {
    let (lo, hi) = (center - width, center + width);
    if !(width > 0.0 && lo > -1.0 && hi < 0.0 && amplitude.is_finite()) {
        return Err(Error::InvalidSupport { lo, hi });
    }
    Ok(Bump {
        center,
        width,
        amplitude,
    })
}

impl Bump {
    pub fn support(&self) -> (f64, f64) {
        (self.center - self.width, self.center + self.width)
    }

    #[inline]
    fn local(&self, s: f64) -> Option<(f64, f64, f64)> {
        let x = (s - self.center) / self.width;
        let q = 1.0 - x * x;
        if q <= 0.0 {
            return None;
        }
        let b = (-1.0 / q).exp();
        if b == 0.0 {
            return None;
        }
        Some((x, q, b))
    }

    pub fn value(&self, s: f64) -> f64 {
        self.local(s).map_or(0.0, |(_, _, b)| self.amplitude * b)
    }

    /// `d phi0 / ds`.
    pub fn d1(&self, s: f64) -> f64 {
        self.local(s).map_or(0.0, |(x, q, b)| {
            let g1 = -2.0 * x / (q * q);
            self.amplitude * b * g1 / self.width
        })
    }

    /// `d^2 phi0 / ds^2`.
    pub fn d2(&self, s: f64) -> f64 {
        self.local(s).map_or(0.0, |(x, q, b)| {
            let g1 = -2.0 * x / (q * q);
            let g2 = -(2.0 + 6.0 * x * x) / (q * q * q);
            self.amplitude * b * (g1 * g1 + g2) / (self.width * self.width)
        })
    }
}

/// One pointwise solution of the implicit relation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Phi1Sample {
    pub s: f64,
    pub value: f64,
    /// `d phi1 / ds` from implicit differentiation.
    pub ds: f64,
    pub residual: f64,
    pub iterations: usize,
}

/// How the velocity profile `phi1` is obtained from `phi0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Phi1Rule {
    /// Root of the implicit relation for the given exponents.
    Constrained {
        params: DataParams,
        tol: f64,
        max_iter: usize,
    },
    /// `phi1 = k phi0'`. Violates the outgoing constraint unless `k = -1` and
    /// `delta -> 0`; kept for contrast runs.
    DerivativeMultiple(f64),
}

/// The profile pair `(phi0, phi1)` on `s in (-1, 0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseProfile {
    pub phi0: Bump,
    pub phi1: Phi1Rule,
}

impl PulseProfile {
    /// `phi1` from the implicit relation with the default Newton settings.
    pub fn constrained(phi0: Bump, params: DataParams) -> Self {
        PulseProfile {
            phi0,
            phi1: Phi1Rule::Constrained {
                params,
                tol: NEWTON_TOL,
                max_iter: NEWTON_MAX_ITER,
            },
        }
    }

    pub fn with_derivative_multiple(phi0: Bump, k: f64) -> Self {
        PulseProfile {
            phi0,
            phi1: Phi1Rule::DerivativeMultiple(k),
        }
    }

    pub fn phi1(&self, s: f64) -> Result<Phi1Sample> {
        match self.phi1 {
            Phi1Rule::Constrained {
                params,
                tol,
                max_iter,
            } => solve_phi1_point(&self.phi0, &params, tol, max_iter, s),
            Phi1Rule::DerivativeMultiple(k) => Ok(Phi1Sample {
                s,
                value: k * self.phi0.d1(s),
                ds: k * self.phi0.d2(s),
                residual: 0.0,
                iterations: 0,
            }),
        }
    }
}

/// `F(y, delta)` and `dF/dy` at a single point.
#[inline]
fn implicit_relation(y: f64, dphi0: f64, phi0: f64, params: &DataParams) -> (f64, f64) {
    let k = params.nonlinear_weight();
    let p = params.p as i32;
    let yp = y.powi(p);
    let f = dphi0 + params.delta * phi0 + y + k / (2.0 * (p as f64 + 1.0)) * yp * y;
    let df = 1.0 + 0.5 * k * yp;
    (f, df)
}

/// Solves `F(phi1(s), delta) = 0` at one point by Newton from `-phi0'(s)`,
/// falling back to bisection when a step leaves the bracket
/// `[-2|phi0'| - 1, 2|phi0'| + 1]`.
pub fn solve_phi1_point(
    phi0: &Bump,
    params: &DataParams,
    tol: f64,
    max_iter: usize,
    s: f64,
) -> Result<Phi1Sample> {
    let (v0, d0, dd0) = (phi0.value(s), phi0.d1(s), phi0.d2(s));
    let half = 2.0 * d0.abs() + 1.0;
    let (lo, hi) = (-half, half);

    let mut y = -d0;
    let mut iterations = 0;
    let (mut f, mut df) = implicit_relation(y, d0, v0, params);
    while f.abs() > tol {
        if iterations == max_iter {
            return Err(Error::RootSolveFailure {
                s,
                residual: f.abs(),
                iterations,
            });
        }
        if df <= 0.0 {
            return Err(Error::DegenerateJacobian { s, jacobian: df });
        }
        let next = y - f / df;
        iterations += 1;
        if !(lo..=hi).contains(&next) {
            y = bisect(lo, hi, tol, max_iter, |y| implicit_relation(y, d0, v0, params).0)
                .ok_or(Error::RootSolveFailure {
                    s,
                    residual: f.abs(),
                    iterations,
                })?;
            (f, df) = implicit_relation(y, d0, v0, params);
            break;
        }
        y = next;
        (f, df) = implicit_relation(y, d0, v0, params);
    }
    if df <= 0.0 {
        return Err(Error::DegenerateJacobian { s, jacobian: df });
    }
    Ok(Phi1Sample {
        s,
        value: y,
        ds: -(dd0 + params.delta * d0) / df,
        residual: f.abs(),
        iterations,
    })
}

fn bisect(mut lo: f64, mut hi: f64, tol: f64, max_iter: usize, f: impl Fn(f64) -> f64) -> Option<f64> {
    let (mut flo, fhi) = (f(lo), f(hi));
    if flo.signum() == fhi.signum() {
        return None;
    }
    // enough halvings to reach the floating point resolution of the bracket
    for _ in 0..(max_iter + 200) {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm.abs() <= tol || mid == lo || mid == hi {
            return Some(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    None
}

/// Solves the implicit relation at every `s` in `points`.
pub fn solve_phi1(phi0: &Bump, params: &DataParams, tol: f64, points: &[f64]) -> Result<Vec<Phi1Sample>> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParams(format!("tolerance must be positive, got {tol}")));
    }
    points
        .iter()
        .map(|&s| solve_phi1_point(phi0, params, tol, NEWTON_MAX_ITER, s))
        .collect()
}

/// Samples the short-pulse data at `t = 1` on `grid`.
pub fn build_initial_data(profile: &PulseProfile, params: &DataParams, grid: &RadialGrid) -> Result<FieldState> {
    if params.delta <= 0.0 {
        return Err(Error::InvalidParams("initial data need delta > 0".into()));
    }
    if grid.r_max <= 1.0 {
        return Err(Error::InvalidGrid(format!("r_max = {} does not cover r = 1", grid.r_max)));
    }
    let cells = grid.cells_across(params.delta);
    if cells < MIN_CELLS_PER_DELTA as f64 {
        return Err(Error::ResolutionError {
            cells,
            required: MIN_CELLS_PER_DELTA,
        });
    }
    let (lo, hi) = profile.phi0.support();
    let (a, b) = (params.phi_scale(), params.phit_scale());
    let mut state = FieldState::zeros(1.0, *grid);
    for i in 0..grid.len() {
        let s = (grid.r(i) - 1.0) / params.delta;
        if s <= lo || s >= hi {
            continue;
        }
        state.phi[i] = a * profile.phi0.value(s);
        state.phit[i] = b * profile.phi1(s)?.value;
    }
    Ok(state)
}

/// Sup norms of `(d_t + d_r)^k phi` at `t = 1`, normalised by `delta^(2 - eps0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstraintResiduals {
    pub res1: f64,
    pub res2: f64,
}

/// Measures the outgoing constraint on a sampled state using fourth-order
/// differences; `d_t^2 phi` is eliminated through the equation.
pub fn check_outgoing_constraint(state: &FieldState, params: &DataParams) -> ConstraintResiduals {
    let order = Order::Fourth;
    let h = state.grid.h;
    let phir = stencil::d1(&state.phi, h, order);
    let phirr = stencil::d2(&state.phi, h, order);
    let phitr = stencil::d1(&state.phit, h, order);
    let lap = stencil::radial_laplacian(&state.phi, h, order);
    let scale = params.phi_scale();
    let mut res1 = 0.0f64;
    let mut res2 = 0.0f64;
    for i in 0..state.grid.len() {
        let c = wave_speed(state.phit[i], params.p);
        let l1 = state.phit[i] + phir[i];
        let l2 = c * c * lap[i] + 2.0 * phitr[i] + phirr[i];
        res1 = res1.max(l1.abs());
        res2 = res2.max(l2.abs());
    }
    ConstraintResiduals {
        res1: res1 / scale,
        res2: res2 / scale,
    }
}

use crate::error::{Error, Result};
use crate::field::{FieldState, RadialGrid};
use crate::stencil::{refresh_ghosts, Order};

/// Classical four-stage Runge-Kutta for `(phi, phit)` with
/// `phit_t = (phi_rr + 2 phi_r / r) / (1 + phit^p)`.
///
/// Only nodes `0..=hi` are updated; everything past `hi` is zero and stays
/// zero for the step.
pub struct Rk4 {
    grid: RadialGrid,
    order: Order,
    p: i32,
    hyp_floor: f64,
    two_over_r: Vec<f64>,
    y_phi: Vec<f64>,
    y_phit: Vec<f64>,
    k_phi: [Vec<f64>; 4],
    k_phit: [Vec<f64>; 4],
}

#[inline(always)]
fn int_pow(v: f64, p: i32) -> f64 {
    match p {
        1 => v,
        2 => v * v,
        3 => v * v * v,
        4 => (v * v) * (v * v),
        _ => v.powi(p),
    }
}

/// Interior nodes `1..=hi`; returns the smallest `1 + phit^p` seen.
#[allow(clippy::too_many_arguments)]
#[inline(always)]
fn interior<const FOURTH: bool>(
    u: &[f64],
    v: &[f64],
    g: usize,
    hi: usize,
    inv_h: f64,
    two_over_r: &[f64],
    kp: &mut [f64],
    kv: &mut [f64],
    pow: impl Fn(f64) -> f64,
) -> f64 {
    let m = hi;
    let inv_h2 = inv_h * inv_h;
    let (um2, um1, u0, up1, up2) = (
        &u[g - 1..g - 1 + m],
        &u[g..g + m],
        &u[g + 1..g + 1 + m],
        &u[g + 2..g + 2 + m],
        &u[g + 3..g + 3 + m],
    );
    let vs = &v[g + 1..g + 1 + m];
    let tr = &two_over_r[1..1 + m];
    let kp = &mut kp[1..1 + m];
    let kv = &mut kv[1..1 + m];
    let mut q_min = f64::INFINITY;
    for k in 0..m {
        let (d1, d2) = if FOURTH {
            (
                (8.0 * (up1[k] - um1[k]) - (up2[k] - um2[k])) * (inv_h / 12.0),
                (16.0 * (up1[k] + um1[k]) - (up2[k] + um2[k]) - 30.0 * u0[k]) * (inv_h2 / 12.0),
            )
        } else {
            (0.5 * (up1[k] - um1[k]) * inv_h, (up1[k] - 2.0 * u0[k] + um1[k]) * inv_h2)
        };
        let vt = vs[k];
        let q = 1.0 + pow(vt);
        q_min = if q < q_min { q } else { q_min };
        kp[k] = vt;
        kv[k] = (d2 + tr[k] * d1) / q;
    }
    q_min
}

fn combine(out: &mut [f64], base: &[f64], k: &[Vec<f64>; 4], w: f64) {
    let m = out.len();
    let (k1, k2, k3, k4) = (&k[0][..m], &k[1][..m], &k[2][..m], &k[3][..m]);
    for i in 0..m {
        out[i] = base[i] + w * (k1[i] + 2.0 * (k2[i] + k3[i]) + k4[i]);
    }
}

impl Rk4 {
    pub fn new(grid: RadialGrid, order: Order, p: u32, hyp_floor: f64) -> Self {
        let g = order.ghosts();
        let len = grid.len();
        let two_over_r = (0..len)
            .map(|i| if i == 0 { 0.0 } else { 2.0 / grid.r(i) })
            .collect();
        let zeros = || vec![0.0; len];
        Rk4 {
            grid,
            order,
            p: p as i32,
            hyp_floor,
            two_over_r,
            y_phi: vec![0.0; len + g + 2],
            y_phit: vec![0.0; len + g + 2],
            k_phi: [zeros(), zeros(), zeros(), zeros()],
            k_phit: [zeros(), zeros(), zeros(), zeros()],
        }
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    /// Evaluates the right-hand side of the stage input currently held in
    /// the padded buffers into `k_*[stage]`.
    fn rhs(&mut self, stage: usize, t: f64, hi: usize) -> Result<()> {
        let g = self.order.ghosts();
        let len = self.grid.len();
        refresh_ghosts(&mut self.y_phi, len, g);
        let h = self.grid.h;
        let inv_h = 1.0 / h;
        let inv_h2 = inv_h * inv_h;
        let p = self.p;
        let two_over_r = &self.two_over_r;
        let u = &self.y_phi;
        let v = &self.y_phit;
        let kp = &mut self.k_phi[stage];
        let kv = &mut self.k_phit[stage];

        let d2_origin = match self.order {
            Order::Fourth => (32.0 * u[g + 1] - 2.0 * u[g + 2] - 30.0 * u[g]) * (inv_h2 / 12.0),
            Order::Second => 2.0 * (u[g + 1] - u[g]) * inv_h2,
        };
        let q0 = 1.0 + int_pow(v[g], p);
        kp[0] = v[g];
        kv[0] = 3.0 * d2_origin / q0;
        let q_min = q0.min(match (self.order, p) {
            (Order::Fourth, 1) => interior::<true>(u, v, g, hi, inv_h, two_over_r, kp, kv, |x| x),
            (Order::Fourth, 2) => interior::<true>(u, v, g, hi, inv_h, two_over_r, kp, kv, |x| x * x),
            (Order::Fourth, 3) => interior::<true>(u, v, g, hi, inv_h, two_over_r, kp, kv, |x| x * x * x),
            (Order::Fourth, _) => interior::<true>(u, v, g, hi, inv_h, two_over_r, kp, kv, |x| x.powi(p)),
            (Order::Second, _) => interior::<false>(u, v, g, hi, inv_h, two_over_r, kp, kv, |x| int_pow(x, p)),
        });

        // NaN compares false, so a poisoned stage lands here too
        if !(q_min >= self.hyp_floor) {
            let (i, value) = (0..=hi)
                .map(|i| (i, 1.0 + v[i + g].powi(p)))
                .find(|(_, q)| !(*q >= self.hyp_floor))
                .unwrap_or((0, q_min));
            if value.is_nan() {
                return Err(Error::NumericalBreakdown { t });
            }
            return Err(Error::HyperbolicityLoss {
                t,
                r: self.grid.r(i),
                value,
            });
        }
        Ok(())
    }

    fn load_stage(&mut self, base: &FieldState, from: Option<usize>, scale: f64, hi: usize) {
        let g = self.order.ghosts();
        let m = hi + 1;
        let y_phi = &mut self.y_phi[g..g + m];
        let y_phit = &mut self.y_phit[g..g + m];
        match from {
            None => {
                y_phi.copy_from_slice(&base.phi[..m]);
                y_phit.copy_from_slice(&base.phit[..m]);
            }
            Some(k) => {
                for ((y, b), d) in y_phi.iter_mut().zip(&base.phi[..m]).zip(&self.k_phi[k][..m]) {
                    *y = b + scale * d;
                }
                for ((y, b), d) in y_phit.iter_mut().zip(&base.phit[..m]).zip(&self.k_phit[k][..m]) {
                    *y = b + scale * d;
                }
            }
        }
        // nodes past the window are zero in every stage
        let len = self.grid.len();
        self.y_phi[g + m..g + len].fill(0.0);
        self.y_phit[g + m..g + len].fill(0.0);
    }

    /// One RK4 step of size `dt` over nodes `0..=hi`.
    pub fn step(&mut self, state: &FieldState, dt: f64, hi: usize) -> Result<FieldState> {
        let hi = hi.min(self.grid.n);
        let t = state.t;
        self.load_stage(state, None, 0.0, hi);
        self.rhs(0, t, hi)?;
        self.load_stage(state, Some(0), 0.5 * dt, hi);
        self.rhs(1, t + 0.5 * dt, hi)?;
        self.load_stage(state, Some(1), 0.5 * dt, hi);
        self.rhs(2, t + 0.5 * dt, hi)?;
        self.load_stage(state, Some(2), dt, hi);
        self.rhs(3, t + dt, hi)?;

        let mut next = FieldState::zeros(t + dt, self.grid);
        let w = dt / 6.0;
        combine(&mut next.phi[..=hi], &state.phi[..=hi], &self.k_phi, w);
        combine(&mut next.phit[..=hi], &state.phit[..=hi], &self.k_phit, w);
        if !next.phi[..=hi].iter().chain(&next.phit[..=hi]).all(|v| v.is_finite()) {
            return Err(Error::NumericalBreakdown { t: next.t });
        }
        Ok(next)
    }

    /// Right-hand side `(phi_t, phit_t)` of a state over the whole grid.
    pub fn rhs_of(&mut self, state: &FieldState) -> Result<(Vec<f64>, Vec<f64>)> {
        let hi = self.grid.n;
        self.load_stage(state, None, 0.0, hi);
        self.rhs(0, state.t, hi)?;
        Ok((self.k_phi[0].clone(), self.k_phit[0].clone()))
    }
}

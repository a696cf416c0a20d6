//! Radial grid and field snapshots shared by the data builder, the solver
//! and the diagnostics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stencil::{self, Order};

/// Uniform node-centred grid on `[0, r_max]` with `n` cells (`n + 1` nodes).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialGrid {
    pub r_max: f64,
    pub n: usize,
    pub h: f64,
}

impl RadialGrid {
    pub fn new(r_max: f64, n: usize) -> Result<Self> {
        if !(r_max.is_finite() && r_max > 0.0) {
            return Err(Error::InvalidGrid(format!("r_max must be positive, got {r_max}")));
        }
        if n < 8 {
            return Err(Error::InvalidGrid(format!("need at least 8 cells, got {n}")));
        }
        Ok(RadialGrid { r_max, n, h: r_max / n as f64 })
    }

    /// Smallest grid on `[0, r_max]` with at least `cells_per_delta` cells across `delta`.
    pub fn resolving(r_max: f64, delta: f64, cells_per_delta: f64) -> Result<Self> {
        let n = (r_max * cells_per_delta / delta).ceil() as usize;
        Self::new(r_max, n)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n + 1
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn r(&self, i: usize) -> f64 {
        i as f64 * self.h
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(move |i| self.r(i))
    }

    /// Number of cells spanning a length `delta`.
    pub fn cells_across(&self, delta: f64) -> f64 {
        delta / self.h
    }

    /// Grid with every cell halved; its even nodes coincide with ours.
    pub fn refined(&self) -> Self {
        RadialGrid {
            r_max: self.r_max,
            n: 2 * self.n,
            h: self.h / 2.0,
        }
    }
}

/// Wave speed `c = (1 + phit^p)^(-1/2)`; NaN when hyperbolicity is lost.
#[inline]
pub fn wave_speed(phit: f64, p: u32) -> f64 {
    (1.0 + phit.powi(p as i32)).sqrt().recip()
}

/// `d c / d phit = -(p/2) c^3 phit^(p-1)`.
#[inline]
pub fn wave_speed_slope(phit: f64, p: u32) -> f64 {
    let c = wave_speed(phit, p);
    -0.5 * p as f64 * c * c * c * phit.powi(p as i32 - 1)
}

/// Snapshot `(t, phi, d_t phi)` on a radial grid. Derived fields are computed on demand.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    pub t: f64,
    pub grid: RadialGrid,
    pub phi: Vec<f64>,
    pub phit: Vec<f64>,
}

impl FieldState {
    pub fn zeros(t: f64, grid: RadialGrid) -> Self {
        FieldState {
            t,
            grid,
            phi: vec![0.0; grid.len()],
            phit: vec![0.0; grid.len()],
        }
    }

    pub fn from_fn(t: f64, grid: RadialGrid, mut f: impl FnMut(f64) -> (f64, f64)) -> Self {
        let (phi, phit) = grid.nodes().map(&mut f).unzip();
        FieldState { t, grid, phi, phit }
    }

    pub fn phir(&self, order: Order) -> Vec<f64> {
        stencil::d1(&self.phi, self.grid.h, order)
    }

    pub fn phitr(&self, order: Order) -> Vec<f64> {
        stencil::d1(&self.phit, self.grid.h, order)
    }

    pub fn speed(&self, p: u32) -> Vec<f64> {
        self.phit.iter().map(|&v| wave_speed(v, p)).collect()
    }

    /// `d_t^2 phi` eliminated through the equation: `c^2 (phi_rr + 2 phi_r / r)`.
    pub fn phitt(&self, p: u32, order: Order) -> Vec<f64> {
        let lap = stencil::radial_laplacian(&self.phi, self.grid.h, order);
        lap.iter()
            .zip(&self.phit)
            .map(|(l, &v)| {
                let c = wave_speed(v, p);
                c * c * l
            })
            .collect()
    }

    pub fn is_finite(&self) -> bool {
        self.phi.iter().chain(&self.phit).all(|v| v.is_finite())
    }

    /// Largest node index carrying a nonzero value, if any.
    pub fn support_end(&self) -> Option<usize> {
        (0..self.grid.len())
            .rev()
            .find(|&i| self.phi[i] != 0.0 || self.phit[i] != 0.0)
    }
}

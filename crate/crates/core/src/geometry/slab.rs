use crate::error::{Error, Result};
use crate::field::{wave_speed, wave_speed_slope, FieldState};
use crate::stencil::{self, Order};

/// `phit` and `d_r phit` on nodes `i0..i0 + len` of one stored state.
#[derive(Debug, Clone)]
pub struct BandFrame {
    pub t: f64,
    pub i0: usize,
    pub h: f64,
    pub phit: Vec<f64>,
    pub phitr: Vec<f64>,
}

impl BandFrame {
    pub fn new(state: &FieldState, i_lo: usize, i_hi: usize, order: Order) -> Self {
        let n = state.grid.n;
        let i_hi = i_hi.min(n);
        let g = order.ghosts();
        let inv_h = 1.0 / state.grid.h;
        let at = |j: isize| -> f64 {
            let j = j.unsigned_abs();
            if j > n {
                0.0
            } else {
                state.phit[j]
            }
        };
        let mut buf = vec![0.0; i_hi + 1 - i_lo + 2 * g];
        for (k, v) in buf.iter_mut().enumerate() {
            *v = at(i_lo as isize + k as isize - g as isize);
        }
        let phitr = (0..=i_hi - i_lo)
            .map(|k| stencil::d1_at(&buf, k + g, inv_h, order))
            .collect();
        BandFrame {
            t: state.t,
            i0: i_lo,
            h: state.grid.h,
            phit: state.phit[i_lo..=i_hi].to_vec(),
            phitr,
        }
    }

    pub fn r_lo(&self) -> f64 {
        self.i0 as f64 * self.h
    }

    pub fn r_hi(&self) -> f64 {
        (self.i0 + self.phit.len() - 1) as f64 * self.h
    }

    /// Four-point Lagrange interpolation of `(phit, phitr)` at radius `r`.
    fn cubic(&self, r: f64) -> Option<(f64, f64)> {
        let x = r / self.h - self.i0 as f64;
        let len = self.phit.len();
        if !(x >= 0.0) || x > (len - 1) as f64 || len < 4 {
            return None;
        }
        let j = (x.floor() as usize).clamp(1, len - 3);
        let s = x - j as f64;
        let w = [
            -s * (s - 1.0) * (s - 2.0) / 6.0,
            (s + 1.0) * (s - 1.0) * (s - 2.0) / 2.0,
            -(s + 1.0) * s * (s - 2.0) / 2.0,
            (s + 1.0) * s * (s - 1.0) / 6.0,
        ];
        let mut a = 0.0;
        let mut b = 0.0;
        for (k, wk) in w.iter().enumerate() {
            a += wk * self.phit[j - 1 + k];
            b += wk * self.phitr[j - 1 + k];
        }
        Some((a, b))
    }
}

/// Two consecutive frames; samples are cubic in `r` and linear in `t`.
#[derive(Debug, Clone)]
pub struct Slab {
    pub before: BandFrame,
    pub after: BandFrame,
    pub p: u32,
}

impl Slab {
    pub fn new(prev: &FieldState, next: &FieldState, i_lo: usize, i_hi: usize, order: Order, p: u32) -> Self {
        Slab {
            before: BandFrame::new(prev, i_lo, i_hi, order),
            after: BandFrame::new(next, i_lo, i_hi, order),
            p,
        }
    }

    fn weight(&self, t: f64) -> f64 {
        let span = self.after.t - self.before.t;
        if span > 0.0 {
            ((t - self.before.t) / span).clamp(0.0, 1.0)
        } else {
            0.0
        }
    }

    /// Interpolated `(phit, d_r phit)`.
    pub fn fields(&self, t: f64, r: f64) -> Result<(f64, f64)> {
        let gap = || Error::HistoryGap { t, r };
        let a = self.before.cubic(r).ok_or_else(gap)?;
        let b = self.after.cubic(r).ok_or_else(gap)?;
        let w = self.weight(t);
        Ok((a.0 + w * (b.0 - a.0), a.1 + w * (b.1 - a.1)))
    }

    /// Wave speed and its radial derivative `-(p/2) c^3 phit^(p-1) d_r phit`.
    pub fn speed(&self, t: f64, r: f64) -> Result<(f64, f64)> {
        let (v, vr) = self.fields(t, r)?;
        Ok((wave_speed(v, self.p), wave_speed_slope(v, self.p) * vr))
    }

    /// Node values of `phit` at time `t`, for nodes `i0..`.
    pub fn phit_nodes(&self, t: f64, out: &mut Vec<f64>) {
        let w = self.weight(t);
        out.clear();
        out.extend(
            self.before
                .phit
                .iter()
                .zip(&self.after.phit)
                .map(|(a, b)| a + w * (b - a)),
        );
    }

    pub fn i0(&self) -> usize {
        self.before.i0
    }

    pub fn len(&self) -> usize {
        self.before.phit.len()
    }

    pub fn is_empty(&self) -> bool {
        self.before.phit.is_empty()
    }
}

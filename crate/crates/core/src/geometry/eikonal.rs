use serde::{Deserialize, Serialize};

/// A time and place where the discrete foliation stopped being monotone.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FoliationDegenerate {
    pub t: f64,
    pub r: f64,
}

/// Optical function on a band of nodes that moves outward at unit speed.
///
/// In the co-moving coordinate `xi = r - (t - t0)` the eikonal equation
/// reads `u_t + (c - 1) u_xi = 0`, which is advanced by first-order
/// upwinding. Node `k` sits at `xi = (j0 + k) h`.
#[derive(Debug, Clone)]
pub struct EikonalField {
    pub t: f64,
    pub t0: f64,
    pub h: f64,
    pub j0: isize,
    pub u: Vec<f64>,
    /// `-c / d_r u` at midpoints.
    pub mu: Vec<f64>,
    pub events: Vec<FoliationDegenerate>,
    pub degenerate_steps: usize,
    scratch: Vec<f64>,
}

const MAX_EVENTS: usize = 1000;

impl EikonalField {
    /// Nodes `j_lo..=j_hi` with `u(t0, r) = u_of_r(r)`.
    pub fn new(t0: f64, h: f64, j_lo: isize, j_hi: isize, u_of_r: impl Fn(f64) -> f64) -> Self {
        let u = (j_lo..=j_hi).map(|j| u_of_r(j as f64 * h)).collect();
        EikonalField {
            t: t0,
            t0,
            h,
            j0: j_lo,
            u,
            mu: Vec::new(),
            events: Vec::new(),
            degenerate_steps: 0,
            scratch: Vec::new(),
        }
    }

    pub fn j_hi(&self) -> isize {
        self.j0 + self.u.len() as isize - 1
    }

    /// Radius of node `k` at the current time.
    pub fn node_r(&self, k: usize) -> f64 {
        self.node_r_at(k, self.t)
    }

    pub fn node_r_at(&self, k: usize, t: f64) -> f64 {
        (self.j0 + k as isize) as f64 * self.h + (t - self.t0)
    }

    /// Co-moving node index of radius `r` at time `t`.
    pub fn index_of(&self, r: f64, t: f64) -> f64 {
        (r - (t - self.t0)) / self.h
    }

    /// Moves the band to `j_lo..=j_hi`, extending linearly where it grows.
    pub fn shift_to(&mut self, j_lo: isize, j_hi: isize) {
        if j_lo > self.j0 {
            let drop = ((j_lo - self.j0) as usize).min(self.u.len().saturating_sub(2));
            self.u.drain(..drop);
            self.j0 += drop as isize;
        }
        if j_hi < self.j_hi() && j_hi > self.j0 + 1 {
            self.u.truncate((j_hi - self.j0 + 1) as usize);
        }
        while self.j0 > j_lo {
            let next = 2.0 * self.u[0] - self.u[1];
            self.u.insert(0, next);
            self.j0 -= 1;
        }
        while self.j_hi() < j_hi {
            let n = self.u.len();
            let next = 2.0 * self.u[n - 1] - self.u[n - 2];
            self.u.push(next);
        }
    }

    /// One explicit upwind step; `c` holds the wave speed at each node.
    pub fn step(&mut self, dt: f64, c: &[f64]) {
        debug_assert_eq!(c.len(), self.u.len());
        let lambda = dt / self.h;
        let u = &self.u;
        let n = u.len();
        let at = |k: isize| -> f64 {
            if k < 0 {
                2.0 * u[0] - u[1]
            } else if k as usize >= n {
                2.0 * u[n - 1] - u[n - 2]
            } else {
                u[k as usize]
            }
        };
        self.scratch.clear();
        for k in 0..n {
            let a = c[k] - 1.0;
            let ki = k as isize;
            let diff = if a > 0.0 { u[k] - at(ki - 1) } else { at(ki + 1) - u[k] };
            self.scratch.push(u[k] - lambda * a * diff);
        }
        std::mem::swap(&mut self.u, &mut self.scratch);
        self.t += dt;
    }

    /// Recomputes the midpoint densities; records non-monotone cells.
    pub fn update_mu(&mut self, c: &[f64]) {
        self.mu.clear();
        let mut first_bad = None;
        for k in 0..self.u.len() - 1 {
            let du = self.u[k + 1] - self.u[k];
            let cm = 0.5 * (c[k] + c[k + 1]);
            if du >= 0.0 && first_bad.is_none() {
                first_bad = Some(self.node_r(k) + 0.5 * self.h);
            }
            self.mu.push(-cm * self.h / du);
        }
        if let Some(r) = first_bad {
            self.degenerate_steps += 1;
            if self.events.len() < MAX_EVENTS {
                self.events.push(FoliationDegenerate { t: self.t, r });
            }
        }
    }

    /// Linear interpolation of `u` at radius `r`.
    pub fn u_at(&self, r: f64) -> Option<f64> {
        let x = self.index_of(r, self.t) - self.j0 as f64;
        if !(x >= 0.0) || x > (self.u.len() - 1) as f64 {
            return None;
        }
        let k = (x.floor() as usize).min(self.u.len() - 2);
        let s = x - k as f64;
        Some(self.u[k] + s * (self.u[k + 1] - self.u[k]))
    }

    /// Linear interpolation of the midpoint densities at radius `r`.
    pub fn mu_at(&self, r: f64) -> Option<f64> {
        if self.mu.len() < 2 {
            return None;
        }
        let x = self.index_of(r, self.t) - self.j0 as f64 - 0.5;
        if !(x >= 0.0) || x > (self.mu.len() - 1) as f64 {
            return None;
        }
        let k = (x.floor() as usize).min(self.mu.len() - 2);
        let s = x - k as f64;
        Some(self.mu[k] + s * (self.mu[k + 1] - self.mu[k]))
    }

    /// Smallest midpoint density in `[r_a, r_b]`, clamped at zero.
    pub fn min_mu_between(&self, r_a: f64, r_b: f64) -> Option<f64> {
        self.mu
            .iter()
            .enumerate()
            .filter(|(k, _)| {
                let r = self.node_r(*k) + 0.5 * self.h;
                r >= r_a && r <= r_b
            })
            .map(|(_, &m)| if m > 0.0 { m } else { 0.0 })
            .reduce(f64::min)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_speed_is_pure_translation() {
        let h = 0.01;
        let t0 = 1.2;
        let mut e = EikonalField::new(t0, h, 90, 130, |r| t0 - r);
        let dt = 0.4 * h;
        for k in 0..200 {
            e.shift_to(90 - k / 50, 130 + k / 40);
            let c = vec![1.0; e.u.len()];
            e.step(dt, &c);
        }
        e.update_mu(&vec![1.0; e.u.len()]);
        for (k, &u) in e.u.iter().enumerate() {
            assert!((u - (e.t - e.node_r(k))).abs() < 1e-12);
        }
        assert!(e.mu.iter().all(|m| (m - 1.0).abs() < 1e-9));
        assert!((e.u_at(2.0).unwrap() - (e.t - 2.0)).abs() < 1e-12);
        assert!(e.events.is_empty());
    }

    #[test]
    fn constant_slow_speed_is_exact_for_linear_data() {
        let h = 0.02;
        let mut e = EikonalField::new(1.0, h, 40, 60, |r| 1.0 - r);
        let c = vec![0.9; e.u.len()];
        for _ in 0..50 {
            e.step(0.01, &c);
        }
        // u = t0 - r + ... moves at speed 0.9: u(t, r) = 1 - (r - 0.9 (t - 1))
        let r = e.node_r(10);
        assert!((e.u[10] - (1.0 - (r - 0.9 * (e.t - 1.0)))).abs() < 1e-12);
    }

    #[test]
    fn non_monotone_band_is_recorded() {
        let mut e = EikonalField::new(1.0, 0.1, 0, 10, |r| (r - 0.5).abs());
        e.update_mu(&[1.0; 11]);
        assert_eq!(e.degenerate_steps, 1);
        assert!((e.events[0].r - 0.55).abs() < 1e-12);
    }
}

#![allow(dead_code)]

use pulse_critic::field::FieldState;
use pulse_critic::profiles::{DataParams, PulseProfile};

/// Gauss-Legendre nodes and weights on [-1, 1], by Newton on the Legendre
/// recurrence.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let mut x = (std::f64::consts::PI * (k as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for j in 2..=n {
                let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

type Profile = Box<dyn Fn(f64) -> f64>;

/// Solution of the linear radial wave equation with the same data, via
/// d'Alembert for `r phi` with odd extension through the origin.
pub struct LinearOracle {
    phi0: Profile,
    d_phi0: Profile,
    phi1: Profile,
    support: (f64, f64),
    rule: Vec<(f64, f64)>,
    panels: usize,
}

impl LinearOracle {
    /// Data `(phi0, phi0', phi1)` vanishing outside `support`.
    pub fn new(phi0: Profile, d_phi0: Profile, phi1: Profile, support: (f64, f64)) -> Self {
        LinearOracle {
            phi0,
            d_phi0,
            phi1,
            support,
            rule: gauss_legendre(24),
            panels: 32,
        }
    }

    /// The short-pulse data built from `profile`.
    pub fn from_profile(profile: PulseProfile, params: DataParams) -> Self {
        let (lo, hi) = profile.phi0.support();
        let (a, b, d) = (params.phi_scale(), params.phit_scale(), params.delta);
        let bump = profile.phi0;
        LinearOracle::new(
            Box::new(move |r| a * bump.value((r - 1.0) / d)),
            Box::new(move |r| a / d * bump.d1((r - 1.0) / d)),
            Box::new(move |r| {
                let s = (r - 1.0) / d;
                if s <= lo || s >= hi {
                    0.0
                } else {
                    b * profile.phi1(s).expect("data solve").value
                }
            }),
            (1.0 + d * lo, 1.0 + d * hi),
        )
    }

    fn phi0(&self, r: f64) -> f64 {
        (self.phi0)(r)
    }

    fn phi1(&self, r: f64) -> f64 {
        (self.phi1)(r)
    }

    fn d_phi0(&self, r: f64) -> f64 {
        (self.d_phi0)(r)
    }

    /// `s phi0(s)` extended oddly.
    fn psi0(&self, s: f64) -> f64 {
        s.signum() * s.abs() * self.phi0(s.abs())
    }

    /// `int_a^b s phi1(s) ds` for `0 <= a <= b`.
    fn integral(&self, a: f64, b: f64) -> f64 {
        let lo = a.max(self.support.0);
        let hi = b.min(self.support.1);
        if hi <= lo {
            return 0.0;
        }
        let w = (hi - lo) / self.panels as f64;
        let mut sum = 0.0;
        for k in 0..self.panels {
            let mid = lo + (k as f64 + 0.5) * w;
            for &(x, wt) in &self.rule {
                let s = mid + 0.5 * w * x;
                sum += wt * 0.5 * w * s * self.phi1(s);
            }
        }
        sum
    }

    /// `phi(t, r)` for `t >= 1`.
    pub fn phi(&self, t: f64, r: f64) -> f64 {
        let tau = t - 1.0;
        if r == 0.0 {
            return self.d_phi0(tau) * tau + self.phi0(tau) + tau * self.phi1(tau);
        }
        let wave = 0.5 * (self.psi0(r + tau) + self.psi0(r - tau));
        // the odd extension cancels on [-|r - tau|, |r - tau|]
        let source = 0.5 * self.integral((r - tau).abs(), r + tau);
        (wave + source) / r
    }

    /// Largest `|phi - oracle|` over the grid relative to the largest `|oracle|`.
    pub fn relative_error(&self, state: &FieldState) -> f64 {
        let mut err: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for (i, r) in state.grid.nodes().enumerate() {
            let exact = self.phi(state.t, r);
            err = err.max((state.phi[i] - exact).abs());
            scale = scale.max(exact.abs());
        }
        err / scale
    }
}

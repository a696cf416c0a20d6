//! Centred finite differences on the radial grid.
//!
//! Grid functions are even in `r` at the origin (parity ghosts `f(-r) = f(r)`)
//! and vanish beyond `r_max`.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Order {
    Second,
    Fourth,
}

impl Order {
    pub fn from_int(order: u32) -> Option<Self> {
        match order {
            2 => Some(Order::Second),
            4 => Some(Order::Fourth),
            _ => None,
        }
    }

    pub fn as_int(self) -> u32 {
        match self {
            Order::Second => 2,
            Order::Fourth => 4,
        }
    }

    /// Stencil half-width, i.e. the number of ghost cells needed on each side.
    pub fn ghosts(self) -> usize {
        match self {
            Order::Second => 1,
            Order::Fourth => 2,
        }
    }
}

/// Copies `f` into `out` with `g` ghost cells on both sides: even reflection
/// at the origin, zeros past the outer edge.
pub fn pad_into(f: &[f64], g: usize, out: &mut Vec<f64>) {
    out.clear();
    out.resize(f.len() + 2 * g, 0.0);
    out[g..g + f.len()].copy_from_slice(f);
    refresh_ghosts(out, f.len(), g);
}

/// Rewrites ghost cells of a padded buffer holding `len` interior nodes.
#[inline]
pub fn refresh_ghosts(buf: &mut [f64], len: usize, g: usize) {
    for k in 1..=g {
        buf[g - k] = buf[g + k];
        buf[g + len - 1 + k] = 0.0;
    }
}

/// First derivative at padded index `j`.
#[inline(always)]
pub fn d1_at(buf: &[f64], j: usize, inv_h: f64, order: Order) -> f64 {
    match order {
        Order::Second => 0.5 * (buf[j + 1] - buf[j - 1]) * inv_h,
        Order::Fourth => {
            (8.0 * (buf[j + 1] - buf[j - 1]) - (buf[j + 2] - buf[j - 2])) * (inv_h / 12.0)
        }
    }
}

/// Second derivative at padded index `j`.
#[inline(always)]
pub fn d2_at(buf: &[f64], j: usize, inv_h2: f64, order: Order) -> f64 {
    match order {
        Order::Second => (buf[j + 1] - 2.0 * buf[j] + buf[j - 1]) * inv_h2,
        Order::Fourth => {
            (16.0 * (buf[j + 1] + buf[j - 1]) - (buf[j + 2] + buf[j - 2]) - 30.0 * buf[j])
                * (inv_h2 / 12.0)
        }
    }
}

/// `phi_rr + (2/r) phi_r` at node `i` (padded index `i + g`); the origin
/// uses the regular limit `3 phi_rr`.
#[inline(always)]
pub fn laplacian_at(buf: &[f64], i: usize, g: usize, h: f64, order: Order) -> f64 {
    let inv_h = 1.0 / h;
    let j = i + g;
    let d2 = d2_at(buf, j, inv_h * inv_h, order);
    if i == 0 {
        3.0 * d2
    } else {
        d2 + 2.0 * d1_at(buf, j, inv_h, order) / (i as f64 * h)
    }
}

pub fn d1(f: &[f64], h: f64, order: Order) -> Vec<f64> {
    let g = order.ghosts();
    let mut buf = Vec::new();
    pad_into(f, g, &mut buf);
    let inv_h = 1.0 / h;
    (0..f.len()).map(|i| d1_at(&buf, i + g, inv_h, order)).collect()
}

pub fn d2(f: &[f64], h: f64, order: Order) -> Vec<f64> {
    let g = order.ghosts();
    let mut buf = Vec::new();
    pad_into(f, g, &mut buf);
    let inv_h2 = 1.0 / (h * h);
    (0..f.len()).map(|i| d2_at(&buf, i + g, inv_h2, order)).collect()
}

pub fn radial_laplacian(f: &[f64], h: f64, order: Order) -> Vec<f64> {
    let g = order.ghosts();
    let mut buf = Vec::new();
    pad_into(f, g, &mut buf);
    (0..f.len()).map(|i| laplacian_at(&buf, i, g, h, order)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(n: usize, h: f64, f: impl Fn(f64) -> f64) -> Vec<f64> {
        (0..=n).map(|i| f(i as f64 * h)).collect()
    }

    #[test]
    fn quadratic_laplacian_is_exact() {
        let h = 0.01;
        let f = sample(200, h, |r| r * r);
        for order in [Order::Second, Order::Fourth] {
            let lap = radial_laplacian(&f, h, order);
            // last g nodes see the zero extension
            for v in &lap[..lap.len() - order.ghosts()] {
                assert!((v - 6.0).abs() < 1e-10, "{order:?}: {v}");
            }
        }
    }

    #[test]
    fn parity_makes_odd_derivative_vanish_at_origin() {
        let h = 0.05;
        let f = sample(40, h, |r| (-(r * r)).exp());
        assert_eq!(d1(&f, h, Order::Fourth)[0], 0.0);
    }

    #[test]
    fn fourth_order_error_drops_sixteenfold() {
        let err = |n: usize| {
            let h = 1.0 / n as f64;
            let f = sample(n, h, |r| (3.0 * r).sin() * (-4.0 * (r - 0.5).powi(2)).exp());
            let exact = |r: f64| {
                let e = (-4.0 * (r - 0.5).powi(2)).exp();
                3.0 * (3.0 * r).cos() * e - 8.0 * (r - 0.5) * (3.0 * r).sin() * e
            };
            let d = d1(&f, h, Order::Fourth);
            (n / 4..3 * n / 4)
                .map(|i| (d[i] - exact(i as f64 * h)).abs())
                .fold(0.0, f64::max)
        };
        let ratio = err(100) / err(200);
        assert!((ratio.log2() - 4.0).abs() < 0.2, "ratio {ratio}");
    }

    proptest::proptest! {
        #[test]
        fn fourth_order_laplacian_is_exact_on_even_quartics(
            a in -10.0f64..10.0,
            b in -10.0f64..10.0,
            c in -10.0f64..10.0,
            h in 0.01f64..0.1,
        ) {
            let f = sample(40, h, |r| a + b * r * r + c * r.powi(4));
            let lap = radial_laplacian(&f, h, Order::Fourth);
            let scale = f.iter().fold(0.0f64, |m, v| m.max(v.abs())) / (h * h);
            for (i, v) in lap[..lap.len() - 2].iter().enumerate() {
                let r = i as f64 * h;
                let exact = 6.0 * b + 20.0 * c * r * r;
                proptest::prop_assert!((v - exact).abs() <= 1e-12 * scale.max(1.0), "r = {}: {} vs {}", r, v, exact);
            }
        }
    }
}

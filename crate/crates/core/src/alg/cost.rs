//! Aggregate cost functions over client classes.

use serde::{Deserialize, Serialize};

/// Per-class totals `D_{Z,i}^{x,y}` (0-based `x`, `y`). The same shape is
/// reused for the linear coefficients of `cost(A)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostProfile {
    pub m: usize,
    pub db1: Vec<Vec<f64>>,
    pub db2: Vec<Vec<f64>>,
    pub dc1: Vec<Vec<f64>>,
    pub dc2: Vec<Vec<f64>>,
}

impl CostProfile {
    pub fn zeros(m: usize) -> Self {
        let z = vec![vec![0.0; m]; m];
        CostProfile { m, db1: z.clone(), db2: z.clone(), dc1: z.clone(), dc2: z }
    }

    pub fn total_d1(&self) -> f64 {
        self.db1.iter().chain(&self.dc1).flatten().sum()
    }

    pub fn total_d2(&self) -> f64 {
        self.db2.iter().chain(&self.dc2).flatten().sum()
    }

    /// Flat index of `D_{Z,i}^{x,y}`; `z` is 0 for B and 1 for C, `i` is 0 or 1.
    pub fn index(m: usize, z: usize, i: usize, x: usize, y: usize) -> usize {
        ((z * 2 + i) * m + x) * m + y
    }

    pub fn flat(&self) -> Vec<f64> {
        let m = self.m;
        let mut v = vec![0.0; 4 * m * m];
        for x in 0..m {
            for y in 0..m {
                v[Self::index(m, 0, 0, x, y)] = self.db1[x][y];
                v[Self::index(m, 0, 1, x, y)] = self.db2[x][y];
                v[Self::index(m, 1, 0, x, y)] = self.dc1[x][y];
                v[Self::index(m, 1, 1, x, y)] = self.dc2[x][y];
            }
        }
        v
    }

    pub fn from_flat(m: usize, v: &[f64]) -> Self {
        let mut p = Self::zeros(m);
        for x in 0..m {
            for y in 0..m {
                p.db1[x][y] = v[Self::index(m, 0, 0, x, y)];
                p.db2[x][y] = v[Self::index(m, 0, 1, x, y)];
                p.dc1[x][y] = v[Self::index(m, 1, 0, x, y)];
                p.dc2[x][y] = v[Self::index(m, 1, 1, x, y)];
            }
        }
        p
    }

    /// `sum coeff * D`, skipping zero totals so infinite coefficients on
    /// empty classes do not poison the sum.
    pub fn dot(&self, d: &CostProfile) -> f64 {
        self.flat().iter().zip(d.flat()).filter(|(_, d)| *d != 0.0).map(|(c, d)| c * d).sum()
    }
}

/// Which of the four bounds applies to class `(Z, x, y)` (0-based).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Bound {
    One,
    InvG,
    OneInvG,
    GOne,
}

pub fn bound_kind(m: usize, zone_c: bool, x: usize, y: usize) -> Bound {
    if zone_c {
        Bound::GOne
    } else if x == 0 {
        Bound::One
    } else if y <= x {
        Bound::InvG
    } else {
        debug_assert!(x < m - 1);
        Bound::OneInvG
    }
}

/// Upper bound on the backup factor of a class, given `u = 1 - min_{s<=x} p_B`
/// ranging over `[u_lo, u_hi]`.
fn factor(kind: Bound, g_full: &[f64], x: usize, u_lo: f64, u_hi: f64) -> f64 {
    // x is 0-based, so g_{x-1} (1-based level) is g_full[x] and g_x is g_full[x+1]
    match kind {
        Bound::One => 1.0,
        Bound::InvG => 1.0 / g_full[x],
        Bound::OneInvG => {
            let s = 1.0 / g_full[x] - 1.0;
            (1.0 + s * u_lo).max(1.0 + s * u_hi)
        }
        Bound::GOne => {
            let g = g_full[x + 1];
            (g + (1.0 - g) * u_lo).max(g + (1.0 - g) * u_hi)
        }
    }
}

/// Linear coefficients of `cost(A)` in the class totals, with every `p_W`
/// replaced by `hi[W]` and every `1 - p_W` by `1 - lo[W]`. With `lo == hi`
/// this is the exact cost function. Parameters are ordered `A_1..A_m,
/// B_1..B_m, C_1..C_m`; `g_full` is `g_0..g_m`.
pub fn cost_coeffs(m: usize, g_full: &[f64], lo: &[f64], hi: &[f64]) -> CostProfile {
    assert_eq!(lo.len(), 3 * m);
    assert_eq!(g_full.len(), m + 1);
    let mut c = CostProfile::zeros(m);
    // prefix minima of p_B
    let mut minb_lo = vec![0.0; m];
    let mut minb_hi = vec![0.0; m];
    let (mut ml, mut mh) = (f64::INFINITY, f64::INFINITY);
    for s in 0..m {
        ml = ml.min(lo[m + s]);
        mh = mh.min(hi[m + s]);
        minb_lo[s] = ml;
        minb_hi[s] = mh;
    }
    for x in 0..m {
        let not_a = 1.0 - lo[x];
        let (u_lo, u_hi) = (1.0 - minb_hi[x], 1.0 - minb_lo[x]);
        for y in 0..m {
            for (zc, (d1, d2), w) in [(false, (&mut c.db1, &mut c.db2), m + y), (true, (&mut c.dc1, &mut c.dc2), 2 * m + y)] {
                let kind = bound_kind(m, zc, x, y);
                let f = factor(kind, g_full, x, u_lo, u_hi);
                let not_p = 1.0 - lo[w];
                let tail = not_p * not_a * f;
                d1[x][y] = not_p + tail;
                d2[x][y] = hi[w] + tail;
            }
        }
    }
    c
}

pub fn cost_bound(m: usize, p: &[f64], g_full: &[f64], profile: &CostProfile) -> f64 {
    cost_coeffs(m, g_full, p, p).dot(profile)
}

/// `(1-b)D1 + b(3-2b)D2`.
pub fn sr_value(b: f64, d1: f64, d2: f64) -> f64 {
    (1.0 - b) * d1 + b * (3.0 - 2.0 * b) * d2
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn m1_first_row_closed_form() {
        let (b, g) = (0.37, vec![0.0, 1.0]);
        let mut d = CostProfile::zeros(1);
        d.db1[0][0] = 0.3;
        d.db2[0][0] = 0.7;
        d.dc1[0][0] = 1.1;
        d.dc2[0][0] = 0.2;
        let v = cost_bound(1, &[0.0, 1.0, b], &g, &d);
        let want = 0.7 + b * 0.2 + (1.0 - b) * (2.0 * 1.1 + 0.2);
        assert!((v - want).abs() < 1e-12);
    }

    #[test]
    fn zero_profile_costs_nothing() {
        let d = CostProfile::zeros(2);
        assert_eq!(cost_bound(2, &[0.0, 1.0, 0.3, 0.4, 0.5, 1.0], &[0.0, 0.6586, 1.0], &d), 0.0);
    }

    #[test]
    fn relaxation_dominates_point_values() {
        let g = [0.0, 0.5, 0.8, 1.0];
        let lo = [0.1, 0.0, 0.3, 0.2, 0.5, 0.0, 0.1, 0.9, 0.4];
        let hi = [0.4, 0.2, 0.6, 0.7, 0.9, 0.3, 0.6, 1.0, 0.8];
        let r = cost_coeffs(3, &g, &lo, &hi).flat();
        for k in 0..50 {
            let t = k as f64 / 49.0;
            let p: Vec<f64> = lo.iter().zip(&hi).enumerate().map(|(i, (l, h))| if (i + k) % 2 == 0 { l + t * (h - l) } else { h - t * (h - l) }).collect();
            let c = cost_coeffs(3, &g, &p, &p).flat();
            assert!(c.iter().zip(&r).all(|(c, r)| *c <= r + 1e-15));
        }
    }

    #[test]
    fn flat_roundtrip() {
        let mut d = CostProfile::zeros(2);
        d.dc1[1][0] = 3.0;
        d.db2[0][1] = 2.0;
        assert_eq!(CostProfile::from_flat(2, &d.flat()), d);
    }
}

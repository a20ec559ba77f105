//! Parameter vectors, validity, and enumeration of `ALG_m`.

use serde::Serialize;

use super::expr::Point;
use crate::num::Scalar;

/// Parameters in order `A_1..A_m, B_1..B_m, C_1..C_m`.
#[derive(Clone, Debug, PartialEq)]
pub struct AlgorithmSpec<T> {
    pub m: usize,
    pub p: Vec<T>,
}

pub fn set_name(m: usize, w: usize) -> String {
    let z = ["A", "B", "C"][w / m];
    format!("{z}{}", w % m + 1)
}

pub fn set_index(m: usize, name: &str) -> Option<usize> {
    let z = match name.as_bytes().first()? {
        b'A' => 0,
        b'B' => 1,
        b'C' => 2,
        _ => return None,
    };
    let t: usize = name[1..].parse().ok()?;
    (1..=m).contains(&t).then(|| z * m + t - 1)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Violation {
    /// Property 1 on the given set.
    Range(usize),
    /// Property 2.
    Mass,
    /// Property 3 at level `t` (0-based).
    Backup(usize),
    /// Property 4.
    First,
}

/// Whether set `w` counts as open: parameter 1, or the set is empty.
fn open<T: Scalar>(spec: &AlgorithmSpec<T>, pt: &Point<T>, w: usize) -> bool {
    (spec.p[w].clone() - T::one()).near_zero() || pt.gamma(w).near_zero()
}

pub fn mass_gap<T: Scalar>(spec: &AlgorithmSpec<T>, pt: &Point<T>) -> T {
    let m = spec.m;
    let mut lhs = T::zero();
    let mut rhs = pt.b.clone();
    for t in 0..m {
        lhs = lhs + (spec.p[t].clone() + spec.p[m + t].clone()) * pt.ga[t].clone() + spec.p[2 * m + t].clone() * pt.gc[t].clone();
        rhs = rhs + pt.ga[t].clone();
    }
    lhs - rhs
}

/// Violated properties; empty means valid. Levels with an empty `A_t`
/// impose no backup requirement, and empty sets count as open.
pub fn violations<T: Scalar>(spec: &AlgorithmSpec<T>, pt: &Point<T>) -> Vec<Violation> {
    let m = spec.m;
    let mut out = Vec::new();
    for (w, p) in spec.p.iter().enumerate() {
        if !p.nonneg() || !(T::one() - p.clone()).nonneg() {
            out.push(Violation::Range(w));
        }
    }
    if !mass_gap(spec, pt).near_zero() {
        out.push(Violation::Mass);
    }
    for t in 0..m {
        if pt.ga[t].near_zero() {
            continue;
        }
        let ok = open(spec, pt, t) || (0..=t).all(|s| open(spec, pt, m + s)) || (t..m).all(|s| open(spec, pt, 2 * m + s));
        if !ok {
            out.push(Violation::Backup(t));
        }
    }
    if !pt.ga[0].near_zero() && !open(spec, pt, 0) && !open(spec, pt, m) {
        out.push(Violation::First);
    }
    out
}

pub fn is_valid<T: Scalar>(spec: &AlgorithmSpec<T>, pt: &Point<T>) -> bool {
    violations(spec, pt).is_empty()
}

pub fn fractional_count<T: Scalar>(spec: &AlgorithmSpec<T>) -> usize {
    spec.p.iter().filter(|p| !p.near_zero() && !(T::one() - (*p).clone()).near_zero()).count()
}

/// Parameters of empty sets are immaterial; they are canonicalised to 0.
pub fn canonical<T: Scalar>(spec: &AlgorithmSpec<T>, pt: &Point<T>) -> Vec<T> {
    spec.p.iter().enumerate().map(|(w, p)| if pt.gamma(w).near_zero() { T::zero() } else { p.clone() }).collect()
}

pub fn same_params<T: Scalar>(a: &[T], b: &[T]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x.clone() - y.clone()).near_zero())
}

/// All valid parameter vectors with at most one fractional entry, with the
/// fractional entry solved from the normalised mass equation. Output is
/// canonical and deduplicated, in discovery order.
pub fn enumerate_algm<T: Scalar>(m: usize, pt: &Point<T>) -> Vec<AlgorithmSpec<T>> {
    let n = 3 * m;
    let gam: Vec<T> = (0..n).map(|w| pt.gamma(w)).collect();
    let rhs = pt.ga.iter().fold(pt.b.clone(), |acc, g| acc + g.clone());
    let mut out: Vec<AlgorithmSpec<T>> = Vec::new();
    for w in 0..n {
        for mask in 0u32..(1u32 << (n - 1)) {
            let mut p = vec![T::zero(); n];
            let mut used = T::zero();
            let mut bit = 0;
            for v in 0..n {
                if v == w {
                    continue;
                }
                if mask >> bit & 1 == 1 {
                    p[v] = T::one();
                    used = used + gam[v].clone();
                }
                bit += 1;
            }
            let resid = rhs.clone() - used;
            if gam[w].near_zero() {
                if !resid.near_zero() {
                    continue;
                }
            } else {
                let x = resid / gam[w].clone();
                if !x.nonneg() || !(T::one() - x.clone()).nonneg() {
                    continue;
                }
                p[w] = x;
            }
            let spec = AlgorithmSpec { m, p };
            if !is_valid(&spec, pt) {
                continue;
            }
            let c = canonical(&spec, pt);
            if !out.iter().any(|s| same_params(&s.p, &c)) {
                out.push(AlgorithmSpec { m, p: c });
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alg::expr::point_q;
    use crate::num::{q, qi, Q};

    fn spec(v: &[Q]) -> AlgorithmSpec<Q> {
        AlgorithmSpec { m: v.len() / 3, p: v.to_vec() }
    }

    #[test]
    fn first_row_always_valid() {
        for (b, g) in [(q(1, 2), q(3, 10)), (q(1, 10), qi(10)), (q(9, 10), q(1, 100))] {
            let pt = point_q(b.clone(), vec![g]);
            assert!(is_valid(&spec(&[qi(0), qi(1), b]), &pt));
        }
    }

    #[test]
    fn third_row_needs_small_gamma() {
        let pt = point_q(q(1, 2), vec![q(7, 10)]);
        let v = violations(&spec(&[qi(1), qi(1), q(1, 2) - q(7, 10)]), &pt);
        assert!(v.contains(&Violation::Range(2)));
    }

    #[test]
    fn all_zero_breaks_mass() {
        let pt = point_q(q(1, 2), vec![q(1, 3), q(1, 3)]);
        let v = violations(&spec(&vec![qi(0); 6]), &pt);
        assert!(v.contains(&Violation::Mass));
    }

    #[test]
    fn m1_small_gamma_gives_three() {
        let pt = point_q(q(1, 2), vec![q(3, 10)]);
        let got = enumerate_algm(1, &pt);
        let want = [[qi(0), qi(1), q(1, 2)], [qi(1), qi(0), q(1, 2)], [qi(1), qi(1), q(1, 5)]];
        assert_eq!(got.len(), 3);
        for w in want {
            assert!(got.iter().any(|s| s.p == w), "{w:?}");
        }
    }

    #[test]
    fn m1_large_gamma() {
        let pt = point_q(q(1, 2), vec![qi(10)]);
        let got = enumerate_algm(1, &pt);
        let want = [[qi(0), qi(1), q(1, 2)], [qi(1), qi(0), q(1, 2)], [q(1, 20), qi(1), qi(0)], [qi(1), q(1, 20), qi(0)]];
        assert_eq!(got.len(), 4);
        for w in want {
            assert!(got.iter().any(|s| s.p == w));
        }
    }

    #[test]
    fn enumerated_specs_are_valid() {
        for (b, ga) in [(q(1, 3), vec![q(1, 2), q(2, 3)]), (q(7, 10), vec![q(1, 5), q(3, 2)]), (qi(1), vec![qi(0), q(1, 4)])] {
            let pt = point_q(b, ga);
            let all = enumerate_algm(2, &pt);
            assert!(!all.is_empty());
            for s in &all {
                assert!(is_valid(s, &pt));
                assert!(fractional_count(s) <= 1);
            }
        }
    }

    #[test]
    fn names() {
        assert_eq!(set_name(3, 4), "B2");
        assert_eq!(set_index(3, "C3"), Some(8));
        assert_eq!(set_index(2, "C3"), None);
    }
}

//! Star rounding of bi-point solutions.

pub mod srdr;

use num_traits::{One, Zero};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;

pub use srdr::{eps_from_t, srdr, t_from_eps, SrdrOutput};

use crate::error::{Error, Result};
use crate::instance::{nearest, BiPointSolution, OpenSet};
use crate::num::{ceil_q, Q};

/// Leaves of each `F1` root, aligned with `sol.f1`.
#[derive(Clone, Debug, Serialize)]
pub struct StarSet {
    pub leaves: Vec<Vec<usize>>,
}

pub fn build_star_set(sol: &BiPointSolution) -> Result<StarSet> {
    let mut leaves = vec![Vec::new(); sol.f1.len()];
    for &f in &sol.f2 {
        let r = nearest(&sol.instance, &sol.f1, f)?;
        let pos = sol.f1.binary_search(&r).expect("root in F1");
        leaves[pos].push(f);
    }
    Ok(StarSet { leaves })
}

#[derive(Clone, Debug, Serialize)]
pub struct StarRoundTrace {
    pub t: usize,
    pub x: Vec<String>,
    pub fractional_count: usize,
}

/// Star rounding with the trace of the rounded root vector.
pub fn star_round_traced<Rn: Rng + ?Sized>(sol: &BiPointSolution, eps: f64, rng: &mut Rn) -> Result<(OpenSet, StarRoundTrace)> {
    let t = t_from_eps(eps)?;
    let stars = build_star_set(sol)?;
    let x = vec![sol.b.clone(); sol.f1.len()];
    let a: Vec<Q> = stars.leaves.iter().map(|l| Q::from_integer((l.len() as i64 - 1).into())).collect();
    let out = srdr(&x, &a, t, rng)?;
    let mut open = Vec::new();
    for (pos, leaves) in stars.leaves.iter().enumerate() {
        let xi = &out.x[pos];
        let want = ceil_q(&(xi * Q::from_integer((leaves.len() as i64).into())));
        let c: usize = want.try_into().map_err(|_| Error::Arg("leaf count overflow".into()))?;
        let mut l = leaves.clone();
        l.shuffle(rng);
        open.extend(l.into_iter().take(c));
        if !xi.is_one() {
            open.push(sol.f1[pos]);
        }
    }
    let trace = StarRoundTrace { t, x: out.x.iter().map(crate::num::fmt_q).collect(), fractional_count: out.fractional_count };
    Ok((OpenSet::new(open, None), trace))
}

pub fn star_round<Rn: Rng + ?Sized>(sol: &BiPointSolution, eps: f64, rng: &mut Rn) -> Result<OpenSet> {
    star_round_traced(sol, eps, rng).map(|r| r.0)
}

/// `(1+eps)((1-b) D1 + b(3-2b) D2)`.
pub fn sr_cost_bound(sol: &BiPointSolution, eps: f64) -> f64 {
    let b = sol.b_f64();
    (1.0 + eps) * sr_factor(b, sol.d1, sol.d2)
}

pub fn sr_factor(b: f64, d1: f64, d2: f64) -> f64 {
    (1.0 - b) * d1 + b * (3.0 - 2.0 * b) * d2
}

/// `sum_i a_i x_i` for the star weights, as a check on exactness.
pub fn weighted_sum(x: &[Q], a: &[Q]) -> Q {
    x.iter().zip(a).fold(Q::zero(), |acc, (x, a)| acc + x * a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{synthesize_random_bipoint, NearestIndex};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn stars_partition_f2() {
        let sol = synthesize_random_bipoint(40, 6, 15, 10, 7).unwrap();
        let s = build_star_set(&sol).unwrap();
        let mut all: Vec<usize> = s.leaves.concat();
        all.sort_unstable();
        assert_eq!(all, sol.f2);
    }

    #[test]
    fn b_zero_gives_f1() {
        let sol = synthesize_random_bipoint(30, 6, 6, 6, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let s = star_round(&sol, 0.1, &mut rng).unwrap();
        let idx = NearestIndex::new(&sol.instance);
        assert!((idx.cost_of(&s) - sol.d1).abs() < 1e-9);
    }

    #[test]
    fn budget_and_closed_roots() {
        let sol = synthesize_random_bipoint(50, 7, 19, 11, 4).unwrap();
        let stars = build_star_set(&sol).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..300 {
            let (s, tr) = star_round_traced(&sol, 0.5, &mut rng).unwrap();
            assert!(s.len() <= sol.k() + 2 * tr.t);
            for (pos, l) in stars.leaves.iter().enumerate() {
                if !s.facilities.contains(&sol.f1[pos]) {
                    assert!(l.iter().all(|f| s.facilities.contains(f)));
                }
            }
        }
    }

    #[test]
    fn bound_endpoints() {
        assert_eq!(sr_factor(0.0, 2.0, 1.0), 2.0);
        assert_eq!(sr_factor(1.0, 2.0, 1.0), 1.0);
        assert!((sr_factor(0.68, 1.687908, 0.676348) - 1.2944).abs() < 1e-4);
    }
}

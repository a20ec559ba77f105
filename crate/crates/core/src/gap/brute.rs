//! Exhaustive k-median optimum for small instances.

use std::sync::Mutex;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::instance::{MetricInstance, OpenSet};
use crate::num::{Scalar, Q};

/// `C(n, r)`, saturating.
pub fn binom(n: usize, r: usize) -> u128 {
    if r > n {
        return 0;
    }
    let r = r.min(n - r);
    let mut acc: u128 = 1;
    for i in 0..r {
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

#[derive(Clone, Debug)]
pub struct BruteResult {
    pub open: OpenSet,
    pub cost: f64,
    pub cost_exact: Option<Q>,
    pub subsets: u128,
    /// Subsets actually costed (the rest were pruned).
    pub visited: u64,
}

struct Search<'a, T> {
    /// `dist[c][f]`
    dist: &'a [Vec<T>],
    demand: &'a [T],
    /// `suffix[c][f]`: nearest facility among `f..`
    suffix: &'a [Vec<T>],
    nf: usize,
    kp: usize,
    prune: bool,
}

struct Best<T> {
    cost: T,
    pick: Vec<usize>,
}

impl<T: Scalar> Search<'_, T> {
    fn bound(&self, cur: &[T], next: usize) -> T {
        let mut s = T::zero();
        for (c, u) in self.demand.iter().enumerate() {
            let m = if next < self.nf && self.suffix[c][next] < cur[c] { &self.suffix[c][next] } else { &cur[c] };
            s = s + u.clone() * m.clone();
        }
        s
    }

    fn dfs(&self, pick: &mut Vec<usize>, cur: &[T], shared: &Mutex<Option<T>>, best: &mut Option<Best<T>>, visited: &mut u64) {
        if pick.len() == self.kp {
            *visited += 1;
            let cost = self.bound(cur, self.nf);
            if best.as_ref().map_or(true, |b| cost < b.cost) {
                let mut g = shared.lock().unwrap();
                if g.as_ref().map_or(true, |g| cost < *g) {
                    *g = Some(cost.clone());
                }
                *best = Some(Best { cost, pick: pick.clone() });
            }
            return;
        }
        let need = self.kp - pick.len();
        let start = pick.last().map_or(0, |&f| f + 1);
        for f in start..=self.nf - need {
            let next: Vec<T> = cur.iter().enumerate().map(|(c, d)| if self.dist[c][f] < *d { self.dist[c][f].clone() } else { d.clone() }).collect();
            if self.prune {
                // strict: ties survive, so the lexicographically first optimum is kept
                let lb = self.bound(&next, f + 1);
                if shared.lock().unwrap().as_ref().is_some_and(|g| lb > *g) {
                    continue;
                }
            }
            pick.push(f);
            self.dfs(pick, &next, shared, best, visited);
            pick.pop();
        }
    }
}

fn run<T: Scalar>(dist: Vec<Vec<T>>, demand: Vec<T>, kp: usize, prune: bool, inf: T) -> (Vec<usize>, T, u64) {
    let nf = dist.first().map_or(0, Vec::len);
    let suffix: Vec<Vec<T>> = dist
        .iter()
        .map(|row| {
            let mut s = vec![inf.clone(); nf + 1];
            for f in (0..nf).rev() {
                s[f] = if row[f] < s[f + 1] { row[f].clone() } else { s[f + 1].clone() };
            }
            s
        })
        .collect();
    let search = Search { dist: &dist, demand: &demand, suffix: &suffix, nf, kp, prune };
    let shared = Mutex::new(None);
    let init: Vec<T> = vec![inf; demand.len()];
    // one task per first facility; the reduction prefers the earliest task on ties
    let results: Vec<(Option<Best<T>>, u64)> = (0..=nf - kp)
        .into_par_iter()
        .map(|f0| {
            let mut best = None;
            let mut visited = 0;
            let next: Vec<T> = init.iter().enumerate().map(|(c, d)| if dist[c][f0] < *d { dist[c][f0].clone() } else { d.clone() }).collect();
            let mut pick = vec![f0];
            search.dfs(&mut pick, &next, &shared, &mut best, &mut visited);
            (best, visited)
        })
        .collect();
    let visited = results.iter().map(|r| r.1).sum();
    let best = results
        .into_iter()
        .filter_map(|r| r.0)
        .reduce(|a, b| if b.cost < a.cost { b } else { a })
        .expect("at least one subset");
    (best.pick, best.cost, visited)
}

/// Cheapest set of exactly `kp` facilities. Exact instances are searched in
/// rational arithmetic.
pub fn brute_force_opt(inst: &MetricInstance, kp: usize, budget: u128, prune: bool) -> Result<BruteResult> {
    let nf = inst.facilities.len();
    if kp == 0 || kp > nf {
        return Err(Error::Arg(format!("k' = {kp} must be in 1..={nf}")));
    }
    let subsets = binom(nf, kp);
    if subsets > budget {
        return Err(Error::Budget { needed: subsets, budget });
    }
    let (pick, cost_exact, visited) = if let (true, Some(dem)) = (inst.is_exact(), inst.demand_exact()) {
        let dist: Vec<Vec<Q>> = inst.clients.iter().map(|&c| inst.facilities.iter().map(|&f| inst.d_exact(c, f).unwrap().clone()).collect()).collect();
        let big: Q = dist.iter().flatten().fold(Q::from_integer(1.into()), |a, d| a + d);
        let (pick, cost, visited) = run(dist, dem.to_vec(), kp, prune, big);
        (pick, Some(cost), visited)
    } else {
        let dist: Vec<Vec<f64>> = inst.clients.iter().map(|&c| inst.facilities.iter().map(|&f| inst.d(c, f)).collect()).collect();
        let (pick, _, visited) = run(dist, inst.demand.clone(), kp, prune, f64::INFINITY);
        (pick, None, visited)
    };
    let open = OpenSet::new(pick.iter().map(|&i| inst.facilities[i]).collect(), None);
    let cost = crate::instance::connection_cost(inst, &open)?;
    Ok(BruteResult { open, cost, cost_exact, subsets, visited })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::synthesize_random_bipoint;

    #[test]
    fn binomials() {
        assert_eq!(binom(15, 8), 6435);
        assert_eq!(binom(5, 2), 10);
        assert_eq!(binom(3, 5), 0);
    }

    #[test]
    fn pruned_matches_unpruned() {
        for seed in 0..5 {
            let sol = synthesize_random_bipoint(12, 3, 6, 4, seed).unwrap();
            let a = brute_force_opt(&sol.instance, 3, 1 << 20, true).unwrap();
            let b = brute_force_opt(&sol.instance, 3, 1 << 20, false).unwrap();
            assert_eq!(a.open.facilities, b.open.facilities);
            assert_eq!(a.cost, b.cost);
            assert_eq!(b.visited as u128, b.subsets);
        }
    }

    #[test]
    fn over_budget() {
        let sol = synthesize_random_bipoint(5, 3, 6, 4, 1).unwrap();
        assert!(matches!(brute_force_opt(&sol.instance, 4, 10, true), Err(Error::Budget { needed: 126, .. })));
    }
}

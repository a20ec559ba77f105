//! Running parameter vectors on concrete instances.

use num_traits::{One, Zero};
use rand::seq::index::sample;
use rand::Rng;
use serde::Serialize;

use super::chains::builtin_tables;
use super::expr::Point;
use super::spec::{is_valid, AlgorithmSpec};
use crate::error::Result;
use crate::instance::{BiPointSolution, NearestIndex, OpenSet};
use crate::num::{floor_q, Q};
use crate::partition::{build_partition, build_stars, FacilityPartition};
use crate::rounding::star_round;

/// The instance's own `(b, gamma)`; `None` when `C` is empty.
pub fn instance_point(sol: &BiPointSolution, part: &FacilityPartition) -> Option<Point<Q>> {
    if part.c_total() == 0 {
        return None;
    }
    Some(Point { b: sol.b.clone(), ga: part.gamma_a.clone(), gc: part.gamma_c.clone() })
}

#[derive(Clone, Debug, Serialize)]
pub struct ExecOutcome {
    pub open: OpenSet,
    /// Facilities sampled from each set, in parameter order.
    pub counts: Vec<usize>,
    /// Sets whose count `p_W |W|` was not integral and was rounded down.
    pub slack: usize,
}

/// Samples `p_W |W|` facilities uniformly from each set `W`.
pub fn execute<Rn: Rng + ?Sized>(spec: &AlgorithmSpec<Q>, part: &FacilityPartition, rng: &mut Rn) -> ExecOutcome {
    let sets = part.sets();
    let mut open = Vec::new();
    let mut counts = Vec::with_capacity(sets.len());
    let mut slack = 0;
    for (w, set) in sets.iter().enumerate() {
        let want = &spec.p[w] * Q::from_integer(set.len().into());
        let c = if want.is_integer() {
            want.to_integer()
        } else {
            slack += 1;
            floor_q(&want)
        };
        let c: usize = c.try_into().unwrap_or(0).min(set.len());
        if c == set.len() {
            open.extend(set.iter().copied());
        } else if c > 0 {
            open.extend(sample(rng, set.len(), c).into_iter().map(|i| set[i]));
        }
        counts.push(c);
    }
    open.sort_unstable();
    ExecOutcome { open: OpenSet::new(open, None), counts, slack }
}

/// Every `i` in `A` has one of `{i, sigma_B(i), sigma_C(i)}` open, and every
/// `i` in `A_1` has one of `{i, sigma_B(i)}` open.
pub fn backup_holds(sol: &BiPointSolution, part: &FacilityPartition, open: &OpenSet) -> bool {
    let n = sol.instance.n();
    let mut is_open = vec![false; n];
    for &i in &open.facilities {
        is_open[i] = true;
    }
    sol.f1.iter().enumerate().all(|(pos, &i)| {
        let b = part.forest.sigma_b[pos];
        let c = part.forest.sigma_c[pos];
        if part.level_of[pos] == 0 && !(is_open[i] || is_open[b]) {
            return false;
        }
        is_open[i] || is_open[b] || c.is_some_and(|c| is_open[c])
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct Candidate {
    pub source: String,
    pub cost: f64,
    pub size: usize,
    pub slack: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct BestOf {
    pub open: OpenSet,
    pub cost: f64,
    pub source: String,
    pub candidates: Vec<Candidate>,
    /// Table rows whose instantiation was not valid on this instance.
    pub skipped: usize,
}

/// Runs star rounding and every applicable shipped table, keeping the cheapest.
pub fn best_of<Rn: Rng + ?Sized>(sol: &BiPointSolution, eps: f64, rng: &mut Rn) -> Result<BestOf> {
    let idx = NearestIndex::new(&sol.instance);
    let mut cands: Vec<(Candidate, OpenSet)> = Vec::new();
    let sr = star_round(sol, eps, rng)?;
    cands.push((Candidate { source: "SR".into(), cost: idx.cost_of(&sr), size: sr.len(), slack: 0 }, sr));
    let f1 = OpenSet::new(sol.f1.clone(), None);
    if sol.b.is_zero() || sol.f1.len() == sol.f2.len() {
        cands.push((Candidate { source: "F1".into(), cost: idx.cost_of(&f1), size: f1.len(), slack: 0 }, f1));
    }
    if sol.b.is_one() {
        let f2 = OpenSet::new(sol.f2.clone(), None);
        cands.push((Candidate { source: "F2".into(), cost: idx.cost_of(&f2), size: f2.len(), slack: 0 }, f2));
    }
    let mut skipped = 0;
    let forest = build_stars(sol)?;
    if forest.secondary_available {
        for table in builtin_tables().into_iter().filter(|t| t.name != "uniform") {
            let part = build_partition(sol, &forest, &table.g)?;
            let pt = instance_point(sol, &part).expect("C nonempty");
            for ch in &table.chains {
                let spec = ch.instantiate(&pt);
                if !is_valid(&spec, &pt) {
                    skipped += 1;
                    continue;
                }
                let out = execute(&spec, &part, rng);
                let c = Candidate { source: format!("{}/{}", table.name, ch.name), cost: idx.cost_of(&out.open), size: out.open.len(), slack: out.slack };
                cands.push((c, out.open));
            }
        }
    }
    let best = cands.iter().enumerate().min_by(|a, b| a.1 .0.cost.total_cmp(&b.1 .0.cost)).map(|(i, _)| i).unwrap();
    let (bc, bo) = cands[best].clone();
    Ok(BestOf { open: bo, cost: bc.cost, source: bc.source, candidates: cands.into_iter().map(|c| c.0).collect(), skipped })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::synthesize_random_bipoint;
    use crate::num::{q, qi};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn integral_spec_is_deterministic() {
        let sol = synthesize_random_bipoint(30, 4, 10, 7, 3).unwrap();
        let forest = build_stars(&sol).unwrap();
        let part = build_partition(&sol, &forest, &[]).unwrap();
        // b = 1/2, |C| = 6: open A and C fully, B not at all would be 10 > 7;
        // (1, 0, 1/2) opens 4 + 3 = 7
        let spec = AlgorithmSpec { m: 1, p: vec![qi(1), qi(0), q(1, 2)] };
        let pt = instance_point(&sol, &part).unwrap();
        assert!(is_valid(&spec, &pt));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let out = execute(&spec, &part, &mut rng);
        assert_eq!(out.open.len(), 7);
        assert_eq!(out.slack, 0);
        assert!(backup_holds(&sol, &part, &out.open));
    }

    #[test]
    fn first_row_keeps_backups() {
        let sol = synthesize_random_bipoint(30, 5, 9, 7, 11).unwrap();
        let forest = build_stars(&sol).unwrap();
        let part = build_partition(&sol, &forest, &[]).unwrap();
        let pt = instance_point(&sol, &part).unwrap();
        let spec = AlgorithmSpec { m: 1, p: vec![qi(0), qi(1), sol.b.clone()] };
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let out = execute(&spec, &part, &mut rng);
            assert_eq!(out.open.len(), 7);
            assert!(backup_holds(&sol, &part, &out.open));
        }
        assert!(is_valid(&spec, &pt));
    }

    #[test]
    fn non_integral_count_floors() {
        let sol = synthesize_random_bipoint(10, 2, 6, 4, 2).unwrap();
        let forest = build_stars(&sol).unwrap();
        let part = build_partition(&sol, &forest, &[]).unwrap();
        let spec = AlgorithmSpec { m: 1, p: vec![qi(1), qi(0), q(1, 3)] };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let out = execute(&spec, &part, &mut rng);
        assert_eq!(out.slack, 1);
        assert_eq!(out.counts[2], 1);
    }

    #[test]
    fn best_of_at_b_zero_is_f1() {
        let sol = synthesize_random_bipoint(25, 5, 5, 5, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let r = best_of(&sol, 0.1, &mut rng).unwrap();
        assert!((r.cost - sol.d1).abs() < 1e-9);
    }

    #[test]
    fn best_of_respects_budget() {
        let sol = synthesize_random_bipoint(60, 8, 20, 12, 21).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let r = best_of(&sol, 0.1, &mut rng).unwrap();
        assert!(r.open.len() <= 12 + 52);
        assert!(r.candidates.len() > 10);
        for c in r.candidates.iter().filter(|c| c.source != "SR") {
            assert!(c.size <= 12, "{c:?}");
        }
    }
}

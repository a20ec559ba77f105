//! Chains: piecewise parameter formulas, the shipped tables, generation by
//! start sets and orderings, and the two pruning heuristics.

use std::collections::{BTreeSet, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::expr::{parse_param, Affine, ParamExpr, Point};
use super::spec::{canonical, enumerate_algm, same_params, set_index, set_name, AlgorithmSpec};
use crate::error::{Error, Result};
use crate::lp::{solve_lp, Cmp, LpProblem, LpStatus};
use crate::num::{parse_q, Scalar, Q, R};

#[derive(Clone, Debug, PartialEq)]
pub struct ChainSpec {
    pub name: String,
    pub m: usize,
    pub params: Vec<ParamExpr>,
    /// Generated chains remember how they were built.
    pub start: Option<Vec<usize>>,
    pub order: Option<Vec<usize>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChainJson {
    pub name: String,
    pub m: usize,
    pub p: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<Vec<String>>,
}

impl ChainSpec {
    pub fn parse(name: &str, m: usize, p: &[&str]) -> Result<Self> {
        if p.len() != 3 * m {
            return Err(Error::Arg(format!("chain {name}: expected {} parameters, got {}", 3 * m, p.len())));
        }
        let params = p.iter().map(|s| parse_param(m, s).map_err(|e| Error::Arg(format!("chain {name}: {e}")))).collect::<Result<_>>()?;
        Ok(ChainSpec { name: name.to_string(), m, params, start: None, order: None })
    }

    pub fn instantiate<T: Scalar>(&self, pt: &Point<T>) -> AlgorithmSpec<T> {
        AlgorithmSpec { m: self.m, p: self.params.iter().map(|e| e.eval(pt)).collect() }
    }

    /// True when some formula depends on `gamma_{A_1}`.
    pub fn uses_ga1(&self) -> bool {
        self.params.iter().any(|e| e.uses_var(2))
    }

    pub fn to_json(&self) -> ChainJson {
        let names = |v: &Vec<usize>| v.iter().map(|&w| set_name(self.m, w)).collect();
        ChainJson {
            name: self.name.clone(),
            m: self.m,
            p: self.params.iter().map(|e| e.to_string()).collect(),
            start: self.start.as_ref().map(names),
            order: self.order.as_ref().map(names),
        }
    }

    pub fn from_json(j: &ChainJson) -> Result<Self> {
        let p: Vec<&str> = j.p.iter().map(|s| s.as_str()).collect();
        let mut c = Self::parse(&j.name, j.m, &p)?;
        let idx = |v: &Vec<String>| v.iter().map(|s| set_index(j.m, s).ok_or_else(|| Error::Arg(format!("bad set name {s}")))).collect::<Result<Vec<_>>>();
        c.start = j.start.as_ref().map(idx).transpose()?;
        c.order = j.order.as_ref().map(idx).transpose()?;
        Ok(c)
    }
}

#[derive(Clone, Debug)]
pub struct ChainTable {
    pub name: String,
    pub m: usize,
    /// Interior thresholds the table was designed for.
    pub g: Vec<Q>,
    pub chains: Vec<ChainSpec>,
}

#[derive(Deserialize)]
struct TableFile {
    version: u32,
    tables: std::collections::BTreeMap<String, TableJson>,
}

#[derive(Deserialize)]
struct TableJson {
    m: usize,
    g: Vec<String>,
    rows: Vec<RowJson>,
}

#[derive(Deserialize)]
struct RowJson {
    name: String,
    p: Vec<String>,
}

const TABLES: &str = include_str!("../../data/chains.json");

pub const TABLE_NAMES: [&str; 4] = ["alg1", "alg2", "alg3", "uniform"];

/// The shipped tables keyed by name: `alg1`, `alg2`, `alg3`, `uniform`.
pub fn builtin_tables() -> Vec<ChainTable> {
    let f: TableFile = serde_json::from_str(TABLES).expect("shipped chain table parses");
    assert_eq!(f.version, 1);
    TABLE_NAMES
        .iter()
        .map(|&n| {
            let t = &f.tables[n];
            let chains = t
                .rows
                .iter()
                .map(|r| {
                    let p: Vec<&str> = r.p.iter().map(|s| s.as_str()).collect();
                    ChainSpec::parse(&r.name, t.m, &p).expect("shipped chain parses")
                })
                .collect();
            ChainTable { name: n.to_string(), m: t.m, g: t.g.iter().map(|s| parse_q(s).expect("threshold")).collect(), chains }
        })
        .collect()
}

pub fn builtin(name: &str) -> Result<ChainTable> {
    builtin_tables().into_iter().find(|t| t.name == name).ok_or_else(|| Error::Arg(format!("unknown table {name:?}; expected one of {TABLE_NAMES:?}")))
}

/// `b + sum_t gA_t - sum_{V in S} gamma_V`: the mass left after opening `S`.
pub fn residual(m: usize, s: &[usize]) -> Affine {
    let mut e = Affine::var_b(m);
    for t in 0..m {
        e = e.add(&Affine::var_ga(m, t));
    }
    for &v in s {
        e = e.sub(&Affine::gamma(m, v));
    }
    e
}

/// Linear regions of the `gamma_C` recursion. In region `r` (0-based),
/// `C_s = A_s` for `s > r`, `C_r` takes the remainder, and lower `C_s` are empty.
struct Region {
    /// Per layout variable, its affine expression over `[1, b, gA1..gAm]`.
    map: Vec<Vec<f64>>,
    /// Affine forms over the LP variables that must be nonnegative.
    cons: Vec<Vec<f64>>,
    /// Sets that are identically empty in this region.
    empty: Vec<usize>,
}

const GAMMA_MAX: f64 = 1e3;

fn regions(m: usize) -> Vec<Region> {
    let nl = m + 2;
    let unit = |i: usize| {
        let mut v = vec![0.0; nl];
        v[i] = 1.0;
        v
    };
    (0..m)
        .map(|r| {
            let mut map = vec![unit(0), unit(1)];
            for t in 0..m {
                map.push(unit(2 + t));
            }
            // remainder 1 - sum_{u > r} gA_u
            let mut rem = unit(0);
            for u in r + 1..m {
                rem[2 + u] -= 1.0;
            }
            for s in 1..m {
                map.push(if s > r {
                    unit(2 + s)
                } else if s == r {
                    rem.clone()
                } else {
                    vec![0.0; nl]
                });
            }
            let mut cons = vec![rem.clone()];
            if r >= 1 {
                let mut c = unit(2 + r);
                for (ci, ri) in c.iter_mut().zip(&rem) {
                    *ci -= ri;
                }
                cons.push(c);
            }
            let mut empty: Vec<usize> = (1..r).map(|s| 2 * m + s).collect();
            if r >= 1 {
                empty.push(2 * m);
            }
            Region { map, cons, empty }
        })
        .collect()
}

fn lower(a: &Affine, reg: &Region) -> Vec<f64> {
    let nl = a.m + 2;
    let mut out = vec![0.0; nl];
    for (i, &k) in a.c.iter().enumerate() {
        if k != 0 {
            for j in 0..nl {
                out[j] += k as f64 * reg.map[i][j];
            }
        }
    }
    out
}

fn region_lp(m: usize, reg: &Region, maximize: bool) -> LpProblem {
    let mut lp = LpProblem::new(maximize);
    lp.var(0.0, 0.0, 1.0);
    for _ in 0..m {
        lp.var(0.0, 0.0, GAMMA_MAX);
    }
    for c in &reg.cons {
        lp.row((0..=m).map(|i| (i, c[i + 1])).collect(), Cmp::Ge, -c[0]);
    }
    lp
}

/// Exists a point of the region with `0 < E < upper`, by maximising the slack.
fn reachable(m: usize, reg: &Region, e: &Affine, upper: &Affine) -> bool {
    let le = lower(e, reg);
    let lu = lower(upper, reg);
    let mut lp = region_lp(m, reg, true);
    let s = lp.var(1.0, -GAMMA_MAX, 1.0);
    // E - s >= 0
    let mut row: Vec<(usize, f64)> = (0..=m).map(|i| (i, le[i + 1])).collect();
    row.push((s, -1.0));
    lp.row(row, Cmp::Ge, -le[0]);
    // upper - E - s >= 0
    let mut row: Vec<(usize, f64)> = (0..=m).map(|i| (i, lu[i + 1] - le[i + 1])).collect();
    row.push((s, -1.0));
    lp.row(row, Cmp::Ge, le[0] - lu[0]);
    let sol = solve_lp(&lp);
    sol.status == LpStatus::Optimal && sol.value > 1e-9
}

fn min_over_region(m: usize, reg: &Region, e: &Affine) -> f64 {
    let le = lower(e, reg);
    let mut lp = region_lp(m, reg, false);
    for i in 0..=m {
        lp.vars[i].0 = le[i + 1];
    }
    let sol = solve_lp(&lp);
    match sol.status {
        LpStatus::Optimal => sol.value + le[0],
        LpStatus::Infeasible => f64::INFINITY,
        _ => f64::NEG_INFINITY,
    }
}

/// Def. 2.8 properties 3 and 4 for a ones-set, ignoring measure-zero emptiness.
pub fn ones_valid(m: usize, ones: &[bool]) -> bool {
    let prop3 = (0..m).all(|t| ones[t] || (0..=t).all(|s| ones[m + s]) || (t..m).all(|s| ones[2 * m + s]));
    prop3 && (ones[0] || ones[m])
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct GenStats {
    pub candidates: usize,
    pub bad_start: usize,
    pub bad_piece: usize,
    pub duplicates: usize,
    pub lps: usize,
}

fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let x = rest.remove(i);
        for mut p in permutations(&rest) {
            p.insert(0, x);
            out.push(p);
        }
    }
    out
}

/// All chains from `m`-sized start sets and orderings of the remaining sets
/// whose every reachable piece is valid.
pub fn generate_chains(m: usize) -> (Vec<ChainSpec>, GenStats) {
    let n = 3 * m;
    let regs = regions(m);
    let mut stats = GenStats::default();
    let mut piece_ok: HashMap<(u32, usize), bool> = HashMap::new();
    let mut seen: HashSet<Vec<ParamExpr>> = HashSet::new();
    let mut out = Vec::new();
    for smask in 0u32..(1 << n) {
        if smask.count_ones() as usize != m {
            continue;
        }
        let start: Vec<usize> = (0..n).filter(|&w| smask >> w & 1 == 1).collect();
        let rest: Vec<usize> = (0..n).filter(|&w| smask >> w & 1 == 0).collect();
        let perms = permutations(&rest);
        stats.candidates += perms.len();
        let e0 = residual(m, &start);
        stats.lps += regs.len();
        if regs.iter().any(|r| min_over_region(m, r, &e0) < -1e-9) {
            stats.bad_start += perms.len();
            continue;
        }
        'order: for ord in perms {
            let mut s = smask;
            for &w in &ord {
                let ok = *piece_ok.entry((s, w)).or_insert_with(|| {
                    let sv: Vec<usize> = (0..n).filter(|&v| s >> v & 1 == 1).collect();
                    let e = residual(m, &sv);
                    let g = Affine::gamma(m, w);
                    regs.iter().all(|reg| {
                        stats.lps += 1;
                        if !reachable(m, reg, &e, &g) {
                            return true;
                        }
                        let mut ones: Vec<bool> = (0..n).map(|v| s >> v & 1 == 1).collect();
                        for &v in &reg.empty {
                            ones[v] = true;
                        }
                        ones_valid(m, &ones)
                    })
                });
                if !ok {
                    stats.bad_piece += 1;
                    continue 'order;
                }
                s |= 1 << w;
            }
            let mut params = vec![ParamExpr::Const(0); n];
            for &w in &start {
                params[w] = ParamExpr::Const(1);
            }
            let mut opened = start.clone();
            for &w in &ord {
                params[w] = ParamExpr::Ratio { num: residual(m, &opened), den: Affine::gamma(m, w) };
                opened.push(w);
            }
            if !seen.insert(params.clone()) {
                stats.duplicates += 1;
                continue;
            }
            out.push(ChainSpec { name: format!("G{}", out.len() + 1), m, params, start: Some(start.clone()), order: Some(ord) });
        }
    }
    (out, stats)
}

/// Breakpoints in `b` where some residual crosses 0 or a set size:
/// `sum_{T} gamma_T - sum_t gA_t` for every subset `T`, within `[0,1]`.
pub fn breakpoints(m: usize, ga: &[R], gc: &[R]) -> BTreeSet<R> {
    let n = 3 * m;
    let gam: Vec<R> = (0..n).map(|w| if w < 2 * m { ga[w % m] } else { gc[w - 2 * m] }).collect();
    let base: R = ga.iter().sum();
    let mut out = BTreeSet::new();
    for mask in 0u32..(1 << n) {
        let s: R = (0..n).filter(|&w| mask >> w & 1 == 1).map(|w| gam[w]).sum();
        let v = s - base;
        if v >= R::from_integer(0) && v <= R::from_integer(1) {
            out.insert(v);
        }
    }
    out
}

/// Coverage grid: `b` in steps of `1/per_axis` plus breakpoints; `gamma_{A_t}`
/// (`t >= 2`) in steps of `1/(per_axis/2)` over `[0,2]`; `gamma_{A_1}` in a few
/// representative values.
pub fn coverage_grid(m: usize, per_axis: i128) -> Vec<Point<R>> {
    let ga1 = [R::new(1, 3), R::new(1, 1), R::new(5, 2)];
    let half = (per_axis / 2).max(1);
    let axis: Vec<R> = (0..=2 * half).map(|j| R::new(j, half)).collect();
    let mut tails: Vec<Vec<R>> = vec![vec![]];
    for _ in 1..m {
        tails = tails.into_iter().flat_map(|t| axis.iter().map(move |&g| [t.clone(), vec![g]].concat())).collect();
    }
    let mut pts = Vec::new();
    for &g1 in &ga1 {
        for tail in &tails {
            let mut ga = vec![g1];
            ga.extend(tail.iter().copied());
            let proto = Point::<R>::from_ga(R::from_integer(0), ga.clone());
            let mut bs: BTreeSet<R> = (0..=per_axis).map(|j| R::new(j, per_axis)).collect();
            bs.extend(breakpoints(m, &ga, &proto.gc));
            for b in bs {
                pts.push(Point { b, ga: ga.clone(), gc: proto.gc.clone() });
            }
        }
    }
    pts
}

/// The enumerated algorithms at each grid point, flattened into one universe.
#[derive(Clone, Debug)]
pub struct Universe {
    pub points: Vec<Point<R>>,
    pub algs: Vec<Vec<AlgorithmSpec<R>>>,
}

impl Universe {
    pub fn build(m: usize, points: Vec<Point<R>>) -> Self {
        use rayon::prelude::*;
        let algs = points.par_iter().map(|p| enumerate_algm(m, p)).collect();
        Universe { points, algs }
    }

    pub fn len(&self) -> usize {
        self.algs.iter().map(|a| a.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Flat element ids covered by a chain.
    pub fn covered_by(&self, chain: &ChainSpec) -> Vec<usize> {
        let mut out = Vec::new();
        let mut base = 0;
        for (p, algs) in self.points.iter().zip(&self.algs) {
            let c = canonical(&chain.instantiate(p), p);
            if let Some(i) = algs.iter().position(|a| same_params(&a.p, &c)) {
                out.push(base + i);
            }
            base += algs.len();
        }
        out
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CoverResult {
    pub chosen: Vec<usize>,
    pub universe: usize,
    /// Elements no chain covers.
    pub uncovered: usize,
}

/// Greedy maximum coverage; ties go to the lowest chain index.
pub fn greedy_cover(chains: &[ChainSpec], universe: &Universe) -> CoverResult {
    use rayon::prelude::*;
    let sets: Vec<Vec<usize>> = chains.par_iter().map(|c| universe.covered_by(c)).collect();
    let n = universe.len();
    let mut covered = vec![false; n];
    for s in &sets {
        for &e in s {
            covered[e] = true;
        }
    }
    let uncovered = covered.iter().filter(|c| !**c).count();
    let mut done = vec![false; n];
    let mut chosen = Vec::new();
    loop {
        let (best, gain) = sets
            .iter()
            .enumerate()
            .map(|(i, s)| (i, s.iter().filter(|&&e| !done[e]).count()))
            .fold((usize::MAX, 0), |acc, (i, g)| if g > acc.1 { (i, g) } else { acc });
        if gain == 0 {
            break;
        }
        for &e in &sets[best] {
            done[e] = true;
        }
        chosen.push(best);
    }
    CoverResult { chosen, universe: n, uncovered }
}

/// Heuristic NLP oracle used by [`iterative_addition`].
pub trait NlpHeuristic {
    type Witness;
    /// Heuristic optimum of the program restricted to `chains`, with the
    /// maximising instance.
    fn solve(&self, chains: &[&ChainSpec]) -> (f64, Self::Witness);
    /// Cost bound of one chain on the witness instance.
    fn chain_cost(&self, chain: &ChainSpec, at: &Self::Witness) -> f64;
}

/// Grows `init` by the chain that is cheapest on the current worst instance,
/// until no remaining chain improves the objective. Returns chain indices.
pub fn iterative_addition<H: NlpHeuristic>(pool: &[ChainSpec], h: &H, init: Vec<usize>) -> Vec<usize> {
    let mut cur = init;
    loop {
        let chosen: Vec<&ChainSpec> = cur.iter().map(|&i| &pool[i]).collect();
        let (val, wit) = h.solve(&chosen);
        let best = (0..pool.len()).filter(|i| !cur.contains(i)).map(|i| (i, h.chain_cost(&pool[i], &wit))).min_by(|a, b| a.1.total_cmp(&b.1));
        match best {
            Some((i, c)) if c < val - 1e-9 => cur.push(i),
            _ => return cur,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alg::spec::{fractional_count, is_valid};

    #[test]
    fn tables_load() {
        let t = builtin_tables();
        let sizes: Vec<usize> = t.iter().map(|t| t.chains.len()).collect();
        assert_eq!(sizes, vec![5, 10, 29, 14]);
        assert_eq!(t[0].chains[0].params[2].to_string(), "b");
        assert_eq!(t[1].chains[7].params[4].to_string(), "(b-gA2-gC2)/(1-gC2)");
        assert!(t[3].chains.iter().all(|c| c.params[0] == ParamExpr::Const(0) && c.params[2] == ParamExpr::Const(0)));
    }

    #[test]
    fn table2_a8_pieces() {
        let a8 = &builtin("alg2").unwrap().chains[7];
        let ga = vec![R::new(1, 2), R::new(3, 10)];
        let proto = Point::<R>::from_ga(R::from_integer(0), ga.clone());
        let at = |b: R| a8.instantiate(&Point { b, ga: ga.clone(), gc: proto.gc.clone() }).p;
        let r = |n, d| R::new(n, d);
        // piece 1: b <= gA2
        assert_eq!(at(r(1, 5)), vec![r(0, 1), r(2, 3), r(1, 1), r(1, 1), r(0, 1), r(0, 1)]);
        // piece 2: gA2 <= b <= gA2 + gC2
        assert_eq!(at(r(2, 5)), vec![r(0, 1), r(1, 1), r(1, 1), r(1, 1), r(0, 1), r(1, 3)]);
        // piece 3
        assert_eq!(at(r(9, 10)), vec![r(0, 1), r(1, 1), r(1, 1), r(1, 1), r(3, 7), r(1, 1)]);
    }

    #[test]
    fn m1_generation_covers_table1() {
        let (chains, _) = generate_chains(1);
        let grid = coverage_grid(1, 10);
        let u = Universe::build(1, grid);
        let res = greedy_cover(&chains, &u);
        assert_eq!(res.uncovered, 0);
        for c in &chains {
            for p in &u.points {
                let s = c.instantiate(p);
                assert!(is_valid(&s, p), "{} at {:?}", c.name, p);
                assert!(fractional_count(&s) <= 1);
            }
        }
    }

    #[test]
    fn json_roundtrip() {
        let (chains, _) = generate_chains(1);
        for c in chains {
            let j = c.to_json();
            assert_eq!(ChainSpec::from_json(&j).unwrap(), c);
        }
    }

    struct Toy;
    impl NlpHeuristic for Toy {
        type Witness = ();
        fn solve(&self, chains: &[&ChainSpec]) -> (f64, ()) {
            (10.0 - chains.len() as f64, ())
        }
        fn chain_cost(&self, c: &ChainSpec, _: &()) -> f64 {
            c.name.len() as f64
        }
    }

    #[test]
    fn iterative_full_init_unchanged() {
        let pool = builtin("alg1").unwrap().chains;
        let all: Vec<usize> = (0..pool.len()).collect();
        assert_eq!(iterative_addition(&pool, &Toy, all.clone()), all);
    }

    #[test]
    fn empty_universe_empty_cover() {
        let u = Universe { points: vec![], algs: vec![] };
        let res = greedy_cover(&builtin("alg2").unwrap().chains, &u);
        assert!(res.chosen.is_empty());
    }
}

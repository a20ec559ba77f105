//! The factor-revealing program: per-box LP relaxations and point checks.

use serde::{Deserialize, Serialize};

use super::enclose::{chain_enclosure, pieces, vacuous_sets, IntervalBox};
use crate::alg::chains::{builtin, ChainSpec, NlpHeuristic};
use crate::alg::cost::{cost_bound, cost_coeffs, sr_value, CostProfile};
use crate::alg::expr::Point;
use crate::alg::spec::{enumerate_algm, is_valid};
use crate::error::{Error, Result};
use crate::lp::{solve_lp, Cmp, LpProblem, LpStatus};
use crate::num::{from_f64, to_f64};

/// Added to every LP value before it is compared with a target.
pub const DELTA: f64 = 1e-7;

#[derive(Clone, Debug)]
pub struct NlpModel {
    pub m: usize,
    /// `g_0 = 0, g_1, .., g_{m-1}, g_m`.
    pub g_full: Vec<f64>,
    pub chains: Vec<ChainSpec>,
}

impl NlpModel {
    /// Model over `chains` with interior thresholds `g` (`g_m = 1`).
    pub fn new(m: usize, g: &[f64], chains: Vec<ChainSpec>) -> Result<Self> {
        if g.len() + 1 != m {
            return Err(Error::Thresholds(format!("m = {m} needs {} interior thresholds, got {}", m.saturating_sub(1), g.len())));
        }
        let mut g_full = vec![0.0];
        g_full.extend_from_slice(g);
        g_full.push(1.0);
        if g_full.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Thresholds(format!("thresholds must increase strictly in (0,1): {g:?}")));
        }
        if let Some(c) = chains.iter().find(|c| c.m != m) {
            return Err(Error::Arg(format!("chain {} has m = {}, model has m = {m}", c.name, c.m)));
        }
        Ok(NlpModel { m, g_full, chains })
    }

    /// A shipped table with its own thresholds.
    pub fn from_table(name: &str) -> Result<Self> {
        let t = builtin(name)?;
        let g: Vec<f64> = t.g.iter().map(to_f64).collect();
        Self::new(t.m, &g, t.chains)
    }

    pub fn n_d(&self) -> usize {
        4 * self.m * self.m
    }
}

/// Which sets each class `D_{Z,i}^{x,y}` (flat index) involves: `A_x` and `B_y` or `C_y`.
fn class_sets(m: usize, idx: usize) -> (usize, usize) {
    let y = idx % m;
    let x = (idx / m) % m;
    let z = idx / (2 * m * m);
    (x, if z == 0 { m + y } else { 2 * m + y })
}

fn is_d2(m: usize, idx: usize) -> bool {
    (idx / (m * m)) % 2 == 1
}

/// LP relaxation of the program on a box. Variable 0 is `X`, then the class
/// totals in [`CostProfile::index`] order.
pub fn relax_to_lp(model: &NlpModel, bx: &IntervalBox) -> LpProblem {
    let m = model.m;
    let pcs = pieces(bx);
    let vac = vacuous_sets(m, bx, &pcs);
    let nd = model.n_d();
    let mut lp = LpProblem::new(true);
    let x = lp.var(1.0, 0.0, f64::INFINITY);
    let zero: Vec<bool> = (0..nd).map(|i| {
        let (a, w) = class_sets(m, i);
        vac[a] || vac[w]
    }).collect();
    let d: Vec<usize> = (0..nd).map(|i| lp.var(0.0, 0.0, if zero[i] { 0.0 } else { f64::INFINITY })).collect();
    for ch in &model.chains {
        let enc = chain_enclosure(&ch.params, bx, &pcs);
        let coef = cost_coeffs(m, &model.g_full, &enc.lo, &enc.hi).flat();
        let mut row = vec![(x, 1.0)];
        row.extend((0..nd).filter(|&i| !zero[i] && coef[i] != 0.0).map(|i| (d[i], -coef[i])));
        lp.row(row, Cmp::Le, 0.0);
    }
    let b = bx.b();
    let live: Vec<usize> = (0..nd).filter(|&i| !zero[i]).collect();
    // D2 + (D1 - D2)(1 - b^1) <= 1
    lp.row(live.iter().map(|&i| (d[i], if is_d2(m, i) { b.hi } else { 1.0 - b.hi })).collect(), Cmp::Le, 1.0);
    // D2 <= D1
    lp.row(live.iter().map(|&i| (d[i], if is_d2(m, i) { 1.0 } else { -1.0 })).collect(), Cmp::Le, 0.0);
    // X <= 1 + 2 b^1 (1 - b^0) D2
    let k = 2.0 * b.hi * (1.0 - b.lo);
    let mut sr = vec![(x, 1.0)];
    sr.extend(live.iter().filter(|&&i| is_d2(m, i)).map(|&i| (d[i], -k)));
    lp.row(sr, Cmp::Le, 1.0);
    lp
}

/// LP value on the box: `+inf` when the solver fails, so the box is split
/// rather than trusted.
pub fn box_value(model: &NlpModel, bx: &IntervalBox) -> f64 {
    let s = solve_lp(&relax_to_lp(model, bx));
    match s.status {
        LpStatus::Optimal => s.value,
        LpStatus::Infeasible => f64::NEG_INFINITY,
        LpStatus::Unbounded | LpStatus::Failed => f64::INFINITY,
    }
}

/// The program at a fixed `(b, gamma)`: an LP in `X` and the class totals.
/// Returns the optimum and the maximising profile.
pub fn point_lp(model: &NlpModel, pt: &Point<f64>) -> Option<(f64, CostProfile)> {
    let m = model.m;
    let nd = model.n_d();
    let b = pt.b;
    let mut lp = LpProblem::new(true);
    let x = lp.var(1.0, 0.0, f64::INFINITY);
    let zero: Vec<bool> = (0..nd).map(|i| {
        let (a, w) = class_sets(m, i);
        pt.gamma(a) == 0.0 || pt.gamma(w) == 0.0
    }).collect();
    let d: Vec<usize> = (0..nd).map(|i| lp.var(0.0, 0.0, if zero[i] { 0.0 } else { f64::INFINITY })).collect();
    for ch in &model.chains {
        let p = ch.instantiate(pt).p;
        let coef = cost_coeffs(m, &model.g_full, &p, &p).flat();
        let mut row = vec![(x, 1.0)];
        row.extend((0..nd).filter(|&i| !zero[i] && coef[i] != 0.0).map(|i| (d[i], -coef[i])));
        lp.row(row, Cmp::Le, 0.0);
    }
    let live: Vec<usize> = (0..nd).filter(|&i| !zero[i]).collect();
    lp.row(live.iter().map(|&i| (d[i], if is_d2(m, i) { b } else { 1.0 - b })).collect(), Cmp::Eq, 1.0);
    lp.row(live.iter().map(|&i| (d[i], if is_d2(m, i) { 1.0 } else { -1.0 })).collect(), Cmp::Le, 0.0);
    let mut sr = vec![(x, 1.0)];
    sr.extend(live.iter().map(|&i| (d[i], -if is_d2(m, i) { b * (3.0 - 2.0 * b) } else { 1.0 - b })));
    lp.row(sr, Cmp::Le, 0.0);
    let s = solve_lp(&lp);
    (s.status == LpStatus::Optimal).then(|| (s.value, CostProfile::from_flat(m, &s.x[1..])))
}

/// Algorithms checked at a point.
#[derive(Clone, Debug)]
pub enum AlgSource {
    Chains(Vec<ChainSpec>),
    /// Every member of `ALG_m` at the point.
    Enumerate,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointAssignment {
    pub m: usize,
    /// Interior thresholds as used by the cost bounds; `g_full` overrides.
    #[serde(default)]
    pub g: Vec<f64>,
    #[serde(default)]
    pub g_full: Option<Vec<f64>>,
    pub b: f64,
    pub ga: Vec<f64>,
    /// Explicit `gamma_C`; derived from `ga` when absent.
    #[serde(default)]
    pub gc: Option<Vec<f64>>,
    pub d: CostProfile,
    /// Claimed objective; the minimum over all bounds when absent.
    #[serde(default)]
    pub x: Option<f64>,
    /// A shipped table, or all of `ALG_m` when absent.
    #[serde(default)]
    pub table: Option<String>,
    /// `gamma` at which validity is judged when different from `ga` (limit points).
    #[serde(default)]
    pub validity_ga: Option<Vec<f64>>,
    /// Slack for equalities and tightness; inputs given to few decimals need more than the default.
    #[serde(default)]
    pub tolerance: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct AlgCost {
    pub name: String,
    pub cost: f64,
    pub valid: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct PointReport {
    pub feasible: bool,
    /// Minimum over the algorithms' bounds and SR.
    pub objective: f64,
    pub x: f64,
    pub sr: f64,
    pub d1: f64,
    pub d2: f64,
    pub algorithms: Vec<AlgCost>,
    pub tight: Vec<String>,
    pub violations: Vec<String>,
}

const POINT_TOL: f64 = 1e-9;
const TIGHT_TOL: f64 = 1e-6;

pub fn evaluate_point(pa: &PointAssignment) -> Result<PointReport> {
    let m = pa.m;
    if pa.ga.len() != m || pa.d.m != m {
        return Err(Error::Arg(format!("point has inconsistent m = {m}")));
    }
    let g_full = match &pa.g_full {
        Some(g) => g.clone(),
        None => {
            let mut g = vec![0.0];
            g.extend_from_slice(&pa.g);
            g.push(1.0);
            g
        }
    };
    if g_full.len() != m + 1 {
        return Err(Error::Thresholds(format!("expected {} thresholds including g_0 and g_m", m + 1)));
    }
    let pt = match &pa.gc {
        Some(gc) => Point { b: pa.b, ga: pa.ga.clone(), gc: gc.clone() },
        None => Point::from_ga(pa.b, pa.ga.clone()),
    };
    let vpt = match &pa.validity_ga {
        Some(ga) => Point::from_ga(pa.b, ga.clone()),
        None => pt.clone(),
    };
    let tol = pa.tolerance.unwrap_or(POINT_TOL);
    let tight_tol = tol.max(TIGHT_TOL);
    let mut violations = Vec::new();
    let mut tight = Vec::new();
    let (d1, d2) = (pa.d.total_d1(), pa.d.total_d2());
    if !(0.0..=1.0).contains(&pa.b) {
        violations.push("0 <= b <= 1".into());
    }
    if pt.ga.iter().chain(&pt.gc).any(|g| *g < 0.0) {
        violations.push("gamma >= 0".into());
    }
    if pa.d.flat().iter().any(|v| *v < 0.0) {
        violations.push("D >= 0".into());
    }
    let norm = (1.0 - pa.b) * d1 + pa.b * d2;
    if (norm - 1.0).abs() > tol {
        violations.push(format!("(1-b)D1 + bD2 = 1 (got {norm})"));
    }
    if d2 > d1 + tol {
        violations.push("D2 <= D1".into());
    }
    let algs: Vec<(String, Vec<f64>, bool)> = match &pa.table {
        Some(name) => {
            let t = builtin(name)?;
            if t.m != m {
                return Err(Error::Arg(format!("table {name} has m = {}", t.m)));
            }
            t.chains
                .iter()
                .map(|c| {
                    let p = c.instantiate(&pt).p;
                    let valid = is_valid(&c.instantiate(&vpt), &vpt);
                    (c.name.clone(), p, valid)
                })
                .collect()
        }
        // exact arithmetic: absolute tolerances are meaningless at large gamma
        None => enumerate_algm(m, &vpt.map(|v| from_f64(*v)))
            .into_iter()
            .enumerate()
            .map(|(i, s)| (format!("E{}", i + 1), s.p.iter().map(to_f64).collect(), true))
            .collect(),
    };
    let mut out = Vec::new();
    for (name, p, valid) in algs {
        let cost = cost_bound(m, &p, &g_full, &pa.d);
        out.push(AlgCost { name, cost, valid });
    }
    let sr = sr_value(pa.b, d1, d2);
    let objective = out.iter().filter(|a| a.valid).map(|a| a.cost).fold(sr, f64::min);
    let x = pa.x.unwrap_or(objective);
    for a in &out {
        if a.valid && x > a.cost + tol {
            violations.push(format!("X <= cost({})", a.name));
        }
        if a.valid && (x - a.cost).abs() <= tight_tol {
            tight.push(a.name.clone());
        }
    }
    if x > sr + tol {
        violations.push("X <= cost(SR)".into());
    }
    if (x - sr).abs() <= tight_tol {
        tight.push("SR".into());
    }
    Ok(PointReport { feasible: violations.is_empty(), objective, x, sr, d1, d2, algorithms: out, tight, violations })
}

pub const PRESETS: [&str; 2] = ["hard-point-s3", "m1-feasible"];

pub fn preset(name: &str) -> Result<PointAssignment> {
    match name {
        "hard-point-s3" => {
            let mut d = CostProfile::zeros(2);
            d.db1[1][1] = 0.722175;
            d.dc1[1][0] = 0.647832;
            d.dc1[1][1] = 0.317901;
            d.db2[1][1] = 0.289375;
            d.dc2[1][0] = 0.259589;
            d.dc2[1][1] = 0.127384;
            Ok(PointAssignment {
                m: 2,
                g: vec![],
                // g_1 = 1 and g_2 just above it
                g_full: Some(vec![0.0, 1.0, 1.0 + 1e-6]),
                b: 0.68,
                ga: vec![0.0, 0.7478],
                gc: Some(vec![1.0 - 0.3291, 0.3291]),
                d,
                x: None,
                table: Some("uniform".into()),
                validity_ga: None,
                // the published values carry six decimals
                tolerance: Some(1e-4),
            })
        }
        "m1-feasible" => {
            let s3 = 3f64.sqrt();
            let mut d = CostProfile::zeros(1);
            d.db1[0][0] = 1.0 / s3;
            d.db2[0][0] = 0.0;
            d.dc1[0][0] = (3.0 + s3) / 6.0;
            d.dc2[0][0] = (3.0 + s3) / 6.0;
            Ok(PointAssignment {
                m: 1,
                g: vec![],
                g_full: None,
                b: (3.0 - s3) / 2.0,
                // costs are taken at the limit gamma -> inf, validity at a large surrogate
                ga: vec![1e12],
                gc: None,
                d,
                x: Some((1.0 + s3) / 2.0),
                table: None,
                validity_ga: Some(vec![1e12]),
                tolerance: None,
            })
        }
        _ => Err(Error::Arg(format!("unknown preset {name:?}; expected one of {PRESETS:?}"))),
    }
}

/// Grid search over `(b, gamma_A)` with the point LP at each node; the
/// heuristic optimum used when pruning chain sets.
#[derive(Clone, Debug)]
pub struct GridNlp {
    pub m: usize,
    pub g_full: Vec<f64>,
    pub points: Vec<Point<f64>>,
}

impl GridNlp {
    pub fn new(m: usize, g: &[f64], b_steps: usize, gammas: &[f64]) -> Self {
        let mut g_full = vec![0.0];
        g_full.extend_from_slice(g);
        g_full.push(1.0);
        let mut points = Vec::new();
        let mut idx = vec![0usize; m.saturating_sub(1)];
        loop {
            for i in 0..=b_steps {
                let b = i as f64 / b_steps as f64;
                let mut ga = vec![1.0];
                ga.extend(idx.iter().map(|&k| gammas[k]));
                points.push(Point::from_ga(b, ga));
            }
            let mut k = 0;
            while k < idx.len() {
                idx[k] += 1;
                if idx[k] < gammas.len() {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
            if k == idx.len() {
                break;
            }
        }
        GridNlp { m, g_full, points }
    }
}

impl NlpHeuristic for GridNlp {
    type Witness = (Point<f64>, CostProfile);

    fn solve(&self, chains: &[&ChainSpec]) -> (f64, Self::Witness) {
        let model = NlpModel { m: self.m, g_full: self.g_full.clone(), chains: chains.iter().map(|c| (*c).clone()).collect() };
        let mut best = (f64::NEG_INFINITY, (self.points[0].clone(), CostProfile::zeros(self.m)));
        for pt in &self.points {
            if let Some((v, d)) = point_lp(&model, pt) {
                if v > best.0 {
                    best = (v, (pt.clone(), d));
                }
            }
        }
        best
    }

    fn chain_cost(&self, chain: &ChainSpec, at: &Self::Witness) -> f64 {
        let p = chain.instantiate(&at.0).p;
        cost_bound(self.m, &p, &self.g_full, &at.1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bound::interval::Interval;

    #[test]
    fn sr_relaxation_coefficient() {
        let model = NlpModel::from_table("alg2").unwrap();
        let mut bx = IntervalBox::omega(2);
        bx.vars[0] = Interval::new(0.6, 0.7);
        let lp = relax_to_lp(&model, &bx);
        let (row, _, rhs) = lp.rows.last().unwrap();
        assert_eq!(*rhs, 1.0);
        assert!(row.iter().skip(1).all(|(_, c)| (c + 0.56).abs() < 1e-12));
    }

    #[test]
    fn hard_point() {
        let r = evaluate_point(&preset("hard-point-s3").unwrap()).unwrap();
        assert!((r.sr - 1.2944).abs() < 1e-4, "{}", r.sr);
        assert!((r.objective - 1.2943).abs() < 5e-4, "{r:?}");
    }

    #[test]
    fn m1_point_feasible() {
        let r = evaluate_point(&preset("m1-feasible").unwrap()).unwrap();
        assert!(r.feasible, "{r:?}");
        assert!((r.objective - (1.0 + 3f64.sqrt()) / 2.0).abs() < 1e-9);
    }

    #[test]
    fn zero_point_infeasible() {
        let mut p = preset("m1-feasible").unwrap();
        p.d = CostProfile::zeros(1);
        p.x = None;
        let r = evaluate_point(&p).unwrap();
        assert!(!r.feasible);
        assert_eq!(r.objective, 0.0);
    }

    #[test]
    fn point_lp_below_box_lp() {
        let model = NlpModel::from_table("alg2").unwrap();
        let bx = IntervalBox { vars: vec![Interval::new(0.5, 0.75), Interval::new(0.0, f64::INFINITY), Interval::new(0.5, 1.0)] };
        let ub = box_value(&model, &bx);
        for (b, g) in [(0.5, 0.5), (0.6, 0.7), (0.75, 1.0), (0.7, 0.9)] {
            let (v, _) = point_lp(&model, &Point::from_ga(b, vec![1.0, g])).unwrap();
            assert!(v <= ub + 1e-9, "{v} > {ub}");
        }
    }
}

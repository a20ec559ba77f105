//! Primary/secondary star forests over `F2` and the `A_t / B_t / C_t`
//! partition hierarchy.

use std::collections::{BTreeSet, HashMap};

use num_traits::{One, Zero};
use serde::Serialize;

use crate::alg::cost::CostProfile;
use crate::error::{Error, Result};
use crate::instance::{nearest, BiPointSolution};
use crate::num::{fmt_q, from_f64, to_f64, Q};

#[derive(Clone, Debug, Serialize)]
pub struct StarForest {
    /// `sigma_b[p]` is the nearest `F2` facility of `F1[p]`.
    pub sigma_b: Vec<usize>,
    /// `sigma_c[p]` is the nearest `C` facility of `F1[p]`; `None` when `C` is empty.
    pub sigma_c: Vec<Option<usize>>,
    pub b: Vec<usize>,
    pub c: Vec<usize>,
    pub secondary_available: bool,
}

fn sorted_by_id(sol: &BiPointSolution, mut v: Vec<usize>) -> Vec<usize> {
    v.sort_by_key(|&i| sol.instance.ids[i]);
    v.dedup();
    v
}

pub fn build_stars(sol: &BiPointSolution) -> Result<StarForest> {
    let inst = &sol.instance;
    let sigma_b: Vec<usize> = sol.f1.iter().map(|&i| nearest(inst, &sol.f2, i)).collect::<Result<_>>()?;
    let centers: BTreeSet<usize> = sigma_b.iter().copied().collect();
    let mut b: Vec<usize> = centers.iter().copied().collect();
    let f2_by_id = sorted_by_id(sol, sol.f2.clone());
    for &i in &f2_by_id {
        if b.len() >= sol.f1.len() {
            break;
        }
        if !centers.contains(&i) {
            b.push(i);
        }
    }
    let b = sorted_by_id(sol, b);
    let bset: BTreeSet<usize> = b.iter().copied().collect();
    let c: Vec<usize> = f2_by_id.into_iter().filter(|i| !bset.contains(i)).collect();
    let secondary_available = !c.is_empty();
    let sigma_c = sol
        .f1
        .iter()
        .map(|&i| if secondary_available { nearest(inst, &c, i).map(Some) } else { Ok(None) })
        .collect::<Result<_>>()?;
    Ok(StarForest { sigma_b, sigma_c, b, c, secondary_available })
}

fn dist_q(sol: &BiPointSolution, x: usize, y: usize) -> Q {
    match sol.instance.d_exact(x, y) {
        Some(v) => v.clone(),
        None => from_f64(sol.instance.d(x, y)),
    }
}

/// `g(i) = d(i, sigma_B(i)) / d(i, sigma_C(i))` for `F1[pos]`; 1 when the
/// denominator vanishes.
pub fn g_value(sol: &BiPointSolution, forest: &StarForest, pos: usize) -> Result<Q> {
    let i = sol.f1[pos];
    let c = forest.sigma_c[pos].ok_or(Error::GUndefined)?;
    let den = dist_q(sol, i, c);
    if den.is_zero() {
        return Ok(Q::one());
    }
    Ok(dist_q(sol, i, forest.sigma_b[pos]) / den)
}

#[derive(Clone, Debug, Serialize)]
pub struct FacilityPartition {
    pub m: usize,
    /// Interior thresholds `g_1 < ... < g_{m-1}`.
    #[serde(serialize_with = "ser_qs")]
    pub g: Vec<Q>,
    pub a: Vec<Vec<usize>>,
    pub b: Vec<Vec<usize>>,
    pub c: Vec<Vec<usize>>,
    /// `|A_t|/|C|`; all zero when `C` is empty.
    #[serde(serialize_with = "ser_qs")]
    pub gamma_a: Vec<Q>,
    #[serde(serialize_with = "ser_qs")]
    pub gamma_c: Vec<Q>,
    pub forest: StarForest,
    /// `F1` position -> level (0-based).
    pub level_of: Vec<usize>,
}

fn ser_qs<S: serde::Serializer>(v: &[Q], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(fmt_q))
}

impl FacilityPartition {
    /// Full threshold vector `g_0 = 0, g_1, ..., g_m = 1` as floats.
    pub fn thresholds_full(&self) -> Vec<f64> {
        let mut v = vec![0.0];
        v.extend(self.g.iter().map(to_f64));
        v.push(1.0);
        v
    }

    pub fn c_total(&self) -> usize {
        self.forest.c.len()
    }

    /// Sets in parameter order `A_1..A_m, B_1..B_m, C_1..C_m`.
    pub fn sets(&self) -> Vec<&Vec<usize>> {
        self.a.iter().chain(&self.b).chain(&self.c).collect()
    }
}

pub fn build_partition(sol: &BiPointSolution, forest: &StarForest, g: &[Q]) -> Result<FacilityPartition> {
    for w in g.windows(2) {
        if w[0] >= w[1] {
            return Err(Error::Thresholds(format!("{} >= {}", fmt_q(&w[0]), fmt_q(&w[1]))));
        }
    }
    if let (Some(lo), Some(hi)) = (g.first(), g.last()) {
        if lo <= &Q::zero() || hi >= &Q::one() {
            return Err(Error::Thresholds("thresholds must lie strictly inside (0,1)".into()));
        }
    }
    let m = g.len() + 1;
    if !forest.secondary_available && m > 1 {
        return Err(Error::GUndefined);
    }
    let n1 = sol.f1.len();
    let mut level_of = vec![0usize; n1];
    let mut a: Vec<Vec<usize>> = vec![Vec::new(); m];
    for pos in 0..n1 {
        let t = if forest.secondary_available {
            let gi = g_value(sol, forest, pos)?;
            g.iter().position(|gt| gi <= *gt).unwrap_or(m - 1)
        } else {
            0
        };
        level_of[pos] = t;
        a[t].push(sol.f1[pos]);
    }
    let pos_of: HashMap<usize, usize> = sol.f1.iter().enumerate().map(|(p, &i)| (i, p)).collect();
    for s in a.iter_mut() {
        *s = sorted_by_id(sol, std::mem::take(s));
    }

    let mut used: BTreeSet<usize> = BTreeSet::new();
    let mut bsets = Vec::with_capacity(m);
    for t in 0..m {
        let mut set: Vec<usize> = a[t].iter().map(|i| forest.sigma_b[pos_of[i]]).filter(|x| !used.contains(x)).collect();
        set = sorted_by_id(sol, set);
        for &x in &forest.b {
            if set.len() >= a[t].len() {
                break;
            }
            if !used.contains(&x) && !set.contains(&x) {
                set.push(x);
            }
        }
        let set = sorted_by_id(sol, set);
        used.extend(set.iter().copied());
        bsets.push(set);
    }

    let ctot = forest.c.len();
    let mut csets = vec![Vec::new(); m];
    let mut used: BTreeSet<usize> = BTreeSet::new();
    for t in (1..m).rev() {
        let target = a[t].len().min(ctot - used.len());
        let mut set: Vec<usize> = a[t].iter().filter_map(|i| forest.sigma_c[pos_of[i]]).filter(|x| !used.contains(x)).collect();
        set = sorted_by_id(sol, set);
        for &x in &forest.c {
            if set.len() >= target {
                break;
            }
            if !used.contains(&x) && !set.contains(&x) {
                set.push(x);
            }
        }
        let set = sorted_by_id(sol, set);
        used.extend(set.iter().copied());
        csets[t] = set;
    }
    csets[0] = forest.c.iter().copied().filter(|x| !used.contains(x)).collect();

    let ratio = |n: usize| if ctot == 0 { Q::zero() } else { Q::new(n.into(), ctot.into()) };
    let gamma_a = a.iter().map(|s| ratio(s.len())).collect();
    let gamma_c = csets.iter().map(|s| ratio(s.len())).collect();
    Ok(FacilityPartition { m, g: g.to_vec(), a, b: bsets, c: csets, gamma_a, gamma_c, forest: forest.clone(), level_of })
}

/// `gamma_C` from `gamma_A` by the min-recursion of the construction.
pub fn gamma_c_from_a(gamma_a: &[Q]) -> Vec<Q> {
    let m = gamma_a.len();
    let mut gc = vec![Q::zero(); m];
    let mut rest = Q::one();
    for t in (1..m).rev() {
        let v = if gamma_a[t] < rest { gamma_a[t].clone() } else { rest.clone() };
        rest -= &v;
        gc[t] = v;
    }
    gc[0] = rest;
    gc
}

/// Same as [`gamma_c_from_a`] in floating point; `gamma_a` may contain `inf`.
pub fn gamma_c_from_a_f64(gamma_a: &[f64]) -> Vec<f64> {
    let m = gamma_a.len();
    let mut gc = vec![0.0; m];
    let mut rest = 1.0;
    for t in (1..m).rev() {
        let v = gamma_a[t].min(rest);
        rest -= v;
        gc[t] = v;
    }
    gc[0] = rest;
    gc
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Zone {
    B,
    C,
}

#[derive(Clone, Debug, Serialize)]
pub struct ClientClass {
    pub client: usize,
    pub zone: Zone,
    /// 1-based levels of `i1` and `i2`.
    pub x: usize,
    pub y: usize,
    pub d1: f64,
    pub d2: f64,
    pub i1: usize,
    pub i2: usize,
    pub i3: usize,
    pub i4: Option<usize>,
}

pub fn classify_clients(sol: &BiPointSolution, part: &FacilityPartition) -> Result<(Vec<ClientClass>, CostProfile)> {
    let inst = &sol.instance;
    let m = part.m;
    let pos_of: HashMap<usize, usize> = sol.f1.iter().enumerate().map(|(p, &i)| (i, p)).collect();
    let mut where_f2: HashMap<usize, (Zone, usize)> = HashMap::new();
    for t in 0..m {
        for &i in &part.b[t] {
            where_f2.insert(i, (Zone::B, t));
        }
        for &i in &part.c[t] {
            where_f2.insert(i, (Zone::C, t));
        }
    }
    let mut out = Vec::with_capacity(inst.clients.len());
    let mut prof = CostProfile::zeros(m);
    for (ci, &j) in inst.clients.iter().enumerate() {
        let i1 = nearest(inst, &sol.f1, j)?;
        let i2 = nearest(inst, &sol.f2, j)?;
        let p = pos_of[&i1];
        let x = part.level_of[p];
        let (zone, y) = *where_f2.get(&i2).ok_or_else(|| Error::Instance("F2 facility outside B and C".into()))?;
        let (d1, d2) = (inst.d(j, i1), inst.d(j, i2));
        let u = inst.demand[ci];
        match zone {
            Zone::B => {
                prof.db1[x][y] += u * d1;
                prof.db2[x][y] += u * d2;
            }
            Zone::C => {
                prof.dc1[x][y] += u * d1;
                prof.dc2[x][y] += u * d2;
            }
        }
        out.push(ClientClass { client: j, zone, x: x + 1, y: y + 1, d1, d2, i1, i2, i3: part.forest.sigma_b[p], i4: part.forest.sigma_c[p] });
    }
    Ok((out, prof))
}

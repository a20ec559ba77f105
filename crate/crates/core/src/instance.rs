//! Finite-metric k-median instances and bi-point solutions.
//!
//! Distances are always available as `f64`. Instances built from exact data
//! (the golden family, hand-written fixtures, files written with `p/q`
//! values) also carry the exact rational table, and every check that can be
//! exact uses it.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::num::{fmt_q, from_f64, parse_q, to_f64, Q};

#[derive(Clone, Debug)]
pub struct MetricInstance {
    /// Point ids in ascending order; a point's index is its position here.
    pub ids: Vec<u64>,
    dist: Vec<f64>,
    dist_exact: Option<Vec<Q>>,
    /// Client point indices (ascending) with parallel demand weights.
    pub clients: Vec<usize>,
    pub demand: Vec<f64>,
    demand_exact: Option<Vec<Q>>,
    /// Facility point indices (ascending).
    pub facilities: Vec<usize>,
    pub k: usize,
}

impl MetricInstance {
    /// Builds an instance from an exact distance table (row-major, `n*n`).
    pub fn new_exact(
        ids: Vec<u64>,
        dist: Vec<Q>,
        clients: Vec<(usize, Q)>,
        facilities: Vec<usize>,
        k: usize,
    ) -> Result<Self> {
        let df = dist.iter().map(to_f64).collect();
        let (clients, demand): (Vec<_>, Vec<_>) = clients.into_iter().unzip();
        let dem_f = demand.iter().map(to_f64).collect();
        let inst = MetricInstance {
            ids,
            dist: df,
            dist_exact: Some(dist),
            clients,
            demand: dem_f,
            demand_exact: Some(demand),
            facilities,
            k,
        };
        inst.check_shape()?;
        Ok(inst)
    }

    pub fn new_float(
        ids: Vec<u64>,
        dist: Vec<f64>,
        clients: Vec<(usize, f64)>,
        facilities: Vec<usize>,
        k: usize,
    ) -> Result<Self> {
        let (clients, demand): (Vec<_>, Vec<_>) = clients.into_iter().unzip();
        let inst = MetricInstance {
            ids,
            dist,
            dist_exact: None,
            clients,
            demand,
            demand_exact: None,
            facilities,
            k,
        };
        inst.check_shape()?;
        Ok(inst)
    }

    fn check_shape(&self) -> Result<()> {
        let n = self.ids.len();
        if self.dist.len() != n * n {
            return Err(Error::Instance(format!("distance table has {} entries, expected {}", self.dist.len(), n * n)));
        }
        if self.ids.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Instance("point ids must be strictly increasing".into()));
        }
        for w in [&self.clients, &self.facilities] {
            if w.windows(2).any(|p| p[0] >= p[1]) || w.iter().any(|&i| i >= n) {
                return Err(Error::Instance("point index lists must be sorted, unique and in range".into()));
            }
        }
        if self.k == 0 {
            return Err(Error::Instance("k must be positive".into()));
        }
        if self.k > self.facilities.len() {
            return Err(Error::Instance(format!("k={} exceeds facility count {}", self.k, self.facilities.len())));
        }
        if self.demand.iter().any(|&u| !(u >= 0.0)) {
            return Err(Error::Instance("demands must be nonnegative".into()));
        }
        for i in 0..n {
            if self.dist[i * n + i] != 0.0 {
                return Err(Error::Instance(format!("dist({0},{0}) must be 0", self.ids[i])));
            }
            for j in 0..i {
                let (x, y) = (self.dist[i * n + j], self.dist[j * n + i]);
                if x != y || !(x >= 0.0) {
                    return Err(Error::Instance(format!("dist({},{}) not symmetric and nonnegative", self.ids[i], self.ids[j])));
                }
            }
        }
        if let Some(d) = &self.dist_exact {
            for i in 0..n {
                for j in 0..i {
                    if d[i * n + j] != d[j * n + i] || d[i * n + j].is_negative() {
                        return Err(Error::Instance("exact table not symmetric and nonnegative".into()));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.ids.len()
    }

    pub fn is_exact(&self) -> bool {
        self.dist_exact.is_some() && self.demand_exact.is_some()
    }

    #[inline]
    pub fn d(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.ids.len() + j]
    }

    pub fn d_exact(&self, i: usize, j: usize) -> Option<&Q> {
        self.dist_exact.as_ref().map(|d| &d[i * self.ids.len() + j])
    }

    pub fn demand_exact(&self) -> Option<&[Q]> {
        self.demand_exact.as_deref()
    }

    pub fn index_of(&self, id: u64) -> Option<usize> {
        self.ids.binary_search(&id).ok()
    }

    /// Compares `d(p,x)` against `d(p,y)`, exactly when possible.
    pub fn cmp_dist(&self, p: usize, x: usize, y: usize) -> Ordering {
        match &self.dist_exact {
            Some(_) => self.d_exact(p, x).unwrap().cmp(self.d_exact(p, y).unwrap()),
            None => self.d(p, x).total_cmp(&self.d(p, y)),
        }
    }

    /// Triangle-inequality audit over all triples. Exact instances are
    /// checked exactly; float instances with a relative tolerance of 1e-12.
    pub fn audit_metric(&self) -> std::result::Result<(), String> {
        let n = self.n();
        match &self.dist_exact {
            Some(d) => {
                for i in 0..n {
                    for j in 0..n {
                        for l in 0..n {
                            if d[i * n + l] > &d[i * n + j] + &d[j * n + l] {
                                return Err(format!("d({},{}) > d({},{}) + d({},{})", self.ids[i], self.ids[l], self.ids[i], self.ids[j], self.ids[j], self.ids[l]));
                            }
                        }
                    }
                }
            }
            None => {
                for i in 0..n {
                    for j in 0..n {
                        let dij = self.dist[i * n + j];
                        for l in 0..n {
                            let lhs = self.dist[i * n + l];
                            let rhs = dij + self.dist[j * n + l];
                            if lhs > rhs + 1e-12 * rhs.max(1.0) {
                                return Err(format!("d({},{}) > d({},{}) + d({},{})", self.ids[i], self.ids[l], self.ids[i], self.ids[j], self.ids[j], self.ids[l]));
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// Closest facility of `x` to point `p`; ties go to the smallest point id.
pub fn nearest(inst: &MetricInstance, x: &[usize], p: usize) -> Result<usize> {
    let mut it = x.iter().copied();
    let mut best = it.next().ok_or(Error::EmptySet)?;
    for c in it {
        match inst.cmp_dist(p, c, best) {
            Ordering::Less => best = c,
            Ordering::Equal if inst.ids[c] < inst.ids[best] => best = c,
            _ => {}
        }
    }
    Ok(best)
}

/// Demand-weighted connection cost `sum_j u_j min_{i in S} d(j,i)`.
pub fn connection_cost(inst: &MetricInstance, s: &OpenSet) -> Result<f64> {
    if s.facilities.is_empty() {
        return Err(Error::NoOpenFacility);
    }
    let mut total = 0.0;
    for (ci, &j) in inst.clients.iter().enumerate() {
        let i = nearest(inst, &s.facilities, j)?;
        total += inst.demand[ci] * inst.d(j, i);
    }
    Ok(total)
}

/// Exact counterpart of [`connection_cost`]; `None` for float instances.
pub fn connection_cost_exact(inst: &MetricInstance, s: &OpenSet) -> Result<Option<Q>> {
    if s.facilities.is_empty() {
        return Err(Error::NoOpenFacility);
    }
    let Some(dem) = inst.demand_exact() else { return Ok(None) };
    if inst.dist_exact.is_none() {
        return Ok(None);
    }
    let mut total = Q::zero();
    for (ci, &j) in inst.clients.iter().enumerate() {
        let i = nearest(inst, &s.facilities, j)?;
        total += &dem[ci] * inst.d_exact(j, i).unwrap();
    }
    Ok(Some(total))
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct OpenSet {
    /// Sorted facility point indices.
    pub facilities: Vec<usize>,
    pub seed: Option<u64>,
}

impl OpenSet {
    pub fn new(mut facilities: Vec<usize>, seed: Option<u64>) -> Self {
        facilities.sort_unstable();
        facilities.dedup();
        OpenSet { facilities, seed }
    }

    pub fn len(&self) -> usize {
        self.facilities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.facilities.is_empty()
    }
}

/// Per-client facility orders, for repeated cost evaluation of many open sets.
#[derive(Clone, Debug)]
pub struct NearestIndex {
    order: Vec<Vec<(usize, f64)>>,
    demand: Vec<f64>,
    n: usize,
}

impl NearestIndex {
    pub fn new(inst: &MetricInstance) -> Self {
        let order = inst
            .clients
            .iter()
            .map(|&j| {
                let mut fs = inst.facilities.clone();
                fs.sort_by(|&x, &y| inst.cmp_dist(j, x, y).then(inst.ids[x].cmp(&inst.ids[y])));
                fs.into_iter().map(|i| (i, inst.d(j, i))).collect()
            })
            .collect();
        NearestIndex { order, demand: inst.demand.clone(), n: inst.n() }
    }

    /// Cost for an open-indicator vector indexed by point index.
    pub fn cost(&self, open: &[bool]) -> f64 {
        debug_assert_eq!(open.len(), self.n);
        let mut total = 0.0;
        for (c, ord) in self.order.iter().enumerate() {
            match ord.iter().find(|(i, _)| open[*i]) {
                Some(&(_, d)) => total += self.demand[c] * d,
                None => return f64::INFINITY,
            }
        }
        total
    }

    pub fn cost_of(&self, s: &OpenSet) -> f64 {
        let mut open = vec![false; self.n];
        for &i in &s.facilities {
            open[i] = true;
        }
        self.cost(&open)
    }
}

#[derive(Clone, Debug)]
pub struct BiPointSolution {
    pub instance: MetricInstance,
    pub f1: Vec<usize>,
    pub f2: Vec<usize>,
    pub a: Q,
    pub b: Q,
    pub d1: f64,
    pub d2: f64,
    pub d1_exact: Option<Q>,
    pub d2_exact: Option<Q>,
}

impl BiPointSolution {
    /// Builds the solution and caches `D1`, `D2`. Does not validate.
    pub fn new(instance: MetricInstance, mut f1: Vec<usize>, mut f2: Vec<usize>, a: Q, b: Q) -> Result<Self> {
        f1.sort_unstable();
        f1.dedup();
        f2.sort_unstable();
        f2.dedup();
        let fac: BTreeSet<usize> = instance.facilities.iter().copied().collect();
        if f1.is_empty() || f2.is_empty() {
            return Err(Error::Instance("F1 and F2 must be nonempty".into()));
        }
        if !f1.iter().chain(&f2).all(|i| fac.contains(i)) {
            return Err(Error::Instance("F1, F2 must be facilities".into()));
        }
        let s1 = OpenSet::new(f1.clone(), None);
        let s2 = OpenSet::new(f2.clone(), None);
        let d1 = connection_cost(&instance, &s1)?;
        let d2 = connection_cost(&instance, &s2)?;
        let d1_exact = connection_cost_exact(&instance, &s1)?;
        let d2_exact = connection_cost_exact(&instance, &s2)?;
        Ok(BiPointSolution { instance, f1, f2, a, b, d1, d2, d1_exact, d2_exact })
    }

    pub fn k(&self) -> usize {
        self.instance.k
    }

    pub fn b_f64(&self) -> f64 {
        to_f64(&self.b)
    }

    /// Fractional cost `a D1 + b D2`.
    pub fn cost(&self) -> f64 {
        to_f64(&self.a) * self.d1 + to_f64(&self.b) * self.d2
    }

    pub fn cost_exact(&self) -> Option<Q> {
        Some(&self.a * self.d1_exact.as_ref()? + &self.b * self.d2_exact.as_ref()?)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
    pub pass: bool,
}

impl ValidationReport {
    pub fn from_checks(checks: Vec<Check>) -> Self {
        let pass = checks.iter().all(|c| c.pass);
        ValidationReport { checks, pass }
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// The four bi-point conditions, from sizes alone, in exact arithmetic.
pub fn validate_sizes(a: &Q, b: &Q, n_f1: usize, n_f2: usize, k: usize) -> ValidationReport {
    let kq = Q::from_integer(k.into());
    let mass = a * Q::from_integer(n_f1.into()) + b * Q::from_integer(n_f2.into());
    let sum = a + b;
    ValidationReport::from_checks(vec![
        Check { name: "a+b=1".into(), pass: sum.is_one(), detail: format!("a+b = {}", fmt_q(&sum)) },
        Check { name: "|F1|<=k".into(), pass: n_f1 <= k, detail: format!("|F1| = {n_f1}, k = {k}") },
        Check { name: "k<=|F2|".into(), pass: k <= n_f2, detail: format!("|F2| = {n_f2}, k = {k}") },
        Check { name: "a|F1|+b|F2|=k".into(), pass: mass == kq, detail: format!("a|F1|+b|F2| = {}", fmt_q(&mass)) },
    ])
}

pub fn validate_bipoint(sol: &BiPointSolution) -> ValidationReport {
    let mut r = validate_sizes(&sol.a, &sol.b, sol.f1.len(), sol.f2.len(), sol.k());
    let in_range = |x: &Q| !x.is_negative() && *x <= Q::one();
    if !(in_range(&sol.a) && in_range(&sol.b)) {
        r.checks.push(Check { name: "a,b in [0,1]".into(), pass: false, detail: format!("a = {}, b = {}", fmt_q(&sol.a), fmt_q(&sol.b)) });
        r.pass = false;
    }
    r
}

/// Random bi-point solution on a unit square with the Euclidean metric.
/// `b = (k-|F1|)/(|F2|-|F1|)` exactly, or 0 when `|F1| = |F2|`.
pub fn synthesize_random_bipoint(n_clients: usize, n_f1: usize, n_f2: usize, k: usize, seed: u64) -> Result<BiPointSolution> {
    if !(n_f1 <= k && k <= n_f2) || n_f1 == 0 || n_clients == 0 {
        return Err(Error::Infeasible(format!("need 1 <= |F1| <= k <= |F2| and clients > 0 (got {n_f1}, {k}, {n_f2}, {n_clients})")));
    }
    if n_f1 == n_f2 && n_f1 != k {
        return Err(Error::Infeasible("|F1| = |F2| requires k = |F1|".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = n_f1 + n_f2 + n_clients;
    let pts: Vec<(f64, f64)> = (0..n).map(|_| (rng.gen::<f64>(), rng.gen::<f64>())).collect();
    let mut dist = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..i {
            let d = ((pts[i].0 - pts[j].0).powi(2) + (pts[i].1 - pts[j].1).powi(2)).sqrt();
            dist[i * n + j] = d;
            dist[j * n + i] = d;
        }
    }
    let f1: Vec<usize> = (0..n_f1).collect();
    let f2: Vec<usize> = (n_f1..n_f1 + n_f2).collect();
    let clients = (n_f1 + n_f2..n).map(|j| (j, 1.0)).collect();
    let inst = MetricInstance::new_float((0..n as u64).collect(), dist, clients, (0..n_f1 + n_f2).collect(), k)?;
    let b = if n_f1 == n_f2 { Q::zero() } else { Q::new((k - n_f1).into(), (n_f2 - n_f1).into()) };
    let a = Q::one() - &b;
    BiPointSolution::new(inst, f1, f2, a, b)
}

/// Reads the line-oriented instance format:
///
/// ```text
/// k a b
/// facility <id> F1|F2
/// client <id> <demand>
/// dist <id> <id> <value>
/// ```
///
/// The instance is exact when every distance and demand is an integer or `p/q`.
pub fn parse_instance(text: &str) -> Result<BiPointSolution> {
    let mut header: Option<(usize, Q, Q)> = None;
    let mut f1 = BTreeSet::new();
    let mut f2 = BTreeSet::new();
    let mut clients: BTreeMap<u64, String> = BTreeMap::new();
    let mut dists: BTreeMap<(u64, u64), String> = BTreeMap::new();
    for (ln, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let err = |msg: String| Error::Parse { line: ln + 1, msg };
        let tok: Vec<&str> = line.split_whitespace().collect();
        let id = |s: &str| s.parse::<u64>().map_err(|_| err(format!("bad id {s:?}")));
        match tok[0] {
            "facility" if tok.len() == 3 => match tok[2] {
                "F1" => {
                    f1.insert(id(tok[1])?);
                }
                "F2" => {
                    f2.insert(id(tok[1])?);
                }
                s => return Err(err(format!("unknown set {s:?}"))),
            },
            "client" if tok.len() == 3 => {
                parse_q(tok[2]).map_err(&err)?;
                if clients.insert(id(tok[1])?, tok[2].to_string()).is_some() {
                    return Err(err("duplicate client".into()));
                }
            }
            "dist" if tok.len() == 4 => {
                let (x, y) = (id(tok[1])?, id(tok[2])?);
                parse_q(tok[3]).map_err(&err)?;
                let key = (x.min(y), x.max(y));
                if let Some(prev) = dists.insert(key, tok[3].to_string()) {
                    if parse_q(&prev) != parse_q(tok[3]) {
                        return Err(err(format!("conflicting distance for {x} {y}")));
                    }
                }
            }
            _ if header.is_none() && tok.len() == 3 => {
                let k = tok[0].parse::<usize>().map_err(|_| err("bad k".into()))?;
                let a = parse_q(tok[1]).map_err(&err)?;
                let b = parse_q(tok[2]).map_err(&err)?;
                header = Some((k, a, b));
            }
            _ => return Err(err(format!("unrecognised line {line:?}"))),
        }
    }
    let (k, a, b) = header.ok_or(Error::Parse { line: 0, msg: "missing header".into() })?;
    let ids: Vec<u64> = f1.iter().chain(&f2).chain(clients.keys()).copied().collect::<BTreeSet<_>>().into_iter().collect();
    let n = ids.len();
    let is_exact_tok = |s: &str| !s.contains(['.', 'e', 'E']);
    let exact = clients.values().chain(dists.values()).all(|s| is_exact_tok(s));
    let mut dq = vec![Q::zero(); n * n];
    let mut df = vec![0.0; n * n];
    for ((x, y), s) in &dists {
        let (Ok(i), Ok(j)) = (ids.binary_search(x), ids.binary_search(y)) else {
            return Err(Error::Instance(format!("distance between unknown points {x} {y}")));
        };
        let v = parse_q(s).unwrap();
        if i == j {
            if !v.is_zero() {
                return Err(Error::Instance(format!("dist({x},{x}) must be 0")));
            }
            continue;
        }
        let f: f64 = if exact { to_f64(&v) } else { s.parse::<f64>().unwrap_or_else(|_| to_f64(&v)) };
        df[i * n + j] = f;
        df[j * n + i] = f;
        dq[i * n + j] = v.clone();
        dq[j * n + i] = v;
    }
    let expected = n * (n - 1) / 2;
    let off_diag = dists.keys().filter(|(x, y)| x != y).count();
    if off_diag != expected {
        return Err(Error::Instance(format!("distance list has {off_diag} pairs, expected {expected}")));
    }
    let idx = |x: &u64| ids.binary_search(x).unwrap();
    let facilities: Vec<usize> = f1.iter().chain(&f2).map(idx).collect::<BTreeSet<_>>().into_iter().collect();
    let f1v: Vec<usize> = f1.iter().map(idx).collect();
    let f2v: Vec<usize> = f2.iter().map(idx).collect();
    let inst = if exact {
        let cl = clients.iter().map(|(x, s)| (idx(x), parse_q(s).unwrap())).collect();
        MetricInstance::new_exact(ids.clone(), dq, cl, facilities, k)?
    } else {
        let cl = clients.iter().map(|(x, s)| (idx(x), s.parse::<f64>().unwrap_or_else(|_| to_f64(&parse_q(s).unwrap())))).collect();
        MetricInstance::new_float(ids.clone(), df, cl, facilities, k)?
    };
    BiPointSolution::new(inst, f1v, f2v, a, b)
}

pub fn write_instance(sol: &BiPointSolution) -> String {
    let inst = &sol.instance;
    let mut out = String::new();
    writeln!(out, "{} {} {}", inst.k, fmt_q(&sol.a), fmt_q(&sol.b)).unwrap();
    for &i in &sol.f1 {
        writeln!(out, "facility {} F1", inst.ids[i]).unwrap();
    }
    for &i in &sol.f2 {
        writeln!(out, "facility {} F2", inst.ids[i]).unwrap();
    }
    let dem = inst.demand_exact();
    for (c, &j) in inst.clients.iter().enumerate() {
        match (inst.is_exact(), dem) {
            (true, Some(d)) => writeln!(out, "client {} {}", inst.ids[j], fmt_q(&d[c])).unwrap(),
            _ => writeln!(out, "client {} {:?}", inst.ids[j], inst.demand[c]).unwrap(),
        }
    }
    let n = inst.n();
    for i in 0..n {
        for j in i + 1..n {
            match inst.d_exact(i, j) {
                Some(v) if inst.is_exact() => writeln!(out, "dist {} {} {}", inst.ids[i], inst.ids[j], fmt_q(v)).unwrap(),
                _ => writeln!(out, "dist {} {} {:?}", inst.ids[i], inst.ids[j], inst.d(i, j)).unwrap(),
            }
        }
    }
    out
}

/// Exact rational copy of a float instance (each stored `f64` taken exactly).
pub fn exactify(inst: &MetricInstance) -> MetricInstance {
    if inst.is_exact() {
        return inst.clone();
    }
    let mut out = inst.clone();
    out.dist_exact = Some(inst.dist.iter().map(|&x| from_f64(x)).collect());
    out.demand_exact = Some(inst.demand.iter().map(|&x| from_f64(x)).collect());
    out
}

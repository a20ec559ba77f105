//! The golden bi-point family: constants, the implicit instance and its
//! explicit metric closure for small `k`.

use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use super::field::Golden;
use crate::error::{Error, Result};
use crate::instance::{validate_sizes, BiPointSolution, MetricInstance, ValidationReport};
use crate::num::{fmt_q, q, qi, Scalar, Q};

/// The construction constants over some ordered field.
#[derive(Clone, Debug)]
pub struct Constants<T> {
    pub phi: T,
    pub omega: T,
    pub ell: T,
    pub r_b: T,
    pub r_c: T,
    pub a: T,
    pub b: T,
}

impl Constants<Golden> {
    pub fn exact() -> Self {
        let s = Golden::s();
        let phi = Golden::phi();
        let one = Golden::one();
        let omega = phi.clone() - s.clone();
        let ell = phi.clone() - one.clone();
        let r_b = omega.clone() * s.clone();
        let r_c = (one.clone() - omega.clone()) * s;
        let b = (one.clone() - r_b.clone()) / r_c.clone();
        let a = one - b.clone();
        Constants { phi, omega, ell, r_b, r_c, a, b }
    }
}

impl<T: Scalar> Constants<T> {
    pub fn to_f64(&self) -> Constants<f64> {
        Constants {
            phi: self.phi.as_f64(),
            omega: self.omega.as_f64(),
            ell: self.ell.as_f64(),
            r_b: self.r_b.as_f64(),
            r_c: self.r_c.as_f64(),
            a: self.a.as_f64(),
            b: self.b.as_f64(),
        }
    }
}

/// Rational constants for a given `k` together with the exact ones.
#[derive(Clone, Debug)]
pub struct GoldenConstants {
    pub k: usize,
    pub t_b: usize,
    pub t_c: usize,
    pub exact: Constants<Golden>,
    pub rational: Constants<Q>,
}

/// Nearest integer to `x > 0`, halves rounded up.
fn round_exact(x: &Golden) -> usize {
    let mut n = x.as_f64().floor() as i64;
    let half = Golden::from_q(q(1, 2));
    while x.clone() - Golden::from_i64(n) < half {
        n -= 1;
    }
    while x.clone() - Golden::from_i64(n) >= half {
        n += 1;
    }
    n.max(0) as usize
}

/// `F_n / F_{n+1}` with `F_{n+1} >= k`, within `1/k^2` of `1/phi`.
fn ell_approx(k: usize) -> Q {
    let (mut f0, mut f1) = (1u128, 1u128);
    while (f1 as f64) < (k as f64).max(2.0) {
        (f0, f1) = (f1, f0 + f1);
    }
    Q::new(f0.into(), f1.into())
}

impl GoldenConstants {
    pub fn new(k: usize) -> Result<Self> {
        let exact = Constants::exact();
        let kq = Golden::from_i64(k as i64);
        let t_b = round_exact(&(exact.r_b.clone() * kq.clone()));
        let t_c = round_exact(&(exact.r_c.clone() * kq));
        if k == 0 || t_b == 0 || t_c == 0 {
            return Err(Error::Arg(format!("k = {k} is too small: need round(r_B k) and round(r_C k) >= 1")));
        }
        if t_b > k || t_b + t_c < k {
            return Err(Error::Arg(format!("k = {k} gives |F1| = {t_b}, |F2| = {}: not a bi-point pair", t_b + t_c)));
        }
        let kq = qi(k as i64);
        let r_b = qi(t_b as i64) / &kq;
        let r_c = qi(t_c as i64) / &kq;
        let b = (Q::one() - &r_b) / &r_c;
        let a = Q::one() - &b;
        let ell = ell_approx(k);
        let phi = Q::one() / &ell;
        let omega = qi(t_b as i64) / qi((t_b + t_c) as i64);
        Ok(GoldenConstants { k, t_b, t_c, exact, rational: Constants { phi, omega, ell, r_b, r_c, a, b } })
    }

    /// `|rational - exact|` per constant.
    pub fn errors(&self) -> Vec<(&'static str, f64)> {
        let (e, r) = (&self.exact, &self.rational);
        let d = |x: &Golden, y: &Q| (x.clone() - Golden::from_q(y.clone())).abs().as_f64();
        vec![
            ("r_B", d(&e.r_b, &r.r_b)),
            ("r_C", d(&e.r_c, &r.r_c)),
            ("b", d(&e.b, &r.b)),
            ("a", d(&e.a, &r.a)),
            ("ell", d(&e.ell, &r.ell)),
        ]
    }
}

/// One point of the construction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Node {
    A(usize),
    B(usize),
    C(usize),
    /// Client attached to `(A_i, C_j)`.
    Ja(usize, usize),
    /// Client colocated with `B_i`.
    Jb(usize),
}

/// `B(k)` without materialising the `|A| |C|` clients.
#[derive(Clone, Debug)]
pub struct GoldenInstance {
    pub consts: GoldenConstants,
    pub n_a: usize,
    pub n_c: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct GoldenCosts {
    pub d1: String,
    pub d2: String,
    pub cost: String,
    pub cost_f64: f64,
    pub third_nearest_ja: String,
    pub third_nearest_ok: bool,
}

pub fn build_golden(k: usize) -> Result<GoldenInstance> {
    let consts = GoldenConstants::new(k)?;
    Ok(GoldenInstance { n_a: consts.t_b, n_c: consts.t_c, consts })
}

impl GoldenInstance {
    pub fn k(&self) -> usize {
        self.consts.k
    }

    pub fn ell(&self) -> &Q {
        &self.consts.rational.ell
    }

    pub fn facilities(&self) -> impl Iterator<Item = Node> + '_ {
        (0..self.n_a).map(Node::A).chain((0..self.n_a).map(Node::B)).chain((0..self.n_c).map(Node::C))
    }

    pub fn n_clients(&self) -> usize {
        self.n_a * self.n_c + self.n_a
    }

    pub fn demand(&self, j: Node) -> Q {
        match j {
            Node::Ja(..) => Q::one() / qi((self.n_a * self.n_c) as i64),
            Node::Jb(_) => &self.consts.rational.a / qi(self.n_a as i64),
            _ => Q::zero(),
        }
    }

    /// Shortest-path distance in the construction graph, in closed form.
    pub fn distance(&self, u: Node, v: Node) -> Q {
        use Node::*;
        let l = self.ell().clone();
        let two = qi(2);
        let four = qi(4);
        // lift clients onto the facility they hang off: Jb(i) sits on B(i)
        let lift = |x: Node| if let Jb(i) = x { B(i) } else { x };
        let (u, v) = (lift(u), lift(v));
        match (u, v) {
            _ if u == v => Q::zero(),
            (A(_), A(_)) | (C(_), C(_)) => four,
            (A(_), C(_)) | (C(_), A(_)) => two,
            (A(i), B(j)) | (B(j), A(i)) => {
                if i == j {
                    &two * &l
                } else {
                    &two * &l + four
                }
            }
            (B(_), B(_)) => qi(4) * &l + four,
            (B(_), C(_)) | (C(_), B(_)) => &two * &l + two,
            (Ja(i, j), x) | (x, Ja(i, j)) => match x {
                A(p) if p == i => two - l,
                A(_) => two + l,
                C(p) if p == j => l,
                C(_) => four - l,
                B(p) if p == i => two + l,
                B(_) => two + qi(3) * l,
                // shared C: 2l; shared A: 4 - 2l; otherwise a C-A hop: 4
                Ja(_, r) if r == j => two * l,
                Ja(p, _) if p == i => four - two * l,
                Ja(..) => four,
                _ => unreachable!(),
            },
            _ => unreachable!(),
        }
    }

    /// Exact fractional cost via one representative client per class; the
    /// classes are orbits of the construction's symmetry group.
    pub fn costs(&self) -> GoldenCosts {
        let r = &self.consts.rational;
        let fac: Vec<Node> = self.facilities().collect();
        let f1 = |x: &Node| matches!(x, Node::A(_));
        let nearest = |j: Node, pred: &dyn Fn(&Node) -> bool| {
            fac.iter().filter(|x| pred(x)).map(|&x| self.distance(j, x)).min().unwrap()
        };
        let mut d1 = Q::zero();
        let mut d2 = Q::zero();
        for (rep, mass) in [(Node::Ja(0, 0), Q::one()), (Node::Jb(0), r.a.clone())] {
            d1 += &mass * nearest(rep, &f1);
            d2 += &mass * nearest(rep, &|x: &Node| !f1(x));
        }
        let cost = &r.a * &d1 + &r.b * &d2;
        let mut ds: Vec<Q> = fac.iter().map(|&x| self.distance(Node::Ja(0, 0), x)).collect();
        ds.sort();
        let third = ds.get(2).cloned().unwrap_or_else(Q::zero);
        let third_nearest_ok = third >= qi(2) + self.ell();
        GoldenCosts {
            d1: fmt_q(&d1),
            d2: fmt_q(&d2),
            cost_f64: cost.to_f64().unwrap_or(f64::NAN),
            cost: fmt_q(&cost),
            third_nearest_ja: fmt_q(&third),
            third_nearest_ok,
        }
    }

    pub fn fractional_cost(&self) -> Q {
        let r = &self.consts.rational;
        let l = self.ell();
        // D1 = (2 - l) + a 2l, D2 = l
        let d1 = qi(2) - l + qi(2) * &r.a * l;
        &r.a * d1 + &r.b * l
    }

    pub fn validate(&self) -> ValidationReport {
        let r = &self.consts.rational;
        validate_sizes(&r.a, &r.b, self.n_a, self.n_a + self.n_c, self.k())
    }

    /// Point order of the explicit instance: A, B, C, J_A (row-major), J_B.
    pub fn nodes(&self) -> Vec<Node> {
        let mut v: Vec<Node> = self.facilities().collect();
        for i in 0..self.n_a {
            for j in 0..self.n_c {
                v.push(Node::Ja(i, j));
            }
        }
        v.extend((0..self.n_a).map(Node::Jb));
        v
    }

    /// The construction graph's edges (indices into [`Self::nodes`]).
    pub fn graph_edges(&self) -> Vec<(usize, usize, Q)> {
        let (na, nc) = (self.n_a, self.n_c);
        let l = self.ell().clone();
        let (b0, c0, ja0) = (na, 2 * na, 2 * na + nc);
        let jb0 = ja0 + na * nc;
        let mut e = Vec::new();
        for i in 0..na {
            for j in 0..nc {
                e.push((i, c0 + j, qi(2)));
                let jj = ja0 + i * nc + j;
                e.push((jj, i, qi(2) - &l));
                e.push((jj, c0 + j, l.clone()));
            }
            e.push((i, b0 + i, qi(2) * &l));
            e.push((jb0 + i, b0 + i, Q::zero()));
        }
        e
    }

    /// Explicit instance with the all-pairs shortest-path closure of the
    /// construction graph. Refuses more than `max_points` points.
    pub fn to_bipoint(&self, max_points: usize) -> Result<BiPointSolution> {
        let nodes = self.nodes();
        let n = nodes.len();
        if n > max_points {
            return Err(Error::Arg(format!("explicit instance would have {n} points (limit {max_points})")));
        }
        let dist = metric_closure(n, &self.graph_edges())?;
        let nf = 2 * self.n_a + self.n_c;
        let clients = (nf..n).map(|p| (p, self.demand(nodes[p]))).collect();
        let inst = MetricInstance::new_exact((0..n as u64).collect(), dist, clients, (0..nf).collect(), self.k())?;
        let r = &self.consts.rational;
        BiPointSolution::new(inst, (0..self.n_a).collect(), (self.n_a..nf).collect(), r.a.clone(), r.b.clone())
    }
}

/// Floyd-Warshall over exact weights; `None` entries are unreachable.
pub fn metric_closure(n: usize, edges: &[(usize, usize, Q)]) -> Result<Vec<Q>> {
    let mut d: Vec<Option<Q>> = vec![None; n * n];
    for i in 0..n {
        d[i * n + i] = Some(Q::zero());
    }
    for (u, v, w) in edges {
        if w.is_negative() {
            return Err(Error::Instance("negative edge weight".into()));
        }
        for (x, y) in [(*u, *v), (*v, *u)] {
            let slot = &mut d[x * n + y];
            if slot.as_ref().map_or(true, |c| w < c) {
                *slot = Some(w.clone());
            }
        }
    }
    for k in 0..n {
        for i in 0..n {
            let Some(dik) = d[i * n + k].clone() else { continue };
            for j in 0..n {
                let Some(dkj) = &d[k * n + j] else { continue };
                let via = &dik + dkj;
                let slot = &mut d[i * n + j];
                if slot.as_ref().map_or(true, |c| via < *c) {
                    *slot = Some(via);
                }
            }
        }
    }
    d.into_iter().map(|x| x.ok_or_else(|| Error::Instance("construction graph is disconnected".into()))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_matches_closure() {
        for k in [3, 5, 8] {
            let g = build_golden(k).unwrap();
            let sol = g.to_bipoint(500).unwrap();
            let nodes = g.nodes();
            for (i, &u) in nodes.iter().enumerate() {
                for (j, &v) in nodes.iter().enumerate() {
                    assert_eq!(sol.instance.d_exact(i, j).unwrap(), &g.distance(u, v), "k={k} {u:?} {v:?}");
                }
            }
            assert_eq!(sol.cost_exact().unwrap(), g.fractional_cost());
            assert!(sol.instance.audit_metric().is_ok());
        }
    }

    #[test]
    fn k_too_small() {
        assert!(build_golden(0).is_err());
        assert!(build_golden(1).is_err());
    }
}

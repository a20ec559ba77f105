//! Closed intervals over the extended reals and expression DAGs evaluated on them.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::alg::expr::{Affine, ParamExpr};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

/// `0 * inf = 0`, as needed for coefficients that vanish on unbounded ranges.
fn mul0(a: f64, b: f64) -> f64 {
    if a == 0.0 || b == 0.0 {
        0.0
    } else {
        a * b
    }
}

impl Interval {
    pub const ALL: Interval = Interval { lo: f64::NEG_INFINITY, hi: f64::INFINITY };
    pub const UNIT: Interval = Interval { lo: 0.0, hi: 1.0 };

    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(lo <= hi, "empty interval [{lo}, {hi}]");
        Interval { lo, hi }
    }

    pub fn point(v: f64) -> Self {
        Interval { lo: v, hi: v }
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }

    pub fn contains_zero(&self) -> bool {
        self.contains(0.0)
    }

    pub fn is_zero(&self) -> bool {
        self.lo == 0.0 && self.hi == 0.0
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn hull(&self, o: &Interval) -> Interval {
        Interval { lo: self.lo.min(o.lo), hi: self.hi.max(o.hi) }
    }

    pub fn intersect(&self, o: &Interval) -> Option<Interval> {
        let (lo, hi) = (self.lo.max(o.lo), self.hi.min(o.hi));
        (lo <= hi).then_some(Interval { lo, hi })
    }

    /// Outward padding by `eps`, leaving infinite ends alone.
    pub fn pad(&self, eps: f64) -> Interval {
        Interval { lo: self.lo - eps, hi: self.hi + eps }
    }

    pub fn add(&self, o: &Interval) -> Interval {
        Interval { lo: self.lo + o.lo, hi: self.hi + o.hi }
    }

    pub fn neg(&self) -> Interval {
        Interval { lo: -self.hi, hi: -self.lo }
    }

    pub fn sub(&self, o: &Interval) -> Interval {
        self.add(&o.neg())
    }

    pub fn scale(&self, k: f64) -> Interval {
        let (a, b) = (mul0(k, self.lo), mul0(k, self.hi));
        Interval { lo: a.min(b), hi: a.max(b) }
    }

    pub fn mul(&self, o: &Interval) -> Interval {
        let c = [mul0(self.lo, o.lo), mul0(self.lo, o.hi), mul0(self.hi, o.lo), mul0(self.hi, o.hi)];
        Interval { lo: c.iter().copied().fold(f64::INFINITY, f64::min), hi: c.iter().copied().fold(f64::NEG_INFINITY, f64::max) }
    }

    pub fn min(&self, o: &Interval) -> Interval {
        Interval { lo: self.lo.min(o.lo), hi: self.hi.min(o.hi) }
    }

    pub fn max(&self, o: &Interval) -> Interval {
        Interval { lo: self.lo.max(o.lo), hi: self.hi.max(o.hi) }
    }

    /// Widen by a relative `4 * EPSILON`: covers the gap between `n * fl(1/d)`
    /// and a directly rounded quotient.
    pub fn outward(&self) -> Interval {
        let w = |v: f64| if v.is_finite() { v.abs() * 4.0 * f64::EPSILON + f64::MIN_POSITIVE } else { 0.0 };
        Interval { lo: self.lo - w(self.lo), hi: self.hi + w(self.hi) }
    }

    pub fn clamp01(&self) -> Interval {
        Interval { lo: self.lo.clamp(0.0, 1.0), hi: self.hi.clamp(0.0, 1.0) }
    }
}

/// Result of enclosing an expression on a box.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Enclosure {
    Range(Interval),
    /// Every division on the path had an identically zero denominator: the
    /// set the parameter belongs to is empty, and the convention is
    /// `p^0 = 1`, `p^1 = 0`.
    Vacuous,
}

impl Enclosure {
    pub fn range(&self) -> Option<Interval> {
        match self {
            Enclosure::Range(i) => Some(*i),
            Enclosure::Vacuous => None,
        }
    }

    /// `(p^0, p^1)`.
    pub fn bounds(&self) -> (f64, f64) {
        match self {
            Enclosure::Range(i) => (i.lo, i.hi),
            Enclosure::Vacuous => (1.0, 0.0),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ExpressionNode {
    Const(f64),
    /// Box variable: 0 is `b`, `t` in `1..=m` is `gamma_{A_t}`.
    Var(usize),
    Add(Arc<ExpressionNode>, Arc<ExpressionNode>),
    Sub(Arc<ExpressionNode>, Arc<ExpressionNode>),
    Mul(Arc<ExpressionNode>, Arc<ExpressionNode>),
    Div(Arc<ExpressionNode>, Arc<ExpressionNode>),
    Min(Arc<ExpressionNode>, Arc<ExpressionNode>),
    Max(Arc<ExpressionNode>, Arc<ExpressionNode>),
    Clamp01(Arc<ExpressionNode>),
}

use ExpressionNode as E;

fn lift(a: Enclosure, b: Enclosure, f: impl Fn(&Interval, &Interval) -> Interval) -> Enclosure {
    match (a, b) {
        (Enclosure::Range(x), Enclosure::Range(y)) => Enclosure::Range(f(&x, &y)),
        _ => Enclosure::Vacuous,
    }
}

impl ExpressionNode {
    /// Point value. Division by zero gives `+inf`, `-inf` or `0` by the sign
    /// of the numerator, so that a clamp reproduces the empty-set rule.
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            E::Const(c) => *c,
            E::Var(i) => x[*i],
            E::Add(a, b) => a.eval(x) + b.eval(x),
            E::Sub(a, b) => a.eval(x) - b.eval(x),
            E::Mul(a, b) => mul0(a.eval(x), b.eval(x)),
            E::Div(a, b) => {
                let (n, d) = (a.eval(x), b.eval(x));
                if d == 0.0 {
                    if n > 0.0 {
                        f64::INFINITY
                    } else if n < 0.0 {
                        f64::NEG_INFINITY
                    } else {
                        0.0
                    }
                } else {
                    n / d
                }
            }
            E::Min(a, b) => a.eval(x).min(b.eval(x)),
            E::Max(a, b) => a.eval(x).max(b.eval(x)),
            E::Clamp01(a) => a.eval(x).clamp(0.0, 1.0),
        }
    }

    /// Natural interval extension; an outer enclosure of the range on `bx`.
    pub fn interval_eval(&self, bx: &[Interval]) -> Enclosure {
        match self {
            E::Const(c) => Enclosure::Range(Interval::point(*c)),
            E::Var(i) => Enclosure::Range(bx[*i]),
            E::Add(a, b) => lift(a.interval_eval(bx), b.interval_eval(bx), Interval::add),
            E::Sub(a, b) => lift(a.interval_eval(bx), b.interval_eval(bx), Interval::sub),
            E::Mul(a, b) => lift(a.interval_eval(bx), b.interval_eval(bx), Interval::mul),
            E::Min(a, b) => lift(a.interval_eval(bx), b.interval_eval(bx), Interval::min),
            E::Max(a, b) => lift(a.interval_eval(bx), b.interval_eval(bx), Interval::max),
            E::Clamp01(a) => match a.interval_eval(bx) {
                Enclosure::Range(i) => Enclosure::Range(i.clamp01()),
                v => v,
            },
            E::Div(a, b) => {
                let (n, d) = (a.interval_eval(bx), b.interval_eval(bx));
                let (Enclosure::Range(n), Enclosure::Range(d)) = (n, d) else { return Enclosure::Vacuous };
                if d.is_zero() {
                    Enclosure::Vacuous
                } else if d.contains_zero() {
                    // 1/0 and 0/0 terms: anything, which clamps to [0, 1]
                    Enclosure::Range(Interval::ALL)
                } else {
                    let inv = Interval { lo: 1.0 / d.hi, hi: 1.0 / d.lo };
                    Enclosure::Range(n.mul(&inv).outward())
                }
            }
        }
    }
}

fn arc(e: ExpressionNode) -> Arc<ExpressionNode> {
    Arc::new(e)
}

/// `gamma_{C_t}` for `t = 2..m` (0-based index `t-1`), built from the
/// min-recursion so the DAG shares the running remainder.
pub fn gamma_c_nodes(m: usize) -> Vec<Arc<ExpressionNode>> {
    let mut out = vec![arc(E::Const(0.0)); m];
    let mut rest = arc(E::Const(1.0));
    for t in (1..m).rev() {
        let v = arc(E::Min(arc(E::Var(t + 1)), rest.clone()));
        rest = arc(E::Sub(rest, v.clone()));
        out[t] = v;
    }
    out[0] = rest;
    out
}

/// An affine form in the chain variable layout as a DAG over box variables.
pub fn affine_node(a: &Affine, gc: &[Arc<ExpressionNode>]) -> Arc<ExpressionNode> {
    let m = a.m;
    let mut acc = arc(E::Const(a.c[0] as f64));
    let term = |acc: Arc<ExpressionNode>, k: i64, v: Arc<ExpressionNode>| {
        if k == 0 {
            acc
        } else {
            arc(E::Add(acc, arc(E::Mul(arc(E::Const(k as f64)), v))))
        }
    };
    acc = term(acc, a.c[1], arc(E::Var(0)));
    for t in 0..m {
        acc = term(acc, a.c[2 + t], arc(E::Var(t + 1)));
    }
    for t in 1..m {
        acc = term(acc, a.c[1 + m + t], gc[t].clone());
    }
    acc
}

pub fn param_node(p: &ParamExpr, gc: &[Arc<ExpressionNode>]) -> Arc<ExpressionNode> {
    match p {
        ParamExpr::Const(v) => arc(E::Const(*v as f64)),
        ParamExpr::Ratio { num, den } => arc(E::Clamp01(arc(E::Div(affine_node(num, gc), affine_node(den, gc))))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alg::expr::{parse_param, Point};

    fn iv(lo: f64, hi: f64) -> Interval {
        Interval::new(lo, hi)
    }

    #[test]
    fn constant_is_degenerate() {
        assert_eq!(E::Const(0.25).interval_eval(&[]), Enclosure::Range(Interval::point(0.25)));
    }

    #[test]
    fn ratio_on_tail() {
        let e = E::Div(arc(E::Var(0)), arc(E::Var(2)));
        let r = e.interval_eval(&[iv(0.4, 0.6), iv(0.0, f64::INFINITY), iv(2.0, f64::INFINITY)]).range().unwrap();
        assert!(r.lo <= 0.0 && r.lo > -1e-15 && r.hi >= 0.3 && r.hi < 0.3 + 1e-15, "{r:?}");
    }

    #[test]
    fn zero_division_rules() {
        let gc = gamma_c_nodes(2);
        let p = param_node(&parse_param(2, "(b-gC2)/(1-gC2)").unwrap(), &gc);
        // gamma_C2 = min(gA2, 1) ranges over [0.9, 1.1] ∩ ... = [0.9, 1]
        let r = p.interval_eval(&[iv(0.5, 0.6), iv(0.0, 1.0), iv(0.9, 1.1)]).range().unwrap();
        assert_eq!((r.lo, r.hi), (0.0, 1.0));
        let v = E::Div(arc(E::Const(1.0)), arc(E::Sub(arc(E::Var(0)), arc(E::Var(0)))));
        assert_eq!(v.interval_eval(&[iv(0.0, 0.0)]), Enclosure::Vacuous);
        assert_eq!(Enclosure::Vacuous.bounds(), (1.0, 0.0));
    }

    #[test]
    fn gamma_c_nodes_match_recursion() {
        let gc = gamma_c_nodes(3);
        for ga in [[0.2, 0.3, 0.4], [0.0, 0.9, 0.5], [1.0, 2.0, 0.1], [0.0, 0.0, 1.7]] {
            let p = Point::from_ga(0.5f64, ga.to_vec());
            let x = [0.5, ga[0], ga[1], ga[2]];
            for t in 0..3 {
                assert!((gc[t].eval(&x) - p.gc[t]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn param_node_matches_expr() {
        let gc = gamma_c_nodes(2);
        for s in ["(b-gA2-gC2)/(1-gC2)", "b/gA2", "(b+gA2)/gC2", "1", "0"] {
            let pe = parse_param(2, s).unwrap();
            let node = param_node(&pe, &gc);
            for (b, g) in [(0.3, 0.4), (0.9, 1.5), (0.0, 0.0), (1.0, 0.25)] {
                let pt = Point::from_ga(b, vec![0.7, g]);
                assert!((node.eval(&[b, 0.7, g]) - pe.eval(&pt)).abs() < 1e-12, "{s} at {b},{g}");
            }
        }
    }
}

//! Parameter enclosures on boxes of the `(b, gamma_A)` space.
//!
//! Inside one linear piece of the `gamma_C` recursion every parameter is a
//! linear-fractional function of the box variables, whose range over a box is
//! attained at vertices or as limits along the unbounded coordinates. Boxes
//! meeting several pieces take the hull over the pieces, each piece formula
//! being extended to the whole box.

use serde::{Deserialize, Serialize};

use super::interval::{Enclosure, Interval};
use crate::alg::expr::{Affine, ParamExpr};

/// Outward padding applied to every computed parameter range.
pub const PAD: f64 = 1e-12;

/// A box over `[b, gamma_{A_1}, .., gamma_{A_m}]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntervalBox {
    pub vars: Vec<Interval>,
}

impl IntervalBox {
    pub fn m(&self) -> usize {
        self.vars.len() - 1
    }

    pub fn b(&self) -> Interval {
        self.vars[0]
    }

    /// Whole space: `b` in `[0,1]`, every `gamma` in `[0, inf)`.
    pub fn omega(m: usize) -> Self {
        let mut vars = vec![Interval::new(0.0, f64::INFINITY); m + 1];
        vars[0] = Interval::UNIT;
        IntervalBox { vars }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.vars.iter().zip(x).all(|(i, v)| i.contains(*v))
    }
}

/// Affine form over `[1, b, gamma_{A_1}, .., gamma_{A_m}]`.
#[derive(Clone, Debug, PartialEq)]
pub struct BoxAffine {
    pub c: Vec<f64>,
}

impl BoxAffine {
    fn zero(m: usize) -> Self {
        BoxAffine { c: vec![0.0; m + 2] }
    }

    fn constant(m: usize, v: f64) -> Self {
        let mut a = Self::zero(m);
        a.c[0] = v;
        a
    }

    fn ga(m: usize, t: usize) -> Self {
        let mut a = Self::zero(m);
        a.c[2 + t] = 1.0;
        a
    }

    fn add_scaled(&self, o: &BoxAffine, k: f64) -> BoxAffine {
        BoxAffine { c: self.c.iter().zip(&o.c).map(|(a, b)| a + k * b).collect() }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.c[0] + self.c[1..].iter().zip(x).map(|(c, v)| if *c == 0.0 { 0.0 } else { c * v }).sum::<f64>()
    }

    pub fn interval(&self, bx: &IntervalBox) -> Interval {
        let mut r = Interval::point(self.c[0]);
        for (c, v) in self.c[1..].iter().zip(&bx.vars) {
            if *c != 0.0 {
                r = r.add(&v.scale(*c));
            }
        }
        r
    }

    pub fn is_identically_zero(&self) -> bool {
        self.c.iter().all(|c| *c == 0.0)
    }
}

/// One linear piece of the `gamma_C` recursion meeting the box: the full
/// `gamma_C` vector as box-affine forms.
#[derive(Clone, Debug)]
pub struct Piece {
    pub gc: Vec<BoxAffine>,
}

/// All pieces of the recursion `gamma_{C_t} = min(gamma_{A_t}, rest)`,
/// `t = m..2`, that can meet the box.
pub fn pieces(bx: &IntervalBox) -> Vec<Piece> {
    let m = bx.m();
    let mut out = Vec::new();
    let mut gc = vec![BoxAffine::zero(m); m];
    descend(bx, m, m - 1, BoxAffine::constant(m, 1.0), &mut gc, &mut out);
    out
}

fn descend(bx: &IntervalBox, m: usize, t: usize, rest: BoxAffine, gc: &mut Vec<BoxAffine>, out: &mut Vec<Piece>) {
    if t == 0 {
        gc[0] = rest;
        out.push(Piece { gc: gc.clone() });
        return;
    }
    let ga = BoxAffine::ga(m, t);
    let diff = ga.add_scaled(&rest, -1.0).interval(bx);
    // on the switching surface both formulas agree, so a box touching it
    // from one side needs only that side's piece
    if diff.hi <= 0.0 || diff.lo < 0.0 {
        // C_t takes |A_t|
        gc[t] = ga.clone();
        descend(bx, m, t - 1, rest.add_scaled(&ga, -1.0), gc, out);
    }
    if diff.hi > 0.0 {
        // C_t takes the remainder; lower C sets are empty
        gc[t] = rest;
        for s in 0..t {
            gc[s] = BoxAffine::zero(m);
        }
        out.push(Piece { gc: gc.clone() });
    }
}

/// Chain-layout affine form rewritten on a piece.
pub fn on_piece(a: &Affine, piece: &Piece) -> BoxAffine {
    let m = a.m;
    let mut r = BoxAffine::zero(m);
    r.c[0] = a.c[0] as f64;
    r.c[1] = a.c[1] as f64;
    for t in 0..m {
        r.c[2 + t] = a.c[2 + t] as f64;
    }
    // gamma_{C_1} is already expanded as 1 - sum of the others
    for t in 1..m {
        let k = a.c[1 + m + t];
        if k != 0 {
            r = r.add_scaled(&piece.gc[t], k as f64);
        }
    }
    r
}

/// `gamma_W` for set `w` on a piece.
pub fn gamma_on_piece(m: usize, w: usize, piece: &Piece) -> BoxAffine {
    if w < 2 * m {
        BoxAffine::ga(m, w % m)
    } else {
        piece.gc[w - 2 * m].clone()
    }
}

fn inf_by_sign(v: f64) -> f64 {
    if v > 0.0 {
        f64::INFINITY
    } else {
        f64::NEG_INFINITY
    }
}

/// Range of `num / den` over the box, before truncation.
pub fn lf_range(num: &BoxAffine, den: &BoxAffine, bx: &IntervalBox) -> Enclosure {
    let d = den.interval(bx);
    if d.is_zero() {
        return Enclosure::Vacuous;
    }
    if d.lo < 0.0 && d.hi > 0.0 {
        return Enclosure::Range(Interval::ALL);
    }
    let s = if d.hi > 0.0 { 1.0 } else { -1.0 };
    let active: Vec<usize> = (1..num.c.len()).filter(|&j| num.c[j] != 0.0 || den.c[j] != 0.0).collect();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut see = |v: f64| {
        lo = lo.min(v);
        hi = hi.max(v);
    };
    for &j in &active {
        let iv = bx.vars[j - 1];
        if iv.hi.is_infinite() {
            let (nr, dr) = (num.c[j], den.c[j]);
            if dr != 0.0 {
                see(nr / dr);
            } else if nr != 0.0 {
                see(inf_by_sign(nr * s));
            }
        }
    }
    let n = active.len();
    let mut x: Vec<f64> = bx.vars.iter().map(|v| v.lo).collect();
    for mask in 0u32..(1u32 << n) {
        let mut skip = false;
        for (k, &j) in active.iter().enumerate() {
            let iv = bx.vars[j - 1];
            x[j - 1] = if mask >> k & 1 == 1 {
                if iv.hi.is_infinite() || iv.hi == iv.lo {
                    skip = true;
                }
                iv.hi
            } else {
                iv.lo
            };
        }
        if skip {
            continue;
        }
        let (nv, dv) = (num.eval(&x), den.eval(&x));
        if dv == 0.0 {
            if nv == 0.0 {
                return Enclosure::Range(Interval::ALL);
            }
            see(inf_by_sign(nv * s));
        } else {
            see(nv / dv);
        }
    }
    Enclosure::Range(Interval { lo, hi })
}

/// `(p^0, p^1)` for every parameter of a chain and the vacuous sets of the box.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainEnclosure {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

/// Sets whose `gamma` vanishes identically on the box.
pub fn vacuous_sets(m: usize, bx: &IntervalBox, pcs: &[Piece]) -> Vec<bool> {
    (0..3 * m).map(|w| pcs.iter().all(|pc| gamma_on_piece(m, w, pc).interval(bx).is_zero())).collect()
}

/// Truncated range of one parameter of set `w`. Pieces on which the set is
/// empty are skipped (its clients are absent there); a set that is empty on
/// the whole box gets `[1, 1]`, neutral for the backup minimum, and its
/// classes are pinned to zero cost by the caller.
pub fn param_range(m: usize, w: usize, p: &ParamExpr, bx: &IntervalBox, pcs: &[Piece]) -> Interval {
    let (num, den) = match p {
        ParamExpr::Const(v) => return Interval::point(*v as f64).clamp01(),
        ParamExpr::Ratio { num, den } => (num, den),
    };
    let mut acc: Option<Interval> = None;
    for pc in pcs {
        if gamma_on_piece(m, w, pc).interval(bx).is_zero() {
            continue;
        }
        let r = match lf_range(&on_piece(num, pc), &on_piece(den, pc), bx) {
            Enclosure::Range(r) => r.pad(PAD).clamp01(),
            Enclosure::Vacuous => Interval::UNIT,
        };
        acc = Some(match acc {
            Some(a) => a.hull(&r),
            None => r,
        });
    }
    acc.unwrap_or(Interval::point(1.0))
}

pub fn chain_enclosure(params: &[ParamExpr], bx: &IntervalBox, pcs: &[Piece]) -> ChainEnclosure {
    let m = bx.m();
    let (mut lo, mut hi) = (Vec::with_capacity(3 * m), Vec::with_capacity(3 * m));
    for (w, p) in params.iter().enumerate() {
        let r = param_range(m, w, p, bx, pcs);
        lo.push(r.lo);
        hi.push(r.hi);
    }
    ChainEnclosure { lo, hi }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alg::expr::{parse_param, Point};

    fn bx(v: &[(f64, f64)]) -> IntervalBox {
        IntervalBox { vars: v.iter().map(|&(a, b)| Interval::new(a, b)).collect() }
    }

    #[test]
    fn tail_ratio() {
        let b = bx(&[(0.4, 0.6), (0.0, f64::INFINITY), (2.0, f64::INFINITY)]);
        let pcs = pieces(&b);
        assert_eq!(pcs.len(), 1);
        let r = param_range(2, 3, &parse_param(2, "b/gA2").unwrap(), &b, &pcs);
        assert!(r.lo.abs() <= PAD && (r.hi - 0.3).abs() <= PAD);
    }

    #[test]
    fn pieces_of_m2() {
        assert_eq!(pieces(&bx(&[(0.0, 1.0), (0.0, 1.0), (0.0, 0.5)])).len(), 1);
        assert_eq!(pieces(&bx(&[(0.0, 1.0), (0.0, 1.0), (1.0, 2.0)])).len(), 1);
        assert_eq!(pieces(&bx(&[(0.0, 1.0), (0.0, 1.0), (0.5, 2.0)])).len(), 2);
    }

    #[test]
    fn vacuous_c2_for_m3() {
        // gamma_{A_3} >= 1 empties C_1 and C_2
        let b = bx(&[(0.0, 0.5), (0.0, f64::INFINITY), (0.0, 2.0), (1.0, 2.0)]);
        let pcs = pieces(&b);
        let v = vacuous_sets(3, &b, &pcs);
        assert_eq!(v, vec![false, false, false, false, false, false, true, true, false]);
        let r = param_range(3, 7, &parse_param(3, "(b-gA2)/gC2").unwrap(), &b, &pcs);
        assert_eq!((r.lo, r.hi), (1.0, 1.0));
    }

    #[test]
    fn enclosure_contains_samples() {
        let exprs = ["(b-gA2-gC2)/(1-gC2)", "(b+gA2)/gC2", "b/gA2", "(1-b)/(gA2+gA3)", "(b-gC3)/gC2"];
        let boxes = [
            bx(&[(0.25, 0.5), (0.0, f64::INFINITY), (0.5, 1.0), (0.0, 0.5)]),
            bx(&[(0.0, 1.0), (0.0, f64::INFINITY), (0.0, 2.0), (0.0, 2.0)]),
            bx(&[(0.5, 0.75), (0.0, f64::INFINITY), (2.0, f64::INFINITY), (0.25, 0.5)]),
        ];
        for b in &boxes {
            let pcs = pieces(b);
            for s in exprs {
                let pe = parse_param(3, s).unwrap();
                for w in [2, 5, 7, 8] {
                    let r = param_range(3, w, &pe, b, &pcs);
                    for i in 0..=6 {
                        for j in 0..=6 {
                            for k in 0..=6 {
                                let f = |iv: Interval, t: usize| if iv.hi.is_infinite() { iv.lo + t as f64 * 3.0 } else { iv.lo + iv.width() * t as f64 / 6.0 };
                                let pt = Point::from_ga(f(b.vars[0], i), vec![1.0, f(b.vars[2], j), f(b.vars[3], k)]);
                                if pt.gamma(w) == 0.0 {
                                    continue;
                                }
                                let v = pe.eval(&pt);
                                assert!(r.contains(v), "{s} w={w} at {pt:?}: {v} not in {r:?}");
                            }
                        }
                    }
                }
            }
        }
    }
}

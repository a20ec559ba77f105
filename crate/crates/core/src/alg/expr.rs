//! Affine forms in `(b, gamma_A, gamma_C)` and truncated ratio parameters.
//!
//! Variable layout for level `m`: `[1, b, gA1..gAm, gC2..gCm]`. `gC1` is not
//! a variable; it is rewritten as `1 - gC2 - ... - gCm`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::num::{s_clamp01, Scalar, Q};
use crate::partition::gamma_c_from_a;

/// A point of the parameter space.
#[derive(Clone, Debug, PartialEq)]
pub struct Point<T> {
    pub b: T,
    pub ga: Vec<T>,
    /// Full `gamma_C` vector, `gc[0] = gamma_{C_1}`.
    pub gc: Vec<T>,
}

impl<T: Scalar> Point<T> {
    pub fn m(&self) -> usize {
        self.ga.len()
    }

    /// Derives `gamma_C` from `gamma_A` by the partition min-recursion.
    pub fn from_ga(b: T, ga: Vec<T>) -> Self {
        let m = ga.len();
        let mut gc = vec![T::zero(); m];
        let mut rest = T::one();
        for t in (1..m).rev() {
            let v = if ga[t] < rest { ga[t].clone() } else { rest.clone() };
            rest = rest - v.clone();
            gc[t] = v;
        }
        gc[0] = rest;
        Point { b, ga, gc }
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(&T) -> U) -> Point<U> {
        Point { b: f(&self.b), ga: self.ga.iter().map(&f).collect(), gc: self.gc.iter().map(&f).collect() }
    }

    /// `gamma_W` for set index `w` in parameter order.
    pub fn gamma(&self, w: usize) -> T {
        let m = self.m();
        if w < 2 * m {
            self.ga[w % m].clone()
        } else {
            self.gc[w - 2 * m].clone()
        }
    }
}

pub fn point_q(b: Q, ga: Vec<Q>) -> Point<Q> {
    let gc = gamma_c_from_a(&ga);
    Point { b, ga, gc }
}

pub fn nvars(m: usize) -> usize {
    2 * m + 1
}

/// Integer-coefficient affine form.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Affine {
    pub m: usize,
    pub c: Vec<i64>,
}

impl Affine {
    pub fn zero(m: usize) -> Self {
        Affine { m, c: vec![0; nvars(m)] }
    }

    pub fn constant(m: usize, v: i64) -> Self {
        let mut a = Self::zero(m);
        a.c[0] = v;
        a
    }

    pub fn var_b(m: usize) -> Self {
        let mut a = Self::zero(m);
        a.c[1] = 1;
        a
    }

    pub fn var_ga(m: usize, t: usize) -> Self {
        let mut a = Self::zero(m);
        a.c[2 + t] = 1;
        a
    }

    /// `gamma_{C_t}` (0-based `t`); for `t = 0` this is `1 - sum gC_s`.
    pub fn var_gc(m: usize, t: usize) -> Self {
        let mut a = Self::zero(m);
        if t == 0 {
            a.c[0] = 1;
            for s in 1..m {
                a.c[2 + m + s - 1] = -1;
            }
        } else {
            a.c[2 + m + t - 1] = 1;
        }
        a
    }

    /// `gamma_W` as an affine form, set index in parameter order.
    pub fn gamma(m: usize, w: usize) -> Self {
        if w < 2 * m {
            Self::var_ga(m, w % m)
        } else {
            Self::var_gc(m, w - 2 * m)
        }
    }

    pub fn add(&self, o: &Affine) -> Affine {
        Affine { m: self.m, c: self.c.iter().zip(&o.c).map(|(a, b)| a + b).collect() }
    }

    pub fn sub(&self, o: &Affine) -> Affine {
        Affine { m: self.m, c: self.c.iter().zip(&o.c).map(|(a, b)| a - b).collect() }
    }

    pub fn scale(&self, k: i64) -> Affine {
        Affine { m: self.m, c: self.c.iter().map(|a| a * k).collect() }
    }

    pub fn is_const(&self) -> bool {
        self.c[1..].iter().all(|&v| v == 0)
    }

    pub fn eval<T: Scalar>(&self, p: &Point<T>) -> T {
        let m = self.m;
        let mut acc = T::from_i64(self.c[0]);
        let mut add = |k: i64, v: &T| {
            if k != 0 {
                acc = acc.clone() + T::from_i64(k) * v.clone();
            }
        };
        add(self.c[1], &p.b);
        for t in 0..m {
            add(self.c[2 + t], &p.ga[t]);
        }
        for s in 1..m {
            add(self.c[2 + m + s - 1], &p.gc[s]);
        }
        acc
    }

    pub fn eval_f64(&self, b: f64, ga: &[f64], gc: &[f64]) -> f64 {
        let m = self.m;
        let mut acc = self.c[0] as f64 + self.c[1] as f64 * b;
        for t in 0..m {
            acc += self.c[2 + t] as f64 * ga[t];
        }
        for s in 1..m {
            acc += self.c[2 + m + s - 1] as f64 * gc[s];
        }
        acc
    }

    pub fn var_names(m: usize) -> Vec<String> {
        let mut v = vec![String::new(), "b".to_string()];
        v.extend((1..=m).map(|t| format!("gA{t}")));
        v.extend((2..=m).map(|t| format!("gC{t}")));
        v
    }

    fn terms(&self) -> usize {
        self.c.iter().filter(|&&v| v != 0).count()
    }
}

impl fmt::Display for Affine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names = Affine::var_names(self.m);
        let mut first = true;
        for (i, &k) in self.c.iter().enumerate() {
            if k == 0 {
                continue;
            }
            let sign = if k < 0 { "-" } else if first { "" } else { "+" };
            let mag = k.abs();
            if i == 0 {
                write!(f, "{sign}{mag}")?;
            } else if mag == 1 {
                write!(f, "{sign}{}", names[i])?;
            } else {
                write!(f, "{sign}{mag}*{}", names[i])?;
            }
            first = false;
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

/// A parameter: constant, or `clamp01(num / den)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ParamExpr {
    Const(i64),
    Ratio { num: Affine, den: Affine },
}

impl ParamExpr {
    /// Truncated value. A vanishing denominator means the set is empty and the
    /// value is immaterial; it is resolved as 1 for a positive numerator and 0 otherwise.
    pub fn eval<T: Scalar>(&self, p: &Point<T>) -> T {
        match self {
            ParamExpr::Const(v) => T::from_i64(*v),
            ParamExpr::Ratio { num, den } => {
                let d = den.eval(p);
                let n = num.eval(p);
                if d.near_zero() {
                    return if n > T::zero() && !n.near_zero() { T::one() } else { T::zero() };
                }
                s_clamp01(n / d)
            }
        }
    }

    pub fn uses_var(&self, v: usize) -> bool {
        match self {
            ParamExpr::Const(_) => false,
            ParamExpr::Ratio { num, den } => num.c[v] != 0 || den.c[v] != 0,
        }
    }
}

impl fmt::Display for ParamExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamExpr::Const(v) => write!(f, "{v}"),
            ParamExpr::Ratio { num, den } => {
                let wrap = |a: &Affine| if a.terms() > 1 { format!("({a})") } else { a.to_string() };
                if den.is_const() && den.c[0] == 1 {
                    write!(f, "{num}")
                } else {
                    write!(f, "{}/{}", wrap(num), wrap(den))
                }
            }
        }
    }
}

pub fn parse_param(m: usize, s: &str) -> Result<ParamExpr, String> {
    let s: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let mut depth = 0i32;
    let mut split = None;
    for (i, ch) in s.char_indices() {
        match ch {
            '(' => depth += 1,
            ')' => depth -= 1,
            '/' if depth == 0 => {
                if split.is_some() {
                    return Err(format!("more than one top-level '/' in {s:?}"));
                }
                split = Some(i);
            }
            _ => {}
        }
        if depth < 0 {
            return Err(format!("unbalanced parentheses in {s:?}"));
        }
    }
    if depth != 0 {
        return Err(format!("unbalanced parentheses in {s:?}"));
    }
    match split {
        None => {
            let a = parse_affine(m, strip_parens(&s))?;
            if a.is_const() {
                Ok(ParamExpr::Const(a.c[0]))
            } else {
                Ok(ParamExpr::Ratio { num: a, den: Affine::constant(m, 1) })
            }
        }
        Some(i) => {
            let num = parse_affine(m, strip_parens(&s[..i]))?;
            let den = parse_affine(m, strip_parens(&s[i + 1..]))?;
            if den.c.iter().all(|&v| v == 0) {
                return Err(format!("zero denominator in {s:?}"));
            }
            Ok(ParamExpr::Ratio { num, den })
        }
    }
}

fn strip_parens(s: &str) -> &str {
    let b = s.as_bytes();
    if b.len() >= 2 && b[0] == b'(' && b[b.len() - 1] == b')' {
        let mut depth = 0;
        for (i, &c) in b.iter().enumerate() {
            if c == b'(' {
                depth += 1;
            } else if c == b')' {
                depth -= 1;
                if depth == 0 && i != b.len() - 1 {
                    return s;
                }
            }
        }
        return strip_parens(&s[1..s.len() - 1]);
    }
    s
}

pub fn parse_affine(m: usize, s: &str) -> Result<Affine, String> {
    if s.is_empty() {
        return Err("empty expression".into());
    }
    let mut acc = Affine::zero(m);
    let mut rest = s;
    let mut sign = 1i64;
    if let Some(r) = rest.strip_prefix('-') {
        sign = -1;
        rest = r;
    } else if let Some(r) = rest.strip_prefix('+') {
        rest = r;
    }
    loop {
        let end = rest.find(['+', '-']).unwrap_or(rest.len());
        let term = &rest[..end];
        acc = acc.add(&parse_term(m, term)?.scale(sign));
        if end == rest.len() {
            break;
        }
        sign = if rest.as_bytes()[end] == b'-' { -1 } else { 1 };
        rest = &rest[end + 1..];
    }
    Ok(acc)
}

fn parse_term(m: usize, t: &str) -> Result<Affine, String> {
    let (k, var) = match t.split_once('*') {
        Some((k, v)) => (k.parse::<i64>().map_err(|_| format!("bad coefficient {k:?}"))?, v),
        None => {
            if let Ok(v) = t.parse::<i64>() {
                return Ok(Affine::constant(m, v));
            }
            (1, t)
        }
    };
    let base = if var == "b" {
        Affine::var_b(m)
    } else if let Some(i) = var.strip_prefix("gA") {
        let i: usize = i.parse().map_err(|_| format!("bad variable {var:?}"))?;
        if i == 0 || i > m {
            return Err(format!("variable {var} out of range for m={m}"));
        }
        Affine::var_ga(m, i - 1)
    } else if let Some(i) = var.strip_prefix("gC") {
        let i: usize = i.parse().map_err(|_| format!("bad variable {var:?}"))?;
        if i == 0 || i > m {
            return Err(format!("variable {var} out of range for m={m}"));
        }
        Affine::var_gc(m, i - 1)
    } else {
        return Err(format!("unknown term {t:?}"));
    };
    Ok(base.scale(k))
}

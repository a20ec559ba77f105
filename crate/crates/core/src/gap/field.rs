//! Exact arithmetic in `Q(s)` with `s = sqrt(phi)`, i.e. `s^4 = s^2 + 1`.
//! Contains `sqrt 5 = 2 s^2 - 1`, so every golden constant lives here.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Rem, Sub};
use std::sync::OnceLock;

use num_bigint::BigInt;
use num_traits::{Num, One, Signed, Zero};

use crate::num::{fmt_q, to_f64, Q, Scalar};

/// `c0 + c1 s + c2 s^2 + c3 s^3`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Golden(pub [Q; 4]);

impl Golden {
    pub fn from_q(x: Q) -> Self {
        Golden([x, Q::zero(), Q::zero(), Q::zero()])
    }

    /// `sqrt(phi)`.
    pub fn s() -> Self {
        Golden([Q::zero(), Q::one(), Q::zero(), Q::zero()])
    }

    pub fn phi() -> Self {
        Golden([Q::zero(), Q::zero(), Q::one(), Q::zero()])
    }

    pub fn is_rational(&self) -> bool {
        self.0[1..].iter().all(Zero::is_zero)
    }

    /// Matrix of multiplication by `self` in the basis `1, s, s^2, s^3`.
    fn mul_matrix(&self) -> [[Q; 4]; 4] {
        let mut cols: Vec<[Q; 4]> = Vec::with_capacity(4);
        let mut e = self.clone();
        for _ in 0..4 {
            cols.push(e.0.clone());
            e = e * Golden::s();
        }
        std::array::from_fn(|r| std::array::from_fn(|c| cols[c][r].clone()))
    }

    pub fn inv(&self) -> Option<Self> {
        if self.is_zero() {
            return None;
        }
        // solve M x = e_1 by Gauss-Jordan
        let mut m = self.mul_matrix();
        let mut rhs: [Q; 4] = [Q::one(), Q::zero(), Q::zero(), Q::zero()];
        for col in 0..4 {
            let piv = (col..4).find(|&r| !m[r][col].is_zero())?;
            m.swap(col, piv);
            rhs.swap(col, piv);
            let p = m[col][col].clone();
            for c in 0..4 {
                m[col][c] = &m[col][c] / &p;
            }
            rhs[col] = &rhs[col] / &p;
            for r in 0..4 {
                if r != col && !m[r][col].is_zero() {
                    let f = m[r][col].clone();
                    for c in 0..4 {
                        let t = &f * &m[col][c];
                        m[r][c] -= t;
                    }
                    let t = &f * &rhs[col];
                    rhs[r] -= t;
                }
            }
        }
        Some(Golden(rhs))
    }

    /// Rational enclosure `[lo, hi]` of the value, with `s` in `bracket`.
    fn enclose(&self, bracket: &(Q, Q)) -> (Q, Q) {
        let (slo, shi) = bracket;
        let mut lo = self.0[0].clone();
        let mut hi = self.0[0].clone();
        let (mut plo, mut phi) = (Q::one(), Q::one());
        for k in 1..4 {
            plo = &plo * slo;
            phi = &phi * shi;
            let c = &self.0[k];
            if c.is_negative() {
                lo += c * &phi;
                hi += c * &plo;
            } else {
                lo += c * &plo;
                hi += c * &phi;
            }
        }
        (lo, hi)
    }

    pub fn signum_exact(&self) -> Ordering {
        if self.is_zero() {
            return Ordering::Equal;
        }
        let mut bits = 128;
        loop {
            let (lo, hi) = self.enclose(&s_bracket(bits));
            if lo.is_positive() {
                return Ordering::Greater;
            }
            if hi.is_negative() {
                return Ordering::Less;
            }
            bits *= 2;
        }
    }

    /// Decimal expansion with `digits` places after the point, truncated toward zero.
    pub fn to_decimal(&self, digits: usize) -> String {
        let bits = (digits as f64 * 3.33) as u64 + 64;
        let (lo, hi) = self.enclose(&s_bracket(bits));
        let mid = (lo + hi) / Q::from_integer(2.into());
        decimal(&mid, digits)
    }
}

fn decimal(x: &Q, digits: usize) -> String {
    let scale = BigInt::from(10).pow(digits as u32);
    let v = (x * Q::from_integer(scale.clone())).trunc().to_integer();
    let neg = v.is_negative();
    let v = v.abs();
    let int = &v / &scale;
    let frac = (&v % &scale).to_string();
    format!("{}{}.{}{}", if neg { "-" } else { "" }, int, "0".repeat(digits - frac.len()), frac)
}

/// Rational interval around `sqrt(phi)` of width below `2^-bits`.
fn s_bracket(bits: u64) -> (Q, Q) {
    static CACHE: OnceLock<std::sync::Mutex<Vec<(u64, (Q, Q))>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some((_, b)) = cache.lock().unwrap().iter().find(|(b, _)| *b >= bits) {
        return b.clone();
    }
    // x^4 - x^2 - 1 is increasing on [1, 2]
    let p = |x: &Q| {
        let x2 = x * x;
        &x2 * &x2 - &x2 - Q::one()
    };
    let (mut lo, mut hi) = (Q::one(), Q::from_integer(2.into()));
    let two = Q::from_integer(2.into());
    for _ in 0..bits {
        let mid = (&lo + &hi) / &two;
        if p(&mid).is_negative() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    cache.lock().unwrap().push((bits, (lo.clone(), hi.clone())));
    (lo, hi)
}

impl fmt::Debug for Golden {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Golden {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names = ["", "s", "s^2", "s^3"];
        let mut any = false;
        for (c, n) in self.0.iter().zip(names) {
            if c.is_zero() {
                continue;
            }
            if any {
                write!(f, " + ")?;
            }
            any = true;
            match n {
                "" => write!(f, "{}", fmt_q(c))?,
                _ if c.is_one() => write!(f, "{n}")?,
                _ => write!(f, "({}){n}", fmt_q(c))?,
            }
        }
        if !any {
            write!(f, "0")?;
        }
        Ok(())
    }
}

impl Add for Golden {
    type Output = Golden;
    fn add(self, o: Golden) -> Golden {
        let [a, b, c, d] = self.0;
        let [e, f, g, h] = o.0;
        Golden([a + e, b + f, c + g, d + h])
    }
}

impl Sub for Golden {
    type Output = Golden;
    fn sub(self, o: Golden) -> Golden {
        self + (-o)
    }
}

impl Neg for Golden {
    type Output = Golden;
    fn neg(self) -> Golden {
        let [a, b, c, d] = self.0;
        Golden([-a, -b, -c, -d])
    }
}

impl Mul for Golden {
    type Output = Golden;
    fn mul(self, o: Golden) -> Golden {
        let mut p: [Q; 7] = std::array::from_fn(|_| Q::zero());
        for i in 0..4 {
            if self.0[i].is_zero() {
                continue;
            }
            for j in 0..4 {
                p[i + j] += &self.0[i] * &o.0[j];
            }
        }
        // s^k = s^(k-2) + s^(k-4) for k >= 4
        for k in (4..7).rev() {
            let c = std::mem::take(&mut p[k]);
            p[k - 2] += &c;
            p[k - 4] += c;
        }
        Golden([p[0].clone(), p[1].clone(), p[2].clone(), p[3].clone()])
    }
}

impl Div for Golden {
    type Output = Golden;
    fn div(self, o: Golden) -> Golden {
        self * o.inv().expect("division by zero in Q(sqrt phi)")
    }
}

impl Rem for Golden {
    type Output = Golden;
    /// Exact division leaves no remainder in a field.
    fn rem(self, _o: Golden) -> Golden {
        Golden::zero()
    }
}

impl Zero for Golden {
    fn zero() -> Self {
        Golden::from_q(Q::zero())
    }
    fn is_zero(&self) -> bool {
        self.0.iter().all(Zero::is_zero)
    }
}

impl One for Golden {
    fn one() -> Self {
        Golden::from_q(Q::one())
    }
}

impl Num for Golden {
    type FromStrRadixErr = num_rational::ParseRatioError;
    fn from_str_radix(s: &str, radix: u32) -> Result<Self, Self::FromStrRadixErr> {
        Q::from_str_radix(s, radix).map(Golden::from_q)
    }
}

impl PartialOrd for Golden {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some((self.clone() - o.clone()).signum_exact())
    }
}

impl Signed for Golden {
    fn abs(&self) -> Self {
        if self.is_negative() {
            -self.clone()
        } else {
            self.clone()
        }
    }
    fn abs_sub(&self, o: &Self) -> Self {
        if self <= o {
            Golden::zero()
        } else {
            self.clone() - o.clone()
        }
    }
    fn signum(&self) -> Self {
        match self.signum_exact() {
            Ordering::Less => -Golden::one(),
            Ordering::Equal => Golden::zero(),
            Ordering::Greater => Golden::one(),
        }
    }
    fn is_positive(&self) -> bool {
        self.signum_exact() == Ordering::Greater
    }
    fn is_negative(&self) -> bool {
        self.signum_exact() == Ordering::Less
    }
}

impl Scalar for Golden {
    fn from_i64(v: i64) -> Self {
        Golden::from_q(Q::from_integer(v.into()))
    }
    fn as_f64(&self) -> f64 {
        let (lo, hi) = self.enclose(&s_bracket(128));
        to_f64(&((lo + hi) / Q::from_integer(2.into())))
    }
    fn near_zero(&self) -> bool {
        self.is_zero()
    }
    fn nonneg(&self) -> bool {
        !self.is_negative()
    }
}

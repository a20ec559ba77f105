//! Symmetric randomized dependent rounding by pairwise moves.

use rand::Rng;

use crate::error::{Error, Result};
use crate::num::Scalar;

#[derive(Clone, Debug)]
pub struct SrdrOutput<T> {
    pub x: Vec<T>,
    pub fractional_count: usize,
}

fn is_frac<T: Scalar>(v: &T) -> bool {
    !v.near_zero() && !(T::one() - v.clone()).near_zero()
}

/// Snap values within tolerance of 0 or 1 (a no-op for exact types).
fn snap<T: Scalar>(v: T) -> T {
    if v.near_zero() {
        T::zero()
    } else if (T::one() - v.clone()).near_zero() {
        T::one()
    } else {
        v
    }
}

/// Largest step `lam >= 0` such that `x + lam * dir` stays in `[0,1]`, where
/// `dir` is `1/a` (sign > 0) or `-1/a` (sign < 0).
fn room<T: Scalar>(x: &T, a: &T, up: bool) -> T {
    let inc = (a.is_positive()) == up;
    let mag = a.abs();
    if inc {
        (T::one() - x.clone()) * mag
    } else {
        x.clone() * mag
    }
}

/// Rounds `x` in `[0,1]^n` so that `sum a_i X_i` is preserved, every marginal
/// is preserved in expectation, and at most `t` entries stay fractional.
pub fn srdr<T: Scalar, Rn: Rng + ?Sized>(x: &[T], a: &[T], t: usize, rng: &mut Rn) -> Result<SrdrOutput<T>> {
    if t < 1 {
        return Err(Error::Arg("t must be at least 1".into()));
    }
    if x.len() != a.len() {
        return Err(Error::Arg("x and a differ in length".into()));
    }
    if x.iter().any(|v| !v.nonneg() || !(T::one() - v.clone()).nonneg()) {
        return Err(Error::Arg("x outside [0,1]".into()));
    }
    let mut x: Vec<T> = x.iter().cloned().map(snap).collect();
    // zero weights never touch the sum
    for i in 0..x.len() {
        if a[i].is_zero() && is_frac(&x[i]) {
            let p = x[i].as_f64();
            x[i] = if rng.gen::<f64>() < p { T::one() } else { T::zero() };
        }
    }
    let mut frac: Vec<usize> = (0..x.len()).filter(|&i| is_frac(&x[i])).collect();
    while frac.len() > t {
        let u = rng.gen_range(0..frac.len());
        let mut v = rng.gen_range(0..frac.len() - 1);
        if v >= u {
            v += 1;
        }
        let (i, j) = (frac[u], frac[v]);
        // direction (+1/a_i, -1/a_j)
        let l1 = {
            let ri = room(&x[i], &a[i], true);
            let rj = room(&x[j], &a[j], false);
            if ri < rj { ri } else { rj }
        };
        let l2 = {
            let ri = room(&x[i], &a[i], false);
            let rj = room(&x[j], &a[j], true);
            if ri < rj { ri } else { rj }
        };
        let tot = l1.clone() + l2.clone();
        let p_up = (l2.clone() / tot).as_f64();
        let lam = if rng.gen::<f64>() < p_up { l1 } else { -l2 };
        x[i] = snap(x[i].clone() + lam.clone() / a[i].clone());
        x[j] = snap(x[j].clone() - lam / a[j].clone());
        frac.retain(|&k| is_frac(&x[k]));
    }
    let fractional_count = x.iter().filter(|v| is_frac(*v)).count();
    Ok(SrdrOutput { x, fractional_count })
}

/// `t = ceil(log(1 + 1/eps) / log(1 + eps))`.
pub fn t_from_eps(eps: f64) -> Result<usize> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::Arg(format!("eps must be positive, got {eps}")));
    }
    Ok(((1.0 + 1.0 / eps).ln() / (1.0 + eps).ln()).ceil().max(1.0) as usize)
}

/// Smallest `eps` with `(1+eps)^t >= 1 + 1/eps`.
pub fn eps_from_t(t: usize) -> f64 {
    let ok = |e: f64| (t as f64) * (1.0 + e).ln() >= (1.0 + 1.0 / e).ln();
    let (mut lo, mut hi) = (1e-12f64, 1e6f64);
    for _ in 0..200 {
        let mid = (lo * hi).sqrt();
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::{q, qi, Q};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn integral_unchanged() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let x = vec![qi(0), qi(1), qi(1), qi(0)];
        let a = vec![qi(3), qi(-1), qi(2), qi(0)];
        let out = srdr(&x, &a, 1, &mut rng).unwrap();
        assert_eq!(out.x, x);
        assert_eq!(out.fractional_count, 0);
    }

    #[test]
    fn two_halves() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = vec![q(1, 2), q(1, 2)];
        let a = vec![qi(1), qi(1)];
        let mut first = 0;
        for _ in 0..4000 {
            let out = srdr(&x, &a, 1, &mut rng).unwrap();
            assert!(out.x == vec![qi(1), qi(0)] || out.x == vec![qi(0), qi(1)]);
            if out.x[0] == qi(1) {
                first += 1;
            }
        }
        assert!((first as f64 / 4000.0 - 0.5).abs() < 0.04);
    }

    #[test]
    fn t_zero_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(srdr(&[0.5f64], &[1.0], 0, &mut rng).is_err());
    }

    #[test]
    fn eps_t_relation() {
        assert_eq!(t_from_eps(0.1).unwrap(), 26);
        let e = eps_from_t(26);
        assert!(e <= 0.1 + 1e-9 && 26.0 * (1.0 + e).ln() >= (1.0 + 1.0 / e).ln() - 1e-12);
        assert!(t_from_eps(0.0).is_err());
    }

    #[test]
    fn exact_sum_rational() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..200 {
            let n = 12;
            let x: Vec<Q> = (0..n).map(|_| q(rng.gen_range(0..=7), 7)).collect();
            let a: Vec<Q> = (0..n).map(|_| qi(rng.gen_range(-2..=5))).collect();
            let s0: Q = x.iter().zip(&a).map(|(x, a)| x * a).sum();
            let out = srdr(&x, &a, 2, &mut rng).unwrap();
            let s1: Q = out.x.iter().zip(&a).map(|(x, a)| x * a).sum();
            assert_eq!(s0, s1);
            assert!(out.fractional_count <= 2);
        }
    }
}

//! The program bounding every integral solution of the golden family:
//! minimise `f` over `{x in [0,1]^3 : r_B x_A + r_B x_B + r_C x_C = rhs}`.

use serde::Serialize;

use super::golden::Constants;
use crate::num::Scalar;

/// Fractions of `A`, `B`, `C` opened and of the `A`-`B` pairs by state.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolutionProfile<T> {
    pub x_a: T,
    pub x_b: T,
    pub x_c: T,
    pub x00: T,
    pub x01: T,
    pub x10: T,
    pub x11: T,
}

impl<T: Scalar> SolutionProfile<T> {
    /// The profile with the fewest closed pairs for the given marginals.
    pub fn from_marginals(x_a: T, x_b: T, x_c: T) -> Self {
        let one = T::one();
        let slack = one.clone() - x_a.clone() - x_b.clone();
        let x00 = if slack > T::zero() { slack } else { T::zero() };
        let x11 = x_a.clone() + x_b.clone() - one + x00.clone();
        SolutionProfile {
            x10: x_a.clone() - x11.clone(),
            x01: x_b.clone() - x11.clone(),
            x_a,
            x_b,
            x_c,
            x00,
            x11,
        }
    }

    pub fn map<U>(&self, f: impl Fn(&T) -> U) -> SolutionProfile<U> {
        SolutionProfile {
            x_a: f(&self.x_a),
            x_b: f(&self.x_b),
            x_c: f(&self.x_c),
            x00: f(&self.x00),
            x01: f(&self.x01),
            x10: f(&self.x10),
            x11: f(&self.x11),
        }
    }
}

/// `l + 2(1-x_C)(1-l x_A) + 2al(1-x_B) + 2a max(1-x_B-x_A, 0)`.
pub fn objective<T: Scalar>(c: &Constants<T>, x_a: &T, x_b: &T, x_c: &T) -> T {
    let one = T::one();
    let two = T::from_i64(2);
    let l = &c.ell;
    let slack = one.clone() - x_a.clone() - x_b.clone();
    let slack = if slack > T::zero() { slack } else { T::zero() };
    l.clone()
        + two.clone() * (one.clone() - x_c.clone()) * (one.clone() - l.clone() * x_a.clone())
        + two.clone() * c.a.clone() * l.clone() * (one - x_b.clone())
        + two * c.a.clone() * slack
}

#[derive(Clone, Debug, Serialize)]
pub struct Vertex<T> {
    pub profile: SolutionProfile<T>,
    pub value: T,
}

/// Vertices of the plane section with right-hand side `rhs`, in a fixed
/// order (edges of the cube by free coordinate, then by the fixed corner).
pub fn extreme_points_rhs<T: Scalar>(c: &Constants<T>, rhs: &T) -> Vec<Vertex<T>> {
    let w = [c.r_b.clone(), c.r_b.clone(), c.r_c.clone()];
    let mut pts: Vec<[T; 3]> = Vec::new();
    for free in 0..3 {
        let fixed: Vec<usize> = (0..3).filter(|&i| i != free).collect();
        for corner in 0..4 {
            let mut x: [T; 3] = std::array::from_fn(|_| T::zero());
            let mut rest = rhs.clone();
            for (bit, &i) in fixed.iter().enumerate() {
                if corner >> bit & 1 == 1 {
                    x[i] = T::one();
                    rest = rest - w[i].clone();
                }
            }
            if w[free].is_zero() {
                continue;
            }
            x[free] = rest / w[free].clone();
            if x[free] >= T::zero() && x[free] <= T::one() && !pts.contains(&x) {
                pts.push(x);
            }
        }
    }
    pts.into_iter()
        .map(|[xa, xb, xc]| Vertex {
            value: objective(c, &xa, &xb, &xc),
            profile: SolutionProfile::from_marginals(xa, xb, xc),
        })
        .collect()
}

pub fn extreme_points<T: Scalar>(c: &Constants<T>) -> Vec<Vertex<T>> {
    extreme_points_rhs(c, &T::one())
}

/// Minimum of the objective when `surplus_frac = C(k)/k` extra facilities
/// may be opened. `None` when the relaxed plane misses the cube.
pub fn gap_lower_bound<T: Scalar>(c: &Constants<T>, surplus_frac: &T) -> Option<T> {
    let rhs = T::one() + surplus_frac.clone();
    extreme_points_rhs(c, &rhs)
        .into_iter()
        .map(|v| v.value)
        .fold(None, |m: Option<T>, v| match m {
            Some(m) if m <= v => Some(m),
            _ => Some(v),
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gap::field::Golden;
    use num_traits::{One, Zero};

    #[test]
    fn exact_vertices() {
        let c = Constants::exact();
        let vs = extreme_points(&c);
        assert_eq!(vs.len(), 5);
        let sq = Golden::s();
        let min = vs.iter().map(|v| v.value.clone()).fold(vs[0].value.clone(), |a, b| if b < a { b } else { a });
        assert_eq!(min, sq);
        assert_eq!(vs.iter().filter(|v| v.value == sq).count(), 4);
        for v in &vs {
            let p = &v.profile;
            let plane = c.r_b.clone() * p.x_a.clone() + c.r_b.clone() * p.x_b.clone() + c.r_c.clone() * p.x_c.clone();
            assert_eq!(plane, Golden::one());
            let frac = [&p.x_a, &p.x_b, &p.x_c].iter().filter(|x| !x.is_zero() && !x.is_one()).count();
            assert!(frac <= 1);
        }
    }

    #[test]
    fn open_everything() {
        let c = Constants::exact();
        let surplus = c.r_b.clone() + c.r_b.clone() + c.r_c.clone() - Golden::one();
        assert_eq!(gap_lower_bound(&c, &surplus).unwrap(), c.ell);
    }
}

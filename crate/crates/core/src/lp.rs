//! Thin dense-row LP layer over the `minilp` simplex solver.

use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Cmp {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Debug)]
pub struct LpProblem {
    pub maximize: bool,
    /// `(objective coefficient, lower bound, upper bound)`
    pub vars: Vec<(f64, f64, f64)>,
    pub rows: Vec<(Vec<(usize, f64)>, Cmp, f64)>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    /// The solver panicked or returned a non-finite value.
    Failed,
}

#[derive(Clone, Debug)]
pub struct LpSolution {
    pub status: LpStatus,
    pub value: f64,
    pub x: Vec<f64>,
}

impl LpProblem {
    pub fn new(maximize: bool) -> Self {
        LpProblem { maximize, vars: Vec::new(), rows: Vec::new() }
    }

    pub fn var(&mut self, obj: f64, lo: f64, hi: f64) -> usize {
        self.vars.push((obj, lo, hi));
        self.vars.len() - 1
    }

    pub fn row(&mut self, coeffs: Vec<(usize, f64)>, cmp: Cmp, rhs: f64) {
        self.rows.push((coeffs, cmp, rhs));
    }
}

pub fn solve_lp(p: &LpProblem) -> LpSolution {
    let run = || {
        use minilp::{ComparisonOp, OptimizationDirection, Problem};
        let dir = if p.maximize { OptimizationDirection::Maximize } else { OptimizationDirection::Minimize };
        let mut prob = Problem::new(dir);
        let vars: Vec<_> = p.vars.iter().map(|&(c, lo, hi)| prob.add_var(c, (lo, hi))).collect();
        for (coeffs, cmp, rhs) in &p.rows {
            let expr: Vec<_> = coeffs.iter().filter(|(_, c)| *c != 0.0).map(|&(i, c)| (vars[i], c)).collect();
            let op = match cmp {
                Cmp::Le => ComparisonOp::Le,
                Cmp::Ge => ComparisonOp::Ge,
                Cmp::Eq => ComparisonOp::Eq,
            };
            prob.add_constraint(expr.as_slice(), op, *rhs);
        }
        match prob.solve() {
            Ok(sol) => {
                let x: Vec<f64> = vars.iter().map(|v| *sol.var_value(*v)).collect();
                LpSolution { status: LpStatus::Optimal, value: sol.objective(), x }
            }
            Err(minilp::Error::Infeasible) => LpSolution { status: LpStatus::Infeasible, value: f64::NAN, x: Vec::new() },
            Err(minilp::Error::Unbounded) => LpSolution { status: LpStatus::Unbounded, value: f64::NAN, x: Vec::new() },
        }
    };
    match std::panic::catch_unwind(std::panic::AssertUnwindSafe(run)) {
        Ok(s) if s.status != LpStatus::Optimal || s.value.is_finite() => s,
        // minilp reports some unbounded problems as an infinite optimum
        Ok(s) if s.value.is_infinite() && (s.value > 0.0) == p.maximize => LpSolution { status: LpStatus::Unbounded, value: f64::NAN, x: Vec::new() },
        _ => LpSolution { status: LpStatus::Failed, value: f64::NAN, x: Vec::new() },
    }
}

//! The golden integrality-gap family and its lower-bound program.

pub mod brute;
pub mod field;
pub mod golden;
pub mod vertices;

pub use brute::{binom, brute_force_opt, BruteResult};
pub use field::Golden;
pub use golden::{build_golden, metric_closure, Constants, GoldenConstants, GoldenInstance, Node};
pub use vertices::{extreme_points, extreme_points_rhs, gap_lower_bound, objective, SolutionProfile, Vertex};

//! Rigorous upper bounds on the factor-revealing program and point checks.

pub mod bnb;
pub mod enclose;
pub mod interval;
pub mod model;

pub use bnb::{audit_certificate, branch_and_bound, timed, BoxNode, LeafRecord, read_certificate, write_certificate, AuditReport, BnbConfig, BoundCertificate, CertStatus};
pub use enclose::IntervalBox;
pub use interval::{Enclosure, ExpressionNode, Interval};
pub use model::{box_value, evaluate_point, point_lp, preset, relax_to_lp, GridNlp, NlpModel, PointAssignment, PointReport, DELTA};

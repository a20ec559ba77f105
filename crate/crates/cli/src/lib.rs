//! Command implementations behind the `bipoint` binary.

pub mod alg;
pub mod bound;
pub mod gap;
pub mod report;
pub mod source;
pub mod suite;

//! Bi-point rounding for k-median: instances, partitions, algorithm
//! families, dependent rounding, bounds and gap instances.

pub mod alg;
pub mod bound;
pub mod error;
pub mod gap;
pub mod instance;
pub mod lp;
pub mod num;
pub mod partition;
pub mod rounding;

pub use error::{Error, Result};

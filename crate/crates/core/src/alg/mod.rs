//! Parametrized algorithm family over the facility partition.

pub mod chains;
pub mod cost;
pub mod exec;
pub mod expr;
pub mod spec;

//! Command-line front end for the fencelab solvers: configuration merging,
//! run execution with trace/metrics/snapshot output, PPM rendering and a
//! small benchmark matrix.

pub mod bench;
pub mod config;
pub mod render;
pub mod run;

//! Problem generators and run modes behind the `drscert` binary.

pub mod commands;
pub mod config;
pub mod problems;
pub mod rng;

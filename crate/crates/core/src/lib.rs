//! Desk-scale robot task benchmarking harness.

pub mod eval;
pub mod geometry;
pub mod pool;
pub mod results;
pub mod sim;
pub mod supervisor;
pub mod client;
pub mod agents;
pub mod batch;

//! Benchmark harness for the topometric navigation testbed: episode
//! generation, teach-run mapping, closed-loop evaluation across regimes,
//! metric aggregation, trace and plot emission.

pub mod aggregate;
pub mod config;
pub mod driver;
pub mod episode;
pub mod plot;
pub mod run;
pub mod trace;

//! Graph compression via regular partitions.
//!
//! The pipeline: partition a dense graph into classes whose pairwise
//! edge distribution is near-uniform ([`partition`]), summarize it as a
//! small density graph and expand that summary back to full size
//! ([`codec`]), and measure how much of the commute-time /
//! effective-resistance structure the round trip preserves
//! ([`metrics`]). [`synth`] provides planted benchmarks and experiment
//! grids; [`pipeline`] turns point datasets into similarity graphs and
//! orchestrates everything end to end.

pub mod codec;
pub mod graph;
pub mod io;
pub mod metrics;
pub mod partition;
pub mod pipeline;
pub mod synth;

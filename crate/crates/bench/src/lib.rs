//! Benchmarks live in `benches/`.
pub use spce_core;

//! Benchmark-only crate; see `benches/equilibria.rs`.

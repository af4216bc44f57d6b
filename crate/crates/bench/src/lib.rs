//! Benchmarks for the virtual particle engine. See `benches/complexity.rs`.

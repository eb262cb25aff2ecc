//! Benchmarks for `gamma-core`; see `benches/`.

//! Criterion benchmarks for `cpmap` live under `benches/`.

//! Criterion benchmarks for `kabe-core`; see `benches/`.

//! Criterion benchmarks for `splitrx-core` live under `benches/`.

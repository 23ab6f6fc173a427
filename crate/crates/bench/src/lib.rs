//! Criterion benchmarks for the scheduling core live under `benches/`.

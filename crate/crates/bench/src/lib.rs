//! Criterion benchmarks for `mrca-core`; see `benches/`.

//! Criterion benchmarks for the zerofid kernels; see `benches/`.

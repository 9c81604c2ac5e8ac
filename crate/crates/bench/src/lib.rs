//! Criterion benchmarks for the thresh2d kernels; see `benches/kernels.rs`.

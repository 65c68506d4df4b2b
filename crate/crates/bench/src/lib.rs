//! Benchmarks for the core kernels; see `benches/`.

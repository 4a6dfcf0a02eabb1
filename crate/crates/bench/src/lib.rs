//! Benchmarks for the charentropy kernels live in `benches/`.

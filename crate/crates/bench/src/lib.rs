//! Criterion benchmarks for the numerical kernels of `qht-core`.

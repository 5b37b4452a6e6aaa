//! Criterion benchmarks for the linear algebra kernels, the rotational
//! bootstrap and the full decomposition; see `benches/`.

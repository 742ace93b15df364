//! Criterion benchmarks for the index maps, overlap queries, refinement
//! steps and the rank test. Run with `cargo bench -p hspline-bench`.

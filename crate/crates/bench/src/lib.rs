//! Criterion benchmarks for the solver, the curvature computation and the
//! closed loop live in `benches/`. Run them with `cargo bench -p rtmpc-bench`.

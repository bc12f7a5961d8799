//! Benchmarks only; see `benches/kernels.rs`. Run with `cargo bench -p hybrid-heston-bench`.

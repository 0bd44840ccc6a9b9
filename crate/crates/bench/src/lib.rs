//! Benchmark-only crate; see `benches/hot_paths.rs`. Run with
//! `cargo bench -p wedge-bench`.

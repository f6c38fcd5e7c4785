//! Benchmark-only crate; the Criterion targets live in `benches/`.

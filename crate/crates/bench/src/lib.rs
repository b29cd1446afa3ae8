//! Benchmarks for `gaussobs`; see `benches/`.

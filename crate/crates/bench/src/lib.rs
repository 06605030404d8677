//! Criterion benchmarks for the durprobit workspace; see the `benches/`
//! targets. No library code lives here.

//! Criterion benchmarks for the `meshcog` crate; see `benches/`.

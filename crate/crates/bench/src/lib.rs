//! Criterion benchmarks for the analysis, simulator and oracle; see `benches/`.

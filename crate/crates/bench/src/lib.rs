//! Benchmark-only crate; see `benches/pipelines.rs`. The library target is
//! empty — it exists so cargo has something to attach the bench target to.

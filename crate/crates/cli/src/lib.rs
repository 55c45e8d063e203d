//! Command-line frontend for the `hypconj` toolkit: JSON config ingestion,
//! batch orchestration across the verification and conjugacy pipelines, and
//! deterministic report emission.
//!
//! The library half hosts everything the binary does apart from argument
//! parsing and filesystem placement, so the full config → report path is
//! testable in-process:
//!
//! * [`config`] — the versioned JSON schema, its validation, and construction
//!   of the certified systems it describes;
//! * [`points`] — point batches for the conjugation tasks, from CSV or a grid
//!   specification;
//! * [`tasks`] — task execution against the core pipelines;
//! * [`report`] — the run report and its deterministic JSON/CSV serialization
//!   (floats carry 17 significant digits; byte-identical for identical
//!   config and seed).

pub mod config;
pub mod points;
pub mod report;
pub mod tasks;

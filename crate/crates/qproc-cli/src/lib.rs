//! Command line companion to `qproc-core`: a small text language for
//! writing Q-matrices (`.qm` files), certificate sidecar files, a registry
//! of built-in models, method orchestration, and report formats.

pub mod analysis;
pub mod certfile;
pub mod dsl;
pub mod report;
pub mod zoo;

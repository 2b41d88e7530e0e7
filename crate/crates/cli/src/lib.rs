//! Library surface of the experiment runner, kept separate from the binary so
//! the orchestration layer is testable in process.

pub mod config;
pub mod experiment;

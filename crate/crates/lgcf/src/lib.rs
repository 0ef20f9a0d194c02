//! IO, file formats, and run drivers around `lgcf-core`: resolved run
//! configuration, the binary checkpoint format, metric reports, the
//! synthetic tree benchmark, and the train / eval / sweep / ablate
//! pipelines driven by the CLI.

pub mod checkpoint;
pub mod config;
pub mod report;
pub mod runner;
pub mod synth;

pub use checkpoint::Checkpoint;
pub use config::RunConfig;

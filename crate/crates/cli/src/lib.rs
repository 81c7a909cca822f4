//! Batch experiment driver for `rotorbit`.

pub mod config;
pub mod project;
pub mod run;

pub use config::{ConfigError, ExperimentConfig, Task};
pub use project::{project, ProjectError};
pub use run::{run, RunReport};

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const TASK_FAILED: i32 = 1;
    pub const CONFIG: i32 = 2;
    pub const MISSING_ARTIFACT: i32 = 3;
}

//! Command-line pipeline and HTTP what-if service over `newscast-core`.

pub mod cli;
pub mod config;
pub mod error;
pub mod manifest;
pub mod service;
pub mod snapshot;
pub mod whatif;

pub use error::{AppError, AppResult};

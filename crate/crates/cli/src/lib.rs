//! Command-line front end and HTTP service over `storyline-core`.

pub mod cli;
pub mod commands;
pub mod service;

pub use cli::Cli;
pub use commands::run;

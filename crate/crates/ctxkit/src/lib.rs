//! File formats, property suites and the command-line front end over `ctxkit-core`.

pub mod cli;
pub mod json;
pub mod schema;
pub mod suite;

pub use ctxkit_core as core;

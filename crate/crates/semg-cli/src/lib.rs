//! Library surface of the `semg` binary, split out so integration tests can
//! drive handlers and fixtures directly.

pub mod commands;
pub mod envelope;
pub mod formats;
pub mod reproduce;

pub use commands::run_main;

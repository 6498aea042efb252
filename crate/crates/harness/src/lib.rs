//! Command-line entry points and the live game service around `archery_core`.

pub mod commands;
pub mod config;
pub mod error;
pub mod protocol;
pub mod server;
pub mod session;

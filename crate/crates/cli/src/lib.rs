//! Configuration, artifact caching and command implementations for the `ampc` binary.

pub mod commands;
pub mod config;

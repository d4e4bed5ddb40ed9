//! Scenario files and command implementations behind the `proxy-beliefs` binary.

pub mod commands;
pub mod error;
pub mod scenario;

// SPDX-License-Identifier: MIT OR Apache-2.0

//! Pipeline behind the `attnprobe` binary.

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;
pub mod pipeline;

pub use cli::{run, Cli};

//! Document characterization by semantic flow: corpus IO, stage caching,
//! exports and the pipeline behind the `semflow` command.
//!
//! The algorithms live in [`semflow_core`], re-exported here as [`core`].

pub use semflow_core as core;

pub mod cache;
pub mod config;
pub mod demo;
mod error;
pub mod format;
pub mod io;
pub mod manifest;
pub mod pipeline;
pub mod report;

pub use error::{Error, Result};

//! File formats, parallel drivers and the `revising` command-line tool built
//! on [`revising_core`].

pub mod bench;
pub mod cli;
pub mod config;
mod error;
pub mod formats;
pub mod parallel;

pub use error::{Error, Result};
pub use revising_core as core;

//! Standard-library companion to `jacobnet-core`: CSV and JSON dataset
//! files, workspace grid files, model files, wall-clock timing, parallel
//! drivers and the `jacobnet` command line.

pub mod bench;
pub mod cli;
pub mod csvio;
pub mod datasets;
pub mod error;
pub mod grid;
pub mod training;

pub use error::{Error, Result};

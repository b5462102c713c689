//! File formats, reports and the `fairchain` command line built on
//! [`fairchain_core`].
//!
//! * [`ingest`] reads the standard score CSV and the UCI German Credit file,
//!   writes score CSVs, and equalizes group sizes.
//! * [`report`] renders audit and headroom results as markdown or CSV.
//! * [`cli`] parses flags and runs the `audit`, `fix`, `headroom`, `synth` and
//!   `curve` subcommands.
#![warn(missing_debug_implementations, rust_2018_idioms)]

pub mod cli;
mod error;
pub mod ingest;
pub mod report;

pub use error::{Error, Result};

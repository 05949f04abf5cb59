//! Experiment harness for apple-tasting online classification: file
//! formats, parallel experiment drivers and the `appletaste` command line.

pub mod cli;
pub mod error;
pub mod experiments;
pub mod formats;

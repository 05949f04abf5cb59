//! Online binary classification under apple-tasting feedback.
//!
//! The learner only sees the true label on rounds where it predicts `1`.
//! This crate computes the combinatorial dimensions that govern that setting
//! (Littlestone dimension, Apple Littlestone dimension per width, effective
//! width) exactly on finite hypothesis classes, implements the learners whose
//! mistake and regret guarantees are stated in terms of those dimensions, and
//! builds the hard realizable streams used to lower-bound any learner.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, experiment
//! drivers and the command-line front end live in the `appletaste` crate.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod adversary;
pub mod dimensions;
mod error;
pub mod hypothesis;
pub mod learners;
pub mod protocol;
pub mod rngs;
pub mod stats;

pub use error::{Error, Result};
pub use hypothesis::{HypothesisClass, Instance, Label, LabeledStream, Members, VersionSpace};

/// Version of this crate, recorded in experiment manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

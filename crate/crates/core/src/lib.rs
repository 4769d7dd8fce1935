//! Unsourced random access with coded compressed sensing.
//!
//! Each active user splits a payload over the information sections of an
//! outer tree code, appends parity sections, maps every section to a one-hot
//! block and transmits the block-sparse vector through a partial Hadamard
//! matrix. The receiver runs AMP on the superposition; in the enhanced mode
//! the tree code feeds section priors back into the AMP denoiser at every
//! iteration. A final prune-and-stitch pass turns the AMP output into a list
//! of payloads.

pub mod amp;
pub mod bits;
pub mod config;
pub mod decoder;
pub mod error;
pub mod report;
pub mod sensing;
pub mod sim;
pub mod sparse;
pub mod tree;

pub use error::{Error, Result};

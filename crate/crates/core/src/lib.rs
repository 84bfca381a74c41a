//! XOR-fold privacy amplification for classical key-distribution schemes.
//!
//! * [`math`] plans how many fold iterations reach a target eavesdropper
//!   probability and evaluates the per-bit leak.
//! * [`bits`] holds the packed bit strings and the fold pipeline.
//! * [`sim`] is a Monte-Carlo model of raw-bit exchange, sifting and a passive eavesdropper.
//! * [`analysis`] reduces simulation output and reproduces the scheme table.
//! * [`keyfile`] and [`cli`] are the command-line surface.

pub mod analysis;
pub mod bits;
pub mod cli;
pub mod error;
pub mod keyfile;
pub mod math;
pub mod sim;

pub use bits::{distill, fold_times, xor_fold, BitString, KeyRequest};
pub use error::{Error, Result};
pub use math::{Epsilon, Excess, FoldCount, GuessProbability, LeakFraction, PlanResult};

#![cfg_attr(not(test), no_std)]
// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

//! Audio-visual vowel graph attention regression of dysarthria severity.
//!
//! This crate holds everything that does not touch the filesystem: the
//! acoustic and lip feature estimators, vowel-group sample construction,
//! GMM vowel detection, the graph attention network with its reverse-mode
//! gradient engine, the training and cross-validation loop, and the
//! severity-controlled synthetic corpus used to verify all of the above.
//!
//! File formats, the command line and everything else that needs `std`
//! live in the companion `vgan` crate.

extern crate alloc;

pub mod augment;
pub mod config;
pub mod dsp;
mod error;
pub mod extract;
pub mod fft;
pub mod gmm;
pub mod linalg;
pub mod lip;
pub mod model;
pub mod nn;
pub mod papi;
pub mod rng;
pub mod segment;
pub mod synth;
pub mod train;

pub use error::{Error, Result};
pub use model::{
    FdaTarget, SeverityBand, SyllableObservation, TargetKind, VowelClass, VowelGroup,
};

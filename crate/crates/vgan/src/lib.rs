//! File formats, pipeline stages and the `vgan` command line on top of
//! `vgan-core`.

pub mod cli;
mod error;
pub mod io;
pub mod pipeline;

pub use error::{Error, Result};

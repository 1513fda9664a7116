//! Network definition and its gradient engine.

pub mod autodiff;
pub mod vgan;

pub use vgan::{mse_loss, ForwardTrace, Gradients, NamedArray, Sample, Standardization, VgaOutput, VganConfig, VganModel};

//! Hybrid complex/real 1-D convolutional networks on DFT spectra.

pub mod cli;
pub mod cvconv;
pub mod dsp;
pub mod error;
pub mod features;
pub mod harness;
pub mod model;
pub mod realnet;
pub mod simgen;
pub mod tensor;

pub use error::{Error, Result};

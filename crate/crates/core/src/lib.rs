//! Mel and Bark perceptual filter banks built from windowed-sinc FIR filters.
//!
//! The crate covers the whole offline flow for a thirteen-band hardware bank:
//!
//! - [`scales`]: Hz <-> Mel / Bark warping.
//! - [`bank_layout`]: the built-in band tables, their validator, and
//!   triangular perceptual banks.
//! - [`fir_design`]: Bartlett / Hamming windowed-sinc bandpass design and
//!   frequency responses.
//! - [`quant_coe`]: fixed-point quantization, `.coe` coefficient files and
//!   accumulator bit growth.
//! - [`sim_engine`]: DDS stimulus, summing-bank simulation (floating and
//!   integer datapaths) and bank comparison.

pub mod bank_layout;
mod error;
pub mod fir_design;
pub mod quant_coe;
pub mod scales;
pub mod sim_engine;

pub use error::{Error, Result};

pub use bank_layout::{BandSpec, BankPreset, ScaleKind, TriangularBank};
pub use fir_design::{FirFilter, FrequencyResponse, WindowKind};
pub use quant_coe::{CoeDocument, FixedPointFormat, QuantizedFilter, Radix};
pub use sim_engine::{BankComparison, BankRunResult, DdsConfig, Signal};

//! Sparse Fourier transform for multidimensional signals using fully
//! projected lines.
//!
//! A `D`-dimensional signal that is a sum of `K` complex sinusoids is
//! recovered from a few 1-D lines through its sample grid. See the crate
//! README for the command-line front end.

pub mod baseline;
pub mod decoder;
pub mod driver;
pub mod error;
pub mod imaging;
pub mod lines;
pub mod numtheory;
pub mod oracle;
pub mod pgm;
pub mod selftest;
pub mod shape;
pub mod source;
pub mod spectrum;
pub mod transform;

pub use baseline::baseline_sft;
pub use driver::{fps_sft, fps_sft_observed, FpsSft, FpsSftConfig, RecoveryReport, SubtractionPath, Termination};
pub use error::{Error, Result};
pub use pgm::GrayImage;
pub use shape::CubeShape;
pub use source::{DenseCube, SignalSource, SyntheticSource};
pub use spectrum::{FreqIndex, Sinusoid, SparseSpectrum};

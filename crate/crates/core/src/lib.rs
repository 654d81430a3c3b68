//! Packed homomorphic-encryption linear algebra for two-party private inference.
//!
//! The crate implements the linear-layer kernels of an HE + secret-sharing
//! inference pipeline and counts every homomorphic primitive they issue:
//!
//! * matrix-vector products: naive row encoding, diagonal encoding, the hybrid
//!   diagonal/rotate-and-sum method, and row-encoding with share-side
//!   rotate-and-sum ([`mv`]);
//! * convolutions: raster-scan SISO, output-rotation MIMO and kernel-grouping
//!   MIMO ([`conv`]);
//! * closed-form operation counts, noise predictions and cost estimates
//!   ([`analytics`]) that the executed schemes are checked against.
//!
//! Ciphertexts come from a functional mock backend ([`he`]) that carries exact
//! payloads, a scalar noise level and a shared [`he::CostMeter`]. Everything
//! here is `no_std` + `alloc`; file formats, the profiler and the CLI live in
//! the companion `gala` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod analytics;
pub mod conv;
mod error;
pub mod he;
pub mod mv;
pub mod oracle;
pub mod ring;
pub mod sharing;

pub use analytics::{ConvScheme, ConvShape, CountView, MvScheme, OpCounts};
pub use error::{Error, Result};
pub use he::{CostMeter, CostModel, HeBackend, HeParams, MockBackend, MockCiphertext};
pub use ring::SlotVector;

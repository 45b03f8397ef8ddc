//! Simulation and detection for bidirectional molecular relaying over
//! diffusion channels.
//!
//! Two end nodes `A` and `B` exchange on-off keyed symbols through a
//! decode-and-forward relay `R` that broadcasts the XOR of its two hard
//! decisions. Each end node also hears the other one directly over a weak
//! diffusion link. The crate provides:
//!
//! - [`channel`]: Fick's-law impulse response, FIR tap sampling,
//!   signal-dependent Gaussian noise and link SNR.
//! - [`relay`]: threshold detection and network coding at the relay.
//! - [`detectors`]: the destination-side detectors (fixed threshold,
//!   DFE + threshold, and DFE + approximate ML combining of both paths).
//! - [`montecarlo`]: the end-to-end three-node timeline and BER estimation.
//! - [`experiment`]: configuration files, sweeps and CSV output.

pub mod channel;
pub mod detectors;
pub mod error;
pub mod experiment;
pub mod montecarlo;
pub mod relay;

pub use error::{Error, Result};

/// A hard binary symbol, always `0` or `1`.
pub type Bit = u8;

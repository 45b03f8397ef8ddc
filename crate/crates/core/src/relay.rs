//! Decode-and-forward relay: per-link hard threshold decisions that treat
//! ISI as noise, followed by XOR network coding.

use crate::channel::ChannelTaps;
use crate::{Bit, Error, Result};

/// Relay thresholds for the two incoming links.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelayConfig {
    /// Threshold on the `A -> R` link.
    pub gamma_a: f64,
    /// Threshold on the `B -> R` link.
    pub gamma_b: f64,
}

impl RelayConfig {
    pub fn new(gamma_a: f64, gamma_b: f64) -> Result<Self> {
        for (field, g) in [("gamma_a", gamma_a), ("gamma_b", gamma_b)] {
            if !(g.is_finite() && g >= 0.0) {
                return Err(Error::invalid(field, format!("must be finite and >= 0, got {g}")));
            }
        }
        Ok(RelayConfig { gamma_a, gamma_b })
    }

    /// Half of each incoming link's first tap.
    pub fn half_first_tap(taps_a: &ChannelTaps, taps_b: &ChannelTaps) -> Self {
        RelayConfig {
            gamma_a: taps_a.first() / 2.0,
            gamma_b: taps_b.first() / 2.0,
        }
    }
}

/// `1` iff `y > gamma`.
#[inline]
pub fn relay_detect(y: f64, gamma: f64) -> Bit {
    Bit::from(y > gamma)
}

#[inline]
pub fn relay_encode(x_a_hat: Bit, x_b_hat: Bit) -> Bit {
    (x_a_hat ^ x_b_hat) & 1
}

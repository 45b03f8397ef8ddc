//! Diffusion channel: Fick's-law impulse response, its FIR discretization,
//! and the signal-dependent Gaussian reception noise.
//!
//! All quantities are SI. Taps carry the concentration units of the
//! continuous response unchanged, so a link with `Q` molecules per pulse
//! has taps linear in `Q`.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::{Error, Result};

/// Physical description of one diffusion link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkParams {
    /// Molecules released per `1` pulse.
    pub q: f64,
    /// Diffusion coefficient of the emitted molecule type (m²/s).
    pub diffusion: f64,
    /// Transmitter to receiver distance (m).
    pub distance: f64,
    /// Symbol duration (s).
    pub symbol_duration: f64,
    /// Number of FIR taps kept.
    pub taps: usize,
}

impl LinkParams {
    pub fn new(q: f64, diffusion: f64, distance: f64, symbol_duration: f64, taps: usize) -> Result<Self> {
        let p = LinkParams {
            q,
            diffusion,
            distance,
            symbol_duration,
            taps,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        positive("Q", self.q)?;
        positive("D", self.diffusion)?;
        positive("d", self.distance)?;
        positive("Ts", self.symbol_duration)?;
        if self.taps == 0 {
            return Err(Error::invalid("L", "tap count must be at least 1"));
        }
        Ok(())
    }

    pub fn with_q(self, q: f64) -> Self {
        LinkParams { q, ..self }
    }

    pub fn with_symbol_duration(self, symbol_duration: f64) -> Self {
        LinkParams {
            symbol_duration,
            ..self
        }
    }

    /// Time at which the continuous response peaks, `d²/(6D)`.
    pub fn peak_time(&self) -> f64 {
        self.distance * self.distance / (6.0 * self.diffusion)
    }
}

pub(crate) fn positive(field: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(field, format!("must be finite and > 0, got {value}")))
    }
}

/// Spherical receiver of radius `r`; noise variance scales with `1/volume`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReceiverGeometry {
    radius: f64,
    volume: f64,
}

impl ReceiverGeometry {
    pub fn new(radius: f64) -> Result<Self> {
        positive("r", radius)?;
        Ok(ReceiverGeometry {
            radius,
            volume: 4.0 * PI * radius.powi(3) / 3.0,
        })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Receiver volume `rho = 4πr³/3`.
    pub fn volume(&self) -> f64 {
        self.volume
    }
}

/// The L-tap discretized impulse response of one link.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelTaps(Vec<f64>);

impl ChannelTaps {
    /// Wraps explicit tap values. Taps must be finite and nonnegative with a
    /// strictly positive first tap.
    pub fn new(taps: Vec<f64>) -> Result<Self> {
        if taps.is_empty() {
            return Err(Error::invalid("h", "at least one tap is required"));
        }
        if taps.iter().any(|h| !h.is_finite() || *h < 0.0) {
            return Err(Error::invalid("h", "taps must be finite and >= 0"));
        }
        if taps[0] <= 0.0 {
            return Err(Error::invalid("h", "first tap must be > 0"));
        }
        Ok(ChannelTaps(taps))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn first(&self) -> f64 {
        self.0[0]
    }

    /// Taps `h[1..L]`, the ISI part of the response.
    pub fn tail(&self) -> &[f64] {
        &self.0[1..]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn scaled(&self, factor: f64) -> ChannelTaps {
        ChannelTaps(self.0.iter().map(|h| h * factor).collect())
    }
}

/// Average concentration at time `t` after an impulsive release of `Q`
/// molecules at distance `d`. Zero for `t <= 0`.
pub fn fick_response(p: &LinkParams, t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let spread = 4.0 * PI * p.diffusion * t;
    p.q / (spread * spread * spread).sqrt() * (-(p.distance * p.distance) / (4.0 * p.diffusion * t)).exp()
}

/// Samples the response at the end of each slot, `h[j] = h((j + 1) Ts)`.
pub fn sample_taps(p: &LinkParams) -> Result<ChannelTaps> {
    sample_taps_at(p, 1.0)
}

/// Samples the response at `h[j] = h((j + offset) Ts)` with `offset` in `(0, 1]`.
pub fn sample_taps_at(p: &LinkParams, offset: f64) -> Result<ChannelTaps> {
    p.validate()?;
    if !(offset > 0.0 && offset <= 1.0) {
        return Err(Error::invalid(
            "sampling_offset",
            format!("must lie in (0, 1], got {offset}"),
        ));
    }
    let taps: Vec<f64> = (0..p.taps)
        .map(|j| fick_response(p, (j as f64 + offset) * p.symbol_duration))
        .collect();
    if !(taps[0] > 0.0 && taps[0].is_finite()) {
        return Err(Error::UnusableLink {
            link: "link".into(),
            diffusion: p.diffusion,
            distance: p.distance,
            symbol_duration: p.symbol_duration,
        });
    }
    ChannelTaps::new(taps)
}

/// Draws `Z ~ N(0, signal_mean / rho)`. Exactly zero for a zero mean.
pub fn noise_sample<R: Rng + ?Sized>(signal_mean: f64, geom: &ReceiverGeometry, rng: &mut R) -> f64 {
    if signal_mean <= 0.0 {
        return 0.0;
    }
    let z: f64 = StandardNormal.sample(rng);
    z * (signal_mean / geom.volume()).sqrt()
}

/// Link SNR: mean squared tap over `0.5/rho` times the tap sum.
pub fn link_snr(taps: &ChannelTaps, geom: &ReceiverGeometry) -> Result<f64> {
    let h = taps.as_slice();
    let sum: f64 = h.iter().sum();
    if sum <= 0.0 {
        return Err(Error::ZeroTaps);
    }
    let mean_square = h.iter().map(|x| x * x).sum::<f64>() / h.len() as f64;
    Ok(mean_square / (0.5 / geom.volume() * sum))
}

/// Molecule count that puts the link at `target_snr` (linear). SNR is
/// linear in `Q`, so a single rescale is exact.
pub fn q_for_target_snr(p: &LinkParams, geom: &ReceiverGeometry, target_snr: f64, offset: f64) -> Result<f64> {
    positive("target_snr", target_snr)?;
    let current = link_snr(&sample_taps_at(p, offset)?, geom)?;
    Ok(p.q * (target_snr / current))
}

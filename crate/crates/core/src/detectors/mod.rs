//! Destination-side detection.
//!
//! A destination node observes two streams per information symbol: the weak
//! direct signal from the other end node and the relay's network-coded
//! broadcast. Three detectors are provided:
//!
//! - [`DetectorKind::Fixed`]: threshold the relay signal, undo the XOR with
//!   the node's own bit. No ISI handling, direct path ignored.
//! - [`DetectorKind::DfeThreshold`]: the same after decision-feedback
//!   cancellation of relay-link ISI.
//! - [`DetectorKind::ProposedMl`]: decision-feedback on both paths, then an
//!   approximate ML combination that accounts for relay decision errors.

mod ml;
mod qfunc;

use std::fmt;
use std::str::FromStr;

pub use ml::{
    build_relay_error_model, conditional_pxr, joint_pdf, ml_decide_compact, ml_decide_general, MlDecisionParams,
    RelayErrorModel, PE_FLOOR, VARIANCE_FLOOR,
};
pub use qfunc::q_function;

use crate::channel::{ChannelTaps, ReceiverGeometry};
use crate::relay::relay_detect;
use crate::{Bit, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DetectorKind {
    Fixed,
    DfeThreshold,
    ProposedMl,
}

impl DetectorKind {
    pub const ALL: [DetectorKind; 3] = [
        DetectorKind::Fixed,
        DetectorKind::DfeThreshold,
        DetectorKind::ProposedMl,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DetectorKind::Fixed => "fixed",
            DetectorKind::DfeThreshold => "dfe_threshold",
            DetectorKind::ProposedMl => "proposed_ml",
        }
    }
}

impl fmt::Display for DetectorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DetectorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "fixed" => Ok(DetectorKind::Fixed),
            "dfe_threshold" => Ok(DetectorKind::DfeThreshold),
            "proposed_ml" => Ok(DetectorKind::ProposedMl),
            other => Err(Error::invalid(
                "detector",
                format!("unknown detector `{other}` (expected fixed, dfe_threshold or proposed_ml)"),
            )),
        }
    }
}

/// Past `L - 1` symbols known to a destination, most recent first.
///
/// `relay[i] == other[i] ^ own[i]` always holds: the relay history is
/// reconstructed from the node's own bits and its decisions on the other
/// node's bits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DetectorState {
    other: Vec<Bit>,
    own: Vec<Bit>,
    relay: Vec<Bit>,
}

impl DetectorState {
    /// All-zero histories for an `taps`-tap channel.
    pub fn new(taps: usize) -> Self {
        let n = taps.saturating_sub(1);
        DetectorState {
            other: vec![0; n],
            own: vec![0; n],
            relay: vec![0; n],
        }
    }

    /// Builds a state from explicit histories (most recent first).
    pub fn from_histories(other: Vec<Bit>, own: Vec<Bit>) -> Result<Self> {
        if other.len() != own.len() {
            return Err(Error::LengthMismatch {
                decisions: other.len(),
                truth: own.len(),
            });
        }
        if other.iter().chain(&own).any(|b| *b > 1) {
            return Err(Error::invalid("history", "entries must be 0 or 1"));
        }
        let relay = other.iter().zip(&own).map(|(d, o)| d ^ o).collect();
        Ok(DetectorState { other, own, relay })
    }

    /// Decisions on the other node's bits.
    pub fn other_history(&self) -> &[Bit] {
        &self.other
    }

    /// The node's own transmitted bits.
    pub fn own_history(&self) -> &[Bit] {
        &self.own
    }

    /// Reconstructed relay bits.
    pub fn relay_history(&self) -> &[Bit] {
        &self.relay
    }

    /// Shifts in the newest decision and own bit.
    pub fn push(&mut self, other_hat: Bit, own: Bit) {
        if self.other.is_empty() {
            return;
        }
        for (hist, bit) in [
            (&mut self.other, other_hat),
            (&mut self.own, own),
            (&mut self.relay, other_hat ^ own),
        ] {
            hist.rotate_right(1);
            hist[0] = bit;
        }
    }
}

/// Subtracts the ISI reconstructed from past decisions:
/// `y - Σ_{j=1}^{L-1} h[j] · history[j-1]`.
pub fn dfe_equalize(y: f64, taps: &ChannelTaps, history: &[Bit]) -> f64 {
    debug_assert_eq!(history.len(), taps.len() - 1);
    y - weighted_history(taps.tail(), history)
}

pub(crate) fn weighted_history(taps: &[f64], history: &[Bit]) -> f64 {
    taps.iter()
        .zip(history)
        .filter(|(_, b)| **b != 0)
        .map(|(h, _)| *h)
        .sum()
}

/// Thresholds the raw relay signal and removes the node's own bit.
pub fn detect_fixed_threshold(y_r: f64, x_0: Bit, gamma: f64) -> Bit {
    relay_detect(y_r, gamma) ^ x_0
}

/// Cancels relay-link ISI using the reconstructed relay history, then
/// thresholds and removes the node's own bit.
pub fn detect_dfe_threshold(y_r: f64, x_0: Bit, state: &DetectorState, taps_r: &ChannelTaps, gamma: f64) -> Bit {
    relay_detect(dfe_equalize(y_r, taps_r, state.relay_history()), gamma) ^ x_0
}

/// Everything one destination node knows about the channels around it.
#[derive(Debug, Clone)]
pub struct DestinationChannels {
    /// Direct link from the other end node.
    pub direct: ChannelTaps,
    /// Link from the relay.
    pub relay: ChannelTaps,
    /// The other node's link into the relay.
    pub other_to_relay: ChannelTaps,
    /// This node's own link into the relay.
    pub own_to_relay: ChannelTaps,
    /// Relay threshold applied to the other node's link.
    pub relay_gamma_other: f64,
    /// Relay threshold applied to this node's link.
    pub relay_gamma_own: f64,
    /// Threshold used by the two benchmark detectors on the relay signal.
    pub threshold: f64,
    pub geometry: ReceiverGeometry,
    /// First ISI index included in the conditional noise variances (1 or 2).
    pub variance_isi_start: usize,
}

/// A detector bound to one destination, carrying its decision feedback.
#[derive(Debug, Clone)]
pub struct Destination {
    kind: DetectorKind,
    channels: DestinationChannels,
    state: DetectorState,
}

impl Destination {
    pub fn new(kind: DetectorKind, channels: DestinationChannels) -> Self {
        let state = DetectorState::new(channels.relay.len().max(channels.direct.len()));
        Destination { kind, channels, state }
    }

    pub fn state(&self) -> &DetectorState {
        &self.state
    }

    /// Decides the other node's bit for one aligned slot and feeds the
    /// decision back.
    pub fn step(&mut self, y_d: f64, y_r: f64, x_0: Bit) -> Bit {
        let ch = &self.channels;
        let decision = match self.kind {
            DetectorKind::Fixed => detect_fixed_threshold(y_r, x_0, ch.threshold),
            DetectorKind::DfeThreshold => detect_dfe_threshold(y_r, x_0, &self.state, &ch.relay, ch.threshold),
            DetectorKind::ProposedMl => {
                let y_d_eq = dfe_equalize(y_d, &ch.direct, self.state.other_history());
                let y_r_eq = dfe_equalize(y_r, &ch.relay, self.state.relay_history());
                let model = build_relay_error_model(ch, &self.state);
                let params = MlDecisionParams::from_state(ch, &self.state, &model);
                ml_decide_general(y_d_eq, y_r_eq, x_0, &model, &params)
            }
        };
        self.state.push(decision, x_0);
        decision
    }

    /// Runs over aligned observation streams.
    pub fn run(&mut self, y_d: &[f64], y_r: &[f64], own: &[Bit]) -> Vec<Bit> {
        y_d.iter()
            .zip(y_r)
            .zip(own)
            .map(|((yd, yr), x0)| self.step(*yd, *yr, *x0))
            .collect()
    }
}

//! Approximate maximum-likelihood combining of the equalized direct and
//! relay observations.
//!
//! Past decisions stand in for the true ISI symbols, so after equalization
//! each observation is modeled as `h[0]·x + Z` with `Z` Gaussian of
//! signal-dependent variance. The relay's hard decisions are modeled by
//! per-slot error probabilities derived from its thresholds; these enter
//! the likelihood through `P(x_r | x_d, x_0)`.
//!
//! All densities are handled as logs. The ratio forms `Φ` and `Ψ` of the
//! compact rule overflow `f64` at moderate SNR otherwise.

use super::{q_function, weighted_history, DestinationChannels, DetectorState};
use crate::Bit;

/// Variance floor (squared concentration units) used when a hypothesis
/// predicts zero signal. Only applied inside density and tail evaluations.
pub const VARIANCE_FLOOR: f64 = 1e-30;

/// Lower clip on relay error probabilities and their complements.
pub const PE_FLOOR: f64 = 1e-30;

/// Error statistics the destination imputes to the relay for the current
/// slot, indexed by hypothesis `x ∈ {0, 1}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelayErrorModel {
    pub mu_rd: [f64; 2],
    pub sigma_rd: [f64; 2],
    pub mu_r0: [f64; 2],
    pub sigma_r0: [f64; 2],
    /// `Q((γ_d - μ_rd(x)) / σ_rd(x))`.
    pub g_d: [f64; 2],
    pub g_0: [f64; 2],
    /// Probability that the relay gets the other node's bit wrong.
    pub pe_d: [f64; 2],
    /// `1 - pe_d`, computed from the opposite tail rather than by
    /// subtraction.
    pub pe_d_bar: [f64; 2],
    pub pe_0: [f64; 2],
    pub pe_0_bar: [f64; 2],
}

impl RelayErrorModel {
    /// A model with given error probabilities and no Gaussian detail, for
    /// exercising the decision rules directly.
    pub fn from_probabilities(pe_d: [f64; 2], pe_0: [f64; 2]) -> Self {
        let clip = |p: f64| p.clamp(PE_FLOOR, 1.0);
        RelayErrorModel {
            mu_rd: [0.0; 2],
            sigma_rd: [0.0; 2],
            mu_r0: [0.0; 2],
            sigma_r0: [0.0; 2],
            g_d: [pe_d[0], 1.0 - pe_d[1]],
            g_0: [pe_0[0], 1.0 - pe_0[1]],
            pe_d: pe_d.map(clip),
            pe_d_bar: pe_d.map(|p| clip(1.0 - p)),
            pe_0: pe_0.map(clip),
            pe_0_bar: pe_0.map(|p| clip(1.0 - p)),
        }
    }
}

/// Per-hypothesis relay statistics for one incoming relay link.
struct RelayLinkErrors {
    mu: [f64; 2],
    sigma: [f64; 2],
    g: [f64; 2],
    pe: [f64; 2],
    pe_bar: [f64; 2],
}

fn relay_link_errors(h0: f64, isi: f64, gamma: f64, volume: f64) -> RelayLinkErrors {
    let mu = [isi, h0 + isi];
    let sigma = mu.map(|m| (m / volume).max(VARIANCE_FLOOR).sqrt());
    let z = [(gamma - mu[0]) / sigma[0], (gamma - mu[1]) / sigma[1]];
    let g = z.map(q_function);
    // x = 0 errs above gamma, x = 1 errs at or below it
    let pe = [g[0], q_function(-z[1])];
    let pe_bar = [q_function(-z[0]), g[1]];
    RelayLinkErrors {
        mu,
        sigma,
        g,
        pe: pe.map(|p| p.clamp(PE_FLOOR, 1.0)),
        pe_bar: pe_bar.map(|p| p.clamp(PE_FLOOR, 1.0)),
    }
}

/// Relay error statistics from the destination's point of view: the other
/// node's relay-link ISI is imputed from past decisions, the node's own
/// relay-link ISI is known exactly.
pub fn build_relay_error_model(ch: &DestinationChannels, state: &DetectorState) -> RelayErrorModel {
    let volume = ch.geometry.volume();
    let other = relay_link_errors(
        ch.other_to_relay.first(),
        weighted_history(ch.other_to_relay.tail(), state.other_history()),
        ch.relay_gamma_other,
        volume,
    );
    let own = relay_link_errors(
        ch.own_to_relay.first(),
        weighted_history(ch.own_to_relay.tail(), state.own_history()),
        ch.relay_gamma_own,
        volume,
    );
    RelayErrorModel {
        mu_rd: other.mu,
        sigma_rd: other.sigma,
        mu_r0: own.mu,
        sigma_r0: own.sigma,
        g_d: other.g,
        g_0: own.g,
        pe_d: other.pe,
        pe_d_bar: other.pe_bar,
        pe_0: own.pe,
        pe_0_bar: own.pe_bar,
    }
}

/// `P(x_r | x_d, x_0)` for the XOR relay: matching means both relay
/// decisions were right or both wrong.
pub fn conditional_pxr(x_r: Bit, x_d: Bit, x_0: Bit, m: &RelayErrorModel) -> f64 {
    let (d, o) = (x_d as usize, x_0 as usize);
    if x_r == x_d ^ x_0 {
        m.pe_d[d] * m.pe_0[o] + m.pe_d_bar[d] * m.pe_0_bar[o]
    } else {
        m.pe_d[d] * m.pe_0_bar[o] + m.pe_d_bar[d] * m.pe_0[o]
    }
}

/// Conditional standard deviations and the weights of the compact
/// decision rule (`x_0 = 0` branch).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MlDecisionParams {
    pub h_d0: f64,
    pub h_r0: f64,
    pub sigma_d: [f64; 2],
    pub sigma_r: [f64; 2],
    pub w1: f64,
    pub w2: f64,
    pub w3: f64,
    pub beta: f64,
}

impl MlDecisionParams {
    pub fn new(h_d0: f64, h_r0: f64, sigma_d: [f64; 2], sigma_r: [f64; 2], m: &RelayErrorModel) -> Self {
        let ratio_d = sigma_d[0] / sigma_d[1];
        let ratio_r = sigma_r[0] / sigma_r[1];
        MlDecisionParams {
            h_d0,
            h_r0,
            sigma_d,
            sigma_r,
            w1: ratio_d * conditional_pxr(0, 1, 0, m),
            w2: ratio_d * ratio_r * conditional_pxr(1, 1, 0, m),
            w3: ratio_r * conditional_pxr(1, 0, 0, m),
            beta: conditional_pxr(0, 0, 0, m),
        }
    }

    /// Standard deviations conditioned on the current hypothesis and the
    /// fed-back history.
    pub fn from_state(ch: &DestinationChannels, state: &DetectorState, m: &RelayErrorModel) -> Self {
        let skip = ch.variance_isi_start.saturating_sub(1);
        let volume = ch.geometry.volume();
        let sigmas = |h0: f64, tail: &[f64], history: &[Bit]| {
            let isi = weighted_history(tail.get(skip..).unwrap_or(&[]), history.get(skip..).unwrap_or(&[]));
            [isi, h0 + isi].map(|s| (s / volume).max(VARIANCE_FLOOR).sqrt())
        };
        let sigma_d = sigmas(ch.direct.first(), ch.direct.tail(), state.other_history());
        let sigma_r = sigmas(ch.relay.first(), ch.relay.tail(), state.relay_history());
        MlDecisionParams::new(ch.direct.first(), ch.relay.first(), sigma_d, sigma_r, m)
    }
}

fn log_gaussian(y: f64, mean: f64, sigma: f64) -> f64 {
    let z = (y - mean) / sigma;
    -0.5 * z * z - sigma.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln()
}

fn log_sum_exp(a: f64, b: f64) -> f64 {
    let hi = a.max(b);
    if hi == f64::NEG_INFINITY {
        return hi;
    }
    hi + ((a - hi).exp() + (b - hi).exp()).ln()
}

/// Log of the joint density of the equalized observations given the other
/// node's bit and the relay's transmitted bit.
pub fn joint_pdf(y_d_eq: f64, y_r_eq: f64, x_d: Bit, x_r: Bit, params: &MlDecisionParams) -> f64 {
    log_gaussian(y_d_eq, params.h_d0 * f64::from(x_d), params.sigma_d[x_d as usize])
        + log_gaussian(y_r_eq, params.h_r0 * f64::from(x_r), params.sigma_r[x_r as usize])
}

/// Maximizes `Σ_{x_r} P(x_r | x_d, x_0) f(y_d, y_r | x_d, x_r)` over `x_d`.
/// Ties decide 0.
pub fn ml_decide_general(y_d_eq: f64, y_r_eq: f64, x_0: Bit, m: &RelayErrorModel, params: &MlDecisionParams) -> Bit {
    let log_likelihood = |x_d: Bit| {
        log_sum_exp(
            conditional_pxr(0, x_d, x_0, m).ln() + joint_pdf(y_d_eq, y_r_eq, x_d, 0, params),
            conditional_pxr(1, x_d, x_0, m).ln() + joint_pdf(y_d_eq, y_r_eq, x_d, 1, params),
        )
    };
    Bit::from(log_likelihood(1) > log_likelihood(0))
}

/// The `x_0 = 0` rule in weighted form: decide 1 iff
/// `w1·Φ + w2·Φ·Ψ > β + w3·Ψ`.
///
/// `w3·Ψ` belongs with the threshold: it is the `x_d = 0, x_r = 1` term of
/// the likelihood after normalizing by the `x_d = 0, x_r = 0` term.
pub fn ml_decide_compact(y_d_eq: f64, y_r_eq: f64, params: &MlDecisionParams) -> Bit {
    let p = params;
    let log_phi =
        -(y_d_eq - p.h_d0).powi(2) / (2.0 * p.sigma_d[1].powi(2)) + y_d_eq * y_d_eq / (2.0 * p.sigma_d[0].powi(2));
    let log_psi =
        -(y_r_eq - p.h_r0).powi(2) / (2.0 * p.sigma_r[1].powi(2)) + y_r_eq * y_r_eq / (2.0 * p.sigma_r[0].powi(2));
    let lhs = log_sum_exp(p.w1.ln() + log_phi, p.w2.ln() + log_phi + log_psi);
    let rhs = log_sum_exp(p.beta.ln(), p.w3.ln() + log_psi);
    Bit::from(lhs > rhs)
}

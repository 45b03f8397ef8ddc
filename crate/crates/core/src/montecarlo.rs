//! End-to-end three-node simulation and BER estimation.
//!
//! Timeline for slot `k`: both end nodes emit `x_a[k]`, `x_b[k]`; the relay
//! thresholds its two received signals and, one slot later, broadcasts
//! `x̂_a[k] ^ x̂_b[k]`. Each destination pairs its direct observation of
//! slot `k` with the relay observation of slot `k + 1`, so both refer to the
//! same information symbol.
//!
//! Random streams: every point of an experiment gets one ChaCha8 generator
//! per [`Stream`], all seeded from the same root seed and separated by
//! stream number `point << 8 | component`. Detectors consume no randomness,
//! so every detector compared at a point sees identical channel noise.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::channel::{self, ChannelTaps, LinkParams, ReceiverGeometry};
use crate::detectors::{Destination, DestinationChannels, DetectorKind};
use crate::relay::{relay_detect, relay_encode, RelayConfig};
use crate::{Bit, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Node {
    A,
    B,
}

impl Node {
    pub fn name(self) -> &'static str {
        match self {
            Node::A => "A",
            Node::B => "B",
        }
    }
}

/// The six directed diffusion links of the topology.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LinkId {
    Ab,
    Ba,
    Ar,
    Br,
    Ra,
    Rb,
}

impl LinkId {
    pub const ALL: [LinkId; 6] = [LinkId::Ab, LinkId::Ba, LinkId::Ar, LinkId::Br, LinkId::Ra, LinkId::Rb];

    pub fn name(self) -> &'static str {
        match self {
            LinkId::Ab => "ab",
            LinkId::Ba => "ba",
            LinkId::Ar => "ar",
            LinkId::Br => "br",
            LinkId::Ra => "ra",
            LinkId::Rb => "rb",
        }
    }

    pub fn parse(s: &str) -> Option<LinkId> {
        LinkId::ALL.into_iter().find(|l| l.name() == s)
    }

    fn index(self) -> usize {
        self as usize
    }
}

/// Independent random streams used within one experiment point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    BitsA,
    BitsB,
    Noise(LinkId),
}

impl Stream {
    pub fn component(self) -> u64 {
        match self {
            Stream::BitsA => 0,
            Stream::BitsB => 1,
            Stream::Noise(link) => 2 + link.index() as u64,
        }
    }

    /// ChaCha stream number for this component at `point`.
    pub fn id(self, point: u64) -> u64 {
        (point << 8) | self.component()
    }

    pub fn rng(self, seed: u64, point: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(self.id(point));
        rng
    }
}

/// How the relay thresholds are chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RelayGamma {
    /// Half of each incoming link's first tap.
    HalfFirstTap,
    Fixed {
        gamma_a: f64,
        gamma_b: f64,
    },
}

/// Full three-node configuration. Defaults follow the reference parameter
/// set: L = 10, r = 80 nm, d_ab = 2 µm, d_ar = d_br = 1 µm.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    pub diffusion_a: f64,
    pub diffusion_b: f64,
    pub diffusion_r: f64,
    pub d_ab: f64,
    pub d_ar: f64,
    pub d_br: f64,
    pub q_a: f64,
    pub q_b: f64,
    pub q_r: f64,
    /// Per-link molecule counts overriding the emitting node's `Q`.
    pub link_q: [Option<f64>; 6],
    pub radius: f64,
    pub symbol_duration: f64,
    pub taps: usize,
    pub sampling_offset: f64,
    pub relay_gamma: RelayGamma,
    pub detector: DetectorKind,
    pub num_symbols: usize,
    pub seed: u64,
    /// First ISI index in the detector's conditional variances (1 or 2).
    pub variance_isi_start: usize,
    /// When false, links deliver their mean signal exactly.
    pub noise: bool,
}

impl Default for SystemConfig {
    fn default() -> Self {
        SystemConfig {
            diffusion_a: 6e-9,
            diffusion_b: 5e-9,
            diffusion_r: 4.3e-9,
            d_ab: 2e-6,
            d_ar: 1e-6,
            d_br: 1e-6,
            q_a: 1e6,
            q_b: 1e6,
            q_r: 1e6,
            link_q: [None; 6],
            radius: 80e-9,
            symbol_duration: 100e-6,
            taps: 10,
            sampling_offset: 1.0,
            relay_gamma: RelayGamma::HalfFirstTap,
            detector: DetectorKind::ProposedMl,
            num_symbols: 200_000,
            seed: 1,
            variance_isi_start: 1,
            noise: true,
        }
    }
}

impl SystemConfig {
    /// Symbols excluded from BER counting while histories fill.
    pub fn warmup(&self) -> usize {
        self.taps.saturating_sub(1)
    }

    pub fn validate(&self) -> Result<()> {
        use channel::positive;
        positive("D_A", self.diffusion_a)?;
        positive("D_B", self.diffusion_b)?;
        positive("D_R", self.diffusion_r)?;
        positive("d_ab", self.d_ab)?;
        positive("d_ar", self.d_ar)?;
        positive("d_br", self.d_br)?;
        positive("Q_A", self.q_a)?;
        positive("Q_B", self.q_b)?;
        positive("Q_R", self.q_r)?;
        for q in self.link_q.iter().flatten() {
            positive("link Q", *q)?;
        }
        positive("r", self.radius)?;
        positive("Ts", self.symbol_duration)?;
        if self.taps == 0 {
            return Err(Error::invalid("L", "tap count must be at least 1"));
        }
        if !(self.sampling_offset > 0.0 && self.sampling_offset <= 1.0) {
            return Err(Error::invalid("sampling_offset", "must lie in (0, 1]"));
        }
        if let RelayGamma::Fixed { gamma_a, gamma_b } = self.relay_gamma {
            if !(gamma_a.is_finite() && gamma_b.is_finite()) {
                return Err(Error::invalid("relay.gamma", "thresholds must be finite"));
            }
        }
        if !matches!(self.variance_isi_start, 1 | 2) {
            return Err(Error::invalid("variance_isi_start", "must be 1 or 2"));
        }
        if self.num_symbols <= self.warmup() {
            return Err(Error::invalid(
                "num_symbols",
                format!("must exceed the warm-up of {} symbols", self.warmup()),
            ));
        }
        Ok(())
    }

    pub fn geometry(&self) -> Result<ReceiverGeometry> {
        ReceiverGeometry::new(self.radius)
    }

    pub fn link_params(&self, link: LinkId) -> LinkParams {
        let (node_q, diffusion, distance) = match link {
            LinkId::Ab => (self.q_a, self.diffusion_a, self.d_ab),
            LinkId::Ba => (self.q_b, self.diffusion_b, self.d_ab),
            LinkId::Ar => (self.q_a, self.diffusion_a, self.d_ar),
            LinkId::Br => (self.q_b, self.diffusion_b, self.d_br),
            LinkId::Ra => (self.q_r, self.diffusion_r, self.d_ar),
            LinkId::Rb => (self.q_r, self.diffusion_r, self.d_br),
        };
        LinkParams {
            q: self.link_q[link.index()].unwrap_or(node_q),
            diffusion,
            distance,
            symbol_duration: self.symbol_duration,
            taps: self.taps,
        }
    }

    pub fn link_q_override(&self, link: LinkId) -> Option<f64> {
        self.link_q[link.index()]
    }

    pub fn set_link_q(&mut self, link: LinkId, q: f64) {
        self.link_q[link.index()] = Some(q);
    }

    pub fn link_taps(&self, link: LinkId) -> Result<ChannelTaps> {
        channel::sample_taps_at(&self.link_params(link), self.sampling_offset).map_err(|e| match e {
            Error::UnusableLink {
                diffusion,
                distance,
                symbol_duration,
                ..
            } => Error::UnusableLink {
                link: format!("link {}", link.name()),
                diffusion,
                distance,
                symbol_duration,
            },
            other => other,
        })
    }

    pub fn link_snr(&self, link: LinkId) -> Result<f64> {
        channel::link_snr(&self.link_taps(link)?, &self.geometry()?)
    }

    /// Rescales the molecule count of `link` so its SNR equals `snr` (linear).
    pub fn set_link_snr(&mut self, link: LinkId, snr: f64) -> Result<()> {
        let q = channel::q_for_target_snr(&self.link_params(link), &self.geometry()?, snr, self.sampling_offset)?;
        self.set_link_q(link, q);
        Ok(())
    }

    /// Validates and samples every link.
    pub fn channels(&self) -> Result<SystemChannels> {
        self.validate()?;
        let geometry = self.geometry()?;
        let taps = LinkId::ALL.map(|l| self.link_taps(l));
        let [ab, ba, ar, br, ra, rb] = taps;
        let (ab, ba, ar, br, ra, rb) = (ab?, ba?, ar?, br?, ra?, rb?);
        let relay = match self.relay_gamma {
            RelayGamma::HalfFirstTap => RelayConfig::half_first_tap(&ar, &br),
            RelayGamma::Fixed { gamma_a, gamma_b } => RelayConfig { gamma_a, gamma_b },
        };
        Ok(SystemChannels {
            taps: [ab, ba, ar, br, ra, rb],
            relay,
            geometry,
            variance_isi_start: self.variance_isi_start,
        })
    }
}

/// Sampled taps of every link together with the relay thresholds.
#[derive(Debug, Clone)]
pub struct SystemChannels {
    taps: [ChannelTaps; 6],
    pub relay: RelayConfig,
    pub geometry: ReceiverGeometry,
    pub variance_isi_start: usize,
}

impl SystemChannels {
    pub fn taps(&self, link: LinkId) -> &ChannelTaps {
        &self.taps[link.index()]
    }

    /// What `node` knows when decoding the other end node.
    pub fn destination(&self, node: Node) -> DestinationChannels {
        let (direct, relay, other_in, own_in, g_other, g_own) = match node {
            Node::A => (
                LinkId::Ba,
                LinkId::Ra,
                LinkId::Br,
                LinkId::Ar,
                self.relay.gamma_b,
                self.relay.gamma_a,
            ),
            Node::B => (
                LinkId::Ab,
                LinkId::Rb,
                LinkId::Ar,
                LinkId::Br,
                self.relay.gamma_a,
                self.relay.gamma_b,
            ),
        };
        let relay_taps = self.taps(relay).clone();
        DestinationChannels {
            direct: self.taps(direct).clone(),
            threshold: relay_taps.first() / 2.0,
            relay: relay_taps,
            other_to_relay: self.taps(other_in).clone(),
            own_to_relay: self.taps(own_in).clone(),
            relay_gamma_other: g_other,
            relay_gamma_own: g_own,
            geometry: self.geometry,
            variance_isi_start: self.variance_isi_start,
        }
    }
}

/// `n` i.i.d. equiprobable bits.
pub fn generate_bits<R: RngExt + ?Sized>(n: usize, rng: &mut R) -> Vec<Bit> {
    (0..n).map(|_| Bit::from(rng.random::<bool>())).collect()
}

/// Noiseless received signal `S[k] = Σ_j h[j] x[k - j]` with a zero past.
pub fn link_mean(x: &[Bit], taps: &ChannelTaps) -> Vec<f64> {
    let h = taps.as_slice();
    (0..x.len())
        .map(|k| {
            h.iter()
                .take(k + 1)
                .enumerate()
                .filter(|(j, _)| x[k - j] != 0)
                .map(|(_, hj)| *hj)
                .sum()
        })
        .collect()
}

/// Received signal with signal-dependent noise added to every slot.
pub fn simulate_link<R: rand::Rng + ?Sized>(
    x: &[Bit],
    taps: &ChannelTaps,
    geom: &ReceiverGeometry,
    rng: &mut R,
) -> Vec<f64> {
    link_mean(x, taps)
        .into_iter()
        .map(|s| s + channel::noise_sample(s, geom, rng))
        .collect()
}

/// Every signal of one simulated run, aligned by information slot.
#[derive(Debug, Clone)]
pub struct Realization {
    pub bits_a: Vec<Bit>,
    pub bits_b: Vec<Bit>,
    /// Relay decisions on `A`'s and `B`'s bits.
    pub relay_hat_a: Vec<Bit>,
    pub relay_hat_b: Vec<Bit>,
    /// Network-coded relay symbol for information slot `k`
    /// (broadcast in slot `k + 1`).
    pub relay_bits: Vec<Bit>,
    /// Direct observation at `A` of `B`'s slot `k`, and vice versa.
    pub direct_at_a: Vec<f64>,
    pub direct_at_b: Vec<f64>,
    /// Relay observation at each node for information slot `k`.
    pub relay_at_a: Vec<f64>,
    pub relay_at_b: Vec<f64>,
}

impl Realization {
    /// Simulates the three-node timeline for `cfg.num_symbols` slots using
    /// the streams of experiment point `point`.
    pub fn simulate(cfg: &SystemConfig, ch: &SystemChannels, point: u64) -> Realization {
        let n = cfg.num_symbols;
        let seed = cfg.seed;
        let bits_a = generate_bits(n, &mut Stream::BitsA.rng(seed, point));
        let bits_b = generate_bits(n, &mut Stream::BitsB.rng(seed, point));

        let observe = |x: &[Bit], link: LinkId| {
            if cfg.noise {
                simulate_link(
                    x,
                    ch.taps(link),
                    &ch.geometry,
                    &mut Stream::Noise(link).rng(seed, point),
                )
            } else {
                link_mean(x, ch.taps(link))
            }
        };

        let at_relay_a = observe(&bits_a, LinkId::Ar);
        let at_relay_b = observe(&bits_b, LinkId::Br);
        let relay_hat_a: Vec<Bit> = at_relay_a.iter().map(|y| relay_detect(*y, ch.relay.gamma_a)).collect();
        let relay_hat_b: Vec<Bit> = at_relay_b.iter().map(|y| relay_detect(*y, ch.relay.gamma_b)).collect();
        let relay_bits: Vec<Bit> = relay_hat_a
            .iter()
            .zip(&relay_hat_b)
            .map(|(a, b)| relay_encode(*a, *b))
            .collect();

        // one-slot processing delay: nothing on air in slot 0
        let mut on_air = Vec::with_capacity(n + 1);
        on_air.push(0);
        on_air.extend_from_slice(&relay_bits);
        let relay_at_a = observe(&on_air, LinkId::Ra).split_off(1);
        let relay_at_b = observe(&on_air, LinkId::Rb).split_off(1);

        Realization {
            direct_at_a: observe(&bits_b, LinkId::Ba),
            direct_at_b: observe(&bits_a, LinkId::Ab),
            bits_a,
            bits_b,
            relay_hat_a,
            relay_hat_b,
            relay_bits,
            relay_at_a,
            relay_at_b,
        }
    }

    /// Runs `kind` at `node` and returns its decisions on the other node's bits.
    pub fn detect(&self, ch: &SystemChannels, kind: DetectorKind, node: Node) -> Vec<Bit> {
        let mut dest = Destination::new(kind, ch.destination(node));
        match node {
            Node::A => dest.run(&self.direct_at_a, &self.relay_at_a, &self.bits_a),
            Node::B => dest.run(&self.direct_at_b, &self.relay_at_b, &self.bits_b),
        }
    }

    /// Bits `node` is trying to recover.
    pub fn truth(&self, node: Node) -> &[Bit] {
        match node {
            Node::A => &self.bits_b,
            Node::B => &self.bits_a,
        }
    }
}

/// Error count and 95% Wilson interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BerEstimate {
    pub ber: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub symbols: u64,
    pub errors: u64,
}

/// Two-sided 95% normal quantile.
pub const Z_95: f64 = 1.959_963_984_540_054;

/// Wilson score interval for `errors` out of `n` trials.
pub fn wilson_interval(errors: u64, n: u64, z: f64) -> (f64, f64) {
    let n_f = n as f64;
    let p = errors as f64 / n_f;
    let z2 = z * z;
    let denom = 1.0 + z2 / n_f;
    let center = (p + z2 / (2.0 * n_f)) / denom;
    let half = z / denom * (p * (1.0 - p) / n_f + z2 / (4.0 * n_f * n_f)).sqrt();
    ((center - half).clamp(0.0, p), (center + half).clamp(p, 1.0))
}

/// Error fraction over indices `>= warmup`.
pub fn estimate_ber(decisions: &[Bit], truth: &[Bit], warmup: usize) -> Result<BerEstimate> {
    if decisions.len() != truth.len() {
        return Err(Error::LengthMismatch {
            decisions: decisions.len(),
            truth: truth.len(),
        });
    }
    if decisions.len() <= warmup {
        return Err(Error::invalid("num_symbols", "no symbols left after warm-up"));
    }
    let symbols = (decisions.len() - warmup) as u64;
    let errors = decisions[warmup..]
        .iter()
        .zip(&truth[warmup..])
        .filter(|(d, t)| d != t)
        .count() as u64;
    let (ci_low, ci_high) = wilson_interval(errors, symbols, Z_95);
    Ok(BerEstimate {
        ber: errors as f64 / symbols as f64,
        ci_low,
        ci_high,
        symbols,
        errors,
    })
}

/// One experiment data point.
#[derive(Debug, Clone, PartialEq)]
pub struct BerResult {
    pub detector: DetectorKind,
    pub node: Node,
    /// Independent variable of the sweep (SNR in dB or Ts in seconds).
    pub x_value: f64,
    pub estimate: BerEstimate,
    pub seed: u64,
}

/// BER of every `(detector, node)` pair at one configuration, sharing a
/// single channel realization.
pub fn run_point(cfg: &SystemConfig, detectors: &[DetectorKind], point: u64, x_value: f64) -> Result<Vec<BerResult>> {
    let ch = cfg.channels()?;
    let real = Realization::simulate(cfg, &ch, point);
    let mut out = Vec::with_capacity(detectors.len() * 2);
    for &kind in detectors {
        for node in [Node::A, Node::B] {
            let decisions = real.detect(&ch, kind, node);
            out.push(BerResult {
                detector: kind,
                node,
                x_value,
                estimate: estimate_ber(&decisions, real.truth(node), cfg.warmup())?,
                seed: cfg.seed,
            });
        }
    }
    Ok(out)
}

/// BER at both destinations for `cfg.detector`.
pub fn run_trial(cfg: &SystemConfig) -> Result<[BerResult; 2]> {
    let x_value = cfg.symbol_duration;
    let mut rows = run_point(cfg, &[cfg.detector], 0, x_value)?.into_iter();
    let a = rows.next().expect("node A row");
    let b = rows.next().expect("node B row");
    Ok([a, b])
}

/// Runs independent points in parallel. Point `i` uses stream block `i`;
/// rows come back ordered by point, then detector, then node, whatever the
/// thread count. `threads == 0` uses the global pool.
pub fn run_sweep(points: &[(SystemConfig, f64)], detectors: &[DetectorKind], threads: usize) -> Result<Vec<BerResult>> {
    for (cfg, _) in points {
        cfg.channels()?;
    }
    let work = || -> Result<Vec<BerResult>> {
        let per_point: Vec<Result<Vec<BerResult>>> = points
            .par_iter()
            .enumerate()
            .map(|(i, (cfg, x))| run_point(cfg, detectors, i as u64, *x))
            .collect();
        let mut rows = Vec::new();
        for r in per_point {
            rows.extend(r?);
        }
        Ok(rows)
    };
    if threads == 0 {
        work()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::invalid("threads", e.to_string()))?
            .install(work)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn bits_are_balanced_and_reproducible() {
        let n = 1_000_000;
        let bits = generate_bits(n, &mut Stream::BitsA.rng(3, 0));
        let mean = bits.iter().map(|b| f64::from(*b)).sum::<f64>() / n as f64;
        assert!((mean - 0.5).abs() < 4.0 * (0.25 / n as f64).sqrt());
        assert_eq!(bits[..1000], generate_bits(1000, &mut Stream::BitsA.rng(3, 0))[..]);
        assert_ne!(bits[..1000], generate_bits(1000, &mut Stream::BitsA.rng(4, 0))[..]);
        assert_ne!(bits[..1000], generate_bits(1000, &mut Stream::BitsB.rng(3, 0))[..]);
    }

    #[test]
    fn stream_ids_are_distinct() {
        let mut ids: Vec<u64> = (0..4)
            .flat_map(|p| {
                [Stream::BitsA, Stream::BitsB]
                    .into_iter()
                    .chain(LinkId::ALL.map(Stream::Noise))
                    .map(move |s| s.id(p))
            })
            .collect();
        let n = ids.len();
        ids.sort();
        ids.dedup();
        assert_eq!(ids.len(), n);
    }

    #[test]
    fn zero_input_gives_zero_output() {
        let h = ChannelTaps::new(vec![3.0, 1.0]).unwrap();
        let g = ReceiverGeometry::new(1e-7).unwrap();
        let y = simulate_link(&[0; 50], &h, &g, &mut Stream::BitsA.rng(1, 0));
        assert!(y.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn impulse_gives_tap_sequence() {
        let h = ChannelTaps::new(vec![3.0, 1.0, 0.5]).unwrap();
        assert_eq!(link_mean(&[1, 0, 0, 0], &h), vec![3.0, 1.0, 0.5, 0.0]);
        assert_eq!(link_mean(&[1, 1], &h), vec![3.0, 4.0]);
    }

    #[test]
    fn noisy_link_mean_matches_signal() {
        let h = ChannelTaps::new(vec![5e20, 2e20, 1e20]).unwrap();
        let g = ReceiverGeometry::new(80e-9).unwrap();
        let x = [1, 0, 1, 1];
        let s = link_mean(&x, &h);
        let reps = 100_000;
        let mut acc = [0.0; 4];
        let mut rng = Stream::BitsA.rng(5, 0);
        for _ in 0..reps {
            for (a, y) in acc.iter_mut().zip(simulate_link(&x, &h, &g, &mut rng)) {
                *a += y;
            }
        }
        for k in 0..4 {
            assert!((acc[k] / reps as f64 / s[k] - 1.0).abs() < 0.01);
        }
    }

    #[test]
    fn ber_of_identical_and_complementary_sequences() {
        let truth: Vec<Bit> = (0..100).map(|i| (i % 3 == 0) as Bit).collect();
        let same = estimate_ber(&truth, &truth, 5).unwrap();
        assert_eq!((same.ber, same.ci_low, same.errors, same.symbols), (0.0, 0.0, 0, 95));
        let flipped: Vec<Bit> = truth.iter().map(|b| b ^ 1).collect();
        let all = estimate_ber(&flipped, &truth, 5).unwrap();
        assert_eq!(all.ber, 1.0);
        assert_eq!(all.ci_high, 1.0);
        assert!(estimate_ber(&truth[..10], &truth, 0).is_err());
        assert!(estimate_ber(&truth[..5], &truth[..5], 5).is_err());
    }

    #[test]
    fn wilson_interval_closed_form() {
        // 10 errors in 1000, z = 1.959963984540054:
        // center = (0.01 + z²/2000) / (1 + z²/1000)
        // half   = z / (1 + z²/1000) · sqrt(0.01·0.99/1000 + z²/4e6)
        let z = Z_95;
        let z2 = z * z;
        let center = (0.01 + z2 / 2000.0) / (1.0 + z2 / 1000.0);
        let half = z / (1.0 + z2 / 1000.0) * (0.0099 / 1000.0 + z2 / 4e6).sqrt();
        let (lo, hi) = wilson_interval(10, 1000, z);
        assert_relative_eq!(lo, center - half, max_relative = 1e-12);
        assert_relative_eq!(hi, center + half, max_relative = 1e-12);
        // bounds are the roots of (p̂ - p)² = z² p (1 - p) / n; find them by bisection
        let score = |p: f64| (0.01 - p).powi(2) - z2 * p * (1.0 - p) / 1000.0;
        let root = |mut a: f64, mut b: f64| {
            for _ in 0..200 {
                let m = 0.5 * (a + b);
                if (score(a) > 0.0) == (score(m) > 0.0) {
                    a = m;
                } else {
                    b = m;
                }
            }
            0.5 * (a + b)
        };
        assert_relative_eq!(lo, root(0.0, 0.01), max_relative = 1e-12);
        assert_relative_eq!(hi, root(0.01, 1.0), max_relative = 1e-12);
    }

    #[test]
    fn config_rejects_invalid_values() {
        let cfg = SystemConfig {
            d_ab: -1.0,
            ..SystemConfig::default()
        };
        let err = cfg.validate().unwrap_err().to_string();
        assert!(err.contains("d_ab"), "{err}");
        let cfg = SystemConfig {
            num_symbols: 9,
            ..SystemConfig::default()
        };
        assert!(cfg.validate().is_err());
        let cfg = SystemConfig {
            variance_isi_start: 3,
            ..SystemConfig::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn link_params_follow_topology() {
        let cfg = SystemConfig::default();
        let ra = cfg.link_params(LinkId::Ra);
        assert_eq!((ra.diffusion, ra.distance), (4.3e-9, 1e-6));
        let ba = cfg.link_params(LinkId::Ba);
        assert_eq!((ba.diffusion, ba.distance), (5e-9, 2e-6));
        let mut cfg = cfg;
        cfg.set_link_snr(LinkId::Ar, 40.0).unwrap();
        assert_relative_eq!(cfg.link_snr(LinkId::Ar).unwrap(), 40.0, max_relative = 1e-12);
        assert_eq!(cfg.link_params(LinkId::Br).q, cfg.q_b);
    }

    #[test]
    fn noiseless_memoryless_pipeline_is_error_free() {
        for kind in DetectorKind::ALL {
            let cfg = SystemConfig {
                taps: 1,
                noise: false,
                num_symbols: 5_000,
                detector: kind,
                ..SystemConfig::default()
            };
            for r in run_trial(&cfg).unwrap() {
                assert_eq!(r.estimate.errors, 0, "{kind} at {:?}", r.node);
            }
        }
    }

    #[test]
    fn stuck_relay_decorrelates_fixed_detector() {
        let cfg = SystemConfig {
            relay_gamma: RelayGamma::Fixed {
                gamma_a: -1e300,
                gamma_b: -1e300,
            },
            detector: DetectorKind::Fixed,
            num_symbols: 40_000,
            ..SystemConfig::default()
        };
        let ch = cfg.channels().unwrap();
        let real = Realization::simulate(&cfg, &ch, 0);
        assert!(real.relay_bits.iter().all(|b| *b == 0));
        for r in run_trial(&cfg).unwrap() {
            let n = r.estimate.symbols as f64;
            assert!((r.estimate.ber - 0.5).abs() < 4.0 * (0.25 / n).sqrt(), "{:?}", r);
        }
    }

    #[test]
    fn trials_are_deterministic() {
        let cfg = SystemConfig {
            num_symbols: 20_000,
            ..SystemConfig::default()
        };
        assert_eq!(run_trial(&cfg).unwrap(), run_trial(&cfg).unwrap());
    }

    #[test]
    fn relay_output_is_delayed_one_slot() {
        let cfg = SystemConfig {
            noise: false,
            num_symbols: 200,
            ..SystemConfig::default()
        };
        let ch = cfg.channels().unwrap();
        let real = Realization::simulate(&cfg, &ch, 0);
        let expected = link_mean(&real.relay_bits, ch.taps(LinkId::Ra));
        assert_eq!(real.relay_at_a, expected);
    }
}

//! Experiment descriptions, the flat `key = value` configuration format,
//! sweep orchestration and CSV output.
//!
//! A configuration file is a list of `section.key = value` lines. `#`
//! starts a comment. Every key is optional except `experiment.kind`;
//! omitted keys take the reference parameter set. See `docs/config.md`
//! for the full key list.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::channel::{fick_response, LinkParams};
use crate::detectors::DetectorKind;
use crate::montecarlo::{run_sweep, BerResult, LinkId, RelayGamma, SystemConfig};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    BerVsSnr,
    BerVsSymbolDuration,
    SinglePoint,
    ChannelProfile,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::BerVsSnr => "ber_vs_snr",
            ExperimentKind::BerVsSymbolDuration => "ber_vs_symbol_duration",
            ExperimentKind::SinglePoint => "single_point",
            ExperimentKind::ChannelProfile => "channel_profile",
        }
    }

    fn is_sweep(self) -> bool {
        matches!(self, ExperimentKind::BerVsSnr | ExperimentKind::BerVsSymbolDuration)
    }
}

impl FromStr for ExperimentKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        [
            ExperimentKind::BerVsSnr,
            ExperimentKind::BerVsSymbolDuration,
            ExperimentKind::SinglePoint,
            ExperimentKind::ChannelProfile,
        ]
        .into_iter()
        .find(|k| k.name() == s)
        .ok_or_else(|| format!("unknown experiment kind `{s}`"))
    }
}

/// Spacing of sweep points.
///
/// For SNR sweeps `start`/`stop` are in dB and the scale refers to the
/// linear SNR: `log` spaces points evenly in dB, `linear` evenly in the
/// linear ratio. For symbol-duration sweeps it applies to seconds directly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Linear,
    Log,
}

impl Scale {
    fn name(self) -> &'static str {
        match self {
            Scale::Linear => "linear",
            Scale::Log => "log",
        }
    }
}

/// What a symbol-duration sweep keeps fixed while `Ts` changes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepHold {
    /// Molecule counts stay put; link SNRs drift with `Ts`.
    Q,
    /// Every targeted link is rescaled to `experiment.snr_db` at each `Ts`.
    Snr,
}

impl SweepHold {
    fn name(self) -> &'static str {
        match self {
            SweepHold::Q => "q",
            SweepHold::Snr => "snr",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sweep {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
    pub scale: Scale,
    pub hold: SweepHold,
}

impl Sweep {
    fn default_for(kind: ExperimentKind) -> Sweep {
        match kind {
            ExperimentKind::BerVsSymbolDuration => Sweep {
                start: 50e-6,
                stop: 800e-6,
                points: 5,
                scale: Scale::Log,
                hold: SweepHold::Q,
            },
            _ => Sweep {
                start: -5.0,
                stop: 30.0,
                points: 8,
                scale: Scale::Log,
                hold: SweepHold::Q,
            },
        }
    }

    /// Sweep values in the experiment's own units (dB or seconds).
    pub fn values(&self, kind: ExperimentKind) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.start];
        }
        let n = self.points - 1;
        let frac = |i: usize| i as f64 / n as f64;
        let lerp = |a: f64, b: f64, i: usize| a + (b - a) * frac(i);
        match (kind, self.scale) {
            (ExperimentKind::BerVsSnr, Scale::Log) => (0..=n).map(|i| lerp(self.start, self.stop, i)).collect(),
            (ExperimentKind::BerVsSnr, Scale::Linear) => {
                let (a, b) = (db_to_linear(self.start), db_to_linear(self.stop));
                (0..=n).map(|i| linear_to_db(lerp(a, b, i))).collect()
            }
            (_, Scale::Linear) => (0..=n).map(|i| lerp(self.start, self.stop, i)).collect(),
            (_, Scale::Log) => {
                let (a, b) = (self.start.ln(), self.stop.ln());
                (0..=n).map(|i| lerp(a, b, i).exp()).collect()
            }
        }
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Which links an SNR target applies to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SnrLink {
    All,
    Only(LinkId),
}

/// Parameters of the continuous-response profile experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileSpec {
    pub diffusion: f64,
    pub distances: Vec<f64>,
    pub q: f64,
    /// End of the time axis; `None` means three times the latest peak.
    pub t_max: Option<f64>,
    pub samples: usize,
}

impl Default for ProfileSpec {
    fn default() -> Self {
        ProfileSpec {
            diffusion: 2.2e-9,
            distances: vec![20e-6, 30e-6, 40e-6],
            q: 1.0,
            t_max: None,
            samples: 400,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    pub sweep: Sweep,
    pub detectors: Vec<DetectorKind>,
    pub system: SystemConfig,
    /// Fixed operating SNR (dB) for single points and SNR-held Ts sweeps.
    pub snr_db: Option<f64>,
    pub snr_link: SnrLink,
    pub profile: ProfileSpec,
    pub output: Option<PathBuf>,
}

impl ExperimentSpec {
    /// A spec with every default filled in.
    pub fn new(kind: ExperimentKind) -> Self {
        ExperimentSpec {
            kind,
            sweep: Sweep::default_for(kind),
            detectors: DetectorKind::ALL.to_vec(),
            system: SystemConfig::default(),
            snr_db: None,
            snr_link: SnrLink::All,
            profile: ProfileSpec::default(),
            output: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.system.validate()?;
        if self.detectors.is_empty() {
            return Err(Error::invalid(
                "experiment.detectors",
                "at least one detector is required",
            ));
        }
        if self.kind.is_sweep() {
            let s = &self.sweep;
            if s.points == 0 {
                return Err(Error::invalid("sweep.points", "must be >= 1"));
            }
            if !(s.start.is_finite() && s.stop.is_finite()) {
                return Err(Error::invalid("sweep.start", "sweep bounds must be finite"));
            }
            if s.points > 1 && s.start >= s.stop {
                return Err(Error::invalid("sweep.start", "must be < sweep.stop"));
            }
            if self.kind == ExperimentKind::BerVsSymbolDuration && s.start <= 0.0 {
                return Err(Error::invalid("sweep.start", "symbol durations must be > 0"));
            }
            if self.kind == ExperimentKind::BerVsSymbolDuration && s.hold == SweepHold::Snr && self.snr_db.is_none() {
                return Err(Error::invalid("experiment.snr_db", "required when sweep.hold = snr"));
            }
        }
        if let Some(db) = self.snr_db {
            if !db.is_finite() {
                return Err(Error::invalid("experiment.snr_db", "must be finite"));
            }
        }
        if self.kind == ExperimentKind::ChannelProfile {
            let p = &self.profile;
            crate::channel::positive("profile.D", p.diffusion)?;
            crate::channel::positive("profile.Q", p.q)?;
            if p.distances.is_empty() {
                return Err(Error::invalid("profile.distances", "at least one distance is required"));
            }
            for d in &p.distances {
                crate::channel::positive("profile.distances", *d)?;
            }
            if let Some(t) = p.t_max {
                crate::channel::positive("profile.t_max", t)?;
            }
            if p.samples < 2 {
                return Err(Error::invalid("profile.samples", "must be >= 2"));
            }
        }
        Ok(())
    }

    fn targeted_links(&self) -> Vec<LinkId> {
        match self.snr_link {
            SnrLink::All => LinkId::ALL.to_vec(),
            SnrLink::Only(l) => vec![l],
        }
    }

    fn at_snr(&self, base: &SystemConfig, db: f64) -> Result<SystemConfig> {
        let mut cfg = base.clone();
        for link in self.targeted_links() {
            cfg.set_link_snr(link, db_to_linear(db))?;
        }
        Ok(cfg)
    }

    /// Concrete `(config, x_value)` pairs of a BER experiment.
    pub fn points(&self) -> Result<Vec<(SystemConfig, f64)>> {
        self.validate()?;
        let base = &self.system;
        match self.kind {
            ExperimentKind::BerVsSnr => self
                .sweep
                .values(self.kind)
                .into_iter()
                .map(|db| Ok((self.at_snr(base, db)?, db)))
                .collect(),
            ExperimentKind::BerVsSymbolDuration => self
                .sweep
                .values(self.kind)
                .into_iter()
                .map(|ts| {
                    let cfg = SystemConfig {
                        symbol_duration: ts,
                        ..base.clone()
                    };
                    let cfg = match (self.sweep.hold, self.snr_db) {
                        (SweepHold::Snr, Some(db)) => self.at_snr(&cfg, db)?,
                        _ => cfg,
                    };
                    Ok((cfg, ts))
                })
                .collect(),
            ExperimentKind::SinglePoint => Ok(vec![match self.snr_db {
                Some(db) => (self.at_snr(base, db)?, db),
                None => (base.clone(), base.symbol_duration),
            }]),
            ExperimentKind::ChannelProfile => {
                Err(Error::invalid("experiment.kind", "channel_profile has no BER points"))
            }
        }
    }
}

/// One sample of a continuous channel response.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileSample {
    pub diffusion: f64,
    pub distance: f64,
    pub t: f64,
    pub h: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExperimentOutput {
    Ber { kind: ExperimentKind, rows: Vec<BerResult> },
    Profile(Vec<ProfileSample>),
}

/// Runs the experiment. Rows are ordered by sweep index, then detector (in
/// the spec's order), then node. `threads == 0` uses all cores.
pub fn run_experiment(spec: &ExperimentSpec, threads: usize) -> Result<ExperimentOutput> {
    spec.validate()?;
    if spec.kind == ExperimentKind::ChannelProfile {
        return Ok(ExperimentOutput::Profile(channel_profile(&spec.profile)?));
    }
    let points = spec.points()?;
    let rows = run_sweep(&points, &spec.detectors, threads)?;
    Ok(ExperimentOutput::Ber { kind: spec.kind, rows })
}

/// Samples `h(t)` on a uniform grid for each distance.
pub fn channel_profile(p: &ProfileSpec) -> Result<Vec<ProfileSample>> {
    let links = p
        .distances
        .iter()
        .map(|d| LinkParams::new(p.q, p.diffusion, *d, 1.0, 1))
        .collect::<Result<Vec<_>>>()?;
    let t_max = p
        .t_max
        .unwrap_or_else(|| 3.0 * links.iter().map(LinkParams::peak_time).fold(0.0, f64::max));
    let step = t_max / (p.samples - 1) as f64;
    Ok(links
        .iter()
        .flat_map(|l| {
            (0..p.samples).map(move |i| {
                let t = i as f64 * step;
                ProfileSample {
                    diffusion: l.diffusion,
                    distance: l.distance,
                    t,
                    h: fick_response(l, t),
                }
            })
        })
        .collect())
}

pub const BER_CSV_HEADER: &str = "experiment,detector,node,x_value,ber,ci_low,ci_high,symbols,errors,seed";
pub const PROFILE_CSV_HEADER: &str = "experiment,D,distance,t,h";

/// Writes the output as CSV. Reals carry 13 significant digits.
pub fn write_csv<W: Write>(out: &ExperimentOutput, w: &mut W) -> std::io::Result<()> {
    let mut buf = String::new();
    match out {
        ExperimentOutput::Ber { kind, rows } => {
            buf.push_str(BER_CSV_HEADER);
            buf.push('\n');
            for r in rows {
                let e = &r.estimate;
                let _ = writeln!(
                    buf,
                    "{},{},{},{:.12e},{:.12e},{:.12e},{:.12e},{},{},{}",
                    kind.name(),
                    r.detector.name(),
                    r.node.name(),
                    r.x_value,
                    e.ber,
                    e.ci_low,
                    e.ci_high,
                    e.symbols,
                    e.errors,
                    r.seed
                );
            }
        }
        ExperimentOutput::Profile(samples) => {
            buf.push_str(PROFILE_CSV_HEADER);
            buf.push('\n');
            for s in samples {
                let _ = writeln!(
                    buf,
                    "channel_profile,{:.12e},{:.12e},{:.12e},{:.12e}",
                    s.diffusion, s.distance, s.t, s.h
                );
            }
        }
    }
    w.write_all(buf.as_bytes())
}

/// Writes the CSV to `path`. Empty tables are rejected.
pub fn emit_csv(out: &ExperimentOutput, path: &Path) -> Result<()> {
    let empty = match out {
        ExperimentOutput::Ber { rows, .. } => rows.is_empty(),
        ExperimentOutput::Profile(s) => s.is_empty(),
    };
    if empty {
        return Err(Error::invalid("table", "nothing to write"));
    }
    let io_err = |source| Error::Io {
        path: path.display().to_string(),
        source,
    };
    let mut file = std::fs::File::create(path).map_err(io_err)?;
    write_csv(out, &mut file).map_err(io_err)?;
    file.flush().map_err(io_err)
}

// ---------------------------------------------------------------------------
// configuration text

pub fn load_config(path: &Path) -> Result<ExperimentSpec> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_config(&text, &path.display().to_string())
}

struct Entry<'a> {
    line: usize,
    key: &'a str,
    value: &'a str,
}

/// Parses configuration text. `origin` labels diagnostics.
pub fn parse_config(text: &str, origin: &str) -> Result<ExperimentSpec> {
    let parse_err = |line: usize, message: String| Error::Parse {
        path: origin.to_string(),
        line,
        message,
    };

    let mut entries: Vec<Entry> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| parse_err(i + 1, format!("expected `key = value`, got `{line}`")))?;
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() {
            return Err(parse_err(i + 1, "empty key".into()));
        }
        if let Some(prev) = entries.iter().find(|e| e.key == key) {
            return Err(parse_err(
                i + 1,
                format!("duplicate key `{key}` (first set on line {})", prev.line),
            ));
        }
        entries.push(Entry {
            line: i + 1,
            key,
            value,
        });
    }

    let kind = match entries.iter().find(|e| e.key == "experiment.kind") {
        Some(e) => e.value.parse::<ExperimentKind>().map_err(|m| parse_err(e.line, m))?,
        None => return Err(Error::invalid("experiment.kind", "is required")),
    };
    let mut spec = ExperimentSpec::new(kind);
    let mut gamma_mode: Option<String> = None;
    let (mut gamma_a, mut gamma_b) = (None, None);

    for e in &entries {
        let num = || -> Result<f64> {
            e.value
                .parse::<f64>()
                .map_err(|_| parse_err(e.line, format!("`{}`: expected a number, got `{}`", e.key, e.value)))
        };
        let int = || -> Result<u64> {
            e.value
                .parse::<u64>()
                .map_err(|_| parse_err(e.line, format!("`{}`: expected an integer, got `{}`", e.key, e.value)))
        };
        let boolean = || -> Result<bool> {
            e.value.parse::<bool>().map_err(|_| {
                parse_err(
                    e.line,
                    format!("`{}`: expected true or false, got `{}`", e.key, e.value),
                )
            })
        };
        let bad = |what: &str| parse_err(e.line, format!("`{}`: {what}, got `{}`", e.key, e.value));
        let sys = &mut spec.system;
        match e.key {
            "experiment.kind" => {}
            "experiment.detectors" => {
                spec.detectors = parse_detectors(e.value).map_err(|m| parse_err(e.line, m))?;
            }
            "experiment.output" => spec.output = Some(PathBuf::from(e.value)),
            "experiment.snr_db" => spec.snr_db = Some(num()?),
            "experiment.snr_link" => {
                spec.snr_link = match e.value {
                    "all" => SnrLink::All,
                    other => SnrLink::Only(LinkId::parse(other).ok_or_else(|| bad("expected all or a link id"))?),
                }
            }
            "sweep.start" => spec.sweep.start = num()?,
            "sweep.stop" => spec.sweep.stop = num()?,
            "sweep.points" => spec.sweep.points = int()? as usize,
            "sweep.scale" => {
                spec.sweep.scale = match e.value {
                    "linear" => Scale::Linear,
                    "log" => Scale::Log,
                    _ => return Err(bad("expected linear or log")),
                }
            }
            "sweep.hold" => {
                spec.sweep.hold = match e.value {
                    "q" => SweepHold::Q,
                    "snr" => SweepHold::Snr,
                    _ => return Err(bad("expected q or snr")),
                }
            }
            "system.seed" => sys.seed = int()?,
            "system.symbols" => sys.num_symbols = int()? as usize,
            "system.detector" => {
                sys.detector = e
                    .value
                    .parse()
                    .map_err(|err: Error| parse_err(e.line, err.to_string()))?
            }
            "channel.L" => sys.taps = int()? as usize,
            "channel.Ts" => sys.symbol_duration = num()?,
            "channel.sampling_offset" => sys.sampling_offset = num()?,
            "channel.variance_isi_start" => sys.variance_isi_start = int()? as usize,
            "channel.noise" => sys.noise = boolean()?,
            "geometry.radius" => sys.radius = num()?,
            "geometry.d_ab" => sys.d_ab = num()?,
            "geometry.d_ar" => sys.d_ar = num()?,
            "geometry.d_br" => sys.d_br = num()?,
            "node.a.D" => sys.diffusion_a = num()?,
            "node.b.D" => sys.diffusion_b = num()?,
            "node.r.D" => sys.diffusion_r = num()?,
            "node.a.Q" => sys.q_a = num()?,
            "node.b.Q" => sys.q_b = num()?,
            "node.r.Q" => sys.q_r = num()?,
            "relay.gamma_mode" => gamma_mode = Some(e.value.to_string()),
            "relay.gamma_a" => gamma_a = Some(num()?),
            "relay.gamma_b" => gamma_b = Some(num()?),
            "profile.D" => spec.profile.diffusion = num()?,
            "profile.Q" => spec.profile.q = num()?,
            "profile.distances" => {
                spec.profile.distances = e
                    .value
                    .split(',')
                    .map(|s| s.trim().parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| bad("expected a comma-separated list of numbers"))?;
            }
            "profile.t_max" => spec.profile.t_max = Some(num()?),
            "profile.samples" => spec.profile.samples = int()? as usize,
            key => {
                let link = key
                    .strip_prefix("link.")
                    .and_then(|rest| rest.strip_suffix(".Q"))
                    .and_then(LinkId::parse);
                match link {
                    Some(l) => sys.set_link_q(l, num()?),
                    None => return Err(parse_err(e.line, format!("unknown key `{key}`"))),
                }
            }
        }
    }

    spec.system.relay_gamma = match gamma_mode.as_deref() {
        None | Some("half_first_tap") => {
            if gamma_a.is_some() || gamma_b.is_some() {
                return Err(Error::invalid(
                    "relay.gamma_mode",
                    "explicit thresholds need relay.gamma_mode = fixed",
                ));
            }
            RelayGamma::HalfFirstTap
        }
        Some("fixed") => match (gamma_a, gamma_b) {
            (Some(gamma_a), Some(gamma_b)) => RelayGamma::Fixed { gamma_a, gamma_b },
            _ => {
                return Err(Error::invalid(
                    "relay.gamma_a",
                    "fixed mode needs relay.gamma_a and relay.gamma_b",
                ))
            }
        },
        Some(other) => {
            return Err(Error::invalid(
                "relay.gamma_mode",
                format!("expected half_first_tap or fixed, got `{other}`"),
            ))
        }
    };

    spec.validate()?;
    Ok(spec)
}

pub fn parse_detectors(list: &str) -> std::result::Result<Vec<DetectorKind>, String> {
    list.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.parse::<DetectorKind>().map_err(|e| e.to_string()))
        .collect()
}

/// Renders a spec as configuration text that parses back to an equal spec.
pub fn to_config_string(spec: &ExperimentSpec) -> String {
    let s = &spec.system;
    let mut out = String::new();
    let mut kv = |k: &str, v: String| {
        let _ = writeln!(out, "{k} = {v}");
    };
    kv("experiment.kind", spec.kind.name().into());
    kv(
        "experiment.detectors",
        spec.detectors.iter().map(|d| d.name()).collect::<Vec<_>>().join(", "),
    );
    if let Some(p) = &spec.output {
        kv("experiment.output", p.display().to_string());
    }
    if let Some(db) = spec.snr_db {
        kv("experiment.snr_db", format!("{db:?}"));
    }
    kv(
        "experiment.snr_link",
        match spec.snr_link {
            SnrLink::All => "all".into(),
            SnrLink::Only(l) => l.name().into(),
        },
    );
    kv("sweep.start", format!("{:?}", spec.sweep.start));
    kv("sweep.stop", format!("{:?}", spec.sweep.stop));
    kv("sweep.points", spec.sweep.points.to_string());
    kv("sweep.scale", spec.sweep.scale.name().into());
    kv("sweep.hold", spec.sweep.hold.name().into());
    kv("system.seed", s.seed.to_string());
    kv("system.symbols", s.num_symbols.to_string());
    kv("system.detector", s.detector.name().into());
    kv("channel.L", s.taps.to_string());
    kv("channel.Ts", format!("{:?}", s.symbol_duration));
    kv("channel.sampling_offset", format!("{:?}", s.sampling_offset));
    kv("channel.variance_isi_start", s.variance_isi_start.to_string());
    kv("channel.noise", s.noise.to_string());
    kv("geometry.radius", format!("{:?}", s.radius));
    kv("geometry.d_ab", format!("{:?}", s.d_ab));
    kv("geometry.d_ar", format!("{:?}", s.d_ar));
    kv("geometry.d_br", format!("{:?}", s.d_br));
    kv("node.a.D", format!("{:?}", s.diffusion_a));
    kv("node.b.D", format!("{:?}", s.diffusion_b));
    kv("node.r.D", format!("{:?}", s.diffusion_r));
    kv("node.a.Q", format!("{:?}", s.q_a));
    kv("node.b.Q", format!("{:?}", s.q_b));
    kv("node.r.Q", format!("{:?}", s.q_r));
    for l in LinkId::ALL {
        if let Some(q) = s.link_q_override(l) {
            kv(&format!("link.{}.Q", l.name()), format!("{q:?}"));
        }
    }
    match s.relay_gamma {
        RelayGamma::HalfFirstTap => kv("relay.gamma_mode", "half_first_tap".into()),
        RelayGamma::Fixed { gamma_a, gamma_b } => {
            kv("relay.gamma_mode", "fixed".into());
            kv("relay.gamma_a", format!("{gamma_a:?}"));
            kv("relay.gamma_b", format!("{gamma_b:?}"));
        }
    }
    let p = &spec.profile;
    kv("profile.D", format!("{:?}", p.diffusion));
    kv("profile.Q", format!("{:?}", p.q));
    kv(
        "profile.distances",
        p.distances
            .iter()
            .map(|d| format!("{d:?}"))
            .collect::<Vec<_>>()
            .join(", "),
    );
    if let Some(t) = p.t_max {
        kv("profile.t_max", format!("{t:?}"));
    }
    kv("profile.samples", p.samples.to_string());
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_needs_a_kind() {
        let err = parse_config("", "empty").unwrap_err();
        assert!(err.to_string().contains("experiment.kind"), "{err}");
        assert!(parse_config("# only a comment\n\n", "c").is_err());
    }

    #[test]
    fn minimal_file_takes_reference_defaults() {
        let spec = parse_config("experiment.kind = ber_vs_snr\n", "t").unwrap();
        let s = &spec.system;
        assert_eq!((s.diffusion_a, s.diffusion_b, s.diffusion_r), (6e-9, 5e-9, 4.3e-9));
        assert_eq!((s.d_ab, s.d_ar, s.d_br), (2e-6, 1e-6, 1e-6));
        assert_eq!((s.taps, s.radius), (10, 80e-9));
        assert_eq!(spec.detectors, DetectorKind::ALL.to_vec());
    }

    #[test]
    fn negative_distance_names_the_field() {
        let err = parse_config("experiment.kind = single_point\ngeometry.d_ab = -2e-6\n", "t").unwrap_err();
        assert!(err.to_string().contains("d_ab"), "{err}");
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = parse_config("experiment.kind = single_point\n\nchannel.L = ten\n", "cfg.txt").unwrap_err();
        let msg = err.to_string();
        assert!(msg.starts_with("cfg.txt:3:") && msg.contains("channel.L"), "{msg}");
        let err = parse_config("experiment.kind = single_point\nbogus.key = 1\n", "x").unwrap_err();
        assert!(err.to_string().contains("x:2: unknown key `bogus.key`"));
        let err = parse_config("experiment.kind = single_point\nno equals sign\n", "x").unwrap_err();
        assert!(err.to_string().contains("x:2:"));
        let err = parse_config("experiment.kind = single_point\nchannel.L = 3\nchannel.L = 4\n", "x").unwrap_err();
        assert!(err.to_string().contains("duplicate"));
    }

    #[test]
    fn full_spec_round_trips() {
        let text = "\
experiment.kind = ber_vs_symbol_duration
experiment.detectors = proposed_ml, fixed
experiment.snr_db = 5.5
experiment.snr_link = ra
experiment.output = out.csv
sweep.start = 5e-5
sweep.stop = 8e-4
sweep.points = 4
sweep.hold = snr
system.seed = 99
link.ab.Q = 12345.5
relay.gamma_mode = fixed
relay.gamma_a = 1e20
relay.gamma_b = 2e20
profile.distances = 1e-6, 2e-6
profile.t_max = 0.01
";
        let spec = parse_config(text, "t").unwrap();
        assert_eq!(spec.snr_link, SnrLink::Only(LinkId::Ra));
        assert_eq!(spec.system.link_params(LinkId::Ab).q, 12345.5);
        let again = parse_config(&to_config_string(&spec), "t2").unwrap();
        assert_eq!(spec, again);
    }

    #[test]
    fn relay_gamma_mode_is_checked() {
        assert!(parse_config("experiment.kind = single_point\nrelay.gamma_mode = fixed\n", "t").is_err());
        assert!(parse_config("experiment.kind = single_point\nrelay.gamma_a = 1\n", "t").is_err());
        assert!(parse_config("experiment.kind = single_point\nrelay.gamma_mode = adaptive\n", "t").is_err());
    }

    #[test]
    fn sweep_validation() {
        let mut spec = ExperimentSpec::new(ExperimentKind::BerVsSnr);
        spec.sweep.points = 0;
        assert!(spec.validate().is_err());
        spec.sweep.points = 3;
        spec.sweep.stop = spec.sweep.start;
        assert!(spec.validate().is_err());
        let mut spec = ExperimentSpec::new(ExperimentKind::BerVsSnr);
        spec.detectors.clear();
        assert!(spec.validate().is_err());
        let mut spec = ExperimentSpec::new(ExperimentKind::BerVsSymbolDuration);
        spec.sweep.hold = SweepHold::Snr;
        assert!(spec.validate().is_err());
    }

    #[test]
    fn sweep_values() {
        let s = Sweep {
            start: 0.0,
            stop: 20.0,
            points: 3,
            scale: Scale::Log,
            hold: SweepHold::Q,
        };
        assert_eq!(s.values(ExperimentKind::BerVsSnr), vec![0.0, 10.0, 20.0]);
        let lin = Sweep {
            scale: Scale::Linear,
            ..s
        }
        .values(ExperimentKind::BerVsSnr);
        assert!((db_to_linear(lin[1]) - 50.5).abs() < 1e-9);
        let ts = Sweep {
            start: 1e-4,
            stop: 4e-4,
            points: 3,
            scale: Scale::Log,
            hold: SweepHold::Q,
        };
        let v = ts.values(ExperimentKind::BerVsSymbolDuration);
        assert!((v[1] - 2e-4).abs() < 1e-15);
        let v = Sweep {
            scale: Scale::Linear,
            ..ts
        }
        .values(ExperimentKind::BerVsSymbolDuration);
        assert!((v[1] - 2.5e-4).abs() < 1e-15);
        assert_eq!(
            Sweep { points: 1, ..ts }.values(ExperimentKind::BerVsSymbolDuration),
            vec![1e-4]
        );
    }

    #[test]
    fn snr_points_hit_their_targets() {
        let mut spec = ExperimentSpec::new(ExperimentKind::BerVsSnr);
        spec.sweep.points = 3;
        for (cfg, db) in spec.points().unwrap() {
            for l in LinkId::ALL {
                let got = linear_to_db(cfg.link_snr(l).unwrap());
                assert!((got - db).abs() < 1e-9);
            }
        }
        spec.snr_link = SnrLink::Only(LinkId::Ab);
        let pts = spec.points().unwrap();
        let base = SystemConfig::default();
        assert_eq!(pts[0].0.link_params(LinkId::Ba).q, base.q_b);
    }

    #[test]
    fn ts_points_hold_q_or_snr() {
        let mut spec = ExperimentSpec::new(ExperimentKind::BerVsSymbolDuration);
        for (cfg, ts) in spec.points().unwrap() {
            assert_eq!(cfg.symbol_duration, ts);
            assert_eq!(cfg.link_params(LinkId::Ar).q, spec.system.q_a);
        }
        spec.sweep.hold = SweepHold::Snr;
        spec.snr_db = Some(7.0);
        for (cfg, _) in spec.points().unwrap() {
            assert!((linear_to_db(cfg.link_snr(LinkId::Rb).unwrap()) - 7.0).abs() < 1e-9);
        }
    }

    #[test]
    fn profile_peaks_order_by_distance() {
        let samples = channel_profile(&ProfileSpec::default()).unwrap();
        let mut peaks = Vec::new();
        for d in [20e-6, 30e-6, 40e-6] {
            let curve: Vec<_> = samples.iter().filter(|s| s.distance == d).collect();
            assert_eq!(curve.len(), 400);
            let (i, top) = curve
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.h.partial_cmp(&b.1.h).unwrap())
                .unwrap();
            // unimodal: rises to the peak then falls
            assert!(curve[..=i].windows(2).all(|w| w[0].h <= w[1].h));
            assert!(curve[i..].windows(2).all(|w| w[0].h >= w[1].h));
            peaks.push((top.t, top.h));
        }
        assert!(peaks[0].0 < peaks[1].0 && peaks[1].0 < peaks[2].0);
        assert!(peaks[0].1 > peaks[1].1 && peaks[1].1 > peaks[2].1);
    }

    #[test]
    fn csv_shape() {
        let mut spec = ExperimentSpec::new(ExperimentKind::SinglePoint);
        spec.system.num_symbols = 500;
        spec.detectors = vec![DetectorKind::Fixed];
        let out = run_experiment(&spec, 1).unwrap();
        let mut buf = Vec::new();
        write_csv(&out, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[0], BER_CSV_HEADER);
        let cols = lines[0].split(',').count();
        assert!(lines.iter().all(|l| l.split(',').count() == cols));
        assert!(lines[1].starts_with("single_point,fixed,A,1.000000000000e-4,"));
    }

    #[test]
    fn empty_table_is_not_written() {
        let dir = tempfile::tempdir().unwrap();
        let out = ExperimentOutput::Ber {
            kind: ExperimentKind::SinglePoint,
            rows: vec![],
        };
        assert!(emit_csv(&out, &dir.path().join("x.csv")).is_err());
    }
}

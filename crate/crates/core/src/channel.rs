//! Millisecond SNR traces and the SNR -> bitrate tier map.

use std::fmt;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Deserialize;

use crate::error::{Error, Result};

/// Trace resolution in seconds.
pub const SAMPLE_INTERVAL: f64 = 1e-3;
const SAMPLES_PER_SECOND: f64 = 1e3;
/// Instants this close below a slot boundary are treated as on it.
const BOUNDARY_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Deserialize)]
pub enum Direction {
    #[serde(alias = "ul")]
    UL,
    #[serde(alias = "dl")]
    DL,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::UL => "UL",
            Direction::DL => "DL",
        })
    }
}

impl FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "UL" => Ok(Direction::UL),
            "DL" => Ok(Direction::DL),
            _ => Err(Error::Config(format!("unknown direction {s:?}"))),
        }
    }
}

/// SNR samples (dB) at 1 ms spacing, sample `k` covering
/// `[start + k ms, start + (k+1) ms)`. Lookups past the end return the last
/// sample.
#[derive(Debug, Clone, PartialEq)]
pub struct SnrTrace {
    pub direction: Direction,
    pub start_time: f64,
    samples: Vec<f64>,
}

impl SnrTrace {
    pub fn new(direction: Direction, start_time: f64, samples: Vec<f64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptyTrace);
        }
        Ok(SnrTrace {
            direction,
            start_time,
            samples,
        })
    }

    /// A one-sample trace; with clamping this is a constant channel.
    pub fn constant(direction: Direction, snr_db: f64) -> Self {
        SnrTrace {
            direction,
            start_time: 0.0,
            samples: vec![snr_db],
        }
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Covered duration in seconds.
    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 * SAMPLE_INTERVAL
    }

    /// Unclamped slot index of `t`.
    pub fn slot_of(&self, t: f64) -> Result<usize> {
        if t < self.start_time {
            return Err(Error::OutOfRange {
                t,
                start: self.start_time,
            });
        }
        Ok(((t - self.start_time) * SAMPLES_PER_SECOND + BOUNDARY_SLACK).floor() as usize)
    }

    /// Start instant of slot `k`.
    pub fn slot_start(&self, k: usize) -> f64 {
        self.start_time + k as f64 / SAMPLES_PER_SECOND
    }

    pub fn sample(&self, k: usize) -> f64 {
        self.samples[k.min(self.samples.len() - 1)]
    }

    pub fn snr_at(&self, t: f64) -> Result<f64> {
        Ok(self.sample(self.slot_of(t)?))
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.samples.len() * 12 + 20);
        out.push_str("timestamp_ms,snr_db\n");
        for (k, s) in self.samples.iter().enumerate() {
            let _ = writeln!(out, "{k},{s}");
        }
        out
    }
}

pub fn load_trace(path: impl AsRef<Path>, direction: Direction) -> Result<SnrTrace> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_trace(&text, direction)
}

pub fn parse_trace(text: &str, direction: Direction) -> Result<SnrTrace> {
    let mut lines = text.lines();
    match lines.next().map(str::trim) {
        Some("timestamp_ms,snr_db") => {}
        other => {
            return Err(Error::Parse(format!(
                "trace header must be `timestamp_ms,snr_db`, got {other:?}"
            )))
        }
    }
    let mut samples = Vec::new();
    for (row, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (ts, snr) = line
            .split_once(',')
            .ok_or_else(|| Error::Parse(format!("row {}: expected two columns", row + 1)))?;
        let ts: u64 = ts
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("row {}: bad timestamp {ts:?}", row + 1)))?;
        let snr: f64 = snr
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("row {}: bad snr {snr:?}", row + 1)))?;
        let expected = samples.len() as u64;
        if ts != expected {
            return Err(Error::TraceGap { expected, found: ts });
        }
        samples.push(snr);
    }
    SnrTrace::new(direction, 0.0, samples)
}

/// Alternating high/low SNR with fixed dwell, high first.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoStateProfile {
    pub high_snr_db: f64,
    pub low_snr_db: f64,
    /// Seconds per segment.
    #[serde(default = "default_dwell")]
    pub dwell: f64,
    #[serde(default)]
    pub jitter_std_db: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_dwell() -> f64 {
    15.0
}

impl TwoStateProfile {
    pub fn new(high_snr_db: f64, low_snr_db: f64) -> Self {
        TwoStateProfile {
            high_snr_db,
            low_snr_db,
            dwell: default_dwell(),
            jitter_std_db: 0.0,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dwell > 0.0) {
            return Err(Error::Config(format!("dwell must be > 0, got {}", self.dwell)));
        }
        if !(self.jitter_std_db >= 0.0) || !self.jitter_std_db.is_finite() {
            return Err(Error::Config(format!(
                "jitter_std_db must be finite and >= 0, got {}",
                self.jitter_std_db
            )));
        }
        Ok(())
    }
}

fn direction_stream(direction: Direction) -> u64 {
    match direction {
        Direction::UL => 0,
        Direction::DL => 1,
    }
}

/// Sample `k` is the mean of segment `floor(k ms / dwell)` (even segments
/// high, odd low) plus N(0, jitter) noise drawn from a stream keyed by
/// `(seed, direction)`.
pub fn generate_two_state(profile: &TwoStateProfile, duration: f64, direction: Direction) -> Result<SnrTrace> {
    profile.validate()?;
    if !(duration > 0.0) || !duration.is_finite() {
        return Err(Error::Config(format!("trace duration must be > 0, got {duration}")));
    }
    let n = ((duration * SAMPLES_PER_SECOND) - BOUNDARY_SLACK).ceil().max(1.0) as usize;
    let dwell_samples = profile.dwell * SAMPLES_PER_SECOND;
    let mut rng = ChaCha8Rng::seed_from_u64(profile.seed);
    rng.set_stream(direction_stream(direction));
    let noise = (profile.jitter_std_db > 0.0).then(|| Normal::new(0.0, profile.jitter_std_db).expect("validated std"));
    let samples = (0..n)
        .map(|k| {
            let segment = ((k as f64 + BOUNDARY_SLACK) / dwell_samples).floor() as u64;
            let mean = if segment.is_multiple_of(2) {
                profile.high_snr_db
            } else {
                profile.low_snr_db
            };
            match &noise {
                Some(dist) => mean + dist.sample(&mut rng),
                None => mean,
            }
        })
        .collect();
    SnrTrace::new(direction, 0.0, samples)
}

/// Step map from SNR to bitrate, one tier per MCS band.
#[derive(Debug, Clone, PartialEq)]
pub struct RateMap {
    tiers: Vec<(f64, f64)>,
}

impl RateMap {
    /// `tiers` are `(snr_min_db, bitrate_bps)` with strictly ascending
    /// thresholds and non-decreasing rates.
    pub fn new(tiers: Vec<(f64, f64)>) -> Result<Self> {
        if tiers.is_empty() {
            return Err(Error::Config("rate map needs at least one tier".into()));
        }
        for w in tiers.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(Error::Config("rate map thresholds must be strictly ascending".into()));
            }
            if w[1].1 < w[0].1 {
                return Err(Error::Config("rate map bitrates must not decrease with SNR".into()));
            }
        }
        if tiers.iter().any(|&(_, r)| !(r >= 0.0) || !r.is_finite()) {
            return Err(Error::Config("rate map bitrates must be finite and >= 0".into()));
        }
        Ok(RateMap { tiers })
    }

    /// Uplink tiers 1 / 5 / 20 Mbps switching at 10 and 18 dB.
    pub fn default_ul() -> Self {
        RateMap {
            tiers: vec![(f64::NEG_INFINITY, 1e6), (10.0, 5e6), (18.0, 20e6)],
        }
    }

    /// Same thresholds as [`RateMap::default_ul`], five times the rate.
    pub fn default_dl() -> Self {
        RateMap::default_ul().scaled(5.0)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        RateMap {
            tiers: self.tiers.iter().map(|&(s, r)| (s, r * factor)).collect(),
        }
    }

    pub fn tiers(&self) -> &[(f64, f64)] {
        &self.tiers
    }

    pub fn min_bitrate(&self) -> f64 {
        self.tiers[0].1
    }

    /// Rate of the highest tier whose threshold is `<= snr`; the first tier
    /// below every threshold.
    pub fn bitrate_at(&self, snr: f64) -> f64 {
        let above = self.tiers.partition_point(|&(min, _)| min <= snr);
        self.tiers[above.saturating_sub(1)].1
    }
}

impl<'de> Deserialize<'de> for RateMap {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let tiers: Vec<(f64, f64)> = Vec::deserialize(d)?;
        RateMap::new(tiers).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_state_zero_jitter_segments() {
        let p = TwoStateProfile::new(22.0, 6.0);
        let t = generate_two_state(&p, 30.0, Direction::UL).unwrap();
        assert_eq!(t.len(), 30_000);
        assert!(t.samples()[..15_000].iter().all(|&s| s == 22.0));
        assert!(t.samples()[15_000..].iter().all(|&s| s == 6.0));
    }

    #[test]
    fn one_millisecond_trace() {
        let p = TwoStateProfile::new(22.0, 6.0);
        let t = generate_two_state(&p, 0.001, Direction::DL).unwrap();
        assert_eq!(t.samples(), &[22.0]);
    }

    #[test]
    fn jitter_is_seeded() {
        let mut p = TwoStateProfile::new(22.0, 6.0);
        p.jitter_std_db = 2.0;
        p.seed = 42;
        let a = generate_two_state(&p, 2.0, Direction::UL).unwrap();
        let b = generate_two_state(&p, 2.0, Direction::UL).unwrap();
        assert_eq!(a, b);
        let dl = generate_two_state(&p, 2.0, Direction::DL).unwrap();
        assert_ne!(a.samples(), dl.samples());
        p.seed = 43;
        assert_ne!(
            generate_two_state(&p, 2.0, Direction::UL).unwrap().samples(),
            a.samples()
        );
    }

    #[test]
    fn rejects_bad_profile() {
        let mut p = TwoStateProfile::new(22.0, 6.0);
        assert!(generate_two_state(&p, 0.0, Direction::UL).is_err());
        p.dwell = 0.0;
        assert!(generate_two_state(&p, 1.0, Direction::UL).is_err());
    }

    #[test]
    fn parse_trace_rows() {
        let t = parse_trace("timestamp_ms,snr_db\n0,10\n1,11\n2,12\n", Direction::UL).unwrap();
        assert_eq!(t.samples(), &[10.0, 11.0, 12.0]);
        assert!(matches!(
            parse_trace("timestamp_ms,snr_db\n0,10\n2,12\n", Direction::UL),
            Err(Error::TraceGap { expected: 1, found: 2 })
        ));
        assert!(matches!(
            parse_trace("timestamp_ms,snr_db\n", Direction::UL),
            Err(Error::EmptyTrace)
        ));
        assert!(matches!(
            parse_trace("timestamp_ms,snr_db\n0,abc\n", Direction::UL),
            Err(Error::Parse(_))
        ));
        assert!(matches!(parse_trace("t,s\n0,1\n", Direction::UL), Err(Error::Parse(_))));
    }

    #[test]
    fn csv_round_trip() {
        let mut p = TwoStateProfile::new(22.0, 6.0);
        p.jitter_std_db = 1.5;
        p.seed = 9;
        let t = generate_two_state(&p, 0.5, Direction::UL).unwrap();
        assert_eq!(parse_trace(&t.to_csv(), Direction::UL).unwrap(), t);
    }

    #[test]
    fn lookup_floor_and_clamp() {
        let t = SnrTrace::new(Direction::UL, 2.0, vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(t.snr_at(2.0).unwrap(), 1.0);
        assert_eq!(t.snr_at(2.0015).unwrap(), 2.0);
        assert_eq!(t.snr_at(100.0).unwrap(), 3.0);
        assert!(matches!(t.snr_at(1.9), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn tier_selection() {
        let m = RateMap::new(vec![(0.0, 1e6), (15.0, 20e6)]).unwrap();
        assert_eq!(m.bitrate_at(20.0), 20e6);
        assert_eq!(m.bitrate_at(-5.0), 1e6);
        assert_eq!(m.bitrate_at(15.0), 20e6);
        assert_eq!(RateMap::default_dl().bitrate_at(30.0), 100e6);
        assert_eq!(RateMap::default_ul().bitrate_at(-40.0), 1e6);
    }

    #[test]
    fn rate_map_validation() {
        assert!(matches!(RateMap::new(vec![]), Err(Error::Config(_))));
        assert!(RateMap::new(vec![(5.0, 1.0), (5.0, 2.0)]).is_err());
        assert!(RateMap::new(vec![(5.0, 2.0), (6.0, 1.0)]).is_err());
    }
}

//! Experiment configuration (TOML).
//!
//! ```toml
//! seed = 7
//! out_dir = "out/desk"
//! methods = ["GAI", "NoGAI", "ABR", "TradFixed"]
//! eps = "1/16"
//! videos = ["clips/a/manifest.txt"]   # optional
//! upscaler = "bicubic"                # UE2 interpolation
//! export_vmaf = false
//!
//! [synthetic]          # optional generated clip
//! frames = 900
//!
//! [channel]            # two-state profiles, or ul_trace/dl_trace CSV paths
//! duration = 30.0
//! ul = { high_snr_db = 22.0, low_snr_db = 6.0, dwell = 15.0, jitter_std_db = 0.5 }
//! dl = { high_snr_db = 25.0, low_snr_db = 25.0 }
//!
//! [rate_map]
//! ul = [[-inf, 1e6], [10.0, 5e6], [18.0, 20e6]]
//!
//! [pipeline]    # see PipelineConfig
//! [proactive]   # see ProactivePolicy
//! [abr]         # see AbrPolicy
//! [enhancer]    # kind = "null" | "stdio" | "tcp"
//! ```
//!
//! Relative paths resolve against the config file's directory.

use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::channel::{RateMap, TwoStateProfile};
use crate::control::{AbrPolicy, ProactivePolicy};
use crate::error::{Error, Result};
use crate::frame::Eps;
use crate::scaling::Interpolation;
use crate::sim::PipelineConfig;
use crate::synth::SyntheticSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    /// Proactive control, MEC enhancement.
    Gai,
    /// Proactive control, UE2 interpolation.
    NoGai,
    /// Reactive probe-and-adapt, UE2 interpolation.
    Abr,
    /// Always downscaled at the configured fraction, no control loop.
    TradFixed,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Gai, Method::NoGai, Method::Abr, Method::TradFixed];

    pub fn name(self) -> &'static str {
        match self {
            Method::Gai => "GAI",
            Method::NoGai => "NoGAI",
            Method::Abr => "ABR",
            Method::TradFixed => "TradFixed",
        }
    }

    pub fn is_proactive(self) -> bool {
        matches!(self, Method::Gai | Method::NoGai)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown method {s:?} (expected GAI, NoGAI, ABR or TradFixed)")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ChannelSpec {
    TwoState {
        ul: TwoStateProfile,
        dl: TwoStateProfile,
        duration: f64,
    },
    Traces {
        ul: PathBuf,
        dl: PathBuf,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum EnhancerSpec {
    /// Bicubic stand-in.
    Null,
    /// Plugin process spoken to over stdin/stdout.
    Stdio {
        command: Vec<String>,
    },
    Tcp {
        address: String,
    },
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub out_dir: PathBuf,
    pub methods: Vec<Method>,
    pub eps: Eps,
    pub videos: Vec<PathBuf>,
    pub synthetic: Option<SyntheticSpec>,
    pub channel: ChannelSpec,
    pub ul_map: RateMap,
    pub dl_map: RateMap,
    pub pipeline: PipelineConfig,
    pub proactive: ProactivePolicy,
    pub abr: AbrPolicy,
    pub upscaler: Interpolation,
    pub enhancer: EnhancerSpec,
    pub enhancer_fallback: bool,
    pub export_vmaf: bool,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    seed: u64,
    #[serde(default = "default_out_dir")]
    out_dir: PathBuf,
    methods: Vec<String>,
    eps: Eps,
    #[serde(default)]
    videos: Vec<PathBuf>,
    synthetic: Option<SyntheticSpec>,
    channel: RawChannel,
    #[serde(default)]
    rate_map: RawRateMaps,
    #[serde(default)]
    pipeline: Option<toml::Table>,
    #[serde(default)]
    proactive: ProactivePolicy,
    #[serde(default)]
    abr: AbrPolicy,
    #[serde(default = "default_upscaler")]
    upscaler: Interpolation,
    #[serde(default)]
    enhancer: RawEnhancer,
    #[serde(default)]
    export_vmaf: bool,
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_upscaler() -> Interpolation {
    Interpolation::Bicubic
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProfile {
    high_snr_db: f64,
    low_snr_db: f64,
    dwell: Option<f64>,
    jitter_std_db: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawChannel {
    duration: Option<f64>,
    ul: Option<RawProfile>,
    dl: Option<RawProfile>,
    ul_trace: Option<PathBuf>,
    dl_trace: Option<PathBuf>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawRateMaps {
    ul: Option<RateMap>,
    dl: Option<RateMap>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEnhancer {
    #[serde(default = "default_enhancer_kind")]
    kind: String,
    #[serde(default)]
    command: Vec<String>,
    address: Option<String>,
    #[serde(default)]
    fallback: bool,
}

fn default_enhancer_kind() -> String {
    "null".into()
}

impl Default for RawEnhancer {
    fn default() -> Self {
        RawEnhancer {
            kind: default_enhancer_kind(),
            command: Vec::new(),
            address: None,
            fallback: false,
        }
    }
}

impl RawProfile {
    fn into_profile(self, seed: u64) -> TwoStateProfile {
        let mut p = TwoStateProfile::new(self.high_snr_db, self.low_snr_db);
        if let Some(d) = self.dwell {
            p.dwell = d;
        }
        p.jitter_std_db = self.jitter_std_db.unwrap_or(0.0);
        p.seed = seed;
        p
    }
}

impl ExperimentConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text =
            fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        ExperimentConfig::parse(&text, base)
    }

    /// Parses config text; relative paths resolve against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let resolve = |p: PathBuf| if p.is_absolute() { p } else { base.join(p) };

        let mut methods = Vec::new();
        let mut seen = BTreeSet::new();
        for m in &raw.methods {
            let m: Method = m.parse()?;
            if !seen.insert(m) {
                return Err(Error::Config(format!("method {m} listed twice")));
            }
            methods.push(m);
        }

        let c = raw.channel;
        let channel = match (c.ul, c.dl, c.ul_trace, c.dl_trace) {
            (Some(ul), Some(dl), None, None) => {
                let ul = ul.into_profile(raw.seed);
                let dl = dl.into_profile(raw.seed);
                ChannelSpec::TwoState {
                    duration: c.duration.unwrap_or(2.0 * ul.dwell),
                    ul,
                    dl,
                }
            }
            (None, None, Some(ul), Some(dl)) => ChannelSpec::Traces {
                ul: resolve(ul),
                dl: resolve(dl),
            },
            _ => {
                return Err(Error::Config(
                    "channel needs either `ul` and `dl` profiles or `ul_trace` and `dl_trace` paths".into(),
                ))
            }
        };

        let mut pipeline = PipelineConfig::default();
        if let Some(table) = raw.pipeline {
            let explicit_control_delay = table.contains_key("control_delay");
            pipeline = toml::Value::Table(table)
                .try_into()
                .map_err(|e: toml::de::Error| Error::Config(format!("pipeline: {e}")))?;
            if !explicit_control_delay {
                pipeline.control_delay = pipeline.cn_delay;
            }
        }

        let enhancer = match raw.enhancer.kind.as_str() {
            "null" => EnhancerSpec::Null,
            "stdio" if !raw.enhancer.command.is_empty() => EnhancerSpec::Stdio {
                command: raw.enhancer.command,
            },
            "tcp" if raw.enhancer.address.is_some() => EnhancerSpec::Tcp {
                address: raw.enhancer.address.unwrap(),
            },
            other => {
                return Err(Error::Config(format!(
                    "enhancer kind {other:?} needs `command` (stdio) or `address` (tcp)"
                )))
            }
        };

        let ul_map = raw.rate_map.ul.unwrap_or_else(RateMap::default_ul);
        let dl_map = raw.rate_map.dl.unwrap_or_else(|| ul_map.scaled(5.0));

        let cfg = ExperimentConfig {
            seed: raw.seed,
            out_dir: resolve(raw.out_dir),
            methods,
            eps: raw.eps,
            videos: raw.videos.into_iter().map(resolve).collect(),
            synthetic: raw.synthetic,
            channel,
            ul_map,
            dl_map,
            pipeline,
            proactive: raw.proactive,
            abr: raw.abr,
            upscaler: raw.upscaler,
            enhancer,
            enhancer_fallback: raw.enhancer.fallback,
            export_vmaf: raw.export_vmaf,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() {
            return Err(Error::Config("at least one method is required".into()));
        }
        if self.videos.is_empty() && self.synthetic.is_none() {
            return Err(Error::Config(
                "no videos: list manifests in `videos` or add [synthetic]".into(),
            ));
        }
        for v in &self.videos {
            if !v.is_file() {
                return Err(Error::Config(format!("video manifest {} does not exist", v.display())));
            }
        }
        match &self.channel {
            ChannelSpec::TwoState { ul, dl, duration } => {
                ul.validate()?;
                dl.validate()?;
                if !(*duration > 0.0) {
                    return Err(Error::Config("channel.duration must be > 0".into()));
                }
            }
            ChannelSpec::Traces { ul, dl } => {
                for p in [ul, dl] {
                    if !p.is_file() {
                        return Err(Error::Config(format!("trace {} does not exist", p.display())));
                    }
                }
            }
        }
        if let Some(s) = &self.synthetic {
            if s.width == 0 || s.height == 0 || !(s.channels == 1 || s.channels == 3) || s.fps == 0 {
                return Err(Error::Config(
                    "synthetic: width/height/fps must be > 0, channels 1 or 3".into(),
                ));
            }
        }
        self.pipeline.validate()?;
        self.proactive.validate()?;
        self.abr.validate()?;
        Ok(())
    }

    /// Digest of everything that determines the inputs a method sees
    /// (videos, channel, rates, costs, policies, fraction). Runs are
    /// comparable only when seed and scenario agree.
    pub fn scenario_id(&self) -> String {
        let description = format!(
            "{:?}|{:?}|{:?}|{:?}|{:?}|{:?}|{:?}|{:?}|{:?}|{}|{:?}",
            self.videos,
            self.synthetic,
            self.channel,
            self.ul_map,
            self.dl_map,
            self.pipeline,
            self.proactive,
            self.abr,
            self.upscaler,
            self.eps,
            self.enhancer,
        );
        let digest = Sha256::digest(description.as_bytes());
        hex::encode(&digest[..8])
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        if let ChannelSpec::TwoState { ul, dl, .. } = &mut self.channel {
            ul.seed = seed;
            dl.seed = seed;
        }
        self
    }
}

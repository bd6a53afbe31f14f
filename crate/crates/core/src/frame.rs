//! Frames, per-frame transmission metadata and the retained-pixel fraction.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer};

use crate::error::{Error, Result};

/// Fraction of the original pixels kept when a frame is downscaled.
///
/// Always in `(0, 1]`; `1` means the frame is sent untouched.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Eps(f64);

impl Eps {
    pub const FULL: Eps = Eps(1.0);

    pub fn new(value: f64) -> Result<Self> {
        if value > 0.0 && value <= 1.0 {
            Ok(Eps(value))
        } else {
            Err(Error::InvalidEps(value))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_full(self) -> bool {
        self.0 == 1.0
    }

    /// Per-dimension scale factor, `sqrt(eps)`.
    pub fn per_dim_factor(self) -> f64 {
        self.0.sqrt()
    }
}

impl fmt::Display for Eps {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Accepts decimals (`0.0625`) and ratios (`1/16`).
impl FromStr for Eps {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Eps::new(parse_rational(s)?)
    }
}

impl<'de> Deserialize<'de> for Eps {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        let value = match Raw::deserialize(d)? {
            Raw::Num(v) => v,
            Raw::Text(s) => parse_rational(&s).map_err(serde::de::Error::custom)?,
        };
        Eps::new(value).map_err(serde::de::Error::custom)
    }
}

pub(crate) fn parse_rational(s: &str) -> Result<f64> {
    let s = s.trim();
    let bad = || Error::Parse(format!("not a number or ratio: {s:?}"));
    match s.split_once('/') {
        Some((num, den)) => {
            let num: f64 = num.trim().parse().map_err(|_| bad())?;
            let den: f64 = den.trim().parse().map_err(|_| bad())?;
            if den == 0.0 {
                return Err(bad());
            }
            Ok(num / den)
        }
        None => s.parse().map_err(|_| bad()),
    }
}

/// Frames per second as an exact ratio, so `30000/1001` stays exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameRate {
    num: u32,
    den: u32,
}

impl FrameRate {
    pub fn new(num: u32, den: u32) -> Result<Self> {
        if num == 0 || den == 0 {
            return Err(Error::Parse(format!("invalid frame rate {num}/{den}")));
        }
        Ok(FrameRate { num, den })
    }

    pub fn per_second(fps: u32) -> Result<Self> {
        FrameRate::new(fps, 1)
    }

    pub fn as_f64(self) -> f64 {
        f64::from(self.num) / f64::from(self.den)
    }

    /// Capture instant of frame `id`, i.e. `id / fps`.
    pub fn capture_time(self, id: u64) -> f64 {
        (id as f64 * f64::from(self.den)) / f64::from(self.num)
    }
}

impl FromStr for FrameRate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::Parse(format!("invalid frame rate {s:?}"));
        let (num, den) = s.split_once('/').unwrap_or((s, "1"));
        FrameRate::new(
            num.trim().parse().map_err(|_| bad())?,
            den.trim().parse().map_err(|_| bad())?,
        )
    }
}

impl fmt::Display for FrameRate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

/// A decoded 8-bit raster: `width x height`, 1 (gray) or 3 (RGB) interleaved
/// channels, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    id: u64,
    capture_time: f64,
    width: usize,
    height: usize,
    channels: usize,
    pixels: Vec<u8>,
}

impl Frame {
    pub fn new(width: usize, height: usize, channels: usize, pixels: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::DimensionMismatch(format!(
                "frame must be at least 1x1, got {width}x{height}"
            )));
        }
        if channels != 1 && channels != 3 {
            return Err(Error::UnsupportedFormat(format!(
                "{channels} channels (expected 1 or 3)"
            )));
        }
        let expected = width * height * channels;
        if pixels.len() != expected {
            return Err(Error::DimensionMismatch(format!(
                "{width}x{height}x{channels} frame needs {expected} samples, got {}",
                pixels.len()
            )));
        }
        Ok(Frame {
            id: 0,
            capture_time: 0.0,
            width,
            height,
            channels,
            pixels,
        })
    }

    /// A frame with every sample set to `value`.
    pub fn filled(width: usize, height: usize, channels: usize, value: u8) -> Result<Self> {
        Frame::new(width, height, channels, vec![value; width * height * channels])
    }

    pub fn with_timing(mut self, id: u64, capture_time: f64) -> Self {
        self.id = id;
        self.capture_time = capture_time;
        self
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn capture_time(&self) -> f64 {
        self.capture_time
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<u8> {
        self.pixels
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.width, self.height, self.channels)
    }

    /// Number of samples, `m * n * C`.
    pub fn sample_count(&self) -> usize {
        self.pixels.len()
    }

    /// Raw payload size in bits: `m * n * C * 8`.
    pub fn payload_bits(&self) -> u64 {
        self.pixels.len() as u64 * 8
    }

    #[inline]
    pub fn sample(&self, x: usize, y: usize, c: usize) -> u8 {
        self.pixels[(y * self.width + x) * self.channels + c]
    }
}

/// Metadata travelling with each transmitted frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameMeta {
    pub frame_id: u64,
    pub compressed: bool,
    pub eps: Eps,
    pub original_width: usize,
    pub original_height: usize,
    pub payload_bits: u64,
}

impl FrameMeta {
    /// Describes `transmitted`, which was derived from an original of
    /// `original_width x original_height` at retained fraction `eps`.
    pub fn describe(transmitted: &Frame, eps: Eps, original_width: usize, original_height: usize) -> Self {
        FrameMeta {
            frame_id: transmitted.id(),
            compressed: !eps.is_full(),
            eps,
            original_width,
            original_height,
            payload_bits: transmitted.payload_bits(),
        }
    }
}

/// An ordered clip of equally sized frames.
#[derive(Debug, Clone)]
pub struct VideoSource {
    pub source_id: String,
    pub frame_rate: FrameRate,
    frames: Vec<Frame>,
}

impl VideoSource {
    /// Assigns ids `0..N` and capture times `id / fps`; all frames must share
    /// dimensions.
    pub fn new(source_id: impl Into<String>, frame_rate: FrameRate, frames: Vec<Frame>) -> Result<Self> {
        if let Some(first) = frames.first() {
            let dims = first.dims();
            if let Some((i, f)) = frames.iter().enumerate().find(|(_, f)| f.dims() != dims) {
                return Err(Error::DimensionMismatch(format!(
                    "frame {i} is {}x{}x{}, frame 0 is {}x{}x{}",
                    f.width, f.height, f.channels, dims.0, dims.1, dims.2
                )));
            }
        }
        let frames = frames
            .into_iter()
            .enumerate()
            .map(|(i, f)| {
                let id = i as u64;
                f.with_timing(id, frame_rate.capture_time(id))
            })
            .collect();
        Ok(VideoSource {
            source_id: source_id.into(),
            frame_rate,
            frames,
        })
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eps_bounds() {
        assert!(Eps::new(0.0).is_err());
        assert!(Eps::new(-0.1).is_err());
        assert!(Eps::new(1.000001).is_err());
        assert!(Eps::new(1.0).unwrap().is_full());
        assert_eq!("1/16".parse::<Eps>().unwrap().value(), 0.0625);
        assert_eq!("0.2".parse::<Eps>().unwrap().value(), 0.2);
        assert!("1/0".parse::<Eps>().is_err());
    }

    #[test]
    fn frame_rejects_wrong_length() {
        assert!(matches!(
            Frame::new(2, 2, 1, vec![0; 3]),
            Err(Error::DimensionMismatch(_))
        ));
        assert!(Frame::new(0, 2, 1, vec![]).is_err());
        assert!(matches!(
            Frame::new(1, 1, 2, vec![0; 2]),
            Err(Error::UnsupportedFormat(_))
        ));
    }

    #[test]
    fn payload_bits_is_raw_size() {
        let f = Frame::filled(320, 240, 3, 0).unwrap();
        assert_eq!(f.payload_bits(), 320 * 240 * 3 * 8);
    }

    #[test]
    fn meta_compressed_iff_eps_below_one() {
        let f = Frame::filled(4, 4, 1, 9).unwrap();
        let full = FrameMeta::describe(&f, Eps::FULL, 4, 4);
        assert!(!full.compressed);
        let small = Frame::filled(2, 2, 1, 9).unwrap();
        let down = FrameMeta::describe(&small, Eps::new(0.25).unwrap(), 4, 4);
        assert!(down.compressed);
        assert_eq!(down.payload_bits, 32);
    }

    #[test]
    fn capture_times_follow_frame_rate() {
        let fr = FrameRate::per_second(30).unwrap();
        let frames = (0..3).map(|_| Frame::filled(2, 2, 1, 0).unwrap()).collect();
        let v = VideoSource::new("clip", fr, frames).unwrap();
        let times: Vec<f64> = v.frames().iter().map(Frame::capture_time).collect();
        assert_eq!(times, vec![0.0, 1.0 / 30.0, 2.0 / 30.0]);
        assert_eq!(v.frames()[2].id(), 2);

        let ntsc: FrameRate = "30000/1001".parse().unwrap();
        assert_eq!(ntsc.capture_time(30000), 1001.0);
    }

    #[test]
    fn video_rejects_mixed_dimensions() {
        let frames = vec![
            Frame::filled(640, 480, 1, 0).unwrap(),
            Frame::filled(320, 240, 1, 0).unwrap(),
        ];
        let err = VideoSource::new("mixed", FrameRate::per_second(30).unwrap(), frames).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch(_)));
    }
}

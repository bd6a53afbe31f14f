//! Procedural test footage: a drifting colour gradient with a periodic
//! pattern and seeded noise.

use std::f64::consts::TAU;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::error::Result;
use crate::frame::{Frame, FrameRate, VideoSource};
use crate::scaling::to_sample;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SyntheticSpec {
    pub frames: u64,
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub fps: u32,
    /// Peak amplitude of the per-sample noise.
    pub noise: u8,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            frames: 300,
            width: 320,
            height: 240,
            channels: 3,
            fps: 30,
            noise: 6,
        }
    }
}

/// Frame-independent parts of the pattern.
struct Pattern {
    /// Colour gradient, channel-interleaved.
    base: Vec<f64>,
    ripple_y: Vec<f64>,
    ring_sin: Vec<f64>,
    ring_cos: Vec<f64>,
    /// Random byte to noise offset, approximately uniform on `-noise..=noise`.
    noise: [f64; 256],
}

impl Pattern {
    fn new(spec: &SyntheticSpec) -> Pattern {
        let (w, h, c) = (spec.width, spec.height, spec.channels);
        let ripple_y = (0..h).map(|y| (TAU * y as f64 / 17.0).cos()).collect();
        let mut base = Vec::with_capacity(w * h * c);
        let mut ring_sin = Vec::with_capacity(w * h);
        let mut ring_cos = Vec::with_capacity(w * h);
        for y in 0..h {
            let fy = y as f64 / h as f64;
            for x in 0..w {
                let fx = x as f64 / w as f64;
                let (s, c) = (TAU * (fx - 0.5).hypot(fy - 0.5) * 9.0).sin_cos();
                ring_sin.push(s);
                ring_cos.push(c);
                for ch in 0..spec.channels {
                    base.push(match ch {
                        0 => 200.0 * fx + 40.0 * fy,
                        1 => 60.0 + 150.0 * fy,
                        _ => 220.0 - 160.0 * fx,
                    });
                }
            }
        }
        let span = 2 * i32::from(spec.noise) + 1;
        let noise = std::array::from_fn(|b| f64::from(((b as i32 * span) >> 8) - i32::from(spec.noise)));
        Pattern {
            base,
            ripple_y,
            ring_sin,
            ring_cos,
            noise,
        }
    }

    fn frame(&self, spec: &SyntheticSpec, index: u64, seed: u64) -> Result<Frame> {
        let (w, h, c) = (spec.width, spec.height, spec.channels);
        let mut px = vec![0u8; w * h * c];
        if spec.noise > 0 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(index);
            rng.fill_bytes(&mut px);
        }
        let shift = index as f64;
        let ripple_x: Vec<f64> = (0..w).map(|x| (TAU * (x as f64 + 2.0 * shift) / 23.0).sin()).collect();
        let (phase_sin, phase_cos) = (TAU * shift / 30.0).sin_cos();
        let row_len = w * c;
        for y in 0..h {
            let out_row = &mut px[y * row_len..(y + 1) * row_len];
            let base_row = &self.base[y * row_len..(y + 1) * row_len];
            let ring_sin = &self.ring_sin[y * w..(y + 1) * w];
            let ring_cos = &self.ring_cos[y * w..(y + 1) * w];
            for x in 0..w {
                let ripple = ripple_x[x] * self.ripple_y[y];
                // sin(r - phase)
                let rings = ring_sin[x] * phase_cos - ring_cos[x] * phase_sin;
                let pattern = 28.0 * ripple + 18.0 * rings;
                for ch in x * c..(x + 1) * c {
                    let o = &mut out_row[ch];
                    *o = to_sample(base_row[ch] + pattern + self.noise[usize::from(*o)]);
                }
            }
        }
        Frame::new(w, h, c, px)
    }
}

pub fn gradient_noise_frame(spec: &SyntheticSpec, index: u64, seed: u64) -> Result<Frame> {
    Pattern::new(spec).frame(spec, index, seed)
}

pub fn synthetic_video(spec: &SyntheticSpec, seed: u64) -> Result<VideoSource> {
    let pattern = Pattern::new(spec);
    let frames = (0..spec.frames)
        .map(|i| pattern.frame(spec, i, seed))
        .collect::<Result<Vec<_>>>()?;
    VideoSource::new("synthetic", FrameRate::per_second(spec.fps)?, frames)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_varied() {
        let spec = SyntheticSpec {
            frames: 2,
            width: 16,
            height: 8,
            ..SyntheticSpec::default()
        };
        let a = gradient_noise_frame(&spec, 1, 5).unwrap();
        assert_eq!(a, gradient_noise_frame(&spec, 1, 5).unwrap());
        assert_ne!(a, gradient_noise_frame(&spec, 0, 5).unwrap());
        assert_eq!(a.dims(), (16, 8, 3));
        let distinct: std::collections::BTreeSet<u8> = a.pixels().iter().copied().collect();
        assert!(distinct.len() > 50);
    }
}

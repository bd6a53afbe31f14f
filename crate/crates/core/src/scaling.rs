//! Retained-fraction downscaling, interpolating upscalers and the enhancer
//! hook.
//!
//! Sample positions are centre-aligned throughout: output coordinate `x` of
//! a `dst`-wide raster sits at source coordinate `(x + 0.5) * src / dst - 0.5`.

use std::fmt;
use std::str::FromStr;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::frame::{Eps, Frame};
use crate::plugin::EnhancerClient;

/// Keys cubic kernel parameter.
pub const BICUBIC_A: f64 = -0.5;

/// Target raster size for a frame of `width x height` downscaled at `eps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleSpec {
    pub eps: Eps,
    pub per_dim_factor: f64,
    pub target_width: usize,
    pub target_height: usize,
}

impl ScaleSpec {
    pub fn new(width: usize, height: usize, eps: Eps) -> Self {
        let factor = eps.per_dim_factor();
        let scale = |d: usize| ((d as f64 * factor).round() as usize).max(1);
        let (target_width, target_height) = if eps.is_full() {
            (width, height)
        } else {
            (scale(width), scale(height))
        };
        ScaleSpec {
            eps,
            per_dim_factor: factor,
            target_width,
            target_height,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Interpolation {
    Nearest,
    Bilinear,
    Bicubic,
}

impl fmt::Display for Interpolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Interpolation::Nearest => "nearest",
            Interpolation::Bilinear => "bilinear",
            Interpolation::Bicubic => "bicubic",
        })
    }
}

impl FromStr for Interpolation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "nearest" => Ok(Interpolation::Nearest),
            "bilinear" => Ok(Interpolation::Bilinear),
            "bicubic" => Ok(Interpolation::Bicubic),
            other => Err(Error::Config(format!("unknown interpolation {other:?}"))),
        }
    }
}

/// Every way a downscaled frame can be brought back to full size.
pub enum Upscaler {
    Nearest,
    Bilinear,
    Bicubic,
    /// Learned reconstruction served by an external plugin process.
    Enhancer(EnhancerClient),
    /// Stand-in enhancer: bicubic interpolation, so the pipeline runs without
    /// a plugin.
    NullEnhancer,
}

impl Upscaler {
    pub fn upscale(&mut self, frame: &Frame, target_w: usize, target_h: usize) -> Result<Frame> {
        match self {
            Upscaler::Nearest => upscale_traditional(frame, target_w, target_h, Interpolation::Nearest),
            Upscaler::Bilinear => upscale_traditional(frame, target_w, target_h, Interpolation::Bilinear),
            Upscaler::Bicubic | Upscaler::NullEnhancer => {
                upscale_traditional(frame, target_w, target_h, Interpolation::Bicubic)
            }
            Upscaler::Enhancer(client) => {
                check_target(frame, target_w, target_h)?;
                client.enhance(frame, target_w, target_h)
            }
        }
    }

    pub fn is_enhancer(&self) -> bool {
        matches!(self, Upscaler::Enhancer(_) | Upscaler::NullEnhancer)
    }
}

impl fmt::Debug for Upscaler {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Upscaler::Nearest => "Nearest",
            Upscaler::Bilinear => "Bilinear",
            Upscaler::Bicubic => "Bicubic",
            Upscaler::Enhancer(_) => "Enhancer",
            Upscaler::NullEnhancer => "NullEnhancer",
        })
    }
}

/// Uniform centre-aligned point subsampling keeping a fraction `eps` of the
/// pixels. Output row `i` copies input row `floor((i + 0.5) * n / n')`, and
/// likewise for columns.
pub fn downscale(frame: &Frame, eps: f64) -> Result<Frame> {
    let eps = Eps::new(eps)?;
    if eps.is_full() {
        return Ok(frame.clone());
    }
    let (w, h, c) = frame.dims();
    let spec = ScaleSpec::new(w, h, eps);
    let (tw, th) = (spec.target_width, spec.target_height);
    let cols: Vec<usize> = (0..tw).map(|j| subsample_index(j, w, tw)).collect();
    let mut out = Vec::with_capacity(tw * th * c);
    let src = frame.pixels();
    for i in 0..th {
        let row = subsample_index(i, h, th) * w;
        for &col in &cols {
            let at = (row + col) * c;
            out.extend_from_slice(&src[at..at + c]);
        }
    }
    Ok(Frame::new(tw, th, c, out)?.with_timing(frame.id(), frame.capture_time()))
}

/// `floor((i + 0.5) * src / dst)` in exact integer arithmetic.
fn subsample_index(i: usize, src: usize, dst: usize) -> usize {
    ((2 * i + 1) * src) / (2 * dst)
}

fn check_target(frame: &Frame, target_w: usize, target_h: usize) -> Result<()> {
    if target_w < frame.width() || target_h < frame.height() {
        return Err(Error::InvalidTarget {
            src_w: frame.width(),
            src_h: frame.height(),
            target_w,
            target_h,
        });
    }
    Ok(())
}

pub fn upscale_traditional(frame: &Frame, target_w: usize, target_h: usize, kind: Interpolation) -> Result<Frame> {
    check_target(frame, target_w, target_h)?;
    let out = match kind {
        Interpolation::Nearest => nearest(frame, target_w, target_h),
        Interpolation::Bilinear => separable(frame, target_w, target_h, bilinear_taps),
        Interpolation::Bicubic => separable(frame, target_w, target_h, bicubic_taps),
    };
    Ok(Frame::new(target_w, target_h, frame.channels(), out)?.with_timing(frame.id(), frame.capture_time()))
}

/// Upscales through an enhancer (plugin or the bicubic stand-in).
pub fn enhance(frame: &Frame, target_w: usize, target_h: usize, enhancer: &mut Upscaler) -> Result<Frame> {
    if !enhancer.is_enhancer() {
        return Err(Error::Config(format!("{enhancer:?} is not an enhancer")));
    }
    enhancer.upscale(frame, target_w, target_h)
}

fn nearest(frame: &Frame, tw: usize, th: usize) -> Vec<u8> {
    let (w, h, c) = frame.dims();
    let cols: Vec<usize> = (0..tw).map(|x| subsample_index(x, w, tw)).collect();
    let src = frame.pixels();
    let mut out = Vec::with_capacity(tw * th * c);
    for y in 0..th {
        let row = subsample_index(y, h, th) * w;
        for &col in &cols {
            let at = (row + col) * c;
            out.extend_from_slice(&src[at..at + c]);
        }
    }
    out
}

/// Up to four source indices (edge-clamped) and their weights.
#[derive(Clone, Copy)]
struct Taps {
    index: [usize; 4],
    weight: [f64; 4],
}

fn source_position(dst_index: usize, src_len: usize, dst_len: usize) -> f64 {
    (dst_index as f64 + 0.5) * src_len as f64 / dst_len as f64 - 0.5
}

fn clamp_index(i: i64, len: usize) -> usize {
    i.clamp(0, len as i64 - 1) as usize
}

fn bilinear_taps(dst_index: usize, src_len: usize, dst_len: usize) -> Taps {
    let pos = source_position(dst_index, src_len, dst_len);
    let base = pos.floor();
    let t = pos - base;
    let base = base as i64;
    Taps {
        index: [clamp_index(base, src_len), clamp_index(base + 1, src_len), 0, 0],
        weight: [1.0 - t, t, 0.0, 0.0],
    }
}

fn cubic_weight(d: f64) -> f64 {
    let a = BICUBIC_A;
    let d = d.abs();
    if d <= 1.0 {
        ((a + 2.0) * d - (a + 3.0)) * d * d + 1.0
    } else if d < 2.0 {
        ((a * d - 5.0 * a) * d + 8.0 * a) * d - 4.0 * a
    } else {
        0.0
    }
}

fn bicubic_taps(dst_index: usize, src_len: usize, dst_len: usize) -> Taps {
    let pos = source_position(dst_index, src_len, dst_len);
    let base = pos.floor();
    let t = pos - base;
    let base = base as i64;
    Taps {
        index: [
            clamp_index(base - 1, src_len),
            clamp_index(base, src_len),
            clamp_index(base + 1, src_len),
            clamp_index(base + 2, src_len),
        ],
        weight: [
            cubic_weight(t + 1.0),
            cubic_weight(t),
            cubic_weight(1.0 - t),
            cubic_weight(2.0 - t),
        ],
    }
}

/// Round half away from zero, then clamp to `0..=255`.
pub(crate) fn to_sample(v: f64) -> u8 {
    // NaN maps to 0 like `f64::round(..) as u8` does.
    let v = if v.is_nan() { 0.0 } else { v.clamp(0.0, 255.0) };
    let t = v as u32;
    (t + u32::from(v - f64::from(t) >= 0.5)) as u8
}

/// Horizontal pass into an `f64` buffer, then the vertical pass; a single
/// rounding at the end.
fn separable(frame: &Frame, tw: usize, th: usize, taps: fn(usize, usize, usize) -> Taps) -> Vec<u8> {
    let (w, h, c) = frame.dims();
    let src = frame.pixels();
    let xtaps: Vec<Taps> = (0..tw).map(|x| taps(x, w, tw)).collect();
    let ytaps: Vec<Taps> = (0..th).map(|y| taps(y, h, th)).collect();

    let mut horiz = vec![0.0f64; tw * h * c];
    for y in 0..h {
        let src_row = &src[y * w * c..(y + 1) * w * c];
        let dst_row = &mut horiz[y * tw * c..(y + 1) * tw * c];
        for (t, dst) in xtaps.iter().zip(dst_row.chunks_exact_mut(c)) {
            let [i0, i1, i2, i3] = t.index.map(|i| i * c);
            let [w0, w1, w2, w3] = t.weight;
            for (ch, d) in dst.iter_mut().enumerate() {
                let s = |i: usize| f64::from(src_row[i + ch]);
                *d = 0.0 + w0 * s(i0) + w1 * s(i1) + w2 * s(i2) + w3 * s(i3);
            }
        }
    }

    let row_len = tw * c;
    let mut out = vec![0u8; th * row_len];
    let mut acc = vec![0.0f64; row_len];
    for (y, t) in ytaps.iter().enumerate() {
        acc.fill(0.0);
        for k in 0..4 {
            let w = t.weight[k];
            let src_row = &horiz[t.index[k] * row_len..(t.index[k] + 1) * row_len];
            for (a, s) in acc.iter_mut().zip(src_row) {
                *a += w * s;
            }
        }
        let dst_row = &mut out[y * row_len..(y + 1) * row_len];
        for (v, a) in dst_row.iter_mut().zip(&acc) {
            *v = to_sample(*a);
        }
    }
    out
}

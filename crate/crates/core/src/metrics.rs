//! Frame fidelity (MSE / PSNR), empirical CDFs and percentile helpers.

use std::cmp::Ordering;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::frame::Frame;
use crate::pnm::{raster_name, store_frame};

/// Peak sample value for 8-bit channels.
pub const MAX_I: f64 = 255.0;

/// Fidelity of a delivered frame against its original. `psnr_db` is
/// `f64::INFINITY` exactly when the frames are identical.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QualityScore {
    pub mse: f64,
    pub psnr_db: f64,
}

impl QualityScore {
    pub fn from_mse(mse: f64) -> Self {
        let psnr_db = if mse == 0.0 {
            f64::INFINITY
        } else {
            10.0 * (MAX_I * MAX_I / mse).log10()
        };
        QualityScore { mse, psnr_db }
    }

    pub const LOSSLESS: QualityScore = QualityScore {
        mse: 0.0,
        psnr_db: f64::INFINITY,
    };
}

fn same_dims(a: &Frame, b: &Frame) -> Result<()> {
    if a.dims() != b.dims() {
        let (aw, ah, ac) = a.dims();
        let (bw, bh, bc) = b.dims();
        return Err(Error::DimensionMismatch(format!("{aw}x{ah}x{ac} vs {bw}x{bh}x{bc}")));
    }
    Ok(())
}

/// Sum of squared differences, exact.
pub fn squared_error_sum(a: &Frame, b: &Frame) -> Result<u64> {
    same_dims(a, b)?;
    // 65,536 squared 8-bit differences fit in a u32.
    const CHUNK: usize = 1 << 16;
    Ok(a.pixels()
        .chunks(CHUNK)
        .zip(b.pixels().chunks(CHUNK))
        .map(|(xs, ys)| {
            let part: u32 = xs
                .iter()
                .zip(ys)
                .map(|(&x, &y)| {
                    let d = u32::from(x.abs_diff(y));
                    d * d
                })
                .sum();
            u64::from(part)
        })
        .sum())
}

/// Mean squared error over all `m * n * C` samples. The sum is accumulated
/// in integers and divided once.
pub fn mse(a: &Frame, b: &Frame) -> Result<f64> {
    Ok(squared_error_sum(a, b)? as f64 / a.sample_count() as f64)
}

pub fn psnr(a: &Frame, b: &Frame) -> Result<QualityScore> {
    Ok(QualityScore::from_mse(mse(a, b)?))
}

/// Finite values first in ascending order, `+inf` after all of them.
pub fn ascending(a: &f64, b: &f64) -> Ordering {
    a.total_cmp(b)
}

/// `inf` for the sentinel, shortest round-trip decimal otherwise.
pub fn format_value(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".to_string()
    } else if v == f64::NEG_INFINITY {
        "-inf".to_string()
    } else {
        format!("{v}")
    }
}

/// Nearest-rank percentile of an ascending slice: the value at rank
/// `ceil(p / 100 * N)` (1-based), clamped to `[1, N]`.
pub fn percentile(sorted: &[f64], p: f64) -> Option<f64> {
    if sorted.is_empty() {
        return None;
    }
    let n = sorted.len();
    let rank = ((p / 100.0) * n as f64).ceil() as usize;
    Some(sorted[rank.clamp(1, n) - 1])
}

/// Empirical CDF: the k-th smallest value (1-based) has cumulative fraction
/// `k / N`.
#[derive(Debug, Clone, PartialEq)]
pub struct CdfSeries {
    pub metric_name: String,
    pub sorted_values: Vec<f64>,
    pub cumulative_fraction: Vec<f64>,
}

impl CdfSeries {
    pub fn len(&self) -> usize {
        self.sorted_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted_values.is_empty()
    }

    /// Fraction of values strictly below `threshold`.
    pub fn fraction_below(&self, threshold: f64) -> f64 {
        let below = self.sorted_values.partition_point(|&v| v < threshold);
        below as f64 / self.len() as f64
    }

    pub fn percentile(&self, p: f64) -> f64 {
        percentile(&self.sorted_values, p).expect("non-empty by construction")
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("{},cumulative_fraction\n", self.metric_name);
        for (v, f) in self.sorted_values.iter().zip(&self.cumulative_fraction) {
            let _ = writeln!(out, "{},{}", format_value(*v), f);
        }
        out
    }
}

pub fn cdf(values: &[f64], metric_name: &str) -> Result<CdfSeries> {
    if values.is_empty() {
        return Err(Error::EmptySeries);
    }
    let mut sorted_values = values.to_vec();
    sorted_values.sort_by(ascending);
    let n = sorted_values.len() as f64;
    let cumulative_fraction = (1..=sorted_values.len()).map(|k| k as f64 / n).collect();
    Ok(CdfSeries {
        metric_name: metric_name.to_string(),
        sorted_values,
        cumulative_fraction,
    })
}

/// Writes `original/` and `delivered/` raster sequences plus `pairs.txt`
/// (`original_path,delivered_path` per line, relative to `out_dir`) for
/// external perceptual-quality tooling.
pub fn export_vmaf_pair(original: &[Frame], delivered: &[Frame], out_dir: impl AsRef<Path>) -> Result<()> {
    let out_dir = out_dir.as_ref();
    if original.len() != delivered.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} original frames vs {} delivered",
            original.len(),
            delivered.len()
        )));
    }
    if let Some(first) = original.first() {
        for f in original.iter().chain(delivered) {
            same_dims(first, f)?;
        }
    }
    let mut pairs = String::new();
    for sub in ["original", "delivered"] {
        let dir = out_dir.join(sub);
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    }
    for (i, (o, d)) in original.iter().zip(delivered).enumerate() {
        let name = raster_name(i as u64, o.channels());
        store_frame(o, out_dir.join("original").join(&name))?;
        store_frame(d, out_dir.join("delivered").join(&name))?;
        let _ = writeln!(pairs, "original/{name},delivered/{name}");
    }
    let manifest = out_dir.join("pairs.txt");
    fs::write(&manifest, pairs).map_err(|e| Error::io(&manifest, e))
}

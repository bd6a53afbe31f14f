//! Python bindings: frames, scaling, metrics, traces and the experiment
//! driver.
//!
//! ```python
//! import semstream as ss
//! f = ss.Frame.load("a.ppm")
//! small = f.downscale(1 / 16)
//! back = small.upscale(f.width, f.height, "bicubic")
//! print(ss.psnr(f, back))
//! ```

use std::path::PathBuf;

use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyBytes, PyDict};

use semstream::channel::{self, Direction, RateMap, SnrTrace, TwoStateProfile};
use semstream::config::ExperimentConfig;
use semstream::harness::{self, RunSummary};
use semstream::{metrics, pnm, scaling, sim, Eps, Error};

create_exception!(
    semstream,
    SemstreamError,
    PyException,
    "Simulation or protocol failure."
);

fn to_py(e: Error) -> PyErr {
    match &e {
        Error::Io { .. } => PyIOError::new_err(e.to_string()),
        Error::Run { source, .. } if matches!(**source, Error::Io { .. }) => PyIOError::new_err(e.to_string()),
        _ if e.is_config_error() => PyValueError::new_err(e.to_string()),
        Error::InvalidTarget { .. }
        | Error::DimensionMismatch(_)
        | Error::UnsupportedFormat(_)
        | Error::Parse(_)
        | Error::EmptySeries
        | Error::EmptyTrace => PyValueError::new_err(e.to_string()),
        _ => SemstreamError::new_err(e.to_string()),
    }
}

/// 8-bit raster, row-major with interleaved channels (1 or 3).
#[pyclass(name = "Frame", module = "semstream", frozen, skip_from_py_object)]
struct PyFrame {
    inner: semstream::Frame,
}

#[pymethods]
impl PyFrame {
    #[new]
    fn new(width: usize, height: usize, channels: usize, pixels: &[u8]) -> PyResult<Self> {
        let inner = semstream::Frame::new(width, height, channels, pixels.to_vec()).map_err(to_py)?;
        Ok(PyFrame { inner })
    }

    /// Reads a binary PPM (P6) or PGM (P5) file.
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(PyFrame {
            inner: pnm::load_frame(path).map_err(to_py)?,
        })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        pnm::store_frame(&self.inner, path).map_err(to_py)
    }

    #[getter]
    fn width(&self) -> usize {
        self.inner.width()
    }

    #[getter]
    fn height(&self) -> usize {
        self.inner.height()
    }

    #[getter]
    fn channels(&self) -> usize {
        self.inner.channels()
    }

    #[getter]
    fn pixels<'py>(&self, py: Python<'py>) -> Bound<'py, PyBytes> {
        PyBytes::new(py, self.inner.pixels())
    }

    /// Keeps roughly `eps` of the pixels by point subsampling.
    fn downscale(&self, eps: f64) -> PyResult<Self> {
        Ok(PyFrame {
            inner: scaling::downscale(&self.inner, eps).map_err(to_py)?,
        })
    }

    #[pyo3(signature = (width, height, kind = "bicubic"))]
    fn upscale(&self, width: usize, height: usize, kind: &str) -> PyResult<Self> {
        let kind: scaling::Interpolation = kind.parse().map_err(to_py)?;
        Ok(PyFrame {
            inner: scaling::upscale_traditional(&self.inner, width, height, kind).map_err(to_py)?,
        })
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.inner == other.inner
    }

    fn __repr__(&self) -> String {
        let (w, h, c) = self.inner.dims();
        format!("Frame({w}x{h}x{c})")
    }
}

#[pyfunction]
fn mse(a: &PyFrame, b: &PyFrame) -> PyResult<f64> {
    metrics::mse(&a.inner, &b.inner).map_err(to_py)
}

/// PSNR in dB; `inf` for identical frames.
#[pyfunction]
fn psnr(a: &PyFrame, b: &PyFrame) -> PyResult<f64> {
    Ok(metrics::psnr(&a.inner, &b.inner).map_err(to_py)?.psnr_db)
}

/// Nearest-rank percentile (`p` in 0..=100).
#[pyfunction]
fn percentile(values: Vec<f64>, p: f64) -> PyResult<f64> {
    let mut v = values;
    v.sort_by(metrics::ascending);
    metrics::percentile(&v, p).ok_or_else(|| to_py(Error::EmptySeries))
}

/// Per-millisecond SNR samples (dB) of a two-state trace.
#[pyfunction]
#[pyo3(signature = (high, low, dwell = 15.0, duration = 30.0, jitter = 0.0, seed = 0, direction = "ul"))]
fn gen_trace(
    high: f64,
    low: f64,
    dwell: f64,
    duration: f64,
    jitter: f64,
    seed: u64,
    direction: &str,
) -> PyResult<Vec<f64>> {
    let direction: Direction = direction.parse().map_err(to_py)?;
    let profile = TwoStateProfile {
        dwell,
        jitter_std_db: jitter,
        seed,
        ..TwoStateProfile::new(high, low)
    };
    profile.validate().map_err(to_py)?;
    let trace = channel::generate_two_state(&profile, duration, direction).map_err(to_py)?;
    Ok(trace.samples().to_vec())
}

/// Seconds to push `bits` starting at `start` over a trace of per-ms SNR
/// samples and a rate map given as `[(threshold_db, bits_per_s), ...]`.
#[pyfunction]
#[pyo3(signature = (bits, snr_db, tiers, start = 0.0, horizon = 60.0))]
fn transmit_time(bits: u64, snr_db: Vec<f64>, tiers: Vec<(f64, f64)>, start: f64, horizon: f64) -> PyResult<f64> {
    let trace = SnrTrace::new(Direction::UL, 0.0, snr_db).map_err(to_py)?;
    let map = RateMap::new(tiers).map_err(to_py)?;
    sim::transmit_time(bits, &trace, &map, start, horizon).map_err(to_py)
}

fn summary_dicts<'py>(py: Python<'py>, summary: &RunSummary) -> PyResult<Vec<Bound<'py, PyDict>>> {
    summary
        .rows
        .iter()
        .map(|r| {
            let d = PyDict::new(py);
            d.set_item("seed", summary.seed)?;
            d.set_item("scenario", &summary.scenario)?;
            d.set_item("video", &r.video)?;
            d.set_item("method", &r.method)?;
            d.set_item("frames", r.frames)?;
            d.set_item("dropped", r.dropped)?;
            for (key, i) in [
                ("latency_p50_s", 0),
                ("latency_p80_s", 1),
                ("latency_p95_s", 2),
                ("latency_p99_s", 3),
                ("latency_max_s", 4),
            ] {
                d.set_item(key, r.latency.map(|l| l[i]))?;
            }
            for (key, i) in [("psnr_p5_db", 0), ("psnr_p50_db", 1), ("psnr_p95_db", 2)] {
                d.set_item(key, r.psnr.map(|l| l[i]))?;
            }
            for (key, i) in [("frac_psnr_lt_20", 0), ("frac_psnr_lt_25", 1), ("frac_psnr_lt_30", 2)] {
                d.set_item(key, r.frac_below.map(|l| l[i]))?;
            }
            d.set_item("first_downscale_s", r.first_downscale)?;
            Ok(d)
        })
        .collect()
}

/// Runs an experiment config; returns the summary rows as dicts.
#[pyfunction]
#[pyo3(signature = (config, seed = None, out = None))]
fn run_experiment<'py>(
    py: Python<'py>,
    config: PathBuf,
    seed: Option<u64>,
    out: Option<PathBuf>,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let mut cfg = ExperimentConfig::load(&config).map_err(to_py)?;
    if let Some(seed) = seed {
        cfg = cfg.with_seed(seed);
    }
    if let Some(out) = out {
        cfg.out_dir = out;
    }
    let summary = py.detach(|| harness::run_experiment(&cfg)).map_err(to_py)?;
    summary_dicts(py, &summary)
}

/// Comparison table (text) over `summary.csv` files.
#[pyfunction]
#[pyo3(signature = (summaries, reference = "GAI"))]
fn compare(summaries: Vec<PathBuf>, reference: &str) -> PyResult<String> {
    let loaded = summaries
        .iter()
        .map(RunSummary::load)
        .collect::<semstream::Result<Vec<_>>>()
        .map_err(to_py)?;
    Ok(harness::compare_methods(&loaded, reference).map_err(to_py)?.to_text())
}

/// Validates a retained-pixel fraction given as a float or `"a/b"`.
#[pyfunction]
fn parse_eps(text: &str) -> PyResult<f64> {
    Ok(text.parse::<Eps>().map_err(to_py)?.value())
}

#[pymodule]
#[pyo3(name = "semstream")]
fn semstream_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyFrame>()?;
    m.add("SemstreamError", m.py().get_type::<SemstreamError>())?;
    m.add_function(wrap_pyfunction!(mse, m)?)?;
    m.add_function(wrap_pyfunction!(psnr, m)?)?;
    m.add_function(wrap_pyfunction!(percentile, m)?)?;
    m.add_function(wrap_pyfunction!(gen_trace, m)?)?;
    m.add_function(wrap_pyfunction!(transmit_time, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(compare, m)?)?;
    m.add_function(wrap_pyfunction!(parse_eps, m)?)?;
    Ok(())
}

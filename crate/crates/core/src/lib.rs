//! Trace-driven simulation of live video streaming from a sending UE through
//! the RAN, core network and an edge server to a receiving UE, comparing
//! proactive semantic control (with or without learned reconstruction at the
//! edge) against reactive probe-and-adapt bitrate control.
//!
//! Pixel operations (subsampling, interpolation, quality metrics) are real;
//! time is simulated from per-millisecond SNR traces, a rate map and fixed
//! per-stage costs.

pub mod channel;
pub mod config;
pub mod control;
pub mod error;
pub mod frame;
pub mod harness;
pub mod metrics;
pub mod plugin;
pub mod pnm;
pub mod scaling;
pub mod sim;
pub mod synth;

pub use channel::{generate_two_state, Direction, RateMap, SnrTrace, TwoStateProfile};
pub use config::{ExperimentConfig, Method};
pub use control::{AbrController, AbrPolicy, ControlCommand, Controller, ProactiveController, ProactivePolicy};
pub use error::{Error, Result};
pub use frame::{Eps, Frame, FrameRate, VideoSource};
pub use harness::{compare_methods, run_experiment, RunSummary};
pub use metrics::{cdf, mse, psnr, CdfSeries, QualityScore};
pub use scaling::{downscale, upscale_traditional, Interpolation, Upscaler};
pub use sim::{run_pipeline, transmit_time, DeliveryPath, FrameRecord, PipelineConfig, PipelineRun};

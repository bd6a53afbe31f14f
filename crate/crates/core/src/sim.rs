//! Event-driven UE1 -> RAN (UL) -> CN -> MEC -> CN -> DL -> UE2 pipeline.
//!
//! UE1 holds a FIFO sender queue and puts one frame at a time on the uplink.
//! Everything after the uplink is uncontended: each frame's CN, MEC and
//! downlink stages depend only on the frame and the channel state at the
//! time it gets there.
//!
//! Two latency models are kept apart. The traditional path is
//! `queue + RAN + CN + UE2` (the MEC forwards transparently, UE2 upscales);
//! the enhancement path is `queue + RAN + CN + MEC + CN + UE2` for every
//! frame, forwarded or enhanced.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};
use std::fmt;
use std::fmt::Write as _;

use serde::Deserialize;

use crate::channel::{RateMap, SnrTrace};
use crate::control::{ue1_apply, AbrEvent, CommandKind, ControlCommand, Controller};
use crate::error::{Error, Result};
use crate::frame::{Eps, Frame, FrameMeta, VideoSource};
use crate::metrics::{format_value, psnr, QualityScore};
use crate::scaling::{downscale, upscale_traditional, Interpolation, Upscaler};

/// Bits drained from `start` on until `bits` have crossed the link, integrating
/// the tier bitrate over 1 ms trace slots (the final partial slot resolved
/// linearly). Past the trace end the last sample holds. Fails with
/// [`Error::Starvation`] if the link is still busy after `horizon` seconds.
pub fn transmit_time(bits: u64, trace: &SnrTrace, map: &RateMap, start: f64, horizon: f64) -> Result<f64> {
    if bits == 0 {
        return Ok(0.0);
    }
    let mut remaining = bits as f64;
    let mut slot = trace.slot_of(start)?;
    let mut t = start;
    let last = trace.len() - 1;
    loop {
        let rate = map.bitrate_at(trace.sample(slot));
        if slot >= last {
            if rate <= 0.0 {
                return Err(Error::Starvation {
                    remaining_bits: remaining,
                    horizon,
                });
            }
            return Ok((t - start) + remaining / rate);
        }
        let slot_end = trace.slot_start(slot + 1);
        let capacity = rate * (slot_end - t);
        if rate > 0.0 && capacity >= remaining {
            return Ok((t - start) + remaining / rate);
        }
        remaining -= capacity;
        t = slot_end;
        slot += 1;
        if t - start > horizon {
            return Err(Error::Starvation {
                remaining_bits: remaining,
                horizon,
            });
        }
    }
}

/// Which latency decomposition a record follows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LatencyModel {
    Trad,
    Gai,
}

/// Per-stage delays of one frame, seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StageLatencies {
    pub model: LatencyModel,
    pub queue_wait: f64,
    pub t_ran: f64,
    pub t_cn_in: f64,
    pub t_mec: f64,
    pub t_cn_out: f64,
    pub t_ue2: f64,
}

impl StageLatencies {
    pub fn zero(model: LatencyModel) -> Self {
        StageLatencies {
            model,
            queue_wait: 0.0,
            t_ran: 0.0,
            t_cn_in: 0.0,
            t_mec: 0.0,
            t_cn_out: 0.0,
            t_ue2: 0.0,
        }
    }
}

/// `queue_wait + t_ran + t_cn_in + t_ue2`.
pub fn latency_trad(stage: &StageLatencies) -> Result<f64> {
    if stage.model != LatencyModel::Trad {
        return Err(Error::WrongPath(
            "traditional latency of an enhancement-path record".into(),
        ));
    }
    Ok(stage.queue_wait + stage.t_ran + stage.t_cn_in + stage.t_ue2)
}

/// `queue_wait + t_ran + t_cn_in + t_mec + t_cn_out + t_ue2`.
pub fn latency_gai(stage: &StageLatencies) -> Result<f64> {
    if stage.model != LatencyModel::Gai {
        return Err(Error::WrongPath(
            "enhancement latency of a traditional-path record".into(),
        ));
    }
    Ok(stage.queue_wait + stage.t_ran + stage.t_cn_in + stage.t_mec + stage.t_cn_out + stage.t_ue2)
}

/// Term sum for whichever model the stage belongs to.
pub fn latency_model_sum(stage: &StageLatencies) -> f64 {
    match stage.model {
        LatencyModel::Trad => latency_trad(stage),
        LatencyModel::Gai => latency_gai(stage),
    }
    .expect("model matches")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeliveryPath {
    /// Sent at full resolution, delivered bit-identical.
    Full,
    /// Sent downscaled, interpolated back at UE2.
    TradUpscaled,
    /// Sent downscaled, reconstructed at the MEC.
    Enhanced,
    /// Evicted from a full sender queue.
    DroppedQueueOverflow,
}

impl DeliveryPath {
    pub fn is_delivered(self) -> bool {
        self != DeliveryPath::DroppedQueueOverflow
    }
}

impl fmt::Display for DeliveryPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DeliveryPath::Full => "Full",
            DeliveryPath::TradUpscaled => "TradUpscaled",
            DeliveryPath::Enhanced => "Enhanced",
            DeliveryPath::DroppedQueueOverflow => "DroppedQueueOverflow",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    /// One core-network traversal, seconds.
    pub cn_delay: f64,
    /// MEC enhancement cost per output sample, seconds.
    pub mec_per_pixel: f64,
    /// MEC pass-through cost, seconds.
    pub mec_forward: f64,
    /// UE2 interpolation cost per output sample, seconds.
    pub ue2_upscale_per_pixel: f64,
    /// MEC -> UE1 command propagation, seconds.
    pub control_delay: f64,
    /// Waiting frames UE1 holds before dropping the oldest.
    pub sender_queue_cap: usize,
    /// Give up on a transmission that has not finished after this long.
    pub starvation_horizon: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            cn_delay: 0.010,
            // 640x480x3 enhanced in ~50 ms
            mec_per_pixel: 0.050 / (640.0 * 480.0 * 3.0),
            mec_forward: 0.0,
            ue2_upscale_per_pixel: 1e-8,
            control_delay: 0.010,
            sender_queue_cap: 120,
            starvation_horizon: 60.0,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("cn_delay", self.cn_delay),
            ("mec_per_pixel", self.mec_per_pixel),
            ("mec_forward", self.mec_forward),
            ("ue2_upscale_per_pixel", self.ue2_upscale_per_pixel),
            ("control_delay", self.control_delay),
            ("starvation_horizon", self.starvation_horizon),
        ];
        for (name, v) in fields {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::Config(format!(
                    "pipeline.{name} must be finite and >= 0, got {v}"
                )));
            }
        }
        if self.sender_queue_cap == 0 {
            return Err(Error::Config("pipeline.sender_queue_cap must be >= 1".into()));
        }
        Ok(())
    }
}

/// Outcome of one captured frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameRecord {
    pub frame_id: u64,
    pub capture_time: f64,
    pub path: DeliveryPath,
    pub eps_used: Eps,
    /// Sent at full quality as an ABR probe.
    pub probe: bool,
    pub stage: StageLatencies,
    /// Instant the frame started on the uplink.
    pub ul_start: Option<f64>,
    /// Instant UE2 had the final frame.
    pub delivered_at: Option<f64>,
    pub end_to_end: Option<f64>,
    pub quality: Option<QualityScore>,
    pub bits_ul: u64,
    pub bits_dl: u64,
}

impl FrameRecord {
    pub const CSV_HEADER: &'static str =
        "frame_id,path,eps,queue_wait_s,t_ran_s,t_cn_in_s,t_mec_s,t_cn_out_s,t_ue2_s,end_to_end_s,mse,psnr_db";

    pub fn csv_row(&self) -> String {
        let s = &self.stage;
        let opt = |v: Option<f64>| v.map(format_value).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            self.frame_id,
            self.path,
            self.eps_used,
            format_value(s.queue_wait),
            format_value(s.t_ran),
            format_value(s.t_cn_in),
            format_value(s.t_mec),
            format_value(s.t_cn_out),
            format_value(s.t_ue2),
            opt(self.end_to_end),
            opt(self.quality.map(|q| q.mse)),
            opt(self.quality.map(|q| q.psnr_db)),
        )
    }
}

pub fn records_to_csv(records: &[FrameRecord]) -> String {
    let mut out = String::from(FrameRecord::CSV_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    out
}

/// A controller decision, as logged.
#[derive(Debug, Clone, PartialEq)]
pub struct CommandLogEntry {
    pub controller: &'static str,
    pub command: ControlCommand,
}

impl CommandLogEntry {
    pub const CSV_HEADER: &'static str = "time_s,controller,command,eps,effective_at_s";

    pub fn csv_row(&self) -> String {
        let c = &self.command;
        format!(
            "{},{},{},{},{}",
            format_value(c.issued_at),
            self.controller,
            c.kind,
            c.target_eps(),
            format_value(c.effective_at)
        )
    }
}

pub fn commands_to_csv(entries: &[CommandLogEntry]) -> String {
    let mut out = String::from(CommandLogEntry::CSV_HEADER);
    out.push('\n');
    for e in entries {
        let _ = writeln!(out, "{}", e.csv_row());
    }
    out
}

/// How downscaled frames are restored.
pub enum UpscalerMode<'a> {
    /// UE2 interpolates; the MEC forwards without cost.
    Trad(Interpolation),
    /// The MEC reconstructs through `enhancer`. With `fallback`, enhancer
    /// failures switch the rest of the run to the bicubic stand-in.
    Gai { enhancer: &'a mut Upscaler, fallback: bool },
    /// The MEC path with the bicubic stand-in enhancer.
    NullGai,
}

impl UpscalerMode<'_> {
    fn model(&self) -> LatencyModel {
        match self {
            UpscalerMode::Trad(_) => LatencyModel::Trad,
            _ => LatencyModel::Gai,
        }
    }
}

/// Links and costs shared by every frame of a run.
#[derive(Debug, Clone, Copy)]
pub struct Network<'a> {
    pub ul: &'a SnrTrace,
    pub dl: &'a SnrTrace,
    pub ul_map: &'a RateMap,
    pub dl_map: &'a RateMap,
    pub cfg: &'a PipelineConfig,
}

#[derive(Debug, Default)]
pub struct PipelineRun {
    /// One per captured frame, ordered by `frame_id`.
    pub records: Vec<FrameRecord>,
    pub commands: Vec<CommandLogEntry>,
    /// Delivered rasters by frame index, kept only when requested.
    pub delivered: Vec<Option<Frame>>,
    /// Frames that fell back to the stand-in enhancer.
    pub enhancer_fallbacks: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum EventClass {
    CommandEffective,
    SnrSample,
    ProbeTick,
    Delivered,
    UlDone,
    Capture,
}

#[derive(Debug)]
enum EventKind {
    Capture(usize),
    UlDone,
    CommandEffective(ControlCommand),
    SnrSample(usize),
    ProbeTick(u64),
    Delivered { latency: f64, probe: bool },
}

impl EventKind {
    fn class(&self) -> EventClass {
        match self {
            EventKind::Capture(_) => EventClass::Capture,
            EventKind::UlDone => EventClass::UlDone,
            EventKind::CommandEffective(_) => EventClass::CommandEffective,
            EventKind::SnrSample(_) => EventClass::SnrSample,
            EventKind::ProbeTick(_) => EventClass::ProbeTick,
            EventKind::Delivered { .. } => EventClass::Delivered,
        }
    }
}

struct Event {
    time: f64,
    class: EventClass,
    seq: u64,
    kind: EventKind,
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Event {}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

// BinaryHeap is a max-heap: reverse so the earliest (time, class, seq) pops first.
impl Ord for Event {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .time
            .total_cmp(&self.time)
            .then(other.class.cmp(&self.class))
            .then(other.seq.cmp(&self.seq))
    }
}

struct Queued {
    index: usize,
    eps: Eps,
    probe: bool,
    tx: Frame,
}

struct InFlight {
    item: Queued,
    ul_start: f64,
    t_ran: f64,
}

struct Engine<'n, 'm> {
    net: Network<'n>,
    mode: UpscalerMode<'m>,
    video: &'n VideoSource,
    controller: Controller,
    heap: BinaryHeap<Event>,
    seq: u64,
    queue: VecDeque<Queued>,
    link: Option<InFlight>,
    eps: Eps,
    unresolved: usize,
    keep_delivered: bool,
    fallen_back: bool,
    run: PipelineRun,
    records: Vec<Option<FrameRecord>>,
}

/// Runs every frame of `video` through the pipeline.
///
/// UE1 fixes each frame's retained fraction when the frame is enqueued
/// (commands only affect frames captured at or after their effective time).
/// Pixel work is real, so quality scores are real, but simulated time comes
/// only from the channel and [`PipelineConfig`].
pub fn run_pipeline(
    video: &VideoSource,
    net: Network<'_>,
    controller: Controller,
    mode: UpscalerMode<'_>,
    keep_delivered: bool,
) -> Result<PipelineRun> {
    net.cfg.validate()?;
    let n = video.len();
    let mut engine = Engine {
        net,
        mode,
        video,
        eps: controller.initial_eps(),
        controller,
        heap: BinaryHeap::new(),
        seq: 0,
        queue: VecDeque::new(),
        link: None,
        unresolved: n,
        keep_delivered,
        fallen_back: false,
        run: PipelineRun {
            delivered: if keep_delivered { vec![None; n] } else { Vec::new() },
            ..PipelineRun::default()
        },
        records: vec![None; n],
    };
    engine.run()?;
    let mut run = engine.run;
    run.records = engine
        .records
        .into_iter()
        .map(|r| r.expect("every frame resolved"))
        .collect();
    Ok(run)
}

impl Engine<'_, '_> {
    fn push(&mut self, time: f64, kind: EventKind) {
        self.seq += 1;
        self.heap.push(Event {
            time,
            class: kind.class(),
            seq: self.seq,
            kind,
        });
    }

    fn run(&mut self) -> Result<()> {
        if self.video.is_empty() {
            return Ok(());
        }
        for (i, f) in self.video.frames().iter().enumerate() {
            self.push(f.capture_time(), EventKind::Capture(i));
        }
        match &self.controller {
            Controller::Proactive(_) => {
                let t = self.net.ul.slot_start(0);
                self.push(t, EventKind::SnrSample(0));
            }
            Controller::Abr(c) => {
                let t = c.policy().probe_interval;
                self.push(t, EventKind::ProbeTick(1));
            }
            Controller::Fixed(_) => {}
        }
        while let Some(ev) = self.heap.pop() {
            let now = ev.time;
            match ev.kind {
                EventKind::Capture(i) => self.on_capture(i, now)?,
                EventKind::UlDone => self.on_ul_done(now)?,
                EventKind::CommandEffective(cmd) => self.eps = ue1_apply(&cmd, now)?,
                EventKind::SnrSample(k) => self.on_snr_sample(k, now)?,
                EventKind::ProbeTick(n) => self.on_probe_tick(n, now)?,
                EventKind::Delivered { latency, probe } => self.on_delivered(latency, probe, now)?,
            }
        }
        Ok(())
    }

    fn log(&mut self, cmd: ControlCommand) {
        self.run.commands.push(CommandLogEntry {
            controller: self.controller.name(),
            command: cmd,
        });
        self.push(cmd.effective_at, EventKind::CommandEffective(cmd));
    }

    fn on_snr_sample(&mut self, k: usize, now: f64) -> Result<()> {
        let snr = self.net.ul.sample(k);
        if let Controller::Proactive(c) = &mut self.controller {
            if let Some(cmd) = c.step(snr, now)? {
                self.log(cmd);
            }
        }
        if self.unresolved > 0 {
            let next = self.net.ul.slot_start(k + 1);
            self.push(next, EventKind::SnrSample(k + 1));
        }
        Ok(())
    }

    fn on_probe_tick(&mut self, n: u64, now: f64) -> Result<()> {
        if let Controller::Abr(c) = &mut self.controller {
            c.step(AbrEvent::ProbeTick, now)?;
            if self.unresolved > 0 {
                let next = (n + 1) as f64 * c.policy().probe_interval;
                self.push(next, EventKind::ProbeTick(n + 1));
            }
        }
        Ok(())
    }

    fn on_delivered(&mut self, latency: f64, probe: bool, now: f64) -> Result<()> {
        self.unresolved -= 1;
        if let Controller::Abr(c) = &mut self.controller {
            if let Some(cmd) = c.step(AbrEvent::FrameDelivered { latency, probe }, now)? {
                self.log(cmd);
            }
        }
        Ok(())
    }

    fn on_capture(&mut self, index: usize, now: f64) -> Result<()> {
        let probe = match &mut self.controller {
            Controller::Abr(c) => c.take_probe(),
            _ => false,
        };
        let eps = if probe { Eps::FULL } else { self.eps };
        let original = &self.video.frames()[index];
        let tx = downscale(original, eps.value())?;
        let item = Queued { index, eps, probe, tx };
        if self.link.is_none() {
            return self.start_uplink(item, now);
        }
        if self.queue.len() >= self.net.cfg.sender_queue_cap {
            let dropped = self.queue.pop_front().expect("cap >= 1");
            self.record_drop(dropped, now);
        }
        self.queue.push_back(item);
        Ok(())
    }

    fn record_drop(&mut self, item: Queued, now: f64) {
        let original = &self.video.frames()[item.index];
        let mut stage = StageLatencies::zero(self.mode.model());
        stage.queue_wait = now - original.capture_time();
        self.records[item.index] = Some(FrameRecord {
            frame_id: original.id(),
            capture_time: original.capture_time(),
            path: DeliveryPath::DroppedQueueOverflow,
            eps_used: item.eps,
            probe: item.probe,
            stage,
            ul_start: None,
            delivered_at: None,
            end_to_end: None,
            quality: None,
            bits_ul: 0,
            bits_dl: 0,
        });
        self.unresolved -= 1;
    }

    fn start_uplink(&mut self, item: Queued, now: f64) -> Result<()> {
        let net = self.net;
        let t_ran = transmit_time(
            item.tx.payload_bits(),
            net.ul,
            net.ul_map,
            now,
            net.cfg.starvation_horizon,
        )?;
        self.link = Some(InFlight {
            item,
            ul_start: now,
            t_ran,
        });
        self.push(now + t_ran, EventKind::UlDone);
        Ok(())
    }

    fn on_ul_done(&mut self, now: f64) -> Result<()> {
        let flight = self.link.take().expect("uplink busy");
        self.finish_frame(flight, now)?;
        if let Some(next) = self.queue.pop_front() {
            self.start_uplink(next, now)?;
        }
        Ok(())
    }

    fn enhance(&mut self, tx: &Frame, w: usize, h: usize) -> Result<Frame> {
        if !self.fallen_back {
            if let UpscalerMode::Gai { enhancer, fallback } = &mut self.mode {
                match enhancer.upscale(tx, w, h) {
                    Ok(f) => return Ok(f),
                    Err(Error::EnhancerUnavailable(_) | Error::Protocol(_)) if *fallback => self.fallen_back = true,
                    Err(e) => return Err(e),
                }
            }
        }
        if self.fallen_back {
            self.run.enhancer_fallbacks += 1;
        }
        upscale_traditional(tx, w, h, Interpolation::Bicubic)
    }

    /// Everything downstream of the uplink for one frame.
    fn finish_frame(&mut self, flight: InFlight, ul_end: f64) -> Result<()> {
        let net = self.net;
        let cfg = net.cfg;
        let InFlight { item, ul_start, t_ran } = flight;
        let original = &self.video.frames()[item.index];
        let (w, h) = (original.width(), original.height());
        let meta = FrameMeta::describe(&item.tx, item.eps, w, h);
        let samples = original.sample_count() as f64;
        let model = self.mode.model();

        let mut stage = StageLatencies::zero(model);
        stage.queue_wait = ul_start - original.capture_time();
        stage.t_ran = t_ran;
        stage.t_cn_in = cfg.cn_delay;
        let at_mec = ul_end + cfg.cn_delay;

        let (path, delivered, bits_dl, delivered_at) = match &self.mode {
            UpscalerMode::Trad(kind) => {
                let kind = *kind;
                let t_dl = transmit_time(meta.payload_bits, net.dl, net.dl_map, at_mec, cfg.starvation_horizon)?;
                if meta.compressed {
                    let up = upscale_traditional(&item.tx, w, h, kind)?;
                    let t_up = cfg.ue2_upscale_per_pixel * samples;
                    stage.t_ue2 = t_dl + t_up;
                    (DeliveryPath::TradUpscaled, up, meta.payload_bits, at_mec + t_dl + t_up)
                } else {
                    stage.t_ue2 = t_dl;
                    (DeliveryPath::Full, item.tx, meta.payload_bits, at_mec + t_dl)
                }
            }
            UpscalerMode::Gai { .. } | UpscalerMode::NullGai => {
                let (path, frame) = if meta.compressed {
                    stage.t_mec = cfg.mec_forward + cfg.mec_per_pixel * samples;
                    (DeliveryPath::Enhanced, self.enhance(&item.tx, w, h)?)
                } else {
                    stage.t_mec = cfg.mec_forward;
                    (DeliveryPath::Full, item.tx)
                };
                stage.t_cn_out = cfg.cn_delay;
                let at_dl = at_mec + stage.t_mec + cfg.cn_delay;
                let bits = frame.payload_bits();
                stage.t_ue2 = transmit_time(bits, net.dl, net.dl_map, at_dl, cfg.starvation_horizon)?;
                (path, frame, bits, at_dl + stage.t_ue2)
            }
        };

        let quality = psnr(original, &delivered)?;
        let end_to_end = delivered_at - original.capture_time();
        self.records[item.index] = Some(FrameRecord {
            frame_id: original.id(),
            capture_time: original.capture_time(),
            path,
            eps_used: item.eps,
            probe: item.probe,
            stage,
            ul_start: Some(ul_start),
            delivered_at: Some(delivered_at),
            end_to_end: Some(end_to_end),
            quality: Some(quality),
            bits_ul: meta.payload_bits,
            bits_dl,
        });
        if self.keep_delivered {
            self.run.delivered[item.index] = Some(delivered);
        }
        self.push(
            delivered_at,
            EventKind::Delivered {
                latency: end_to_end,
                probe: item.probe,
            },
        );
        Ok(())
    }
}

/// First command of `kind` issued at or after `t`.
pub fn first_command_after(entries: &[CommandLogEntry], kind: CommandKind, t: f64) -> Option<&ControlCommand> {
    entries
        .iter()
        .map(|e| &e.command)
        .find(|c| c.kind == kind && c.issued_at >= t)
}

//! Experiment driver: runs the method × video matrix and writes the CSV
//! artifacts.
//!
//! Output layout under `out_dir`:
//!
//! ```text
//! summary.csv
//! records/<video>__<method>.csv      per-frame stage latencies and quality
//! cdf/<video>__<method>__latency.csv
//! cdf/<video>__<method>__psnr.csv
//! control/<video>__<method>.csv      command log
//! timeseries/<video>__<method>.csv   time_s,snr_db,psnr_db per frame
//! vmaf/<video>__<method>/            only with export_vmaf
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::channel::{generate_two_state, load_trace, Direction, SnrTrace};
use crate::config::{ChannelSpec, EnhancerSpec, ExperimentConfig, Method};
use crate::control::{AbrController, CommandKind, Controller, ProactiveController};
use crate::error::{Error, Result};
use crate::frame::{Frame, VideoSource};
use crate::metrics::{ascending, cdf, export_vmaf_pair, format_value, percentile};
use crate::plugin::EnhancerClient;
use crate::pnm::load_video;
use crate::scaling::Upscaler;
use crate::sim::{commands_to_csv, records_to_csv, run_pipeline, Network, PipelineRun, UpscalerMode};
use crate::synth::synthetic_video;

pub const LATENCY_PERCENTILES: [f64; 4] = [50.0, 80.0, 95.0, 99.0];
pub const PSNR_PERCENTILES: [f64; 3] = [5.0, 50.0, 95.0];
pub const PSNR_THRESHOLDS: [f64; 3] = [20.0, 25.0, 30.0];

/// Summary statistics of one (video, method) run. Percentiles are
/// nearest-rank over delivered frames; `None` when nothing was delivered.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub video: String,
    pub method: String,
    pub frames: usize,
    pub dropped: usize,
    /// P50, P80, P95, P99, max (seconds).
    pub latency: Option<[f64; 5]>,
    /// P5, P50, P95 (dB).
    pub psnr: Option<[f64; 3]>,
    /// Fractions of delivered frames below 20, 25 and 30 dB.
    pub frac_below: Option<[f64; 3]>,
    pub first_downscale: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub seed: u64,
    pub scenario: String,
    pub rows: Vec<SummaryRow>,
}

pub const SUMMARY_HEADER: &str = "seed,scenario,video,method,frames,dropped,\
latency_p50_s,latency_p80_s,latency_p95_s,latency_p99_s,latency_max_s,\
psnr_p5_db,psnr_p50_db,psnr_p95_db,\
frac_psnr_lt_20,frac_psnr_lt_25,frac_psnr_lt_30,first_downscale_s";

impl SummaryRow {
    /// Summarises a finished run.
    pub fn from_run(video: &str, method: &str, runs: &[&PipelineRun]) -> SummaryRow {
        let records = runs.iter().flat_map(|r| &r.records);
        let mut latencies = Vec::new();
        let mut psnrs = Vec::new();
        let mut frames = 0;
        for r in records {
            frames += 1;
            if let Some(l) = r.end_to_end {
                latencies.push(l);
            }
            if let Some(q) = r.quality {
                psnrs.push(q.psnr_db);
            }
        }
        latencies.sort_by(ascending);
        psnrs.sort_by(ascending);
        let pick = |sorted: &[f64], p: f64| percentile(sorted, p).expect("non-empty");
        let latency = (!latencies.is_empty()).then(|| {
            let [a, b, c, d] = LATENCY_PERCENTILES.map(|p| pick(&latencies, p));
            [a, b, c, d, *latencies.last().unwrap()]
        });
        let psnr = (!psnrs.is_empty()).then(|| PSNR_PERCENTILES.map(|p| pick(&psnrs, p)));
        let frac_below = (!psnrs.is_empty())
            .then(|| PSNR_THRESHOLDS.map(|t| psnrs.partition_point(|&v| v < t) as f64 / psnrs.len() as f64));
        let first_downscale = runs
            .iter()
            .flat_map(|r| &r.commands)
            .filter(|c| c.command.kind == CommandKind::Downscale)
            .map(|c| c.command.issued_at)
            .min_by(ascending);
        SummaryRow {
            video: video.to_string(),
            method: method.to_string(),
            frames,
            dropped: frames - latencies.len(),
            latency,
            psnr,
            frac_below,
            first_downscale,
        }
    }

    pub fn latency_max(&self) -> Option<f64> {
        self.latency.map(|l| l[4])
    }

    pub fn latency_p99(&self) -> Option<f64> {
        self.latency.map(|l| l[3])
    }

    pub fn frac_below_25(&self) -> Option<f64> {
        self.frac_below.map(|f| f[1])
    }
}

fn opt_values<const N: usize>(v: Option<[f64; N]>) -> Vec<String> {
    match v {
        Some(v) => v.iter().map(|x| format_value(*x)).collect(),
        None => vec![String::new(); N],
    }
}

fn parse_value(s: &str) -> Result<f64> {
    match s {
        "inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        _ => s.parse().map_err(|_| Error::Parse(format!("bad number {s:?}"))),
    }
}

fn parse_opt<const N: usize>(fields: &[&str]) -> Result<Option<[f64; N]>> {
    if fields.iter().all(|f| f.is_empty()) {
        return Ok(None);
    }
    let mut out = [0.0; N];
    for (o, f) in out.iter_mut().zip(fields) {
        *o = parse_value(f)?;
    }
    Ok(Some(out))
}

impl RunSummary {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(SUMMARY_HEADER);
        out.push('\n');
        for r in &self.rows {
            let mut fields = vec![
                self.seed.to_string(),
                self.scenario.clone(),
                r.video.clone(),
                r.method.clone(),
                r.frames.to_string(),
                r.dropped.to_string(),
            ];
            fields.extend(opt_values(r.latency));
            fields.extend(opt_values(r.psnr));
            fields.extend(opt_values(r.frac_below));
            fields.push(r.first_downscale.map(format_value).unwrap_or_default());
            out.push_str(&fields.join(","));
            out.push('\n');
        }
        out
    }

    pub fn parse_csv(text: &str) -> Result<RunSummary> {
        let mut lines = text.lines();
        if lines.next() != Some(SUMMARY_HEADER) {
            return Err(Error::Parse("not a summary file (unexpected header)".into()));
        }
        let mut ids: Option<(u64, String)> = None;
        let mut rows = Vec::new();
        for (n, line) in lines.enumerate().filter(|(_, l)| !l.is_empty()) {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 18 {
                return Err(Error::Parse(format!(
                    "summary row {}: expected 18 fields, got {}",
                    n + 2,
                    f.len()
                )));
            }
            let seed: u64 = f[0].parse().map_err(|_| Error::Parse(format!("bad seed {:?}", f[0])))?;
            match &ids {
                None => ids = Some((seed, f[1].to_string())),
                Some((s, sc)) if *s == seed && sc == f[1] => {}
                Some(_) => return Err(Error::Parse("summary mixes seeds or scenarios".into())),
            }
            let count = |s: &str| s.parse::<usize>().map_err(|_| Error::Parse(format!("bad count {s:?}")));
            rows.push(SummaryRow {
                video: f[2].to_string(),
                method: f[3].to_string(),
                frames: count(f[4])?,
                dropped: count(f[5])?,
                latency: parse_opt(&f[6..11])?,
                psnr: parse_opt(&f[11..14])?,
                frac_below: parse_opt(&f[14..17])?,
                first_downscale: if f[17].is_empty() {
                    None
                } else {
                    Some(parse_value(f[17])?)
                },
            });
        }
        let (seed, scenario) = ids.ok_or_else(|| Error::Parse("summary has no rows".into()))?;
        Ok(RunSummary { seed, scenario, rows })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<RunSummary> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        RunSummary::parse_csv(&text)
    }

    pub fn row(&self, video: &str, method: &str) -> Option<&SummaryRow> {
        self.rows.iter().find(|r| r.video == video && r.method == method)
    }
}

/// Stem used for every per-run artifact.
pub fn artifact_stem(video: &str, method: Method) -> String {
    format!("{video}__{method}")
}

/// Generates or loads the UL and DL traces described by `spec`.
pub fn build_channel(spec: &ChannelSpec) -> Result<(SnrTrace, SnrTrace)> {
    match spec {
        ChannelSpec::TwoState { ul, dl, duration } => Ok((
            generate_two_state(ul, *duration, Direction::UL)?,
            generate_two_state(dl, *duration, Direction::DL)?,
        )),
        ChannelSpec::Traces { ul, dl } => Ok((load_trace(ul, Direction::UL)?, load_trace(dl, Direction::DL)?)),
    }
}

pub fn build_controller(cfg: &ExperimentConfig, method: Method) -> Result<Controller> {
    Ok(match method {
        Method::Gai | Method::NoGai => Controller::Proactive(ProactiveController::new(
            cfg.proactive,
            cfg.eps,
            cfg.pipeline.control_delay,
        )?),
        Method::Abr => Controller::Abr(AbrController::new(cfg.abr, cfg.eps)?),
        Method::TradFixed => Controller::Fixed(cfg.eps),
    })
}

fn open_enhancer(spec: &EnhancerSpec) -> Result<Option<Upscaler>> {
    Ok(match spec {
        EnhancerSpec::Null => None,
        EnhancerSpec::Stdio { command } => Some(Upscaler::Enhancer(EnhancerClient::spawn(&command[0], &command[1..])?)),
        EnhancerSpec::Tcp { address } => Some(Upscaler::Enhancer(EnhancerClient::connect(address.as_str())?)),
    })
}

/// Loads every configured video, with ids made unique.
pub fn load_videos(cfg: &ExperimentConfig) -> Result<Vec<VideoSource>> {
    let mut videos = Vec::new();
    if let Some(spec) = &cfg.synthetic {
        videos.push(synthetic_video(spec, cfg.seed)?);
    }
    for path in &cfg.videos {
        videos.push(load_video(path)?);
    }
    let mut seen = BTreeSet::new();
    for v in &mut videos {
        let base = v.source_id.clone();
        let mut k = 1;
        while !seen.insert(v.source_id.clone()) {
            k += 1;
            v.source_id = format!("{base}_{k}");
        }
    }
    Ok(videos)
}

/// Runs one (video, method) cell.
pub fn run_method(
    cfg: &ExperimentConfig,
    video: &VideoSource,
    ul: &SnrTrace,
    dl: &SnrTrace,
    method: Method,
    keep_delivered: bool,
) -> Result<PipelineRun> {
    let net = Network {
        ul,
        dl,
        ul_map: &cfg.ul_map,
        dl_map: &cfg.dl_map,
        cfg: &cfg.pipeline,
    };
    let controller = build_controller(cfg, method)?;
    let mut enhancer = match method {
        Method::Gai => open_enhancer(&cfg.enhancer).or_else(|e| match e {
            Error::EnhancerUnavailable(_) if cfg.enhancer_fallback => Ok(None),
            e => Err(e),
        })?,
        _ => None,
    };
    let mode = match (method, enhancer.as_mut()) {
        (Method::Gai, Some(enhancer)) => UpscalerMode::Gai {
            enhancer,
            fallback: cfg.enhancer_fallback,
        },
        (Method::Gai, None) => UpscalerMode::NullGai,
        _ => UpscalerMode::Trad(cfg.upscaler),
    };
    run_pipeline(video, net, controller, mode, keep_delivered)
}

/// Per-frame `time_s,snr_db,psnr_db` rows: capture time, UL SNR at capture,
/// delivered PSNR (empty for dropped frames).
pub fn timeseries_csv(run: &PipelineRun, ul: &SnrTrace) -> Result<String> {
    let mut out = String::from("time_s,snr_db,psnr_db\n");
    for r in &run.records {
        let snr = ul.snr_at(r.capture_time)?;
        let psnr = r.quality.map(|q| format_value(q.psnr_db)).unwrap_or_default();
        let _ = writeln!(out, "{},{},{}", format_value(r.capture_time), format_value(snr), psnr);
    }
    Ok(out)
}

/// Collects files in a private staging directory and moves them into place
/// only once everything succeeded.
struct Staging {
    root: PathBuf,
    files: Vec<PathBuf>,
}

impl Staging {
    fn new(out_dir: &Path) -> Result<Staging> {
        fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
        let root = out_dir.join(format!(".staging-{}", std::process::id()));
        if root.exists() {
            fs::remove_dir_all(&root).map_err(|e| Error::io(&root, e))?;
        }
        fs::create_dir_all(&root).map_err(|e| Error::io(&root, e))?;
        Ok(Staging {
            root,
            files: Vec::new(),
        })
    }

    fn write(&mut self, rel: impl AsRef<Path>, contents: &str) -> Result<()> {
        let rel = rel.as_ref();
        let path = self.root.join(rel);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
        self.files.push(rel.to_path_buf());
        Ok(())
    }

    fn dir(&mut self, rel: impl AsRef<Path>) -> PathBuf {
        let rel = rel.as_ref();
        self.files.push(rel.to_path_buf());
        self.root.join(rel)
    }

    fn commit(self, out_dir: &Path) -> Result<()> {
        for rel in &self.files {
            let from = self.root.join(rel);
            let to = out_dir.join(rel);
            if let Some(dir) = to.parent() {
                fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            }
            if to.is_dir() {
                fs::remove_dir_all(&to).map_err(|e| Error::io(&to, e))?;
            }
            fs::rename(&from, &to).map_err(|e| Error::io(&to, e))?;
        }
        fs::remove_dir_all(&self.root).map_err(|e| Error::io(&self.root, e))
    }
}

impl Drop for Staging {
    fn drop(&mut self) {
        let _ = fs::remove_dir_all(&self.root);
    }
}

/// Runs every configured (video, method) pair and writes the artifacts
/// under `cfg.out_dir`. Nothing is written if any run fails.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunSummary> {
    cfg.validate()?;
    let videos = load_videos(cfg)?;
    let (ul, dl) = build_channel(&cfg.channel)?;
    let mut staging = Staging::new(&cfg.out_dir)?;
    let mut summary = RunSummary {
        seed: cfg.seed,
        scenario: cfg.scenario_id(),
        rows: Vec::new(),
    };
    let mut by_method: BTreeMap<usize, Vec<PipelineRun>> = BTreeMap::new();

    for video in &videos {
        for (mi, &method) in cfg.methods.iter().enumerate() {
            let context = |e: Error| Error::Run {
                video: video.source_id.clone(),
                method: method.to_string(),
                source: Box::new(e),
            };
            let run = run_method(cfg, video, &ul, &dl, method, cfg.export_vmaf).map_err(context)?;
            let stem = artifact_stem(&video.source_id, method);
            write_run_artifacts(&mut staging, &stem, &run, video, &ul, cfg.export_vmaf).map_err(context)?;
            summary
                .rows
                .push(SummaryRow::from_run(&video.source_id, method.name(), &[&run]));
            by_method.entry(mi).or_default().push(PipelineRun {
                records: run.records,
                commands: run.commands,
                ..PipelineRun::default()
            });
        }
    }
    if videos.len() > 1 {
        for (mi, runs) in &by_method {
            let refs: Vec<&PipelineRun> = runs.iter().collect();
            summary
                .rows
                .push(SummaryRow::from_run("all", cfg.methods[*mi].name(), &refs));
        }
    }
    staging.write("summary.csv", &summary.to_csv())?;
    staging.commit(&cfg.out_dir)?;
    Ok(summary)
}

fn write_run_artifacts(
    staging: &mut Staging,
    stem: &str,
    run: &PipelineRun,
    video: &VideoSource,
    ul: &SnrTrace,
    export_vmaf: bool,
) -> Result<()> {
    staging.write(format!("records/{stem}.csv"), &records_to_csv(&run.records))?;
    let latencies: Vec<f64> = run.records.iter().filter_map(|r| r.end_to_end).collect();
    let psnrs: Vec<f64> = run
        .records
        .iter()
        .filter_map(|r| r.quality.map(|q| q.psnr_db))
        .collect();
    let empty = |name: &str| format!("{name},cumulative_fraction\n");
    let latency_csv = cdf(&latencies, "latency_s").map_or_else(|_| empty("latency_s"), |c| c.to_csv());
    let psnr_csv = cdf(&psnrs, "psnr_db").map_or_else(|_| empty("psnr_db"), |c| c.to_csv());
    staging.write(format!("cdf/{stem}__latency.csv"), &latency_csv)?;
    staging.write(format!("cdf/{stem}__psnr.csv"), &psnr_csv)?;
    staging.write(format!("control/{stem}.csv"), &commands_to_csv(&run.commands))?;
    staging.write(format!("timeseries/{stem}.csv"), &timeseries_csv(run, ul)?)?;
    if export_vmaf {
        let mut originals: Vec<Frame> = Vec::new();
        let mut delivered: Vec<Frame> = Vec::new();
        for (orig, out) in video.frames().iter().zip(&run.delivered) {
            if let Some(out) = out {
                originals.push(orig.clone());
                delivered.push(out.clone());
            }
        }
        let dir = staging.dir(format!("vmaf/{stem}"));
        export_vmaf_pair(&originals, &delivered, dir)?;
    }
    Ok(())
}

/// Differences of one method's statistics against the reference method on
/// the same video (`method - reference`).
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub video: String,
    pub method: String,
    pub reference: String,
    pub latency_delta: Option<[f64; 5]>,
    pub psnr_delta: Option<[f64; 3]>,
    pub frac_below_25: Option<f64>,
    pub frac_below_25_delta: Option<f64>,
}

/// ABR against one proactive method on one video.
#[derive(Debug, Clone, PartialEq)]
pub struct SpikeCheck {
    pub video: String,
    pub proactive: String,
    pub abr_max: f64,
    pub proactive_max: f64,
    pub abr_p99: f64,
    pub proactive_p99: f64,
}

impl SpikeCheck {
    pub fn abr_max_higher(&self) -> bool {
        self.abr_max > self.proactive_max
    }

    pub fn abr_p99_higher(&self) -> bool {
        self.abr_p99 > self.proactive_p99
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub seed: u64,
    pub scenario: String,
    pub rows: Vec<ComparisonRow>,
    pub spikes: Vec<SpikeCheck>,
}

/// Equal values (including two infinities) differ by zero.
fn delta(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        a - b
    }
}

fn zip_delta<const N: usize>(a: Option<[f64; N]>, b: Option<[f64; N]>) -> Option<[f64; N]> {
    let (a, b) = (a?, b?);
    Some(std::array::from_fn(|i| delta(a[i], b[i])))
}

/// Tabulates every method against `reference` (per video) and checks ABR's
/// latency tail against each proactive method.
pub fn compare_methods(summaries: &[RunSummary], reference: &str) -> Result<Comparison> {
    let first = summaries
        .first()
        .ok_or_else(|| Error::IncomparableRuns("no summaries given".into()))?;
    for s in summaries {
        if s.seed != first.seed {
            return Err(Error::IncomparableRuns(format!(
                "seeds differ: {} vs {}",
                first.seed, s.seed
            )));
        }
        if s.scenario != first.scenario {
            return Err(Error::IncomparableRuns(format!(
                "scenarios differ: {} vs {}",
                first.scenario, s.scenario
            )));
        }
    }
    let total: usize = summaries.iter().map(|s| s.rows.len()).sum();
    if total < 2 {
        return Err(Error::IncomparableRuns("need at least two method runs".into()));
    }
    let mut rows: Vec<&SummaryRow> = Vec::new();
    for r in summaries.iter().flat_map(|s| &s.rows) {
        if !rows.iter().any(|x| x.video == r.video && x.method == r.method) {
            rows.push(r);
        }
    }
    let find = |video: &str, method: &str| {
        rows.iter()
            .find(|r| r.video == video && r.method.eq_ignore_ascii_case(method))
            .copied()
    };

    let mut out = Vec::new();
    let mut spikes = Vec::new();
    for r in &rows {
        let base = find(&r.video, reference).ok_or_else(|| {
            Error::IncomparableRuns(format!("reference method {reference} missing for video {}", r.video))
        })?;
        out.push(ComparisonRow {
            video: r.video.clone(),
            method: r.method.clone(),
            reference: base.method.clone(),
            latency_delta: zip_delta(r.latency, base.latency),
            psnr_delta: zip_delta(r.psnr, base.psnr),
            frac_below_25: r.frac_below_25(),
            frac_below_25_delta: r.frac_below_25().zip(base.frac_below_25()).map(|(a, b)| delta(a, b)),
        });
        if r.method.parse::<Method>().is_ok_and(Method::is_proactive) {
            if let Some(abr) = find(&r.video, Method::Abr.name()) {
                if let (Some(a), Some(p)) = (abr.latency, r.latency) {
                    spikes.push(SpikeCheck {
                        video: r.video.clone(),
                        proactive: r.method.clone(),
                        abr_max: a[4],
                        proactive_max: p[4],
                        abr_p99: a[3],
                        proactive_p99: p[3],
                    });
                }
            }
        }
    }
    Ok(Comparison {
        seed: first.seed,
        scenario: first.scenario.clone(),
        rows: out,
        spikes,
    })
}

pub const COMPARISON_HEADER: &str = "video,method,reference,\
d_latency_p50_s,d_latency_p80_s,d_latency_p95_s,d_latency_p99_s,d_latency_max_s,\
d_psnr_p5_db,d_psnr_p50_db,d_psnr_p95_db,frac_psnr_lt_25,d_frac_psnr_lt_25";

impl Comparison {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(COMPARISON_HEADER);
        out.push('\n');
        for r in &self.rows {
            let mut fields = vec![r.video.clone(), r.method.clone(), r.reference.clone()];
            fields.extend(opt_values(r.latency_delta));
            fields.extend(opt_values(r.psnr_delta));
            fields.extend(opt_values(r.frac_below_25.map(|v| [v])));
            fields.extend(opt_values(r.frac_below_25_delta.map(|v| [v])));
            out.push_str(&fields.join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_text(&self) -> String {
        let ms = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{:+.1}", v * 1e3));
        let mut out = format!("seed {} scenario {}\n", self.seed, self.scenario);
        let _ = writeln!(
            out,
            "{:<16} {:<10} {:>9} {:>9} {:>9} {:>9} {:>9} {:>9} {:>10}",
            "video", "method", "dP50ms", "dP80ms", "dP95ms", "dP99ms", "dMaxms", "dPSNR50", "PSNR<25"
        );
        for r in &self.rows {
            let l = |i: usize| ms(r.latency_delta.map(|d| d[i]));
            let _ = writeln!(
                out,
                "{:<16} {:<10} {:>9} {:>9} {:>9} {:>9} {:>9} {:>9} {:>10}",
                r.video,
                r.method,
                l(0),
                l(1),
                l(2),
                l(3),
                l(4),
                r.psnr_delta.map_or("-".into(), |d| format!("{:+.2}", d[1])),
                r.frac_below_25.map_or("-".into(), |f| format!("{:.3}", f)),
            );
        }
        for s in &self.spikes {
            let rel = |b: bool| if b { ">" } else { "<=" };
            let _ = writeln!(
                out,
                "{}: ABR max {} {} max ({:.1} vs {:.1} ms); ABR P99 {} {} P99 ({:.1} vs {:.1} ms)",
                s.video,
                rel(s.abr_max_higher()),
                s.proactive,
                s.abr_max * 1e3,
                s.proactive_max * 1e3,
                rel(s.abr_p99_higher()),
                s.proactive,
                s.abr_p99 * 1e3,
                s.proactive_p99 * 1e3,
            );
        }
        out
    }
}

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use semstream::channel::{generate_two_state, Direction, TwoStateProfile};
use semstream::config::ExperimentConfig;
use semstream::harness::{compare_methods, run_experiment, RunSummary};
use semstream::metrics::{export_vmaf_pair, format_value, psnr};
use semstream::pnm::{load_frame, load_video};
use semstream::{Error, Frame, Result};

#[derive(Parser)]
#[command(
    name = "semstream",
    version,
    about = "Proactive vs. reactive video streaming simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured method x video matrix and write CSV artifacts.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the config's output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a two-state SNR trace (timestamp_ms,snr_db) to a CSV file.
    GenTrace {
        #[arg(long, allow_negative_numbers = true)]
        high: f64,
        #[arg(long, allow_negative_numbers = true)]
        low: f64,
        #[arg(long, default_value_t = 15.0)]
        dwell: f64,
        #[arg(long, default_value_t = 30.0)]
        duration: f64,
        /// Standard deviation of Gaussian jitter (dB).
        #[arg(long, default_value_t = 0.0)]
        jitter: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "ul")]
        direction: Direction,
        /// Output file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// MSE and PSNR between two frames (.ppm/.pgm) or two manifests.
    Metrics { reference: PathBuf, test: PathBuf },
    /// Per-method deltas and latency-tail checks across summary files.
    Compare {
        #[arg(required = true)]
        summaries: Vec<PathBuf>,
        #[arg(long, default_value = "GAI")]
        reference: String,
        /// Also write the table as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Export aligned original/delivered raster pairs for external VMAF tools.
    ExportVmaf {
        #[arg(long)]
        original: PathBuf,
        #[arg(long)]
        delivered: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("semstream: {e}");
            ExitCode::from(if e.is_config_error() { 2 } else { 1 })
        }
    }
}

fn write_output(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn is_manifest(path: &Path) -> bool {
    !matches!(path.extension().and_then(|e| e.to_str()), Some("ppm" | "pgm" | "pnm"))
}

fn frames_of(path: &Path) -> Result<Vec<Frame>> {
    if is_manifest(path) {
        Ok(load_video(path)?.frames().to_vec())
    } else {
        Ok(vec![load_frame(path)?])
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Run { config, seed, out } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(seed) = seed {
                cfg = cfg.with_seed(seed);
            }
            if let Some(out) = out {
                cfg.out_dir = out;
            }
            let summary = run_experiment(&cfg)?;
            for r in &summary.rows {
                let ms = |v: Option<f64>| v.map_or("-".into(), |v| format!("{:.1}", v * 1e3));
                println!(
                    "{} {}: frames={} dropped={} p50_ms={} p95_ms={} max_ms={}",
                    r.video,
                    r.method,
                    r.frames,
                    r.dropped,
                    ms(r.latency.map(|l| l[0])),
                    ms(r.latency.map(|l| l[2])),
                    ms(r.latency_max()),
                );
            }
            println!("wrote {}", cfg.out_dir.display());
            Ok(())
        }
        Command::GenTrace {
            high,
            low,
            dwell,
            duration,
            jitter,
            seed,
            direction,
            out,
        } => {
            let profile = TwoStateProfile {
                dwell,
                jitter_std_db: jitter,
                seed,
                ..TwoStateProfile::new(high, low)
            };
            profile.validate()?;
            if !(duration > 0.0) {
                return Err(Error::Config("--duration must be > 0".into()));
            }
            let trace = generate_two_state(&profile, duration, direction)?;
            write_output(out.as_deref(), &trace.to_csv())
        }
        Command::Metrics { reference, test } => {
            let a = frames_of(&reference)?;
            let b = frames_of(&test)?;
            if a.len() != b.len() {
                return Err(Error::DimensionMismatch(format!("{} frames vs {}", a.len(), b.len())));
            }
            if a.len() == 1 {
                let q = psnr(&a[0], &b[0])?;
                println!("mse={} psnr_db={}", format_value(q.mse), format_value(q.psnr_db));
                return Ok(());
            }
            let mut total = 0.0;
            for (i, (x, y)) in a.iter().zip(&b).enumerate() {
                let q = psnr(x, y)?;
                total += q.mse;
                println!(
                    "frame={i} mse={} psnr_db={}",
                    format_value(q.mse),
                    format_value(q.psnr_db)
                );
            }
            println!("frames={} mean_mse={}", a.len(), format_value(total / a.len() as f64));
            Ok(())
        }
        Command::Compare {
            summaries,
            reference,
            out,
        } => {
            let summaries = summaries.iter().map(RunSummary::load).collect::<Result<Vec<_>>>()?;
            let cmp = compare_methods(&summaries, &reference)?;
            print!("{}", cmp.to_text());
            if let Some(out) = out {
                write_output(Some(&out), &cmp.to_csv())?;
            }
            Ok(())
        }
        Command::ExportVmaf {
            original,
            delivered,
            out,
        } => {
            let a = frames_of(&original)?;
            let b = frames_of(&delivered)?;
            export_vmaf_pair(&a, &b, &out)?;
            println!("wrote {} pairs to {}", a.len(), out.display());
            Ok(())
        }
    }
}

//! Randomized controller checks shared by the fuzz tests and the acceptance
//! run. Every helper panics on a violated property.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use semstream::control::{
    AbrController, AbrEvent, AbrPolicy, CommandKind, ControlCommand, ProactiveController, ProactivePolicy,
};
use semstream::Eps;

pub const STEPS: usize = 10_000;

pub fn eps_down() -> Eps {
    Eps::new(0.0625).unwrap()
}

/// Runs of random length at levels below, inside and above a 10..15 dB band.
pub fn bursty_trace(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(len);
    while out.len() < len {
        let level = match rng.random_range(0..3) {
            0 => rng.random_range(0.0..10.0),
            1 => rng.random_range(10.0..=15.0),
            _ => rng.random_range(15.0001..30.0),
        };
        let run = rng.random_range(1..400);
        for _ in 0..run {
            // occasional single-sample glitches
            let s = if rng.random_bool(0.02) {
                rng.random_range(0.0..30.0)
            } else {
                level
            };
            out.push(s);
        }
    }
    out.truncate(len);
    out
}

/// Independent window-based restatement of the hysteresis rule.
pub fn expected_commands(trace: &[f64], p: &ProactivePolicy) -> Vec<(usize, CommandKind)> {
    let (hl, hh) = (p.hold_low as usize, p.hold_high as usize);
    let mut down = false;
    let mut out = Vec::new();
    for k in 0..trace.len() {
        if !down && k + 1 >= hl && trace[k + 1 - hl..=k].iter().all(|&s| s < p.snr_low_db) {
            down = true;
            out.push((k, CommandKind::Downscale));
        } else if down && k + 1 >= hh && trace[k + 1 - hh..=k].iter().all(|&s| s > p.snr_high_db) {
            down = false;
            out.push((k, CommandKind::Full));
        }
    }
    out
}

pub fn run_proactive(trace: &[f64], p: ProactivePolicy, delay: f64) -> Vec<(usize, ControlCommand)> {
    let mut c = ProactiveController::new(p, eps_down(), delay).unwrap();
    let mut out = Vec::new();
    for (k, &s) in trace.iter().enumerate() {
        if let Some(cmd) = c.step(s, k as f64 * 1e-3).unwrap() {
            assert_eq!(c.mode(), cmd.kind);
            out.push((k, cmd));
        }
    }
    out
}

pub fn check_proactive(trace: &[f64], p: ProactivePolicy) {
    let delay = 0.01;
    let got = run_proactive(trace, p, delay);
    let kinds: Vec<_> = got.iter().map(|(k, c)| (*k, c.kind)).collect();
    assert_eq!(kinds, expected_commands(trace, &p));
    let mut last: Option<(usize, CommandKind)> = None;
    for (k, cmd) in &got {
        // alternation, starting from full quality
        let expected = match last {
            None | Some((_, CommandKind::Full)) => CommandKind::Downscale,
            Some((_, CommandKind::Downscale)) => CommandKind::Full,
        };
        assert_eq!(cmd.kind, expected, "duplicate command at {k}");
        // hysteresis: nothing is ever issued from inside the band
        let s = trace[*k];
        match cmd.kind {
            CommandKind::Downscale => {
                assert!(s < p.snr_low_db);
                assert_eq!(cmd.eps, Some(eps_down()));
            }
            CommandKind::Full => {
                assert!(s > p.snr_high_db);
                assert_eq!(cmd.eps, None);
            }
        }
        if let Some((prev, _)) = last {
            let hold = if cmd.kind == CommandKind::Full {
                p.hold_high
            } else {
                p.hold_low
            };
            assert!(k - prev >= hold as usize);
        }
        assert_eq!(cmd.issued_at, *k as f64 * 1e-3);
        assert_eq!(cmd.effective_at, cmd.issued_at + delay);
        last = Some((*k, cmd.kind));
    }
}

/// Delivery reports and probe ticks interleaved in time order.
pub fn abr_fuzz(rng: &mut ChaCha8Rng, policy: AbrPolicy) -> usize {
    let mut c = AbrController::new(policy, eps_down()).unwrap();
    let mut now = 0.0;
    let mut next_tick = policy.probe_interval;
    let mut mode = CommandKind::Full;
    let mut tick_since_take = false;
    let mut streak = 0u32;
    let mut commands = 0;
    for _ in 0..STEPS {
        now += rng.random_range(0.0..0.05);
        if now >= next_tick {
            assert!(c.step(AbrEvent::ProbeTick, next_tick).unwrap().is_none());
            if mode == CommandKind::Downscale {
                tick_since_take = true;
            }
            next_tick += policy.probe_interval;
        }
        let probe = c.take_probe();
        // a probe is granted only while downscaled, at most once per tick
        assert_eq!(probe, tick_since_take && mode == CommandKind::Downscale);
        tick_since_take = false;
        let slow = rng.random_bool(0.3);
        let latency = if slow {
            rng.random_range(policy.latency_trigger + 1e-6..1.0)
        } else {
            rng.random_range(0.0..=policy.latency_trigger)
        };
        let reported_probe = probe || (mode == CommandKind::Downscale && rng.random_bool(0.05));
        let cmd = c
            .step(
                AbrEvent::FrameDelivered {
                    latency,
                    probe: reported_probe,
                },
                now,
            )
            .unwrap();
        match (mode, cmd) {
            (CommandKind::Full, Some(cmd)) => {
                assert!(slow, "downscale without a late frame");
                assert_eq!(cmd.kind, CommandKind::Downscale);
                mode = CommandKind::Downscale;
                streak = 0;
            }
            (CommandKind::Full, None) => assert!(!slow, "late frame ignored at full quality"),
            (CommandKind::Downscale, Some(cmd)) => {
                assert_eq!(cmd.kind, CommandKind::Full);
                assert!(reported_probe && !slow);
                streak += 1;
                assert_eq!(streak, policy.probe_success_window);
                mode = CommandKind::Full;
                streak = 0;
            }
            (CommandKind::Downscale, None) => {
                if reported_probe {
                    streak = if slow { 0 } else { streak + 1 };
                    assert!(streak < policy.probe_success_window);
                }
            }
        }
        if let Some(cmd) = cmd {
            assert_eq!(cmd.issued_at, now);
            assert_eq!(cmd.effective_at, now + policy.feedback_delay);
            commands += 1;
        }
        assert_eq!(c.mode(), mode);
    }
    commands
}

/// 20 traces of [`STEPS`] samples; returns the number of commands seen.
pub fn proactive_fuzz(rng: &mut ChaCha8Rng) -> usize {
    let mut total = 0;
    for _ in 0..20 {
        let p = ProactivePolicy {
            snr_low_db: 10.0,
            snr_high_db: 15.0,
            hold_low: rng.random_range(1..12),
            hold_high: rng.random_range(1..300),
        };
        let trace = bursty_trace(rng, STEPS);
        total += run_proactive(&trace, p, 0.0).len();
        check_proactive(&trace, p);
    }
    total
}

/// [`STEPS`] events per probe window size 1..=4; returns the command count.
pub fn abr_fuzz_windows(rng: &mut ChaCha8Rng) -> usize {
    let mut total = 0;
    for window in 1..=4 {
        let policy = AbrPolicy {
            latency_trigger: 0.150,
            feedback_delay: 0.020,
            probe_interval: rng.random_range(0.1..2.0),
            probe_success_window: window,
        };
        total += abr_fuzz(rng, policy);
    }
    total
}

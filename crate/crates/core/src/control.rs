//! Rate controllers driving UE1's retained fraction.
//!
//! * [`ProactiveController`] watches the uplink SNR every millisecond and
//!   commands a downscale before the sender queue builds up.
//! * [`AbrController`] is the reactive probe-and-adapt baseline: it only
//!   learns about congestion from late deliveries at the receiver.

use std::fmt;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::frame::Eps;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    Full,
    Downscale,
}

impl fmt::Display for CommandKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CommandKind::Full => "FULL",
            CommandKind::Downscale => "DOWNSCALE",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlCommand {
    pub kind: CommandKind,
    /// Present iff `kind == Downscale`, and then strictly below 1.
    pub eps: Option<Eps>,
    pub issued_at: f64,
    pub effective_at: f64,
}

impl ControlCommand {
    pub fn full(issued_at: f64, delay: f64) -> Self {
        ControlCommand {
            kind: CommandKind::Full,
            eps: None,
            issued_at,
            effective_at: issued_at + delay,
        }
    }

    pub fn downscale(eps: Eps, issued_at: f64, delay: f64) -> Self {
        debug_assert!(!eps.is_full());
        ControlCommand {
            kind: CommandKind::Downscale,
            eps: Some(eps),
            issued_at,
            effective_at: issued_at + delay,
        }
    }

    /// Fraction UE1 uses once this command is in force.
    pub fn target_eps(&self) -> Eps {
        self.eps.unwrap_or(Eps::FULL)
    }
}

/// UE1 side: the retained fraction for frames enqueued from `now` on.
pub fn ue1_apply(command: &ControlCommand, now: f64) -> Result<Eps> {
    if now < command.effective_at {
        return Err(Error::TooEarly {
            now,
            effective_at: command.effective_at,
        });
    }
    Ok(command.target_eps())
}

fn check_order(last: &mut Option<f64>, now: f64) -> Result<()> {
    if let Some(prev) = *last {
        if now < prev {
            return Err(Error::Ordering { now, last: prev });
        }
    }
    *last = Some(now);
    Ok(())
}

/// SNR hysteresis band with consecutive-sample holds.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProactivePolicy {
    pub snr_low_db: f64,
    pub snr_high_db: f64,
    /// Consecutive samples below `snr_low_db` before downscaling.
    pub hold_low: u32,
    /// Consecutive samples above `snr_high_db` before restoring full quality.
    pub hold_high: u32,
}

impl Default for ProactivePolicy {
    fn default() -> Self {
        ProactivePolicy {
            snr_low_db: 10.0,
            snr_high_db: 15.0,
            hold_low: 5,
            hold_high: 200,
        }
    }
}

impl ProactivePolicy {
    pub fn validate(&self) -> Result<()> {
        if !(self.snr_high_db > self.snr_low_db) {
            return Err(Error::Config("snr_high_db must exceed snr_low_db".into()));
        }
        if self.hold_low == 0 || self.hold_high == 0 {
            return Err(Error::Config("hold counts must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct ProactiveController {
    policy: ProactivePolicy,
    eps_down: Eps,
    control_delay: f64,
    mode: CommandKind,
    low_run: u32,
    high_run: u32,
    last: Option<f64>,
}

impl ProactiveController {
    /// With `eps_down == 1` the controller never commands anything.
    pub fn new(policy: ProactivePolicy, eps_down: Eps, control_delay: f64) -> Result<Self> {
        policy.validate()?;
        Ok(ProactiveController {
            policy,
            eps_down,
            control_delay,
            mode: CommandKind::Full,
            low_run: 0,
            high_run: 0,
            last: None,
        })
    }

    pub fn mode(&self) -> CommandKind {
        self.mode
    }

    /// Feed one uplink SNR sample; call once per millisecond in time order.
    pub fn step(&mut self, snr_db: f64, now: f64) -> Result<Option<ControlCommand>> {
        check_order(&mut self.last, now)?;
        self.low_run = if snr_db < self.policy.snr_low_db {
            self.low_run + 1
        } else {
            0
        };
        self.high_run = if snr_db > self.policy.snr_high_db {
            self.high_run + 1
        } else {
            0
        };
        let cmd = match self.mode {
            CommandKind::Full if self.low_run >= self.policy.hold_low && !self.eps_down.is_full() => {
                Some(ControlCommand::downscale(self.eps_down, now, self.control_delay))
            }
            CommandKind::Downscale if self.high_run >= self.policy.hold_high => {
                Some(ControlCommand::full(now, self.control_delay))
            }
            _ => None,
        };
        if let Some(c) = &cmd {
            self.mode = c.kind;
        }
        Ok(cmd)
    }
}

/// Reactive probe-and-adapt parameters.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AbrPolicy {
    /// Delivery latency (s) above which the receiver asks for a lower rate.
    pub latency_trigger: f64,
    /// Receiver-to-sender signalling delay (s).
    pub feedback_delay: f64,
    /// Seconds between probes while downscaled.
    pub probe_interval: f64,
    /// Consecutive on-time probe frames needed to return to full quality.
    pub probe_success_window: u32,
}

impl Default for AbrPolicy {
    fn default() -> Self {
        AbrPolicy {
            latency_trigger: 0.150,
            feedback_delay: 0.020,
            probe_interval: 2.0,
            probe_success_window: 1,
        }
    }
}

impl AbrPolicy {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !positive(self.latency_trigger) || !positive(self.feedback_delay) || !positive(self.probe_interval) {
            return Err(Error::Config(
                "abr latency_trigger, feedback_delay and probe_interval must be > 0".into(),
            ));
        }
        if self.probe_success_window == 0 {
            return Err(Error::Config("probe_success_window must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AbrEvent {
    /// A frame reached the receiver `latency` seconds after capture.
    FrameDelivered {
        latency: f64,
        probe: bool,
    },
    ProbeTick,
}

#[derive(Debug, Clone)]
pub struct AbrController {
    policy: AbrPolicy,
    eps_down: Eps,
    mode: CommandKind,
    probe_pending: bool,
    successes: u32,
    last: Option<f64>,
}

impl AbrController {
    pub fn new(policy: AbrPolicy, eps_down: Eps) -> Result<Self> {
        policy.validate()?;
        Ok(AbrController {
            policy,
            eps_down,
            mode: CommandKind::Full,
            probe_pending: false,
            successes: 0,
            last: None,
        })
    }

    pub fn mode(&self) -> CommandKind {
        self.mode
    }

    pub fn policy(&self) -> &AbrPolicy {
        &self.policy
    }

    pub fn step(&mut self, event: AbrEvent, now: f64) -> Result<Option<ControlCommand>> {
        check_order(&mut self.last, now)?;
        let delay = self.policy.feedback_delay;
        let on_time = |latency: f64| latency <= self.policy.latency_trigger;
        match (self.mode, event) {
            (CommandKind::Full, AbrEvent::FrameDelivered { latency, .. }) => {
                if on_time(latency) || self.eps_down.is_full() {
                    return Ok(None);
                }
                self.mode = CommandKind::Downscale;
                self.successes = 0;
                self.probe_pending = false;
                Ok(Some(ControlCommand::downscale(self.eps_down, now, delay)))
            }
            (CommandKind::Downscale, AbrEvent::FrameDelivered { latency, probe: true }) => {
                if !on_time(latency) {
                    self.successes = 0;
                    return Ok(None);
                }
                self.successes += 1;
                if self.successes < self.policy.probe_success_window {
                    return Ok(None);
                }
                self.mode = CommandKind::Full;
                self.successes = 0;
                self.probe_pending = false;
                Ok(Some(ControlCommand::full(now, delay)))
            }
            (CommandKind::Downscale, AbrEvent::ProbeTick) => {
                self.probe_pending = true;
                Ok(None)
            }
            _ => Ok(None),
        }
    }

    /// True once per probe tick: the next frame UE1 enqueues goes out at full
    /// quality.
    pub fn take_probe(&mut self) -> bool {
        let p = self.probe_pending && self.mode == CommandKind::Downscale;
        self.probe_pending = false;
        p
    }
}

/// Controller attached to one pipeline run.
#[derive(Debug, Clone)]
pub enum Controller {
    /// No feedback: every frame uses the same fraction.
    Fixed(Eps),
    Proactive(ProactiveController),
    Abr(AbrController),
}

impl Controller {
    pub fn name(&self) -> &'static str {
        match self {
            Controller::Fixed(_) => "fixed",
            Controller::Proactive(_) => "proactive",
            Controller::Abr(_) => "abr",
        }
    }

    pub fn initial_eps(&self) -> Eps {
        match self {
            Controller::Fixed(eps) => *eps,
            _ => Eps::FULL,
        }
    }
}

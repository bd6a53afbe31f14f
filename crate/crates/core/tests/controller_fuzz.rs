mod common;

use common::fuzz::{self, check_proactive, eps_down, run_proactive};
use proptest::prelude::*;

use semstream::control::{
    ue1_apply, AbrController, AbrEvent, AbrPolicy, CommandKind, ControlCommand, ProactiveController, ProactivePolicy,
};
use semstream::Error;

#[test]
fn proactive_fuzz() {
    let total = fuzz::proactive_fuzz(&mut common::rng(0x5eed));
    assert!(total > 100, "fuzz traces exercised only {total} commands");
}

#[test]
fn proactive_examples() {
    let p = ProactivePolicy {
        snr_low_db: 10.0,
        snr_high_db: 15.0,
        hold_low: 3,
        hold_high: 200,
    };
    let got = run_proactive(&[9.0, 9.0, 9.0], p, 0.01);
    assert_eq!(got.len(), 1);
    assert_eq!(got[0].0, 2);
    assert_eq!(got[0].1.kind, CommandKind::Downscale);
    assert!(run_proactive(&[9.0, 12.0, 9.0], p, 0.01).is_empty());
    // boundary values are inside the band
    assert!(run_proactive(&[10.0; 10], p, 0.01).is_empty());
}

#[test]
fn controllers_reject_time_going_backwards() {
    let mut c = ProactiveController::new(ProactivePolicy::default(), eps_down(), 0.01).unwrap();
    c.step(20.0, 2.0).unwrap();
    assert!(matches!(c.step(20.0, 1.999), Err(Error::Ordering { .. })));
    let mut a = AbrController::new(AbrPolicy::default(), eps_down()).unwrap();
    a.step(AbrEvent::ProbeTick, 2.0).unwrap();
    let late = AbrEvent::FrameDelivered {
        latency: 1.0,
        probe: false,
    };
    assert!(matches!(a.step(late, 1.0), Err(Error::Ordering { .. })));
}

#[test]
fn ue1_waits_for_effective_time() {
    let cmd = ControlCommand::downscale(eps_down(), 3.0, 0.01);
    assert!(matches!(ue1_apply(&cmd, 3.0), Err(Error::TooEarly { .. })));
    assert!(matches!(ue1_apply(&cmd, 3.009), Err(Error::TooEarly { .. })));
    assert_eq!(ue1_apply(&cmd, 3.01).unwrap(), eps_down());
    assert!(ue1_apply(&ControlCommand::full(3.0, 0.01), 4.0).unwrap().is_full());
}

#[test]
fn abr_fuzz_probe_window() {
    let total = fuzz::abr_fuzz_windows(&mut common::rng(77));
    assert!(total > 50, "fuzz exercised only {total} commands");
}

proptest! {
    #[test]
    fn proactive_matches_window_rule(
        trace in prop::collection::vec(prop::sample::select(vec![5.0, 9.99, 10.0, 12.0, 15.0, 15.01, 25.0]), 0..400),
        hold_low in 1u32..6,
        hold_high in 1u32..20,
    ) {
        check_proactive(&trace, ProactivePolicy { snr_low_db: 10.0, snr_high_db: 15.0, hold_low, hold_high });
    }
}

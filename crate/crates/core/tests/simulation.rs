use mixreward::sim::{hacking_scenario, run, slogan_scenario, window_mean};
use mixreward::StrategyKind;

#[test]
fn identical_seed_identical_trace() {
    let sc = hacking_scenario::<f64>(StrategyKind::Rlmr, 11);
    let a = run(&sc).unwrap();
    let b = run(&sc).unwrap();
    assert_eq!(a.trace, b.trace);
    let c = run(&hacking_scenario::<f64>(StrategyKind::Rlmr, 12)).unwrap();
    assert_ne!(a.trace, c.trace);
}

#[test]
fn probabilities_stay_on_the_simplex() {
    for kind in StrategyKind::ALL {
        let out = run(&hacking_scenario::<f64>(kind, 5)).unwrap();
        for m in &out.trace {
            let total: f64 = m.action_probs.iter().sum();
            assert!((total - 1.0).abs() < 1e-9, "{kind} step {}: {total}", m.step);
            assert!(m.action_probs.iter().all(|p| *p >= 0.0));
        }
    }
}

#[test]
fn linear_weighting_cannot_move_noiseless_slogan_pair() {
    let mut sc = slogan_scenario::<f64>(StrategyKind::LinearWeighting, 3);
    sc.reward_noise_std = 0.0;
    sc.steps = 200;
    let out = run(&sc).unwrap();
    for m in &out.trace {
        assert!((m.action_probs[0] - 0.5).abs() < 1e-12, "step {}", m.step);
        assert_eq!(m.groups_degenerate, m.groups_kept);
    }
}

#[test]
fn writing_only_inflates_length_and_loses_compliance() {
    let out = run(&hacking_scenario::<f64>(StrategyKind::WritingOnly, 1)).unwrap();
    let tr = &out.trace;
    assert!(window_mean(tr, 10, true, |m| m.mean_length) > window_mean(tr, 10, false, |m| m.mean_length));
    assert!(window_mean(tr, 10, true, |m| m.compliance_rate) < window_mean(tr, 10, false, |m| m.compliance_rate));
}

#[test]
fn rlmr_ends_more_compliant_than_writing_only() {
    for seed in 0..3 {
        let final_compliance = |kind| {
            let out = run(&hacking_scenario::<f64>(kind, seed)).unwrap();
            window_mean(&out.trace, 10, true, |m| m.compliance_rate)
        };
        assert!(final_compliance(StrategyKind::Rlmr) > final_compliance(StrategyKind::WritingOnly));
    }
}

#[test]
fn f32_run_agrees_in_direction() {
    let out = run(&slogan_scenario::<f32>(StrategyKind::Rlmr, 4)).unwrap();
    assert!(out.summary.action_probs[0] > 0.9);
}

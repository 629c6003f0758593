//! Runs both preset scenarios under every strategy for twenty seeds and
//! prints how each one ends up.
//!
//! cargo run --release -p mixreward --example strategy_sweep

use mixreward::sim::{hacking_scenario, run, slogan_scenario, window_mean};
use mixreward::StrategyKind;

const SEEDS: u64 = 20;

fn main() {
    for kind in StrategyKind::ALL {
        let mut compliant_wins = 0;
        let mut mean_p = 0.0;
        for seed in 0..SEEDS {
            match run(&slogan_scenario::<f64>(kind, seed)) {
                Ok(o) => {
                    let p = o.summary.action_probs[0];
                    mean_p += p / SEEDS as f64;
                    compliant_wins += usize::from(p > 0.9);
                }
                Err(e) => println!("{kind} slogan seed {seed}: {e}"),
            }
        }
        println!(
            "{:>17} slogan:  p(compliant) mean {mean_p:.3}, > 0.9 in {compliant_wins}/{SEEDS} seeds",
            kind.name()
        );

        let (mut len0, mut len1, mut c0, mut c1) = (0.0, 0.0, 0.0, 0.0);
        for seed in 0..SEEDS {
            match run(&hacking_scenario::<f64>(kind, seed)) {
                Ok(o) => {
                    let t = &o.trace;
                    len0 += window_mean(t, 10, false, |m| m.mean_length) / SEEDS as f64;
                    len1 += window_mean(t, 10, true, |m| m.mean_length) / SEEDS as f64;
                    c0 += window_mean(t, 10, false, |m| m.compliance_rate) / SEEDS as f64;
                    c1 += window_mean(t, 10, true, |m| m.compliance_rate) / SEEDS as f64;
                }
                Err(e) => println!("{kind} hacking seed {seed}: {e}"),
            }
        }
        println!(
            "{:>17} hacking: length {len0:.0} -> {len1:.0}, compliance {c0:.2} -> {c1:.2}",
            kind.name()
        );
    }
}

//! `oracle`: randomized check of the violation-penalty guarantees.

use std::io::Write;

use anyhow::{anyhow, Result};
use mixreward::{shape_group_rlmr, RewardGroup};
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

pub const GAMMAS: [f64; 3] = [0.01, 0.1, 1.0];
const TOL: f64 = 1e-9;

/// n in [2, 16], rewards U[0, 10], 1 <= k <= n - 1 violators, gamma from [`GAMMAS`].
pub fn random_group<R: Rng + ?Sized>(rng: &mut R) -> RewardGroup<f64> {
    let n = rng.random_range(2..=16usize);
    let k = rng.random_range(1..n);
    let rewards: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..10.0)).collect();
    let mut compliant = vec![true; n];
    for i in index::sample(rng, n, k) {
        compliant[i] = false;
    }
    let gamma = GAMMAS[rng.random_range(0..GAMMAS.len())];
    RewardGroup::from_rewards(&rewards, &compliant, gamma).expect("valid random group")
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ViolationCounts {
    /// A violator above `mean - gamma`.
    pub gap: usize,
    /// A violator with a non-negative advantage.
    pub advantage_sign: usize,
    /// A compliant reward that changed.
    pub compliant_changed: usize,
    /// Two compliant samples whose ordering flipped.
    pub order: usize,
    /// Adjusted mean differs from `(sum(r) - k * delta) / n`.
    pub mean: usize,
    /// Shaping returned an error.
    pub shaping_failed: usize,
}

impl ViolationCounts {
    pub fn total(&self) -> usize {
        self.gap + self.advantage_sign + self.compliant_changed + self.order + self.mean + self.shaping_failed
    }
}

fn sign(x: f64) -> i8 {
    (x > 0.0) as i8 - (x < 0.0) as i8
}

/// Shapes one group and tallies every broken guarantee.
pub fn check_group(group: &RewardGroup<f64>, counts: &mut ViolationCounts) {
    let Ok(out) = shape_group_rlmr(group) else {
        counts.shaping_failed += 1;
        return;
    };
    let n = out.len() as f64;
    let k = out.violator_count() as f64;
    let adjusted: Vec<f64> = out
        .samples
        .iter()
        .map(|s| s.adjusted_reward.unwrap_or(f64::NAN))
        .collect();
    let adv: Vec<f64> = out.samples.iter().map(|s| s.advantage.unwrap_or(f64::NAN)).collect();
    let mean = adjusted.iter().sum::<f64>() / n;
    let raw_sum: f64 = group.samples.iter().map(|s| s.raw_reward).sum();
    let delta = out.delta.unwrap_or(f64::NAN);
    if !((mean - (raw_sum - k * delta) / n).abs() <= TOL) {
        counts.mean += 1;
    }
    for (i, s) in group.samples.iter().enumerate() {
        if s.compliant {
            if adjusted[i] != s.raw_reward {
                counts.compliant_changed += 1;
            }
            for (j, t) in group.samples.iter().enumerate().skip(i + 1) {
                if !t.compliant {
                    continue;
                }
                let raw = sign(s.raw_reward - t.raw_reward);
                if raw != sign(adjusted[i] - adjusted[j]) || raw != sign(adv[i] - adv[j]) {
                    counts.order += 1;
                }
            }
        } else {
            if !(adjusted[i] <= mean - group.gamma + TOL) {
                counts.gap += 1;
            }
            if !(adv[i] < 0.0) {
                counts.advantage_sign += 1;
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct OracleReport {
    pub trials: u64,
    pub seed: u64,
    pub violations: usize,
    pub by_kind: ViolationCounts,
}

pub fn run_trials(trials: u64, seed: u64) -> Result<OracleReport> {
    if trials == 0 {
        return Err(anyhow!("--trials must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = ViolationCounts::default();
    for _ in 0..trials {
        check_group(&random_group(&mut rng), &mut counts);
    }
    Ok(OracleReport {
        trials,
        seed,
        violations: counts.total(),
        by_kind: counts,
    })
}

pub fn cmd_oracle<W: Write, L: Write>(trials: u64, seed: u64, mut out: W, mut log: L) -> Result<u8> {
    let report = run_trials(trials, seed)?;
    writeln!(out, "{}", serde_json::to_string(&report)?)?;
    writeln!(
        log,
        "{} random groups (seed {}): {} violations",
        report.trials, report.seed, report.violations
    )?;
    Ok(u8::from(report.violations > 0))
}

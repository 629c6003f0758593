//! Toy GRPO training loop over a discrete response space.
//!
//! Each action stands in for a whole generated response: it has a latent
//! writing quality, a compliance verdict and a length. A softmax policy over
//! the actions is trained with one score-function update per batch, which is
//! what the clipped GRPO surrogate reduces to when the importance ratio is 1.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::filter::{classify_group, classify_rewards_only, fill_batch_with, DropCounts, FilterConfig, FilterError};
use crate::reward::{RewardError, RewardGroup, SampleRecord};
use crate::scalar::Real;
use crate::strategy::{shape, Strategy, StrategyKind};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("dynamic sampling exhausted at step {step}")]
    Exhausted { step: usize },
    #[error(transparent)]
    Reward(#[from] RewardError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Action<T> {
    #[serde(default)]
    pub id: usize,
    pub quality: T,
    pub compliant: bool,
    pub length: usize,
}

impl<T: Real> Action<T> {
    pub fn new(quality: T, compliant: bool, length: usize) -> Self {
        Self {
            id: 0,
            quality,
            compliant,
            length,
        }
    }
}

fn default_group_size() -> usize {
    8
}
fn default_noise<T: Real>() -> T {
    T::lit(0.3)
}
fn default_lr<T: Real>() -> T {
    T::lit(0.1)
}
fn default_steps() -> usize {
    200
}
fn default_strategy() -> StrategyKind {
    StrategyKind::Rlmr
}
fn default_gamma<T: Real>() -> T {
    T::lit(0.1)
}

/// A toy environment plus training hyperparameters. Mirrors the scenario file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Real + Deserialize<'de>"), deny_unknown_fields)]
pub struct Scenario<T> {
    pub actions: Vec<Action<T>>,
    #[serde(default = "default_group_size")]
    pub group_size: usize,
    #[serde(rename = "noise_std", default = "default_noise")]
    pub reward_noise_std: T,
    #[serde(rename = "lr", default = "default_lr")]
    pub learning_rate: T,
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default = "default_strategy")]
    pub strategy: StrategyKind,
    #[serde(default = "default_gamma")]
    pub gamma: T,
    #[serde(default)]
    pub filter: FilterConfig<T>,
    #[serde(default)]
    pub seed: u64,
}

impl<T: Real> Scenario<T> {
    /// Scenario with default hyperparameters over the given actions.
    pub fn new(actions: Vec<Action<T>>, strategy: StrategyKind) -> Self {
        let mut s = Self {
            actions,
            group_size: default_group_size(),
            reward_noise_std: default_noise(),
            learning_rate: default_lr(),
            steps: default_steps(),
            strategy,
            gamma: default_gamma(),
            filter: FilterConfig::default(),
            seed: 0,
        };
        s.renumber();
        s
    }

    /// Sets each action's id to its position.
    pub fn renumber(&mut self) {
        for (i, a) in self.actions.iter_mut().enumerate() {
            a.id = i;
        }
    }

    pub fn strategy(&self) -> Strategy<T> {
        Strategy {
            kind: self.strategy,
            gamma: self.gamma,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: &str| Err(SimError::InvalidScenario(m.to_string()));
        if self.actions.len() < 2 {
            return bad("at least 2 actions are required");
        }
        if self.group_size < 2 {
            return bad("group_size must be at least 2");
        }
        if self.actions.iter().any(|a| !a.quality.is_finite()) {
            return bad("action quality must be finite");
        }
        if self.actions.iter().any(|a| a.length == 0) {
            return bad("action length must be at least 1");
        }
        if !(self.reward_noise_std >= T::zero()) || !self.reward_noise_std.is_finite() {
            return bad("noise_std must be finite and non-negative");
        }
        if !(self.learning_rate >= T::zero()) || !self.learning_rate.is_finite() {
            return bad("lr must be finite and non-negative");
        }
        if !(self.gamma > T::zero()) || !self.gamma.is_finite() {
            return bad("gamma must be finite and positive");
        }
        if self.strategy == StrategyKind::Rlmr {
            let compliant = self.actions.iter().filter(|a| a.compliant).count();
            if compliant == 0 || compliant == self.actions.len() {
                return bad("rlmr needs at least one compliant and one non-compliant action");
            }
        }
        self.filter
            .validate()
            .map_err(|e| SimError::InvalidScenario(e.to_string()))
    }
}

/// Softmax policy over the action set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyState<T> {
    pub logits: Vec<T>,
    pub step: usize,
}

impl<T: Real> PolicyState<T> {
    pub fn uniform(actions: usize) -> Self {
        Self {
            logits: vec![T::zero(); actions],
            step: 0,
        }
    }

    pub fn probs(&self) -> Vec<T> {
        softmax(&self.logits)
    }
}

pub fn softmax<T: Real>(logits: &[T]) -> Vec<T> {
    let max = logits.iter().copied().fold(T::neg_infinity(), T::max);
    let exps: Vec<T> = logits.iter().map(|&l| (l - max).exp()).collect();
    let total: T = exps.iter().copied().sum();
    exps.into_iter().map(|e| e / total).collect()
}

fn pick<T: Real>(probs: &[T], u: T) -> usize {
    let mut acc = T::zero();
    for (i, &p) in probs.iter().enumerate() {
        acc = acc + p;
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}

/// Draws `group_size` actions i.i.d. from the policy and scores them.
pub fn sample_group<T: Real, R: Rng + ?Sized>(
    policy: &PolicyState<T>,
    scenario: &Scenario<T>,
    rng: &mut R,
) -> RewardGroup<T> {
    let probs = policy.probs();
    let samples = (0..scenario.group_size)
        .map(|_| {
            let idx = pick(&probs, T::lit(rng.random::<f64>()));
            let noise: f64 = rng.sample(StandardNormal);
            let a = &scenario.actions[idx];
            let mut s = SampleRecord::new(a.quality + scenario.reward_noise_std * T::lit(noise), a.compliant)
                .with_length(a.length);
            s.action = Some(idx);
            s
        })
        .collect();
    RewardGroup::new(samples, scenario.gamma).expect("validated scenario")
}

/// `sum_i A_i * (onehot(o_i) - softmax(logits))`, the gradient of
/// `sum_i A_i * log pi(o_i)` with respect to the logits.
///
/// Samples without an action index or advantage contribute nothing.
pub fn policy_gradient<T: Real>(policy: &PolicyState<T>, group: &RewardGroup<T>) -> Vec<T> {
    let probs = policy.probs();
    let mut grad = vec![T::zero(); probs.len()];
    for s in &group.samples {
        let (Some(a), Some(adv)) = (s.action, s.advantage) else {
            continue;
        };
        for (j, g) in grad.iter_mut().enumerate() {
            *g = *g - adv * probs[j];
        }
        grad[a] = grad[a] + adv;
    }
    grad
}

/// One score-function step on a single group, evaluated at the pre-update logits.
pub fn policy_update<T: Real>(policy: &PolicyState<T>, group: &RewardGroup<T>, lr: T) -> PolicyState<T> {
    let grad = policy_gradient(policy, group);
    PolicyState {
        logits: policy.logits.iter().zip(grad).map(|(&l, g)| l + lr * g).collect(),
        step: policy.step + 1,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepMetrics<T> {
    pub step: usize,
    /// Averages over every sample drawn this step, dropped groups included.
    pub mean_raw_reward: T,
    pub compliance_rate: T,
    pub mean_length: T,
    /// Policy after this step's update.
    pub action_probs: Vec<T>,
    pub groups_kept: usize,
    pub groups_dropped: DropCounts,
    /// Kept groups skipped because their shaped rewards had no spread.
    pub groups_degenerate: usize,
    pub draws: usize,
    pub shortfall: usize,
}

/// Final policy state summarized under the policy's own distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary<T> {
    pub strategy: StrategyKind,
    pub seed: u64,
    pub steps: usize,
    pub action_probs: Vec<T>,
    pub expected_compliance: T,
    pub expected_quality: T,
    pub expected_length: T,
}

impl<T: Real> Summary<T> {
    pub fn of(scenario: &Scenario<T>, policy: &PolicyState<T>) -> Self {
        let probs = policy.probs();
        let expect =
            |f: &dyn Fn(&Action<T>) -> T| -> T { probs.iter().zip(&scenario.actions).map(|(&p, a)| p * f(a)).sum() };
        Self {
            strategy: scenario.strategy,
            seed: scenario.seed,
            steps: policy.step,
            expected_compliance: expect(&|a| if a.compliant { T::one() } else { T::zero() }),
            expected_quality: expect(&|a| a.quality),
            expected_length: expect(&|a| T::from_count(a.length)),
            action_probs: probs,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput<T> {
    pub trace: Vec<StepMetrics<T>>,
    pub policy: PolicyState<T>,
    pub summary: Summary<T>,
}

#[derive(Default)]
struct SampleTally {
    n: usize,
    reward: f64,
    compliant: usize,
    length: usize,
}

/// Trains from a uniform policy and records one metrics row per step.
///
/// Each step fills a batch through dynamic sampling, shapes every kept group
/// with the scenario's strategy, and applies the mean of the per-group policy
/// gradients. Strategies that never read verification verdicts are filtered
/// on reward thresholds only.
pub fn run<T: Real>(scenario: &Scenario<T>) -> Result<RunOutput<T>, SimError> {
    scenario.validate()?;
    let strategy = scenario.strategy();
    let classify = if scenario.strategy.uses_verification() {
        classify_group::<T>
    } else {
        classify_rewards_only::<T>
    };
    let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
    let mut policy = PolicyState::uniform(scenario.actions.len());
    let mut trace = Vec::with_capacity(scenario.steps);

    for step in 1..=scenario.steps {
        let mut tally = SampleTally::default();
        let batch = {
            let mut source = || {
                let g = sample_group(&policy, scenario, &mut rng);
                for s in &g.samples {
                    tally.n += 1;
                    tally.reward += s.raw_reward.to_f64().unwrap_or(f64::NAN);
                    tally.compliant += usize::from(s.compliant);
                    tally.length += s.length;
                }
                g
            };
            match fill_batch_with(&mut source, &scenario.filter, classify) {
                Ok(b) => b,
                Err(FilterError::Exhausted { .. }) => return Err(SimError::Exhausted { step }),
                Err(e) => return Err(SimError::InvalidScenario(e.to_string())),
            }
        };

        let mut grad = vec![T::zero(); policy.logits.len()];
        let mut used = 0usize;
        let mut degenerate = 0usize;
        for g in &batch.groups {
            match shape(&strategy, g) {
                Ok(shaped) => {
                    let mut scored = g.clone();
                    for (s, a) in scored.samples.iter_mut().zip(shaped.stats.advantages) {
                        s.advantage = Some(a);
                    }
                    for (acc, x) in grad.iter_mut().zip(policy_gradient(&policy, &scored)) {
                        *acc = *acc + x;
                    }
                    used += 1;
                }
                Err(RewardError::DegenerateGroup) => degenerate += 1,
                Err(e) => return Err(e.into()),
            }
        }
        let scale = if used > 0 {
            scenario.learning_rate / T::from_count(used)
        } else {
            T::zero()
        };
        for (l, g) in policy.logits.iter_mut().zip(grad) {
            *l = *l + scale * g;
        }
        policy.step = step;

        let n = tally.n.max(1) as f64;
        trace.push(StepMetrics {
            step,
            mean_raw_reward: T::lit(tally.reward / n),
            compliance_rate: T::lit(tally.compliant as f64 / n),
            mean_length: T::lit(tally.length as f64 / n),
            action_probs: policy.probs(),
            groups_kept: batch.groups.len(),
            groups_dropped: batch.dropped,
            groups_degenerate: degenerate,
            draws: batch.draws,
            shortfall: batch.shortfall,
        });
    }

    let summary = Summary::of(scenario, &policy);
    Ok(RunOutput { trace, policy, summary })
}

/// The two-response slogan scenario: a compliant response scoring 8.9 against
/// a violating one scoring 9.0.
pub fn slogan_scenario<T: Real>(strategy: StrategyKind, seed: u64) -> Scenario<T> {
    let mut s = Scenario::new(
        vec![Action::new(T::lit(8.9), true, 14), Action::new(T::lit(9.0), false, 16)],
        strategy,
    );
    s.seed = seed;
    s.steps = 500;
    s
}

/// Four responses where the best-scoring one violates its constraints and is
/// also the longest.
pub fn hacking_scenario<T: Real>(strategy: StrategyKind, seed: u64) -> Scenario<T> {
    let mut s = Scenario::new(
        vec![
            Action::new(T::lit(5.0), true, 60),
            Action::new(T::lit(6.5), true, 90),
            Action::new(T::lit(7.0), false, 120),
            Action::new(T::lit(8.0), false, 220),
        ],
        strategy,
    );
    s.seed = seed;
    s.steps = 300;
    s
}

/// Mean of `f` over the first (or last) `window` rows of a trace.
pub fn window_mean<T: Real>(
    trace: &[StepMetrics<T>],
    window: usize,
    last: bool,
    f: impl Fn(&StepMetrics<T>) -> T,
) -> T {
    let w = window.min(trace.len());
    if w == 0 {
        return T::nan();
    }
    let slice = if last { &trace[trace.len() - w..] } else { &trace[..w] };
    slice.iter().map(f).sum::<T>() / T::from_count(w)
}

//! Constraint-aware mixed-reward shaping for group-relative policy optimization.
//!
//! Responses that fail verification receive a group-dependent penalty chosen
//! so that they always end up with a negative advantage, while compliant
//! responses keep their quality ordering. Alongside the shaping core the crate
//! ships a rule-based constraint verifier, the single-reward and linear
//! baselines, DAPO-style dynamic sampling, a linear Bradley-Terry reward
//! model, and a small softmax-policy simulator for comparing strategies.
//!
//! All math is generic over [`Scalar`] / [`Real`]; the aliases below pin the
//! common instantiations.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bt;
pub mod filter;
pub mod reward;
pub mod scalar;
pub mod sim;
pub mod strategy;
pub mod verify;

pub use bt::{bt_grad, bt_loss, fit, BtError, FitConfig, PreferencePair, ScorerParams};
pub use filter::{
    classify_group, classify_rewards_only, fill_batch, fill_batch_with, DropCounts, FilledBatch, FilterConfig,
    FilterError, GroupLabel, GroupSource,
};
pub use reward::{
    adjust_group, compute_penalty, normalize_advantages, shape_group_rlmr, AdvantageStats, RewardError, RewardGroup,
    SampleRecord,
};
pub use scalar::{Real, Scalar};
pub use sim::{
    policy_gradient, policy_update, run, sample_group, Action, PolicyState, RunOutput, Scenario, SimError, StepMetrics,
    Summary,
};
pub use strategy::{linear_scores, min_max_normalize, shape, Shaped, Strategy, StrategyKind};
pub use verify::{verify_all, verify_one, verify_report, ConstraintError, ConstraintSet, ConstraintSpec, CountingMode};

/// Exact rational scalar for penalty arithmetic.
pub type Rational = num_rational::Rational64;

pub type Group = RewardGroup<f64>;
pub type Group32 = RewardGroup<f32>;
pub type ExactGroup = RewardGroup<Rational>;
pub type Sample = SampleRecord<f64>;
pub type Stats = AdvantageStats<f64>;
pub type Filter = FilterConfig<f64>;
pub type Params = ScorerParams<f64>;
pub type Pair = PreferencePair<f64>;
pub type Scenario64 = Scenario<f64>;
pub type Metrics = StepMetrics<f64>;

//! Group-relative advantages and the dynamic violation penalty.
//!
//! For a group of `n` sampled responses, `k` of which fail verification, the
//! penalty `delta` is the smallest non-negative amount that, subtracted from
//! every violator, leaves each violator at least `gamma` below the adjusted
//! group mean:
//!
//! ```text
//! delta = max(0, (n * r_max_vio + n * gamma - sum(r)) / (n - k))
//! ```
//!
//! Compliant rewards are never touched, so their relative order survives, and
//! because `gamma > 0` every violator ends with a strictly negative advantage.

use thiserror::Error;

use crate::scalar::{max_of, sum, Real, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum RewardError {
    #[error("a group needs at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("gamma must be strictly positive")]
    NonPositiveGamma,
    #[error("{rewards} rewards but {compliant} compliance flags")]
    LengthMismatch { rewards: usize, compliant: usize },
    #[error("every sample in the group violates its constraints")]
    AllViolating,
    #[error("no sample violates its constraints, the penalty is undefined")]
    NoViolators,
    #[error("rewards have zero variance, the group carries no learning signal")]
    DegenerateGroup,
}

impl RewardError {
    /// Stable snake_case name used in JSONL error records.
    pub fn code(&self) -> &'static str {
        match self {
            RewardError::TooFewSamples(_) => "too_few_samples",
            RewardError::NonPositiveGamma => "non_positive_gamma",
            RewardError::LengthMismatch { .. } => "length_mismatch",
            RewardError::AllViolating => "all_violating",
            RewardError::NoViolators => "no_violators",
            RewardError::DegenerateGroup => "degenerate_group",
        }
    }
}

/// One sampled response within a group.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleRecord<T> {
    pub raw_reward: T,
    pub compliant: bool,
    /// Set by [`adjust_group`].
    pub adjusted_reward: Option<T>,
    /// Set once the group has been normalized.
    pub advantage: Option<T>,
    /// Token-count proxy, only read by simulator metrics.
    pub length: usize,
    /// Index into a discrete response space, when the sample came from one.
    pub action: Option<usize>,
}

impl<T: Scalar> SampleRecord<T> {
    pub fn new(raw_reward: T, compliant: bool) -> Self {
        Self {
            raw_reward,
            compliant,
            adjusted_reward: None,
            advantage: None,
            length: 0,
            action: None,
        }
    }

    pub fn with_length(mut self, length: usize) -> Self {
        self.length = length;
        self
    }

    /// Adjusted reward if present, raw reward otherwise.
    pub fn effective_reward(&self) -> T {
        self.adjusted_reward.unwrap_or(self.raw_reward)
    }
}

/// The unit of GRPO computation: all samples drawn for one query.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardGroup<T> {
    pub samples: Vec<SampleRecord<T>>,
    pub gamma: T,
    /// Penalty applied by [`adjust_group`]; zero when nothing was violated.
    pub delta: Option<T>,
}

impl<T: Scalar> RewardGroup<T> {
    pub fn new(samples: Vec<SampleRecord<T>>, gamma: T) -> Result<Self, RewardError> {
        if samples.len() < 2 {
            return Err(RewardError::TooFewSamples(samples.len()));
        }
        if !(gamma > T::zero()) {
            return Err(RewardError::NonPositiveGamma);
        }
        Ok(Self {
            samples,
            gamma,
            delta: None,
        })
    }

    pub fn from_rewards(rewards: &[T], compliant: &[bool], gamma: T) -> Result<Self, RewardError> {
        if rewards.len() != compliant.len() {
            return Err(RewardError::LengthMismatch {
                rewards: rewards.len(),
                compliant: compliant.len(),
            });
        }
        let samples = rewards
            .iter()
            .zip(compliant)
            .map(|(&r, &c)| SampleRecord::new(r, c))
            .collect();
        Self::new(samples, gamma)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn violator_count(&self) -> usize {
        self.samples.iter().filter(|s| !s.compliant).count()
    }

    pub fn raw_rewards(&self) -> Vec<T> {
        self.samples.iter().map(|s| s.raw_reward).collect()
    }

    pub fn compliance(&self) -> Vec<bool> {
        self.samples.iter().map(|s| s.compliant).collect()
    }

    pub fn effective_rewards(&self) -> Vec<T> {
        self.samples.iter().map(SampleRecord::effective_reward).collect()
    }

    /// Mean of the effective (adjusted if present) rewards.
    pub fn adjusted_mean(&self) -> T {
        sum(self.samples.iter().map(SampleRecord::effective_reward)) / T::from_count(self.len())
    }

    pub fn advantages(&self) -> Option<Vec<T>> {
        self.samples.iter().map(|s| s.advantage).collect()
    }
}

/// Closed-form violation penalty for a group with `1 <= k <= n - 1` violators.
///
/// The returned value sits exactly on the bound (clamped at zero), which puts
/// the highest-scoring violator exactly `gamma` below the adjusted mean.
pub fn compute_penalty<T: Scalar>(group: &RewardGroup<T>) -> Result<T, RewardError> {
    let n = group.len();
    let k = group.violator_count();
    if k == 0 {
        return Err(RewardError::NoViolators);
    }
    if k == n {
        return Err(RewardError::AllViolating);
    }
    let n_s = T::from_count(n);
    let r_max_vio = max_of(group.samples.iter().filter(|s| !s.compliant).map(|s| s.raw_reward)).expect("k >= 1");
    let total = sum(group.samples.iter().map(|s| s.raw_reward));
    let bound = (n_s * r_max_vio + n_s * group.gamma - total) / T::from_count(n - k);
    Ok(if bound > T::zero() { bound } else { T::zero() })
}

/// Subtracts the shared penalty from every violator.
///
/// A group without violators passes through with `delta = 0` and adjusted
/// rewards equal to the raw ones.
pub fn adjust_group<T: Scalar>(group: &RewardGroup<T>) -> Result<RewardGroup<T>, RewardError> {
    let delta = match compute_penalty(group) {
        Ok(d) => d,
        Err(RewardError::NoViolators) => T::zero(),
        Err(e) => return Err(e),
    };
    let mut out = group.clone();
    for s in &mut out.samples {
        s.adjusted_reward = Some(if s.compliant {
            s.raw_reward
        } else {
            s.raw_reward - delta
        });
        s.advantage = None;
    }
    out.delta = Some(delta);
    Ok(out)
}

/// Group mean, population standard deviation and z-scored advantages.
#[derive(Debug, Clone, PartialEq)]
pub struct AdvantageStats<T> {
    pub mean: T,
    pub std: T,
    pub advantages: Vec<T>,
}

/// Smallest standard deviation regarded as carrying signal.
///
/// The absolute floor is 1e-12; for f32 (or very large rewards) the floor
/// rises to a few ulps of the reward magnitude so rounding noise in the mean
/// is not mistaken for spread.
fn degenerate_floor<T: Real>(rewards: &[T]) -> T {
    let scale = rewards.iter().fold(T::zero(), |m, r| m.max(r.abs()));
    T::lit(1e-12).max(T::epsilon() * T::lit(4.0) * scale)
}

/// Standardizes rewards within a group: `(r_i - mean) / std`.
///
/// Deviations are taken as the mean pairwise difference `sum_j (r_i - r_j) / n`
/// rather than against the rounded mean, so they never suffer cancellation and
/// a two-sample group always gets advantages of exactly `+1` and `-1`.
pub fn normalize_advantages<T: Real>(rewards: &[T]) -> Result<AdvantageStats<T>, RewardError> {
    if rewards.len() < 2 {
        return Err(RewardError::TooFewSamples(rewards.len()));
    }
    let n = T::from_count(rewards.len());
    let mean = rewards.iter().copied().sum::<T>() / n;
    let dev: Vec<T> = rewards
        .iter()
        .map(|&ri| rewards.iter().map(|&rj| ri - rj).sum::<T>() / n)
        .collect();
    let var = dev.iter().map(|&d| d * d).sum::<T>() / n;
    let std = var.sqrt();
    if std < degenerate_floor(rewards) {
        return Err(RewardError::DegenerateGroup);
    }
    Ok(AdvantageStats {
        mean,
        std,
        advantages: dev.into_iter().map(|d| d / std).collect(),
    })
}

/// Penalty, adjustment, then normalization on the adjusted rewards.
///
/// The returned group carries `delta`, adjusted rewards and advantages.
pub fn shape_group_rlmr<T: Real>(group: &RewardGroup<T>) -> Result<RewardGroup<T>, RewardError> {
    let mut out = adjust_group(group)?;
    let adjusted = out.effective_rewards();
    let stats = normalize_advantages(&adjusted)?;
    for (s, a) in out.samples.iter_mut().zip(stats.advantages) {
        s.advantage = Some(a);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Rational64;

    fn group(rewards: &[f64], compliant: &[bool], gamma: f64) -> RewardGroup<f64> {
        RewardGroup::from_rewards(rewards, compliant, gamma).unwrap()
    }

    #[test]
    fn worked_example_penalty_is_four() {
        let g = group(&[10.0, 8.0, 1.0], &[true, false, true], 1.0);
        assert_eq!(compute_penalty(&g).unwrap(), 4.0);
        let adj = adjust_group(&g).unwrap();
        assert_eq!(adj.effective_rewards(), vec![10.0, 4.0, 1.0]);
        assert_eq!(adj.adjusted_mean(), 5.0);
        assert_eq!(adj.delta, Some(4.0));
    }

    #[test]
    fn worked_example_exact_in_rationals() {
        let r = |x: i64| Rational64::from_integer(x);
        let g = RewardGroup::from_rewards(&[r(10), r(8), r(1)], &[true, false, true], r(1)).unwrap();
        assert_eq!(compute_penalty(&g).unwrap(), r(4));
        let adj = adjust_group(&g).unwrap();
        assert_eq!(adj.adjusted_mean(), r(5));
        assert_eq!(adj.samples[1].adjusted_reward, Some(r(4)));
    }

    #[test]
    fn slogan_pair_penalty() {
        // (2*9.0 + 0.2 - 17.9) / 1
        let g = group(&[8.9, 9.0], &[true, false], 0.1);
        let d = compute_penalty(&g).unwrap();
        assert!((d - 0.3).abs() < 1e-12, "{d}");
    }

    #[test]
    fn penalty_clamps_at_zero() {
        // violator already far below the mean
        let g = group(&[10.0, 9.0, 0.0], &[true, true, false], 0.1);
        assert_eq!(compute_penalty(&g).unwrap(), 0.0);
        let adj = adjust_group(&g).unwrap();
        assert_eq!(adj.effective_rewards(), adj.raw_rewards());
    }

    #[test]
    fn penalty_errors() {
        let all_bad = group(&[1.0, 2.0], &[false, false], 0.1);
        assert_eq!(compute_penalty(&all_bad), Err(RewardError::AllViolating));
        assert_eq!(adjust_group(&all_bad), Err(RewardError::AllViolating));
        let all_good = group(&[1.0, 2.0], &[true, true], 0.1);
        assert_eq!(compute_penalty(&all_good), Err(RewardError::NoViolators));
    }

    #[test]
    fn all_compliant_adjustment_is_identity() {
        let g = group(&[3.0, 1.0, 2.0], &[true, true, true], 1.0);
        let adj = adjust_group(&g).unwrap();
        assert_eq!(adj.effective_rewards(), g.raw_rewards());
        assert_eq!(adj.delta, Some(0.0));
    }

    #[test]
    fn tied_pair_lands_one_below_mean() {
        let g = group(&[5.0, 5.0], &[true, false], 1.0);
        assert_eq!(compute_penalty(&g).unwrap(), 2.0);
        let adj = adjust_group(&g).unwrap();
        assert_eq!(adj.effective_rewards(), vec![5.0, 3.0]);
        assert_eq!(adj.adjusted_mean(), 4.0);
    }

    #[test]
    fn normalize_matches_hand_arithmetic() {
        let stats = normalize_advantages(&[10.0f64, 4.0, 1.0]).unwrap();
        let std = 14.0f64.sqrt();
        assert!((stats.mean - 5.0).abs() < 1e-12);
        assert!((stats.std - std).abs() < 1e-12);
        let want = [5.0 / std, -1.0 / std, -4.0 / std];
        for (a, w) in stats.advantages.iter().zip(want) {
            assert!((a - w).abs() < 1e-12);
        }
        assert!((stats.advantages[0] - 1.3363).abs() < 1e-4);
        assert!((stats.advantages[1] + 0.2673).abs() < 1e-4);
        assert!((stats.advantages[2] + 1.0690).abs() < 1e-4);
    }

    #[test]
    fn normalize_two_point() {
        let stats = normalize_advantages(&[-1.0f64, 1.0]).unwrap();
        assert_eq!(stats.advantages, vec![-1.0, 1.0]);
    }

    #[test]
    fn normalize_constant_is_degenerate() {
        for c in [0.0, 0.1, 7.3, -2.5, 1e6] {
            assert_eq!(normalize_advantages(&[c, c, c]), Err(RewardError::DegenerateGroup));
        }
        assert_eq!(
            normalize_advantages(&[0.1f32, 0.1, 0.1]),
            Err(RewardError::DegenerateGroup)
        );
        assert_eq!(normalize_advantages(&[1.0]), Err(RewardError::TooFewSamples(1)));
    }

    #[test]
    fn rlmr_worked_example_signs() {
        let g = group(&[10.0, 8.0, 1.0], &[true, false, true], 1.0);
        let out = shape_group_rlmr(&g).unwrap();
        let a = out.advantages().unwrap();
        assert!(a[0] > 0.0 && a[1] < 0.0 && a[2] < 0.0, "{a:?}");
    }

    #[test]
    fn rlmr_slogan_pair_flips_preference() {
        let g = group(&[8.9, 9.0], &[true, false], 0.1);
        let out = shape_group_rlmr(&g).unwrap();
        let adj = out.effective_rewards();
        assert!((adj[1] - 8.7).abs() < 1e-12);
        let a = out.advantages().unwrap();
        assert!((a[0] - 1.0).abs() < 1e-9 && (a[1] + 1.0).abs() < 1e-9, "{a:?}");
    }

    #[test]
    fn group_validation() {
        assert_eq!(
            RewardGroup::from_rewards(&[1.0], &[true], 0.1),
            Err(RewardError::TooFewSamples(1))
        );
        assert_eq!(
            RewardGroup::from_rewards(&[1.0, 2.0], &[true, false], 0.0),
            Err(RewardError::NonPositiveGamma)
        );
        assert_eq!(
            RewardGroup::from_rewards(&[1.0, 2.0], &[true], 0.1),
            Err(RewardError::LengthMismatch {
                rewards: 2,
                compliant: 1
            })
        );
        assert_eq!(RewardError::AllViolating.code(), "all_violating");
    }
}

//! Dynamic sampling: drop groups with no contrastive signal and resample.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::reward::RewardGroup;
use crate::scalar::{Real, Scalar};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FilterError {
    #[error("invalid filter config: {0}")]
    InvalidConfig(&'static str),
    #[error("no keepable group after {draws} draws in {rounds} rounds")]
    Exhausted { draws: usize, rounds: usize },
}

/// Thresholds are absolute reward values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, bound(deserialize = "T: Real + Deserialize<'de>"))]
pub struct FilterConfig<T> {
    pub high_threshold: T,
    pub low_threshold: T,
    pub target_batch_size: usize,
    /// Rounds allowed after the initial draw.
    pub max_resample_rounds: usize,
}

impl<T: Real> Default for FilterConfig<T> {
    fn default() -> Self {
        Self {
            high_threshold: T::lit(9.0),
            low_threshold: T::lit(1.0),
            target_batch_size: 8,
            max_resample_rounds: 16,
        }
    }
}

impl<T: Scalar> FilterConfig<T> {
    pub fn validate(&self) -> Result<(), FilterError> {
        if !(self.low_threshold < self.high_threshold) {
            return Err(FilterError::InvalidConfig("low_threshold must be below high_threshold"));
        }
        if self.target_batch_size == 0 {
            return Err(FilterError::InvalidConfig("target_batch_size must be at least 1"));
        }
        if self.max_resample_rounds == 0 {
            return Err(FilterError::InvalidConfig("max_resample_rounds must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupLabel {
    Keep,
    AllHigh,
    AllLow,
    AllViolating,
}

/// Labels a group. When several drop conditions hold, `AllViolating` wins over
/// `AllHigh`, which wins over `AllLow`.
pub fn classify_group<T: Scalar>(group: &RewardGroup<T>, cfg: &FilterConfig<T>) -> GroupLabel {
    let s = &group.samples;
    if s.iter().all(|x| !x.compliant) {
        GroupLabel::AllViolating
    } else if s.iter().all(|x| x.raw_reward > cfg.high_threshold) {
        GroupLabel::AllHigh
    } else if s.iter().all(|x| x.raw_reward < cfg.low_threshold) {
        GroupLabel::AllLow
    } else {
        GroupLabel::Keep
    }
}

/// Classification for strategies that never see verification verdicts: only
/// the reward thresholds apply.
pub fn classify_rewards_only<T: Scalar>(group: &RewardGroup<T>, cfg: &FilterConfig<T>) -> GroupLabel {
    let s = &group.samples;
    if s.iter().all(|x| x.raw_reward > cfg.high_threshold) {
        GroupLabel::AllHigh
    } else if s.iter().all(|x| x.raw_reward < cfg.low_threshold) {
        GroupLabel::AllLow
    } else {
        GroupLabel::Keep
    }
}

/// Dropped-group tallies per label.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DropCounts {
    pub all_high: usize,
    pub all_low: usize,
    pub all_violating: usize,
}

impl DropCounts {
    pub fn record(&mut self, label: GroupLabel) {
        match label {
            GroupLabel::Keep => {}
            GroupLabel::AllHigh => self.all_high += 1,
            GroupLabel::AllLow => self.all_low += 1,
            GroupLabel::AllViolating => self.all_violating += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.all_high + self.all_low + self.all_violating
    }

    pub fn merge(&mut self, other: &DropCounts) {
        self.all_high += other.all_high;
        self.all_low += other.all_low;
        self.all_violating += other.all_violating;
    }
}

/// Anything that can produce another group on demand.
pub trait GroupSource<T> {
    fn next_group(&mut self) -> RewardGroup<T>;
}

impl<T, F> GroupSource<T> for F
where
    F: FnMut() -> RewardGroup<T>,
{
    fn next_group(&mut self) -> RewardGroup<T> {
        self()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilledBatch<T> {
    pub groups: Vec<RewardGroup<T>>,
    pub draws: usize,
    pub rounds: usize,
    pub dropped: DropCounts,
    /// Groups still missing when the round budget ran out.
    pub shortfall: usize,
}

/// Draws groups until `target_batch_size` keepable ones are collected.
///
/// The first round draws a full batch; each resample round draws only as
/// many groups as are still missing. Kept groups are returned untouched, in
/// draw order.
pub fn fill_batch<T, S>(source: &mut S, cfg: &FilterConfig<T>) -> Result<FilledBatch<T>, FilterError>
where
    T: Scalar,
    S: GroupSource<T> + ?Sized,
{
    fill_batch_with(source, cfg, classify_group)
}

/// [`fill_batch`] with a caller-chosen classifier.
pub fn fill_batch_with<T, S, C>(
    source: &mut S,
    cfg: &FilterConfig<T>,
    classify: C,
) -> Result<FilledBatch<T>, FilterError>
where
    T: Scalar,
    S: GroupSource<T> + ?Sized,
    C: Fn(&RewardGroup<T>, &FilterConfig<T>) -> GroupLabel,
{
    cfg.validate()?;
    let target = cfg.target_batch_size;
    let mut groups = Vec::with_capacity(target);
    let mut dropped = DropCounts::default();
    let mut draws = 0;
    let mut rounds = 0;
    while groups.len() < target && rounds <= cfg.max_resample_rounds {
        rounds += 1;
        for _ in 0..target - groups.len() {
            let g = source.next_group();
            draws += 1;
            match classify(&g, cfg) {
                GroupLabel::Keep => groups.push(g),
                label => dropped.record(label),
            }
        }
    }
    if groups.is_empty() {
        return Err(FilterError::Exhausted { draws, rounds });
    }
    let shortfall = target - groups.len();
    Ok(FilledBatch {
        groups,
        draws,
        rounds,
        dropped,
        shortfall,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(target: usize) -> FilterConfig<f64> {
        FilterConfig {
            target_batch_size: target,
            ..FilterConfig::default()
        }
    }

    fn g(rewards: &[f64], compliant: &[bool]) -> RewardGroup<f64> {
        RewardGroup::from_rewards(rewards, compliant, 0.1).unwrap()
    }

    #[test]
    fn labels() {
        let c = cfg(1);
        assert_eq!(
            classify_group(&g(&[9.5, 9.6, 9.7], &[true; 3]), &c),
            GroupLabel::AllHigh
        );
        assert_eq!(classify_group(&g(&[0.5, 0.2], &[true, false]), &c), GroupLabel::AllLow);
        assert_eq!(
            classify_group(&g(&[5.0, 6.0], &[false, false]), &c),
            GroupLabel::AllViolating
        );
        assert_eq!(classify_group(&g(&[2.0, 8.0], &[true, false]), &c), GroupLabel::Keep);
    }

    #[test]
    fn violating_takes_precedence() {
        let c = cfg(1);
        assert_eq!(
            classify_group(&g(&[9.5, 9.9], &[false, false]), &c),
            GroupLabel::AllViolating
        );
        assert_eq!(
            classify_group(&g(&[0.1, 0.2], &[false, false]), &c),
            GroupLabel::AllViolating
        );
    }

    #[test]
    fn threshold_is_strict() {
        let c = cfg(1);
        assert_eq!(classify_group(&g(&[9.0, 9.5], &[true, true]), &c), GroupLabel::Keep);
        assert_eq!(classify_group(&g(&[1.0, 0.5], &[true, true]), &c), GroupLabel::Keep);
    }

    #[test]
    fn rewards_only_ignores_verdicts() {
        let c = cfg(1);
        assert_eq!(
            classify_rewards_only(&g(&[5.0, 6.0], &[false, false]), &c),
            GroupLabel::Keep
        );
        assert_eq!(
            classify_rewards_only(&g(&[9.5, 9.9], &[false, false]), &c),
            GroupLabel::AllHigh
        );
    }

    #[test]
    fn alternating_source_needs_eight_draws() {
        let keep = g(&[2.0, 8.0], &[true, false]);
        let bad = g(&[2.0, 8.0], &[false, false]);
        let mut i = 0usize;
        let mut src = || {
            i += 1;
            if i % 2 == 1 {
                bad.clone()
            } else {
                keep.clone()
            }
        };
        let batch = fill_batch(&mut src, &cfg(4)).unwrap();
        assert_eq!(batch.groups.len(), 4);
        assert_eq!(batch.draws, 8);
        assert_eq!(batch.dropped.all_violating, 4);
        assert_eq!(batch.shortfall, 0);
        assert!(batch.groups.iter().all(|x| *x == keep));
    }

    #[test]
    fn all_violating_source_exhausts() {
        let bad = g(&[2.0, 8.0], &[false, false]);
        let mut src = || bad.clone();
        let c = FilterConfig {
            max_resample_rounds: 3,
            ..cfg(4)
        };
        assert_eq!(
            fill_batch(&mut src, &c),
            Err(FilterError::Exhausted { draws: 16, rounds: 4 })
        );
    }

    #[test]
    fn partial_batch_reports_shortfall() {
        let keep = g(&[2.0, 8.0], &[true, false]);
        let bad = g(&[2.0, 8.0], &[false, false]);
        let mut i = 0usize;
        let mut src = || {
            i += 1;
            if i == 1 {
                keep.clone()
            } else {
                bad.clone()
            }
        };
        let c = FilterConfig {
            max_resample_rounds: 2,
            ..cfg(4)
        };
        let batch = fill_batch(&mut src, &c).unwrap();
        assert_eq!(batch.groups.len(), 1);
        assert_eq!(batch.shortfall, 3);
        assert_eq!(batch.rounds, 3);
    }

    #[test]
    fn rejects_bad_config() {
        let mut src = || g(&[2.0, 8.0], &[true, false]);
        let c = FilterConfig {
            low_threshold: 9.5,
            ..cfg(4)
        };
        assert!(matches!(fill_batch(&mut src, &c), Err(FilterError::InvalidConfig(_))));
        assert!(matches!(
            fill_batch(&mut src, &cfg(0)),
            Err(FilterError::InvalidConfig(_))
        ));
    }
}

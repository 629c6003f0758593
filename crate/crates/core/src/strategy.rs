//! Reward-fusion strategies behind one interface.
//!
//! Each strategy maps a group to per-sample effective rewards and then
//! standardizes them within the group.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::reward::{normalize_advantages, shape_group_rlmr, AdvantageStats, RewardError, RewardGroup};
use crate::scalar::{max_of, min_of, Real, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StrategyKind {
    /// Reward-model score only.
    #[serde(rename = "writing_only")]
    WritingOnly,
    /// Compliance bit (1/0) only.
    #[serde(rename = "verification_only")]
    VerificationOnly,
    /// Arithmetic mean of the min-max normalized score and the compliance bit.
    #[serde(rename = "linear")]
    LinearWeighting,
    /// Dynamic violation penalty.
    #[serde(rename = "rlmr")]
    Rlmr,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 4] = [
        StrategyKind::WritingOnly,
        StrategyKind::VerificationOnly,
        StrategyKind::LinearWeighting,
        StrategyKind::Rlmr,
    ];

    /// Whether the strategy reads verification verdicts at all.
    pub fn uses_verification(self) -> bool {
        !matches!(self, StrategyKind::WritingOnly)
    }

    pub fn name(self) -> &'static str {
        match self {
            StrategyKind::WritingOnly => "writing_only",
            StrategyKind::VerificationOnly => "verification_only",
            StrategyKind::LinearWeighting => "linear",
            StrategyKind::Rlmr => "rlmr",
        }
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownStrategy(pub String);

impl fmt::Display for UnknownStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "unknown strategy `{}` (expected writing_only, verification_only, linear or rlmr)",
            self.0
        )
    }
}

impl std::error::Error for UnknownStrategy {}

impl FromStr for StrategyKind {
    type Err = UnknownStrategy;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        StrategyKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| UnknownStrategy(s.to_string()))
    }
}

/// A strategy together with its gap parameter.
///
/// `gamma` is only read by [`StrategyKind::Rlmr`], where it overrides the
/// group's own gamma.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Strategy<T> {
    pub kind: StrategyKind,
    pub gamma: T,
}

impl<T: Scalar> Strategy<T> {
    pub fn new(kind: StrategyKind, gamma: T) -> Result<Self, RewardError> {
        if kind == StrategyKind::Rlmr && !(gamma > T::zero()) {
            return Err(RewardError::NonPositiveGamma);
        }
        Ok(Self { kind, gamma })
    }
}

/// Result of shaping one group.
#[derive(Debug, Clone, PartialEq)]
pub struct Shaped<T> {
    /// Rewards that were fed to the normalizer.
    pub effective: Vec<T>,
    /// Penalty applied, RLMR only.
    pub delta: Option<T>,
    pub stats: AdvantageStats<T>,
}

fn compliance_bits<T: Scalar>(group: &RewardGroup<T>) -> Vec<T> {
    group
        .samples
        .iter()
        .map(|s| if s.compliant { T::one() } else { T::zero() })
        .collect()
}

/// Per-group min-max scaling onto [0, 1]; a constant group maps to 0.5.
pub fn min_max_normalize<T: Scalar>(xs: &[T]) -> Vec<T> {
    let (Some(hi), Some(lo)) = (max_of(xs.iter().copied()), min_of(xs.iter().copied())) else {
        return Vec::new();
    };
    let range = hi - lo;
    if range > T::zero() {
        xs.iter().map(|&x| (x - lo) / range).collect()
    } else {
        let half = T::one() / (T::one() + T::one());
        vec![half; xs.len()]
    }
}

/// Combined per-sample scores of the linear baseline, before normalization.
pub fn linear_scores<T: Scalar>(group: &RewardGroup<T>) -> Vec<T> {
    let two = T::one() + T::one();
    min_max_normalize(&group.raw_rewards())
        .into_iter()
        .zip(compliance_bits(group))
        .map(|(w, v)| (w + v) / two)
        .collect()
}

/// Shapes a group under the given strategy.
pub fn shape<T: Real>(strategy: &Strategy<T>, group: &RewardGroup<T>) -> Result<Shaped<T>, RewardError> {
    if group.len() < 2 {
        return Err(RewardError::TooFewSamples(group.len()));
    }
    let (effective, delta) = match strategy.kind {
        StrategyKind::WritingOnly => (group.raw_rewards(), None),
        StrategyKind::VerificationOnly => (compliance_bits(group), None),
        StrategyKind::LinearWeighting => (linear_scores(group), None),
        StrategyKind::Rlmr => {
            let mut g = group.clone();
            g.gamma = strategy.gamma;
            let out = shape_group_rlmr(&g)?;
            let advantages = out.advantages().expect("populated by shape_group_rlmr");
            let effective = out.effective_rewards();
            let n = T::from_count(effective.len());
            let mean = effective.iter().copied().sum::<T>() / n;
            let std = (effective.iter().map(|&r| (r - mean) * (r - mean)).sum::<T>() / n).sqrt();
            return Ok(Shaped {
                effective,
                delta: out.delta,
                stats: AdvantageStats { mean, std, advantages },
            });
        }
    };
    let stats = normalize_advantages(&effective)?;
    Ok(Shaped {
        effective,
        delta,
        stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn slogan_pair() -> RewardGroup<f64> {
        RewardGroup::from_rewards(&[8.9, 9.0], &[true, false], 0.1).unwrap()
    }

    fn strat(kind: StrategyKind) -> Strategy<f64> {
        Strategy::new(kind, 0.1).unwrap()
    }

    #[test]
    fn linear_ties_the_slogan_pair() {
        let g = slogan_pair();
        assert_eq!(min_max_normalize(&g.raw_rewards()), vec![0.0, 1.0]);
        assert_eq!(linear_scores(&g), vec![0.5, 0.5]);
        assert_eq!(
            shape(&strat(StrategyKind::LinearWeighting), &g),
            Err(RewardError::DegenerateGroup)
        );
    }

    #[test]
    fn writing_only_reinforces_violator() {
        let s = shape(&strat(StrategyKind::WritingOnly), &slogan_pair()).unwrap();
        let a = &s.stats.advantages;
        assert!((a[0] + 1.0).abs() < 1e-9 && (a[1] - 1.0).abs() < 1e-9, "{a:?}");
    }

    #[test]
    fn rlmr_reverses_the_pair() {
        let s = shape(&strat(StrategyKind::Rlmr), &slogan_pair()).unwrap();
        let a = &s.stats.advantages;
        assert!((a[0] - 1.0).abs() < 1e-9 && (a[1] + 1.0).abs() < 1e-9, "{a:?}");
        assert!((s.delta.unwrap() - 0.3).abs() < 1e-12);
        assert!((s.stats.mean - 8.8).abs() < 1e-12);
        assert!((s.stats.std - 0.1).abs() < 1e-12);
    }

    #[test]
    fn rlmr_uses_strategy_gamma() {
        let g = RewardGroup::from_rewards(&[10.0, 8.0, 1.0], &[true, false, true], 5.0).unwrap();
        let s = shape(&Strategy::new(StrategyKind::Rlmr, 1.0).unwrap(), &g).unwrap();
        assert_eq!(s.delta, Some(4.0));
    }

    #[test]
    fn verification_only_on_all_compliant_is_degenerate() {
        let g = RewardGroup::from_rewards(&[1.0, 5.0, 9.0], &[true; 3], 0.1).unwrap();
        assert_eq!(
            shape(&strat(StrategyKind::VerificationOnly), &g),
            Err(RewardError::DegenerateGroup)
        );
    }

    #[test]
    fn verification_only_reads_bits() {
        let g = RewardGroup::from_rewards(&[9.0, 1.0], &[false, true], 0.1).unwrap();
        let s = shape(&strat(StrategyKind::VerificationOnly), &g).unwrap();
        assert_eq!(s.effective, vec![0.0, 1.0]);
        assert_eq!(s.stats.advantages, vec![-1.0, 1.0]);
    }

    #[test]
    fn constant_rewards_min_max_to_half() {
        assert_eq!(min_max_normalize(&[3.0, 3.0, 3.0]), vec![0.5; 3]);
        assert!(min_max_normalize::<f64>(&[]).is_empty());
    }

    #[test]
    fn rlmr_rejects_bad_gamma() {
        assert_eq!(
            Strategy::new(StrategyKind::Rlmr, 0.0),
            Err(RewardError::NonPositiveGamma)
        );
        assert!(Strategy::new(StrategyKind::WritingOnly, 0.0).is_ok());
    }

    #[test]
    fn strategy_names_round_trip() {
        for k in StrategyKind::ALL {
            assert_eq!(k.name().parse::<StrategyKind>().unwrap(), k);
        }
        assert!("rlhf".parse::<StrategyKind>().is_err());
    }
}

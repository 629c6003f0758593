//! `adjust`: shape JSONL reward groups.

use std::io::{BufRead, Write};

use anyhow::Result;
use mixreward::{shape, RewardError, RewardGroup, Strategy, StrategyKind};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupLine {
    pub rewards: Vec<f64>,
    pub compliant: Vec<bool>,
    #[serde(default)]
    pub gamma: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AdjustedLine {
    pub rewards: Vec<f64>,
    pub compliant: Vec<bool>,
    pub gamma: f64,
    pub strategy: StrategyKind,
    pub delta: Option<f64>,
    pub adjusted: Vec<f64>,
    pub advantages: Vec<f64>,
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ErrorLine {
    pub line: usize,
    pub error: String,
    pub message: String,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct AdjustReport {
    pub groups: usize,
    /// Lines that were not a valid group record.
    pub malformed: usize,
    /// Valid groups the strategy could not shape.
    pub unshapeable: usize,
}

impl AdjustReport {
    pub fn exit_code(&self) -> u8 {
        u8::from(self.malformed > 0)
    }
}

enum Outcome {
    Shaped(AdjustedLine),
    Malformed(ErrorLine),
    Unshapeable(ErrorLine),
}

fn process(lineno: usize, text: &str, gamma: f64, kind: StrategyKind) -> Outcome {
    let err = |error: &str, message: String| ErrorLine {
        line: lineno,
        error: error.to_string(),
        message,
    };
    let rec: GroupLine = match serde_json::from_str(text) {
        Ok(r) => r,
        Err(e) => return Outcome::Malformed(err("malformed_json", e.to_string())),
    };
    let gamma = rec.gamma.unwrap_or(gamma);
    let group = match RewardGroup::from_rewards(&rec.rewards, &rec.compliant, gamma) {
        Ok(g) => g,
        Err(e) => return Outcome::Malformed(err(e.code(), e.to_string())),
    };
    let strategy = match Strategy::new(kind, gamma) {
        Ok(s) => s,
        Err(e) => return Outcome::Malformed(err(e.code(), e.to_string())),
    };
    match shape(&strategy, &group) {
        Ok(s) => Outcome::Shaped(AdjustedLine {
            rewards: rec.rewards,
            compliant: rec.compliant,
            gamma,
            strategy: kind,
            delta: s.delta,
            adjusted: s.effective,
            advantages: s.stats.advantages,
            mean: s.stats.mean,
            std: s.stats.std,
        }),
        Err(e @ (RewardError::AllViolating | RewardError::DegenerateGroup)) => {
            Outcome::Unshapeable(err(e.code(), e.to_string()))
        }
        Err(e) => Outcome::Malformed(err(e.code(), e.to_string())),
    }
}

/// Writes one output record per non-blank input line.
pub fn cmd_adjust<R: BufRead, W: Write>(input: R, mut out: W, gamma: f64, kind: StrategyKind) -> Result<AdjustReport> {
    let mut report = AdjustReport::default();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let json = match process(i + 1, &line, gamma, kind) {
            Outcome::Shaped(rec) => {
                report.groups += 1;
                serde_json::to_string(&rec)?
            }
            Outcome::Malformed(e) => {
                report.malformed += 1;
                serde_json::to_string(&e)?
            }
            Outcome::Unshapeable(e) => {
                report.unshapeable += 1;
                serde_json::to_string(&e)?
            }
        };
        writeln!(out, "{json}")?;
    }
    Ok(report)
}

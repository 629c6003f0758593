//! Rule-based constraint verification.
//!
//! A response is compliant only when every constraint in its set passes.
//! Verdicts are strictly binary; there is no partial credit.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// How "words" (and non-whitespace characters) are counted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CountingMode {
    /// Whitespace-delimited tokens.
    #[default]
    WhitespaceTokens,
    /// Non-whitespace Unicode scalar values, for unsegmented scripts such as Chinese.
    UnicodeScalars,
}

impl CountingMode {
    pub fn count(self, text: &str) -> usize {
        match self {
            CountingMode::WhitespaceTokens => text.split_whitespace().count(),
            CountingMode::UnicodeScalars => text.chars().filter(|c| !c.is_whitespace()).count(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConstraintError {
    #[error("unknown kind `{0}`")]
    UnknownKind(String),
    #[error("constraint `{kind}` expects a {expected} argument")]
    ArgumentType { kind: String, expected: &'static str },
}

/// A single machine-checkable constraint.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawConstraint", into = "RawConstraint")]
pub enum ConstraintSpec {
    MaxWords {
        limit: usize,
        mode: CountingMode,
    },
    MinWords {
        limit: usize,
        mode: CountingMode,
    },
    StartsWith(String),
    EndsWith(String),
    ContainsKeyword(String),
    ForbidsKeyword(String),
    /// Number of lines that are not blank.
    ExactLineCount(usize),
    /// Unicode scalar values in the whole text, whitespace included.
    MaxChars(usize),
}

impl ConstraintSpec {
    pub fn max_words(limit: usize) -> Self {
        ConstraintSpec::MaxWords {
            limit,
            mode: CountingMode::WhitespaceTokens,
        }
    }

    pub fn min_words(limit: usize) -> Self {
        ConstraintSpec::MinWords {
            limit,
            mode: CountingMode::WhitespaceTokens,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            ConstraintSpec::MaxWords { .. } => "max_words",
            ConstraintSpec::MinWords { .. } => "min_words",
            ConstraintSpec::StartsWith(_) => "starts_with",
            ConstraintSpec::EndsWith(_) => "ends_with",
            ConstraintSpec::ContainsKeyword(_) => "contains_keyword",
            ConstraintSpec::ForbidsKeyword(_) => "forbids_keyword",
            ConstraintSpec::ExactLineCount(_) => "exact_line_count",
            ConstraintSpec::MaxChars(_) => "max_chars",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum RawArg {
    Count(u64),
    Text(String),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RawConstraint {
    kind: String,
    arg: RawArg,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    counting_mode: Option<CountingMode>,
}

impl TryFrom<RawConstraint> for ConstraintSpec {
    type Error = ConstraintError;

    fn try_from(raw: RawConstraint) -> Result<Self, Self::Error> {
        let mode = raw.counting_mode.unwrap_or_default();
        let count = |arg: &RawArg| match arg {
            RawArg::Count(n) => usize::try_from(*n).map_err(|_| ConstraintError::ArgumentType {
                kind: raw.kind.clone(),
                expected: "non-negative integer",
            }),
            RawArg::Text(_) => Err(ConstraintError::ArgumentType {
                kind: raw.kind.clone(),
                expected: "non-negative integer",
            }),
        };
        let text = |arg: &RawArg| match arg {
            RawArg::Text(s) => Ok(s.clone()),
            RawArg::Count(_) => Err(ConstraintError::ArgumentType {
                kind: raw.kind.clone(),
                expected: "string",
            }),
        };
        Ok(match raw.kind.as_str() {
            "max_words" => ConstraintSpec::MaxWords {
                limit: count(&raw.arg)?,
                mode,
            },
            "min_words" => ConstraintSpec::MinWords {
                limit: count(&raw.arg)?,
                mode,
            },
            "starts_with" => ConstraintSpec::StartsWith(text(&raw.arg)?),
            "ends_with" => ConstraintSpec::EndsWith(text(&raw.arg)?),
            "contains_keyword" => ConstraintSpec::ContainsKeyword(text(&raw.arg)?),
            "forbids_keyword" => ConstraintSpec::ForbidsKeyword(text(&raw.arg)?),
            "exact_line_count" => ConstraintSpec::ExactLineCount(count(&raw.arg)?),
            "max_chars" => ConstraintSpec::MaxChars(count(&raw.arg)?),
            other => return Err(ConstraintError::UnknownKind(other.to_string())),
        })
    }
}

impl From<ConstraintSpec> for RawConstraint {
    fn from(spec: ConstraintSpec) -> Self {
        let kind = spec.kind_name().to_string();
        let (arg, counting_mode) = match spec {
            ConstraintSpec::MaxWords { limit, mode } | ConstraintSpec::MinWords { limit, mode } => {
                (RawArg::Count(limit as u64), Some(mode))
            }
            ConstraintSpec::ExactLineCount(n) | ConstraintSpec::MaxChars(n) => (RawArg::Count(n as u64), None),
            ConstraintSpec::StartsWith(s)
            | ConstraintSpec::EndsWith(s)
            | ConstraintSpec::ContainsKeyword(s)
            | ConstraintSpec::ForbidsKeyword(s) => (RawArg::Text(s), None),
        };
        RawConstraint {
            kind,
            arg,
            counting_mode,
        }
    }
}

/// The constraints attached to one query. May be empty.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ConstraintSet {
    pub constraints: Vec<ConstraintSpec>,
}

impl ConstraintSet {
    pub fn new(constraints: Vec<ConstraintSpec>) -> Self {
        Self { constraints }
    }

    pub fn push(&mut self, c: ConstraintSpec) {
        self.constraints.push(c);
    }
}

impl FromIterator<ConstraintSpec> for ConstraintSet {
    fn from_iter<I: IntoIterator<Item = ConstraintSpec>>(iter: I) -> Self {
        Self::new(iter.into_iter().collect())
    }
}

pub fn verify_one(text: &str, c: &ConstraintSpec) -> bool {
    match c {
        ConstraintSpec::MaxWords { limit, mode } => mode.count(text) <= *limit,
        ConstraintSpec::MinWords { limit, mode } => mode.count(text) >= *limit,
        ConstraintSpec::StartsWith(prefix) => text.trim().starts_with(prefix.as_str()),
        ConstraintSpec::EndsWith(suffix) => text.trim().ends_with(suffix.as_str()),
        ConstraintSpec::ContainsKeyword(kw) => text.contains(kw.as_str()),
        ConstraintSpec::ForbidsKeyword(kw) => !text.contains(kw.as_str()),
        ConstraintSpec::ExactLineCount(n) => text.lines().filter(|l| !l.trim().is_empty()).count() == *n,
        ConstraintSpec::MaxChars(n) => text.chars().count() <= *n,
    }
}

/// Conjunction over the set; the empty set is vacuously satisfied.
pub fn verify_all(text: &str, cs: &ConstraintSet) -> bool {
    cs.constraints.iter().all(|c| verify_one(text, c))
}

/// Per-constraint verdicts in set order.
pub fn verify_report<'a>(text: &str, cs: &'a ConstraintSet) -> Vec<(&'a ConstraintSpec, bool)> {
    cs.constraints.iter().map(|c| (c, verify_one(text, c))).collect()
}

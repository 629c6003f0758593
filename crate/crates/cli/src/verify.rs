//! `verify`: check a response text against a constraint file.

use std::io::Write;

use anyhow::{Context, Result};
use mixreward::{verify_report, ConstraintSet, ConstraintSpec};
use serde::Serialize;

/// Parses a constraint file: a JSON array of constraint objects, or one
/// object per line.
pub fn parse_constraints(src: &str) -> Result<ConstraintSet> {
    let trimmed = src.trim_start();
    if trimmed.starts_with('[') {
        return serde_json::from_str(trimmed).context("constraint file");
    }
    src.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str::<ConstraintSpec>(l).with_context(|| format!("constraint file line {}", i + 1))
        })
        .collect()
}

#[derive(Debug, Serialize)]
struct Verdict<'a> {
    #[serde(flatten)]
    constraint: &'a ConstraintSpec,
    pass: bool,
}

#[derive(Debug, Serialize)]
struct Report<'a> {
    constraints: Vec<Verdict<'a>>,
    compliant: bool,
    failed: Vec<&'static str>,
}

/// Machine report on `out`, human lines on `log`. Returns 0 iff compliant.
pub fn cmd_verify<W: Write, L: Write>(text: &str, constraints: &ConstraintSet, mut out: W, mut log: L) -> Result<u8> {
    let verdicts = verify_report(text, constraints);
    let compliant = verdicts.iter().all(|(_, ok)| *ok);
    let failed: Vec<_> = verdicts
        .iter()
        .filter(|(_, ok)| !ok)
        .map(|(c, _)| c.kind_name())
        .collect();
    for (c, ok) in &verdicts {
        writeln!(
            log,
            "{} {} {}",
            if *ok { "PASS" } else { "FAIL" },
            c.kind_name(),
            serde_json::to_string(c)?
        )?;
    }
    writeln!(
        log,
        "{}",
        if compliant {
            "compliant".to_string()
        } else {
            format!("non-compliant: {}", failed.join(", "))
        }
    )?;
    let report = Report {
        constraints: verdicts
            .iter()
            .map(|&(constraint, pass)| Verdict { constraint, pass })
            .collect(),
        compliant,
        failed,
    };
    writeln!(out, "{}", serde_json::to_string(&report)?)?;
    Ok(if compliant { 0 } else { 1 })
}

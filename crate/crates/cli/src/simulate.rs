//! `simulate`: run the toy training loop and write its metrics trace.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context, Result};
use mixreward::{run, Scenario, SimError, StrategyKind, Summary};
use rayon::prelude::*;

use crate::Exhausted;

/// Global flags that take precedence over the scenario file.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub gamma: Option<f64>,
    pub strategy: Option<StrategyKind>,
}

impl Overrides {
    pub fn apply(&self, scenario: &mut Scenario<f64>) {
        if let Some(seed) = self.seed {
            scenario.seed = seed;
        }
        if let Some(gamma) = self.gamma {
            scenario.gamma = gamma;
        }
        if let Some(strategy) = self.strategy {
            scenario.strategy = strategy;
        }
    }
}

pub fn parse_scenario(src: &str) -> Result<Scenario<f64>> {
    let mut scenario: Scenario<f64> = serde_json::from_str(src).context("scenario schema")?;
    scenario.renumber();
    Ok(scenario)
}

/// Runs one scenario, streaming metrics as JSONL to `out`.
pub fn simulate_to<W: Write>(scenario: &Scenario<f64>, mut out: W) -> Result<Summary<f64>> {
    let output = match run(scenario) {
        Ok(o) => o,
        Err(SimError::Exhausted { step }) => {
            return Err(Exhausted {
                seed: scenario.seed,
                step,
            }
            .into())
        }
        Err(e) => return Err(anyhow!(e)),
    };
    for m in &output.trace {
        serde_json::to_writer(&mut out, m)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(output.summary)
}

/// `metrics.jsonl` -> `metrics.seed7.jsonl`.
pub fn seeded_path(base: &Path, seed: u64) -> PathBuf {
    let stem = base.file_stem().and_then(|s| s.to_str()).unwrap_or("metrics");
    let name = match base.extension().and_then(|e| e.to_str()) {
        Some(ext) => format!("{stem}.seed{seed}.{ext}"),
        None => format!("{stem}.seed{seed}"),
    };
    base.with_file_name(name)
}

fn simulate_file(scenario: &Scenario<f64>, path: &Path) -> Result<Summary<f64>> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    simulate_to(scenario, BufWriter::new(file))
}

fn log_summary<L: Write>(log: &mut L, s: &Summary<f64>) -> Result<()> {
    let probs: Vec<String> = s.action_probs.iter().map(|p| format!("{p:.4}")).collect();
    writeln!(
        log,
        "{} seed {}: {} steps, probs [{}], compliance {:.4}, quality {:.4}, length {:.1}",
        s.strategy,
        s.seed,
        s.steps,
        probs.join(", "),
        s.expected_compliance,
        s.expected_quality,
        s.expected_length
    )?;
    Ok(())
}

/// Runs the scenario once, or once per seed (in parallel) when `seeds` is
/// given. Summaries go to `out` as JSON lines and to `log` in prose.
pub fn cmd_simulate<W: Write, L: Write>(
    scenario_src: &str,
    out_path: &Path,
    overrides: Overrides,
    seeds: Option<&[u64]>,
    mut out: W,
    mut log: L,
) -> Result<u8> {
    let mut scenario = parse_scenario(scenario_src)?;
    overrides.apply(&mut scenario);
    scenario.validate().map_err(|e| anyhow!(e)).context("scenario")?;

    let summaries: Vec<Result<Summary<f64>>> = match seeds {
        None => vec![simulate_file(&scenario, out_path)],
        Some(seeds) => seeds
            .par_iter()
            .map(|&seed| {
                let mut sc = scenario.clone();
                sc.seed = seed;
                simulate_file(&sc, &seeded_path(out_path, seed))
            })
            .collect(),
    };

    let mut first_err = None;
    for s in summaries {
        match s {
            Ok(s) => {
                writeln!(out, "{}", serde_json::to_string(&s)?)?;
                log_summary(&mut log, &s)?;
            }
            Err(e) if first_err.is_none() => first_err = Some(e),
            Err(e) => writeln!(log, "error: {e:#}")?,
        }
    }
    match first_err {
        Some(e) => Err(e),
        None => Ok(0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SLOGAN: &str = r#"{"actions":[{"quality":8.9,"compliant":true,"length":14},
        {"quality":9.0,"compliant":false,"length":16}],
        "group_size":8,"noise_std":0.3,"lr":0.1,"steps":50,"strategy":"rlmr","gamma":0.1,"seed":3}"#;

    #[test]
    fn seeded_paths() {
        assert_eq!(
            seeded_path(Path::new("out/m.jsonl"), 7),
            PathBuf::from("out/m.seed7.jsonl")
        );
        assert_eq!(seeded_path(Path::new("trace"), 2), PathBuf::from("trace.seed2"));
    }

    #[test]
    fn overrides_take_precedence() {
        let mut sc = parse_scenario(SLOGAN).unwrap();
        Overrides {
            seed: Some(9),
            gamma: Some(0.5),
            strategy: Some(StrategyKind::LinearWeighting),
        }
        .apply(&mut sc);
        assert_eq!(
            (sc.seed, sc.gamma, sc.strategy),
            (9, 0.5, StrategyKind::LinearWeighting)
        );
    }

    #[test]
    fn trace_has_one_line_per_step() {
        let sc = parse_scenario(SLOGAN).unwrap();
        let mut buf = Vec::new();
        let summary = simulate_to(&sc, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 50);
        assert_eq!(summary.steps, 50);
    }

    #[test]
    fn exhaustion_is_typed() {
        let src = r#"{"actions":[{"quality":5,"compliant":false,"length":3},{"quality":6,"compliant":false,"length":4}],
            "strategy":"verification_only","steps":5}"#;
        let sc = parse_scenario(src).unwrap();
        let err = simulate_to(&sc, Vec::new()).unwrap_err();
        assert_eq!(crate::exit_code(&err), 3);
        assert_eq!(err.downcast_ref::<Exhausted>().unwrap().step, 1);
    }

    #[test]
    fn schema_errors_are_usage_errors() {
        let err = parse_scenario(r#"{"group_size":8}"#).unwrap_err();
        assert_eq!(crate::exit_code(&err), 2);
        assert!(format!("{err:#}").contains("actions"), "{err:#}");
    }
}

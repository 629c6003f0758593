//! `fit-bt`: fit the linear Bradley-Terry scorer on preference pairs.

use std::io::Write;

use anyhow::{anyhow, Context, Result};
use mixreward::bt::{bt_loss, fit, FitConfig, PreferencePair, ScorerParams};
use serde::Serialize;

pub fn parse_pairs(src: &str) -> Result<Vec<PreferencePair<f64>>> {
    src.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).with_context(|| format!("preference file line {}", i + 1)))
        .collect()
}

#[derive(Debug, Serialize)]
struct Fitted<'a> {
    weights: &'a [f64],
    bias: f64,
    train_loss: f64,
}

pub fn cmd_fit_bt<W: Write, L: Write>(
    pairs: &[PreferencePair<f64>],
    cfg: &FitConfig<f64>,
    mut out: W,
    mut log: L,
) -> Result<ScorerParams<f64>> {
    if !(cfg.lr > 0.0) {
        return Err(anyhow!("--lr must be positive"));
    }
    if cfg.l2 < 0.0 {
        return Err(anyhow!("--l2 must be non-negative"));
    }
    let params = fit(pairs, cfg).map_err(|e| anyhow!(e))?;
    let loss = bt_loss(&params, pairs).map_err(|e| anyhow!(e))?;
    writeln!(
        out,
        "{}",
        serde_json::to_string(&Fitted {
            weights: &params.weights,
            bias: params.bias,
            train_loss: loss,
        })?
    )?;
    writeln!(
        log,
        "fitted {} pairs, {} dims, {} steps: loss {:.6} (zero scorer {:.6})",
        pairs.len(),
        params.dim(),
        cfg.steps,
        loss,
        std::f64::consts::LN_2
    )?;
    Ok(params)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fits_separable_file() {
        let src = "{\"fw\":[2.0,0.0],\"fl\":[0.0,0.0]}\n{\"fw\":[1.5,1.0],\"fl\":[0.5,1.0]}\n";
        let pairs = parse_pairs(src).unwrap();
        let mut out = Vec::new();
        let params = cmd_fit_bt(&pairs, &FitConfig::default(), &mut out, Vec::new()).unwrap();
        assert!(params.weights[0] > 0.0);
        let v: serde_json::Value = serde_json::from_slice(&out).unwrap();
        assert!(v["train_loss"].as_f64().unwrap() < 0.1);
    }

    #[test]
    fn rejects_dimension_mismatch() {
        let pairs = parse_pairs("{\"fw\":[1.0,2.0],\"fl\":[1.0]}").unwrap();
        let err = cmd_fit_bt(&pairs, &FitConfig::default(), Vec::new(), Vec::new()).unwrap_err();
        assert!(err.to_string().contains("dimension mismatch"));
    }

    #[test]
    fn reports_bad_lines() {
        let err = parse_pairs("{\"fw\":[1.0]}\n").unwrap_err();
        assert!(format!("{err:#}").contains("line 1"));
    }
}

//! Experiment configuration.
//!
//! The file format is flat `key = value` text, one pair per line, `#` starting
//! a comment. Recognised keys:
//!
//! ```text
//! rank = 2
//! alphabet = aAbB            # optional, overrides the standard letters
//! measure = uniform(a,A,b,B) # or "a:1/2, A:1/2, ..."
//! admissibility_override = true
//! seed = 42
//! trials = 1000
//! budget = 1000000           # default for every budgeted operation
//! budget.<name> = 5000       # per-operation override
//! lambda_hat = 0.48          # the three calibration keys go together
//! c1_hat = 1
//! c_delta = 1
//! output_dir = reports
//! ```
//!
//! Command-line flags override the file; the file overrides the defaults.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use mixfree_core::engine::Calibration;
use mixfree_core::walk::Measure;
use mixfree_core::{BackendSpec, DEFAULT_BUDGET};
use serde::{Deserialize, Serialize};

use crate::HarnessError;

pub const OUTPUT_DIR_ENV: &str = "MIF_OUTPUT_DIR";
pub const DEFAULT_OUTPUT_DIR: &str = "mixfree-reports";
pub const DEFAULT_SEED: u64 = 20_240_601;
pub const DEFAULT_C_DELTA: f64 = 1.0;

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub backend: Arc<BackendSpec>,
    pub measure: Measure,
    pub master_seed: u64,
    pub trials: Option<u64>,
    pub budgets: BTreeMap<String, u64>,
    pub calibration: Option<Calibration>,
    /// Used by certificates even when no full calibration is given.
    pub c_delta: f64,
    pub output_dir: PathBuf,
}

/// Values parsed from a file or flags, before defaults are filled in.
#[derive(Clone, Debug, Default)]
pub struct ConfigOverrides {
    pub rank: Option<usize>,
    pub alphabet: Option<String>,
    pub measure: Option<String>,
    pub admissibility_override: Option<bool>,
    pub seed: Option<u64>,
    pub trials: Option<u64>,
    pub budget: Option<u64>,
    pub budgets: BTreeMap<String, u64>,
    pub lambda_hat: Option<f64>,
    pub c1_hat: Option<f64>,
    pub c_delta: Option<f64>,
    pub output_dir: Option<PathBuf>,
}

impl ConfigOverrides {
    pub fn parse(text: &str) -> Result<Self, HarnessError> {
        let mut o = ConfigOverrides::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |msg: &str| HarnessError::Config(format!("line {}: {msg}: {raw:?}", lineno + 1));
            let (key, value) = line.split_once('=').ok_or_else(|| bad("expected key = value"))?;
            let (key, value) = (key.trim(), value.trim());
            let num = |v: &str| v.parse::<u64>().map_err(|_| bad("expected a nonnegative integer"));
            let real = |v: &str| v.parse::<f64>().map_err(|_| bad("expected a number"));
            match key {
                "rank" => o.rank = Some(num(value)? as usize),
                "alphabet" => o.alphabet = Some(value.to_string()),
                "measure" => o.measure = Some(value.to_string()),
                "admissibility_override" => {
                    o.admissibility_override = Some(value.parse().map_err(|_| bad("expected true or false"))?)
                }
                "seed" => o.seed = Some(num(value)?),
                "trials" => o.trials = Some(num(value)?),
                "budget" => o.budget = Some(num(value)?),
                "lambda_hat" => o.lambda_hat = Some(real(value)?),
                "c1_hat" => o.c1_hat = Some(real(value)?),
                "c_delta" => o.c_delta = Some(real(value)?),
                "output_dir" => o.output_dir = Some(PathBuf::from(value)),
                _ => match key.strip_prefix("budget.") {
                    Some(name) if !name.is_empty() => {
                        o.budgets.insert(name.to_string(), num(value)?);
                    }
                    _ => return Err(bad("unknown key")),
                },
            }
        }
        Ok(o)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// `other` wins wherever it sets a value.
    pub fn merge(mut self, other: ConfigOverrides) -> Self {
        macro_rules! take {
            ($($f:ident),*) => { $( if other.$f.is_some() { self.$f = other.$f; } )* };
        }
        take!(
            rank,
            alphabet,
            measure,
            admissibility_override,
            seed,
            trials,
            budget,
            lambda_hat,
            c1_hat,
            c_delta,
            output_dir
        );
        self.budgets.extend(other.budgets);
        self
    }

    pub fn resolve(self) -> Result<ExperimentConfig, HarnessError> {
        let rank = self.rank.unwrap_or(2);
        let backend = match &self.alphabet {
            Some(a) => BackendSpec::with_alphabet(rank, a.chars().collect())?,
            None => BackendSpec::free(rank)?,
        };
        let measure = match &self.measure {
            Some(text) => Measure::parse(text, &backend)?,
            None => Measure::uniform_generators(&backend),
        };
        let measure = if self.admissibility_override == Some(true) {
            measure.with_admissibility_override()
        } else {
            measure
        };
        let seed = self.seed.unwrap_or(DEFAULT_SEED);
        let c_delta = self.c_delta.unwrap_or(DEFAULT_C_DELTA);
        let calibration = match (self.lambda_hat, self.c1_hat) {
            (Some(l), Some(c)) => Some(Calibration::new(l, c, c_delta, seed)),
            (None, None) => None,
            _ => {
                return Err(HarnessError::Config(
                    "lambda_hat and c1_hat must be given together".into(),
                ))
            }
        };
        let mut budgets = self.budgets;
        budgets.insert("default".into(), self.budget.unwrap_or(DEFAULT_BUDGET));
        let output_dir = self
            .output_dir
            .or_else(|| std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR));
        Ok(ExperimentConfig {
            backend,
            measure,
            master_seed: seed,
            trials: self.trials,
            budgets,
            calibration,
            c_delta,
            output_dir,
        })
    }
}

impl ExperimentConfig {
    pub fn budget(&self, name: &str) -> u64 {
        self.budgets
            .get(name)
            .or_else(|| self.budgets.get("default"))
            .copied()
            .unwrap_or(DEFAULT_BUDGET)
    }

    pub fn trials_or(&self, default: u64) -> u64 {
        self.trials.unwrap_or(default)
    }

    /// The config in its own file format; loading it back gives the same config.
    ///
    /// The output directory is left out: where a report is written does not
    /// change what it says.
    pub fn to_text(&self) -> String {
        let mut lines = vec![
            format!("rank = {}", self.backend.rank),
            format!("alphabet = {}", self.backend.alphabet.iter().collect::<String>()),
            format!("measure = {}", self.measure.to_text()),
            format!("seed = {}", self.master_seed),
        ];
        if self.measure.has_override() {
            lines.push("admissibility_override = true".into());
        }
        if let Some(t) = self.trials {
            lines.push(format!("trials = {t}"));
        }
        for (name, v) in &self.budgets {
            if name == "default" {
                lines.push(format!("budget = {v}"));
            } else {
                lines.push(format!("budget.{name} = {v}"));
            }
        }
        if let Some(c) = &self.calibration {
            lines.push(format!("lambda_hat = {:?}", c.lambda_hat));
            lines.push(format!("c1_hat = {:?}", c.c1_hat));
        }
        lines.push(format!("c_delta = {:?}", self.c_delta));
        lines.join("\n") + "\n"
    }

    pub fn snapshot(&self) -> ConfigSnapshot {
        ConfigSnapshot {
            backend: self.backend.label(),
            rank: self.backend.rank,
            alphabet: self.backend.alphabet.iter().collect(),
            measure: self.measure.to_text(),
            master_seed: self.master_seed,
            trials: self.trials,
            budgets: self.budgets.clone(),
            calibration: self.calibration.clone(),
            c_delta: self.c_delta,
            text: self.to_text(),
        }
    }
}

/// What every report embeds about the configuration that produced it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfigSnapshot {
    pub backend: String,
    pub rank: usize,
    pub alphabet: String,
    pub measure: String,
    pub master_seed: u64,
    pub trials: Option<u64>,
    pub budgets: BTreeMap<String, u64>,
    pub calibration: Option<Calibration>,
    pub c_delta: f64,
    /// Loadable with `--config` to re-run the command.
    pub text: String,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_round_trips() {
        let text = "rank = 2\nmeasure = a:1/2, A:1/4, b:1/8, B:1/8  # skewed\nseed=7\nbudget = 100\nbudget.ball = 9\n\
                    lambda_hat = 0.5\nc1_hat = 1.25\noutput_dir = out\n";
        let c = ConfigOverrides::parse(text).unwrap().resolve().unwrap();
        assert_eq!(c.master_seed, 7);
        assert_eq!(c.budget("ball"), 9);
        assert_eq!(c.budget("other"), 100);
        assert_eq!(c.calibration.as_ref().unwrap().c1_hat, 1.25);
        let again = ConfigOverrides::parse(&c.to_text()).unwrap().resolve().unwrap();
        assert_eq!(again.snapshot(), c.snapshot());
    }

    #[test]
    fn later_values_win() {
        let file = ConfigOverrides::parse("seed = 1\ntrials = 5").unwrap();
        let flags = ConfigOverrides {
            seed: Some(2),
            ..ConfigOverrides::default()
        };
        let c = file.merge(flags).resolve().unwrap();
        assert_eq!((c.master_seed, c.trials), (2, Some(5)));
    }

    #[test]
    fn rejects_bad_lines() {
        assert!(ConfigOverrides::parse("nonsense").is_err());
        assert!(ConfigOverrides::parse("colour = red").is_err());
        assert!(ConfigOverrides::parse("seed = -1").is_err());
        assert!(ConfigOverrides::parse("lambda_hat = 0.5").unwrap().resolve().is_err());
    }
}

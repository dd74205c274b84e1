//! Run configuration shared by the library pipeline and the command line.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::charsum::DEFAULT_KAPPA;
use crate::discriminant::SignFilter;
use crate::error::{Error, Result};
use crate::resonance::{resonator_budget, ScanStrategy, DEFAULT_Z_BUDGET};
use crate::resonator::minimal_friability;

pub const DEFAULT_DELTA: f64 = 0.05;
pub const DEFAULT_EPSILON: f64 = 0.1;
pub const DEFAULT_SEED: u64 = 0;
pub const DEFAULT_BIG_X: u64 = 100_000;
pub const DEFAULT_X: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConstructionMethod {
    Structured,
    Greedy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Lemma22,
    Polya,
    Parity,
    Innersum,
}

impl std::str::FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lemma22" => Ok(Suite::Lemma22),
            "polya" => Ok(Suite::Polya),
            "parity" => Ok(Suite::Parity),
            "innersum" => Ok(Suite::Innersum),
            _ => Err(Error::Domain(format!(
                "unknown suite {s:?} (expected lemma22, polya, parity or innersum)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "lowercase")]
pub enum Command {
    /// `Σ_{n <= len} χ_d(n)`; `len` defaults to `⌊|d|/x⌋`.
    Charsum { d: i64, len: Option<u64> },
    Scan {
        strategy: ScanStrategy,
        resonator: Option<PathBuf>,
        sign: SignFilter,
    },
    Resonator { method: ConstructionMethod },
    Moments { resonator: Option<PathBuf> },
    Verify { suite: Suite },
}

/// Every parameter of a run. Together with the seed it determines all
/// outputs except timings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: Command,
    #[serde(rename = "X")]
    pub big_x: u64,
    pub x: f64,
    /// Resonator size; `None` means `⌊X^{1/2-δ}/x⌋`.
    #[serde(rename = "N")]
    pub n: Option<usize>,
    /// Friability bound; `None` means the smallest bound that admits `N`.
    pub y: Option<u64>,
    pub delta: f64,
    pub epsilon: f64,
    pub kappa: f64,
    pub z_budget: f64,
    pub seed: u64,
    pub output_path: Option<PathBuf>,
    pub format: OutputFormat,
    /// Worker threads; 0 lets the pool decide.
    pub threads: usize,
}

impl RunConfig {
    pub fn new(command: Command) -> Self {
        RunConfig {
            command,
            big_x: DEFAULT_BIG_X,
            x: DEFAULT_X,
            n: None,
            y: None,
            delta: DEFAULT_DELTA,
            epsilon: DEFAULT_EPSILON,
            kappa: DEFAULT_KAPPA,
            z_budget: DEFAULT_Z_BUDGET,
            seed: DEFAULT_SEED,
            output_path: None,
            format: OutputFormat::Csv,
            threads: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Domain(msg));
        if self.big_x < 2 {
            return bad(format!("--X must be >= 2, got {}", self.big_x));
        }
        if !(self.x >= 1.0 && self.x.is_finite()) {
            return bad(format!("--x must be a finite number >= 1, got {}", self.x));
        }
        if !(self.delta > 0.0 && self.delta < 0.5) {
            return bad(format!("--delta must lie in (0, 0.5), got {}", self.delta));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return bad(format!("--epsilon must lie in (0, 1), got {}", self.epsilon));
        }
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return bad(format!("--kappa must be positive, got {}", self.kappa));
        }
        if !(self.z_budget >= 1.0) {
            return bad(format!("z budget must be >= 1, got {}", self.z_budget));
        }
        if self.n == Some(0) {
            return bad("--N must be positive".into());
        }
        Ok(())
    }

    /// `N` as given, or from the `X^{1/2-δ}/x` budget.
    pub fn effective_n(&self) -> Result<usize> {
        match self.n {
            Some(n) => Ok(n),
            None => match resonator_budget(self.big_x, self.x, self.delta)? {
                0 => Err(Error::Domain(format!(
                    "X^(1/2-delta)/x < 1 for X={}, x={}, delta={}; pass --N explicitly",
                    self.big_x, self.x, self.delta
                ))),
                n => Ok(n),
            },
        }
    }

    /// `y` as given, or the smallest friability admitting `N`.
    pub fn effective_y(&self, n: usize) -> Result<u64> {
        match self.y {
            Some(y) => Ok(y),
            None => minimal_friability(n),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_round_trip() {
        let cfg = RunConfig::new(Command::Verify { suite: Suite::Parity });
        cfg.validate().unwrap();
        let json = serde_json::to_string(&cfg).unwrap();
        assert!(json.contains("\"delta\":0.05") && json.contains("\"kappa\":10.0"));
        let back: RunConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn effective_n_formula_and_override() {
        let mut cfg = RunConfig::new(Command::Resonator { method: ConstructionMethod::Structured });
        cfg.big_x = 10u64.pow(12);
        cfg.x = 10.0;
        assert_eq!(cfg.effective_n().unwrap(), 25_118);
        cfg.big_x = 1_000_000;
        cfg.x = 1_000.0;
        assert!(matches!(cfg.effective_n(), Err(Error::Domain(_))));
        cfg.n = Some(256);
        assert_eq!(cfg.effective_n().unwrap(), 256);
        assert_eq!(cfg.effective_y(256).unwrap(), 41);
    }

    #[test]
    fn validation_rejects_out_of_range() {
        let mut cfg = RunConfig::new(Command::Charsum { d: 5, len: None });
        cfg.delta = 0.7;
        assert!(cfg.validate().is_err());
        cfg.delta = 0.05;
        cfg.x = 0.5;
        assert!(cfg.validate().is_err());
        assert!("bogus".parse::<Suite>().is_err());
        assert_eq!("polya".parse::<Suite>().unwrap(), Suite::Polya);
    }
}

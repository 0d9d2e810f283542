//! Experiment configuration: `key = value` text files and named presets.
//!
//! ```text
//! # Monte Carlo run
//! scenario = linear
//! k = 6
//! n = 6000
//! replicates = 100000
//! seed = 1
//! normalized = true
//! ```
//!
//! Lists are comma separated (`k = 6, 24`). Blank lines and `#` comments are
//! ignored; unknown or repeated keys are errors.

use std::str::FromStr;

use opstat_core::exact::PrecisionConfig;
use opstat_core::montecarlo::{GridMethod, GridSpec, SimulationFallback};
use opstat_core::Scenario;

use crate::error::CliError;

pub fn parse_kv(text: &str) -> Result<Vec<(String, String)>, CliError> {
    let mut pairs: Vec<(String, String)> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            CliError::config(line, format!("line {} is not of the form key = value", i + 1))
        })?;
        let key = key.trim().to_string();
        if pairs.iter().any(|(k, _)| *k == key) {
            return Err(CliError::config(&key, "given more than once"));
        }
        pairs.push((key, value.trim().to_string()));
    }
    Ok(pairs)
}

fn parse_one<T: FromStr>(field: &str, value: &str) -> Result<T, CliError> {
    value
        .parse()
        .map_err(|_| CliError::config(field, format!("cannot parse {value:?}")))
}

fn parse_list<T: FromStr>(field: &str, value: &str) -> Result<Vec<T>, CliError> {
    let items: Vec<T> = value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_one(field, s))
        .collect::<Result<_, _>>()?;
    if items.is_empty() {
        return Err(CliError::config(field, "empty list"));
    }
    Ok(items)
}

fn parse_bool(field: &str, value: &str) -> Result<bool, CliError> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(CliError::config(field, format!("expected true or false, got {value:?}"))),
    }
}

fn parse_scenario(field: &str, value: &str) -> Result<Scenario, CliError> {
    value
        .parse()
        .map_err(|e: opstat_core::Error| CliError::config(field, e.to_string()))
}

/// One `replicate_entropy` run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McConfig {
    pub scenario: Scenario,
    pub k: usize,
    pub n: u64,
    pub replicates: u64,
    pub seed: u64,
    pub normalized: bool,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            scenario: Scenario::Linear,
            k: 6,
            n: 6000,
            replicates: 100_000,
            seed: 1,
            normalized: true,
        }
    }
}

impl McConfig {
    /// `table2-k{6,24,120,720}`: the linear law at `n = 1000 k`, 10⁵
    /// replicates, normalized.
    pub fn preset(name: &str) -> Option<Self> {
        let k = match name {
            "table2-k6" => 6,
            "table2-k24" => 24,
            "table2-k120" => 120,
            "table2-k720" => 720,
            _ => return None,
        };
        Some(Self {
            k,
            n: 1000 * k as u64,
            ..Self::default()
        })
    }

    /// Overrides fields of `self` with the given pairs.
    pub fn apply(mut self, pairs: &[(String, String)]) -> Result<Self, CliError> {
        for (key, value) in pairs {
            match key.as_str() {
                "scenario" => self.scenario = parse_scenario(key, value)?,
                "k" => self.k = parse_one(key, value)?,
                "n" => self.n = parse_one(key, value)?,
                "replicates" => self.replicates = parse_one(key, value)?,
                "seed" => self.seed = parse_one(key, value)?,
                "normalized" => self.normalized = parse_bool(key, value)?,
                _ => return Err(CliError::config(key, "unknown key for a Monte Carlo run")),
            }
        }
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.n == 0 {
            return Err(CliError::config("n", "must be at least 1"));
        }
        if self.replicates < 2 {
            return Err(CliError::config("replicates", "must be at least 2"));
        }
        self.scenario
            .probabilities(self.k)
            .map_err(|e| CliError::config("scenario", e.to_string()))?;
        Ok(())
    }
}

/// An accuracy-grid run.
#[derive(Debug, Clone, PartialEq)]
pub struct GridConfig {
    pub spec: GridSpec,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            spec: GridSpec {
                scenarios: vec![Scenario::Linear],
                ks: vec![6],
                ns: vec![10, 50, 100],
                methods: vec![GridMethod::FirstOrder, GridMethod::ThirdOrder, GridMethod::Asymptotic],
                precision: PrecisionConfig::default(),
                fallback: None,
            },
        }
    }
}

impl GridConfig {
    /// `lre-grid-small`: all four laws, `k ∈ {6, 24}`, `n ≤ 500`.
    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "lre-grid-small" => {
                let mut c = Self::default();
                c.spec.scenarios = vec![
                    Scenario::Equiprobable,
                    Scenario::TwoPerturbed { epsilon: None },
                    Scenario::HalfPerturbed { epsilon: None },
                    Scenario::Linear,
                ];
                c.spec.ks = vec![6, 24];
                c.spec.ns = vec![10, 20, 50, 100, 200, 500];
                Some(c)
            }
            _ => None,
        }
    }

    pub fn apply(mut self, pairs: &[(String, String)]) -> Result<Self, CliError> {
        let mut fallback_replicates = self.spec.fallback.map(|f| f.replicates);
        let mut fallback_seed = self.spec.fallback.map_or(1, |f| f.seed);
        for (key, value) in pairs {
            let spec = &mut self.spec;
            match key.as_str() {
                "scenarios" => {
                    spec.scenarios = value
                        .split(',')
                        .map(|s| parse_scenario(key, s.trim()))
                        .collect::<Result<_, _>>()?
                }
                "k" => spec.ks = parse_list(key, value)?,
                "n" => spec.ns = parse_list(key, value)?,
                "methods" => {
                    spec.methods = value
                        .split(',')
                        .map(|s| {
                            s.trim()
                                .parse()
                                .map_err(|e: opstat_core::Error| CliError::config(key, e.to_string()))
                        })
                        .collect::<Result<_, _>>()?
                }
                "precision_bits" => spec.precision.significand_bits = parse_one(key, value)?,
                "max_n" => spec.precision.max_n = parse_one(key, value)?,
                "fallback_replicates" => fallback_replicates = Some(parse_one(key, value)?),
                "fallback_seed" => fallback_seed = parse_one(key, value)?,
                _ => return Err(CliError::config(key, "unknown key for a grid run")),
            }
        }
        self.spec.fallback = fallback_replicates.map(|replicates| SimulationFallback {
            replicates,
            seed: fallback_seed,
        });
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let s = &self.spec;
        PrecisionConfig::new(s.precision.significand_bits, s.precision.max_n)
            .map_err(|e| CliError::config("precision_bits", e.to_string()))?;
        if s.scenarios.is_empty() || s.methods.is_empty() {
            return Err(CliError::config("scenarios", "nothing to compute"));
        }
        if s.ns.contains(&0) {
            return Err(CliError::config("n", "must be at least 1"));
        }
        if let Some(f) = s.fallback {
            if f.replicates < 2 {
                return Err(CliError::config("fallback_replicates", "must be at least 2"));
            }
        }
        for sc in &s.scenarios {
            for &k in &s.ks {
                sc.probabilities(k)
                    .map_err(|e| CliError::config("scenarios", format!("{sc} with k = {k}: {e}")))?;
            }
        }
        Ok(())
    }
}

pub const PRESETS: &[&str] = &[
    "table2-k6",
    "table2-k24",
    "table2-k120",
    "table2-k720",
    "lre-grid-small",
];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn key_values() {
        let p = parse_kv("# c\nk = 6\n\nn=300 # trailing\n").unwrap();
        assert_eq!(p, vec![("k".into(), "6".into()), ("n".into(), "300".into())]);
        assert!(parse_kv("k = 1\nk = 2").is_err());
        assert!(parse_kv("just words").is_err());
    }

    #[test]
    fn mc_config() {
        let c = McConfig::preset("table2-k24").unwrap();
        assert_eq!((c.k, c.n, c.replicates), (24, 24_000, 100_000));
        let c = c
            .apply(&parse_kv("scenario = half-perturbed:0.01\nreplicates = 10").unwrap())
            .unwrap();
        assert_eq!(c.scenario, Scenario::HalfPerturbed { epsilon: Some(0.01) });
        match McConfig::default().apply(&parse_kv("replicates = 1").unwrap()) {
            Err(CliError::Config { field, .. }) => assert_eq!(field, "replicates"),
            other => panic!("{other:?}"),
        }
        match McConfig::default().apply(&parse_kv("colour = red").unwrap()) {
            Err(CliError::Config { field, .. }) => assert_eq!(field, "colour"),
            other => panic!("{other:?}"),
        }
        assert!(McConfig::default().apply(&parse_kv("scenario = h\nk = 5").unwrap()).is_err());
    }

    #[test]
    fn grid_config() {
        let g = GridConfig::preset("lre-grid-small").unwrap();
        assert_eq!(g.spec.scenarios.len(), 4);
        assert!(g.validate().is_ok());
        let g = GridConfig::default()
            .apply(&parse_kv("k = 6, 24\nn = 10,20\nmethods = first, asymptotic\nfallback_replicates = 100").unwrap())
            .unwrap();
        assert_eq!(g.spec.ks, vec![6, 24]);
        assert_eq!(g.spec.methods, vec![GridMethod::FirstOrder, GridMethod::Asymptotic]);
        assert_eq!(g.spec.fallback.unwrap().replicates, 100);
        assert!(GridConfig::default().apply(&parse_kv("precision_bits = 8").unwrap()).is_err());
    }
}

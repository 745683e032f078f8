use std::fs;
use std::path::Path;

use nric::energy::{EnergyKind, MaterialParameters, WeightRecipe};
use nric::optim::{parse_key_values, SolverConfig};
use nric::reconstruction::TreeStrategy;
use nric::{Error, Result};

/// Everything a command needs besides its input files. Built from the config file, then
/// overridden by command-line flags.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub solver: SolverConfig,
    pub params: MaterialParameters,
    pub energy: EnergyKind,
    pub recipe: WeightRecipe,
    pub strategy: TreeStrategy,
    pub gn_steps: usize,
    pub threads: Option<usize>,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            solver: SolverConfig::default(),
            params: MaterialParameters::default(),
            energy: EnergyKind::Nonlinear,
            recipe: WeightRecipe::InverseLength,
            strategy: TreeStrategy::Mst,
            gn_steps: 1,
            threads: None,
        }
    }
}

const KEYS: &[&str] = &["mu", "lambda", "delta", "energy", "weights", "strategy", "gn_steps", "threads"];

fn invalid(key: &str, value: &toml::Value) -> Error {
    Error::InvalidArgument(format!("bad value {value} for `{key}`"))
}

fn float(key: &str, v: &toml::Value) -> Result<f64> {
    match v {
        toml::Value::Float(f) => Ok(*f),
        toml::Value::Integer(i) => Ok(*i as f64),
        _ => Err(invalid(key, v)),
    }
}

fn count(key: &str, v: &toml::Value) -> Result<usize> {
    match v {
        toml::Value::Integer(i) if *i >= 0 => Ok(*i as usize),
        _ => Err(invalid(key, v)),
    }
}

fn string<'a>(key: &str, v: &'a toml::Value) -> Result<&'a str> {
    v.as_str().ok_or_else(|| invalid(key, v))
}

pub fn parse_energy(s: &str) -> Result<EnergyKind> {
    match s {
        "nonlinear" => Ok(EnergyKind::Nonlinear),
        "quadratic" => Ok(EnergyKind::Quadratic),
        _ => Err(Error::InvalidArgument(format!("unknown energy `{s}` (nonlinear, quadratic)"))),
    }
}

impl Settings {
    /// Parses a `key = value` config. Solver keys go to [`SolverConfig`]; unknown keys are an
    /// error so typos do not pass silently.
    pub fn from_config_text(text: &str) -> Result<Settings> {
        let table = parse_key_values(text)?;
        if let Some(k) = table.keys().find(|k| !KEYS.contains(&k.as_str()) && !SolverConfig::KEYS.contains(&k.as_str())) {
            return Err(Error::InvalidArgument(format!("unknown config key `{k}`")));
        }
        let mut s = Settings {
            solver: SolverConfig::from_table(&table)?,
            ..Default::default()
        };
        for (k, v) in &table {
            match k.as_str() {
                "mu" => s.params.mu = float(k, v)?,
                "lambda" => s.params.lambda = float(k, v)?,
                "delta" => s.params.delta = float(k, v)?,
                "energy" => s.energy = parse_energy(string(k, v)?)?,
                "weights" => {
                    s.recipe = match string(k, v)? {
                        "inverse_length" => WeightRecipe::InverseLength,
                        "area_scaled" => WeightRecipe::AreaScaled,
                        _ => return Err(invalid(k, v)),
                    }
                }
                "strategy" => s.strategy = string(k, v)?.parse()?,
                "gn_steps" => s.gn_steps = count(k, v)?,
                "threads" => s.threads = Some(count(k, v)?),
                _ => {}
            }
        }
        s.params.validate()?;
        Ok(s)
    }

    pub fn load(path: Option<&Path>) -> Result<Settings> {
        match path {
            Some(p) => Settings::from_config_text(&fs::read_to_string(p)?),
            None => Ok(Settings::default()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_overrides_defaults() {
        let s = Settings::from_config_text("mu0 = 20\neps_q = 1e-10\ndelta = 0.05\nenergy = quadratic\nstrategy = spt\ngn_steps = 3\nthreads = 2\n").unwrap();
        assert_eq!(s.solver.mu0, 20.0);
        assert_eq!(s.solver.eps_q, 1e-10);
        assert_eq!(s.params.delta, 0.05);
        assert_eq!(s.energy, EnergyKind::Quadratic);
        assert_eq!(s.strategy, TreeStrategy::Spt);
        assert_eq!((s.gn_steps, s.threads), (3, Some(2)));
        assert_eq!(Settings::from_config_text("").unwrap(), Settings::default());
    }

    #[test]
    fn bad_configs_are_rejected() {
        for text in ["mu0 = -1\n", "energy = cubic\n", "colour = red\n", "gn_steps = 1.5\n", "mu = 0\n"] {
            assert!(matches!(Settings::from_config_text(text), Err(Error::InvalidArgument(_))), "{text}");
        }
        assert!(matches!(Settings::from_config_text("no equals sign\n"), Err(Error::Parse { line: 1, .. })));
    }
}

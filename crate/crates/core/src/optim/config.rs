use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parameters of the augmented Lagrangian outer loop and the Newton inner loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// Initial penalty.
    pub mu0: f64,
    /// Initial value of every multiplier.
    pub lambda0: f64,
    /// Penalty growth factor.
    pub mu_plus: f64,
    /// Exponent of the constraint-tolerance update.
    pub eta_plus: f64,
    /// Stop when `‖Q‖_∞` is below this...
    pub eps_q: f64,
    /// ...and `‖∇L‖₂` below this.
    pub eps_l: f64,
    pub k_max: usize,
    pub j_max: usize,
    /// Shift growth factor after a failed factorization.
    pub tau_plus: f64,
    /// Minimal diagonal shift.
    pub beta_shift: f64,
    /// Armijo slope constant.
    pub armijo: f64,
    pub backtrack: f64,
    /// Smallest step before the line search gives up.
    pub min_step: f64,
    /// Run limited-memory BFGS iterations before the first Newton solve.
    pub bfgs_warm_start: bool,
    pub bfgs_iterations: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            mu0: 10.0,
            lambda0: 0.0,
            mu_plus: 100.0,
            eta_plus: 0.9,
            eps_q: 1e-8,
            eps_l: 1e-4,
            k_max: 100,
            j_max: 500,
            tau_plus: 10.0,
            beta_shift: 1e-3,
            armijo: 0.1,
            backtrack: 0.5,
            min_step: 1e-14,
            bfgs_warm_start: false,
            bfgs_iterations: 25,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.to_string()));
        if !(self.mu0 > 0.0) {
            return bad("mu0 must be positive");
        }
        if !(self.mu_plus > 1.0) {
            return bad("mu_plus must exceed 1");
        }
        if !(self.eta_plus > 0.0 && self.eta_plus <= 1.0) {
            return bad("eta_plus must lie in (0, 1]");
        }
        if !(self.beta_shift > 0.0) {
            return bad("beta_shift must be positive");
        }
        if !(self.tau_plus > 1.0) {
            return bad("tau_plus must exceed 1");
        }
        if !(self.eps_q > 0.0 && self.eps_l > 0.0) {
            return bad("tolerances must be positive");
        }
        if !(self.armijo > 0.0 && self.armijo < 1.0 && self.backtrack > 0.0 && self.backtrack < 1.0) {
            return bad("armijo and backtrack must lie in (0, 1)");
        }
        Ok(())
    }

    /// Reads the known keys of a `key = value` table; other keys are ignored.
    pub fn from_table(table: &toml::Table) -> Result<Self> {
        let known: toml::Table = table
            .iter()
            .filter(|(k, _)| Self::KEYS.contains(&k.as_str()))
            .map(|(k, v)| {
                // Integers are accepted for float fields and vice versa where exact.
                let v = match (k.as_str(), v) {
                    ("k_max" | "j_max" | "bfgs_iterations", toml::Value::Float(f)) if f.fract() == 0.0 => {
                        toml::Value::Integer(*f as i64)
                    }
                    ("k_max" | "j_max" | "bfgs_iterations" | "bfgs_warm_start", _) => v.clone(),
                    (_, toml::Value::Integer(i)) => toml::Value::Float(*i as f64),
                    _ => v.clone(),
                };
                (k.clone(), v)
            })
            .collect();
        let cfg: SolverConfig = known
            .try_into()
            .map_err(|e: toml::de::Error| Error::InvalidArgument(format!("solver config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub const KEYS: &'static [&'static str] = &[
        "mu0",
        "lambda0",
        "mu_plus",
        "eta_plus",
        "eps_q",
        "eps_l",
        "k_max",
        "j_max",
        "tau_plus",
        "beta_shift",
        "armijo",
        "backtrack",
        "min_step",
        "bfgs_warm_start",
        "bfgs_iterations",
    ];
}

/// Parses `key = value` lines. `#` starts a comment; values are read as integers, floats or
/// booleans when possible and as bare strings otherwise.
pub fn parse_key_values(text: &str) -> Result<toml::Table> {
    let mut table = toml::Table::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(Error::Parse {
                line: n + 1,
                message: format!("expected `key = value`, got `{line}`"),
            });
        };
        let (k, v) = (k.trim(), v.trim().trim_matches('"'));
        if k.is_empty() {
            return Err(Error::Parse {
                line: n + 1,
                message: "empty key".into(),
            });
        }
        let value = if let Ok(i) = v.parse::<i64>() {
            toml::Value::Integer(i)
        } else if let Ok(f) = v.parse::<f64>() {
            toml::Value::Float(f)
        } else if let Ok(b) = v.parse::<bool>() {
            toml::Value::Boolean(b)
        } else {
            toml::Value::String(v.to_string())
        };
        if table.insert(k.to_string(), value).is_some() {
            return Err(Error::Parse {
                line: n + 1,
                message: format!("duplicate key `{k}`"),
            });
        }
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_overrides() {
        let t = parse_key_values("# solver\nmu0 = 100\neps_q=1e-10\nk_max = 7\nbfgs_warm_start = true\nenergy = quadratic\n").unwrap();
        let c = SolverConfig::from_table(&t).unwrap();
        assert_eq!(c.mu0, 100.0);
        assert_eq!(c.eps_q, 1e-10);
        assert_eq!(c.k_max, 7);
        assert!(c.bfgs_warm_start);
        assert_eq!(c.mu_plus, 100.0);
        assert_eq!(t["energy"].as_str(), Some("quadratic"));
    }

    #[test]
    fn rejects_bad_values() {
        let t = parse_key_values("mu_plus = 0.5").unwrap();
        assert!(SolverConfig::from_table(&t).is_err());
        assert!(parse_key_values("no equals sign").is_err());
        assert!(parse_key_values("a = 1\na = 2").is_err());
    }
}

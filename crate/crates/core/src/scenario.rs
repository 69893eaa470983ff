//! Flat `key = value` scenario files.
//!
//! ```text
//! # bounded purchase interval
//! alpha = 0.5
//! k = 2.25
//! R = 1
//! beta = 0.85
//! lambda = 1.1
//! gamma = 0.9
//! psi = 1
//! ```
//!
//! The market is given either by `beta` or by `mu` and `sigma`, never both.
//! Missing keys fall back to `alpha = 0.5, k = 2.25, R = 1, beta = 0.85` and a
//! frictionless market.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{MarketDynamics, ModelInputs, Preferences, TransactionCosts};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub alpha: Option<f64>,
    pub k: Option<f64>,
    #[serde(rename = "R")]
    pub aspiration: Option<f64>,
    pub mu: Option<f64>,
    pub sigma: Option<f64>,
    pub beta: Option<f64>,
    pub lambda: Option<f64>,
    pub gamma: Option<f64>,
    pub psi: Option<f64>,
}

fn key_name(key: &str) -> Option<&'static str> {
    Some(match key {
        "alpha" => "alpha",
        "k" => "k",
        "R" => "R",
        "mu" => "mu",
        "sigma" => "sigma",
        "beta" => "beta",
        "lambda" => "lambda",
        "gamma" => "gamma",
        "psi" => "psi",
        _ => return None,
    })
}

impl ScenarioConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut config = Self::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Domain(format!(
                    "line {}: expected `key = value`, got `{line}`",
                    n + 1
                )));
            };
            let key = key.trim();
            let field = key_name(key).ok_or_else(|| {
                Error::Domain(format!("line {}: unknown key `{key}`", n + 1))
            })?;
            let value = value.trim();
            let parsed: f64 = value.parse().map_err(|_| {
                Error::invalid(field, format!("line {}: `{value}` is not a number", n + 1))
            })?;
            config.set(field, parsed)?;
        }
        config.check_market()?;
        Ok(config)
    }

    /// Sets one field by its key name.
    pub fn set(&mut self, key: &str, value: f64) -> Result<()> {
        let slot = match key {
            "alpha" => &mut self.alpha,
            "k" => &mut self.k,
            "R" => &mut self.aspiration,
            "mu" => &mut self.mu,
            "sigma" => &mut self.sigma,
            "beta" => &mut self.beta,
            "lambda" => &mut self.lambda,
            "gamma" => &mut self.gamma,
            "psi" => &mut self.psi,
            other => return Err(Error::Domain(format!("unknown key `{other}`"))),
        };
        *slot = Some(value);
        Ok(())
    }

    fn check_market(&self) -> Result<()> {
        if self.beta.is_some() && (self.mu.is_some() || self.sigma.is_some()) {
            return Err(Error::invalid("beta", "give either beta or mu and sigma, not both"));
        }
        if self.mu.is_some() != self.sigma.is_some() {
            let missing = if self.mu.is_none() { "mu" } else { "sigma" };
            return Err(Error::invalid(missing, "mu and sigma must be given together"));
        }
        Ok(())
    }

    /// Applies `overrides` on top of `self`. Overriding either way of
    /// specifying the market replaces the other.
    pub fn merged(&self, overrides: &ScenarioConfig) -> Result<Self> {
        overrides.check_market_overrides()?;
        let mut out = self.clone();
        let pick = |base: Option<f64>, over: Option<f64>| over.or(base);
        out.alpha = pick(self.alpha, overrides.alpha);
        out.k = pick(self.k, overrides.k);
        out.aspiration = pick(self.aspiration, overrides.aspiration);
        out.lambda = pick(self.lambda, overrides.lambda);
        out.gamma = pick(self.gamma, overrides.gamma);
        out.psi = pick(self.psi, overrides.psi);
        if overrides.beta.is_some() {
            out.beta = overrides.beta;
            out.mu = None;
            out.sigma = None;
        } else if overrides.mu.is_some() || overrides.sigma.is_some() {
            out.beta = None;
            out.mu = pick(self.mu, overrides.mu);
            out.sigma = pick(self.sigma, overrides.sigma);
        }
        out.check_market()?;
        Ok(out)
    }

    fn check_market_overrides(&self) -> Result<()> {
        if self.beta.is_some() && (self.mu.is_some() || self.sigma.is_some()) {
            return Err(Error::invalid("beta", "give either beta or mu and sigma, not both"));
        }
        Ok(())
    }

    pub fn build(&self) -> Result<ModelInputs> {
        self.check_market()?;
        let prefs = Preferences::new(
            self.alpha.unwrap_or(0.5),
            self.k.unwrap_or(2.25),
            self.aspiration.unwrap_or(1.0),
        )?;
        let market = match (self.mu, self.sigma) {
            (Some(mu), Some(sigma)) => MarketDynamics::new(mu, sigma)?,
            _ => MarketDynamics::from_beta(self.beta.unwrap_or(0.85))?,
        };
        let costs = TransactionCosts::new(
            self.lambda.unwrap_or(1.0),
            self.gamma.unwrap_or(1.0),
            self.psi.unwrap_or(0.0),
        )?;
        Ok(ModelInputs::new(prefs, market, costs))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_a_full_file() {
        let text = "# bounded purchase interval\nalpha = 0.5\nk=2.25\nR = 1   # aspiration\n\nbeta = 0.85\nlambda = 1.1\ngamma = 0.9\npsi = 1\n";
        let inputs = ScenarioConfig::parse(text).unwrap().build().unwrap();
        assert_eq!(inputs, ModelInputs::from_values(0.5, 2.25, 1.0, 0.85, 1.1, 0.9, 1.0).unwrap());
    }

    #[test]
    fn mu_sigma_give_beta() {
        let inputs = ScenarioConfig::parse("mu = 0.03\nsigma = 0.4").unwrap().build().unwrap();
        assert!((inputs.beta() - 0.625).abs() < 1e-15);
    }

    #[test]
    fn field_level_errors() {
        let err = ScenarioConfig::parse("alpha = 1.5").unwrap().build().unwrap_err();
        assert!(matches!(err, Error::InvalidParameter { field: "alpha", .. }));
        let err = ScenarioConfig::parse("gamma = abc").unwrap_err();
        assert!(matches!(err, Error::InvalidParameter { field: "gamma", .. }));
        let err = ScenarioConfig::parse("beta = 0.5\nmu = 0.1\nsigma = 1").unwrap_err();
        assert!(matches!(err, Error::InvalidParameter { field: "beta", .. }));
        let err = ScenarioConfig::parse("mu = 0.1").unwrap_err();
        assert!(matches!(err, Error::InvalidParameter { field: "sigma", .. }));
        assert!(ScenarioConfig::parse("theta = 1").is_err());
        assert!(ScenarioConfig::parse("alpha 0.5").is_err());
    }

    #[test]
    fn overrides_replace_the_market_group() {
        let file = ScenarioConfig::parse("mu = 0.1\nsigma = 1\nlambda = 1.2").unwrap();
        let mut over = ScenarioConfig::default();
        over.set("beta", 0.9).unwrap();
        over.set("psi", 2.0).unwrap();
        let merged = file.merged(&over).unwrap();
        assert_eq!((merged.mu, merged.sigma, merged.beta), (None, None, Some(0.9)));
        assert_eq!((merged.lambda, merged.psi), (Some(1.2), Some(2.0)));

        let mut both = ScenarioConfig::default();
        both.set("beta", 0.9).unwrap();
        both.set("mu", 0.1).unwrap();
        assert!(file.merged(&both).is_err());
    }
}

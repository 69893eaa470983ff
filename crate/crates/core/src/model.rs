//! Model parameters, the S-shaped utility, the scale transform and
//! first-passage probabilities of geometric Brownian motion.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Preference parameters of the trader.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Preferences {
    alpha: f64,
    k: f64,
    aspiration: f64,
}

impl Preferences {
    /// `alpha` is the common curvature exponent over gains and losses, `k` the
    /// loss-aversion coefficient and `aspiration` the exogenous part of the
    /// reference point.
    pub fn new(alpha: f64, k: f64, aspiration: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::invalid("alpha", format!("must lie in (0, 1), got {alpha}")));
        }
        if !(k > 1.0) || !k.is_finite() {
            return Err(Error::invalid("k", format!("must be finite and > 1, got {k}")));
        }
        if !(aspiration > 0.0) || !aspiration.is_finite() {
            return Err(Error::invalid(
                "R",
                format!("must be finite and > 0, got {aspiration}"),
            ));
        }
        Ok(Self {
            alpha,
            k,
            aspiration,
        })
    }

    #[inline]
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    #[inline]
    pub fn k(&self) -> f64 {
        self.k
    }

    #[inline]
    pub fn aspiration(&self) -> f64 {
        self.aspiration
    }

    #[inline]
    pub fn utility(&self, x: f64) -> f64 {
        utility(x, self)
    }

    /// Utility of walking away without trading, `U(-R)`.
    #[inline]
    pub fn inaction_utility(&self) -> f64 {
        -self.k * self.aspiration.powf(self.alpha)
    }
}

/// Drift and volatility of the price process `dP = P (mu dt + sigma dB)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarketDynamics {
    mu: f64,
    sigma: f64,
    beta: f64,
}

impl MarketDynamics {
    pub fn new(mu: f64, sigma: f64) -> Result<Self> {
        if !(mu >= 0.0) || !mu.is_finite() {
            return Err(Error::invalid("mu", format!("must be finite and >= 0, got {mu}")));
        }
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::invalid("sigma", format!("must be finite and > 0, got {sigma}")));
        }
        Ok(Self {
            mu,
            sigma,
            beta: 1.0 - 2.0 * mu / (sigma * sigma),
        })
    }

    /// Builds the dynamics from the exponent alone, with `sigma = 1` and
    /// `mu = (1 - beta) / 2`.
    pub fn from_beta(beta: f64) -> Result<Self> {
        if !(beta <= 1.0) || !beta.is_finite() {
            return Err(Error::invalid("beta", format!("must be finite and <= 1, got {beta}")));
        }
        Ok(Self {
            mu: 0.5 * (1.0 - beta),
            sigma: 1.0,
            beta,
        })
    }

    #[inline]
    pub fn mu(&self) -> f64 {
        self.mu
    }

    #[inline]
    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// `1 - 2 mu / sigma^2`.
    #[inline]
    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Drift of `ln P`, equal to `-sigma^2 beta / 2`.
    #[inline]
    pub fn log_drift(&self) -> f64 {
        self.mu - 0.5 * self.sigma * self.sigma
    }
}

/// Proportional and fixed trading frictions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransactionCosts {
    lambda: f64,
    gamma: f64,
    psi: f64,
}

impl TransactionCosts {
    /// Buying at `p` costs `lambda * p + psi`; selling at `p` returns `gamma * p`.
    pub fn new(lambda: f64, gamma: f64, psi: f64) -> Result<Self> {
        if !(lambda >= 1.0) || !lambda.is_finite() {
            return Err(Error::invalid("lambda", format!("must be finite and >= 1, got {lambda}")));
        }
        if !(gamma > 0.0 && gamma <= 1.0) {
            return Err(Error::invalid("gamma", format!("must lie in (0, 1], got {gamma}")));
        }
        if !(psi >= 0.0) || !psi.is_finite() {
            return Err(Error::invalid("psi", format!("must be finite and >= 0, got {psi}")));
        }
        Ok(Self { lambda, gamma, psi })
    }

    /// No frictions at all.
    pub fn frictionless() -> Self {
        Self {
            lambda: 1.0,
            gamma: 1.0,
            psi: 0.0,
        }
    }

    #[inline]
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    #[inline]
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    #[inline]
    pub fn psi(&self) -> f64 {
        self.psi
    }

    /// Round-trip proportional cost ratio `lambda / gamma`, always >= 1.
    #[inline]
    pub fn xi(&self) -> f64 {
        self.lambda / self.gamma
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelInputs {
    pub prefs: Preferences,
    pub market: MarketDynamics,
    pub costs: TransactionCosts,
}

impl ModelInputs {
    pub fn new(prefs: Preferences, market: MarketDynamics, costs: TransactionCosts) -> Self {
        Self {
            prefs,
            market,
            costs,
        }
    }

    /// Shorthand used throughout the tests and examples: builds every
    /// component and validates it.
    pub fn from_values(
        alpha: f64,
        k: f64,
        aspiration: f64,
        beta: f64,
        lambda: f64,
        gamma: f64,
        psi: f64,
    ) -> Result<Self> {
        Ok(Self {
            prefs: Preferences::new(alpha, k, aspiration)?,
            market: MarketDynamics::from_beta(beta)?,
            costs: TransactionCosts::new(lambda, gamma, psi)?,
        })
    }

    #[inline]
    pub fn beta(&self) -> f64 {
        self.market.beta()
    }

    /// Reference point after buying at `price`: `lambda * price + psi + R`.
    #[inline]
    pub fn reference_point(&self, price: f64) -> f64 {
        self.costs.lambda() * price + self.costs.psi() + self.prefs.aspiration()
    }

    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        let costs = TransactionCosts::new(lambda, self.costs.gamma(), self.costs.psi())?;
        Ok(Self { costs, ..*self })
    }

    pub fn with_gamma(&self, gamma: f64) -> Result<Self> {
        let costs = TransactionCosts::new(self.costs.lambda(), gamma, self.costs.psi())?;
        Ok(Self { costs, ..*self })
    }

    pub fn with_psi(&self, psi: f64) -> Result<Self> {
        let costs = TransactionCosts::new(self.costs.lambda(), self.costs.gamma(), psi)?;
        Ok(Self { costs, ..*self })
    }

    pub fn with_aspiration(&self, aspiration: f64) -> Result<Self> {
        let prefs = Preferences::new(self.prefs.alpha(), self.prefs.k(), aspiration)?;
        Ok(Self { prefs, ..*self })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WellPosedness {
    /// `beta <= 0` or `beta < alpha`.
    IllPosed,
    /// `0 < alpha <= beta < 1`.
    WellPosedInterior,
    /// `alpha < beta = 1`, a driftless asset.
    WellPosedBoundary,
}

impl WellPosedness {
    pub fn is_well_posed(self) -> bool {
        !matches!(self, WellPosedness::IllPosed)
    }
}

/// Piecewise power utility: `x^alpha` on gains, `-k |x|^alpha` on losses.
#[inline]
pub fn utility(x: f64, prefs: &Preferences) -> f64 {
    if x > 0.0 {
        x.powf(prefs.alpha)
    } else {
        -prefs.k * (-x).powf(prefs.alpha)
    }
}

/// Scale function of the price diffusion (up to an affine map).
pub fn scale(x: f64, beta: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Domain(format!("scale needs a positive price, got {x}")));
    }
    Ok(if beta > 0.0 {
        x.powf(beta)
    } else if beta == 0.0 {
        x.ln()
    } else {
        x.powf(-beta)
    })
}

/// Probability that the price started at `p` ever reaches `b`.
pub fn hitting_probability(p: f64, b: f64, beta: f64) -> Result<f64> {
    if !(p > 0.0) || !(b > 0.0) {
        return Err(Error::Domain(format!(
            "hitting probability needs positive prices, got p = {p}, b = {b}"
        )));
    }
    if b == p {
        return Ok(1.0);
    }
    if beta > 0.0 {
        // ln P drifts down: downward levels are certain, upward ones are not.
        if b < p {
            Ok(1.0)
        } else {
            Ok((p / b).powf(beta).clamp(0.0, 1.0))
        }
    } else if b > p || beta == 0.0 {
        Ok(1.0)
    } else {
        Err(Error::Unsupported(
            "downward hitting probability for beta < 0".into(),
        ))
    }
}

pub fn classify_wellposedness(inputs: &ModelInputs) -> WellPosedness {
    let beta = inputs.beta();
    if beta <= 0.0 || beta < inputs.prefs.alpha() {
        WellPosedness::IllPosed
    } else if beta == 1.0 {
        WellPosedness::WellPosedBoundary
    } else {
        WellPosedness::WellPosedInterior
    }
}

/// Expected utility of buying at once at `p` and selling the first time the
/// price reaches `n`. Grows without bound in `n` exactly when the problem is
/// ill-posed.
pub fn buy_and_hold_value(p: f64, n: f64, inputs: &ModelInputs) -> Result<f64> {
    if classify_wellposedness(inputs).is_well_posed() {
        return Err(Error::Regime(
            "buy-and-hold divergence is only defined for ill-posed inputs".into(),
        ));
    }
    if !(p > 0.0) || !(n > p) || !n.is_finite() {
        return Err(Error::Domain(format!(
            "buy-and-hold needs 0 < p < n, got p = {p}, n = {n}"
        )));
    }
    let prefs = &inputs.prefs;
    let beta = inputs.beta();
    let reference = inputs.reference_point(p);
    let sale = utility(inputs.costs.gamma() * n - reference, prefs);
    if beta <= 0.0 {
        return Ok(sale);
    }
    let reach = (p / n).powf(beta);
    Ok((1.0 - reach) * utility(-reference, prefs) + reach * sale)
}

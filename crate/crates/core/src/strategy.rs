//! Exact expected utility of threshold strategies, computed from first-passage
//! probabilities of the price process.

use serde::{Deserialize, Serialize};

use crate::entry::EntrySolution;
use crate::error::{Error, Result};
use crate::exit::sale_threshold;
use crate::model::{utility, ModelInputs};

/// When the asset is bought.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", content = "level", rename_all = "snake_case")]
pub enum BuyRule {
    Immediate,
    /// Buy the first time the price rises to the level.
    AtUpcross(f64),
    /// Buy the first time the price falls to the level.
    AtDowncross(f64),
    Never,
}

/// A buy rule followed by a gain-exit sale at `sale_multiple * H / gamma`,
/// where `H` is the reference point fixed at purchase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TradingStrategy {
    pub buy: BuyRule,
    pub sale_multiple: f64,
}

impl TradingStrategy {
    pub fn new(buy: BuyRule, sale_multiple: f64) -> Self {
        Self { buy, sale_multiple }
    }

    pub fn never() -> Self {
        Self {
            buy: BuyRule::Never,
            sale_multiple: f64::INFINITY,
        }
    }

    /// Buy when the price is in `[lower, upper]`, starting from `p`.
    pub fn band(p: f64, lower: f64, upper: f64, sale_multiple: f64) -> Self {
        let buy = if p < lower {
            BuyRule::AtUpcross(lower)
        } else if p > upper {
            BuyRule::AtDowncross(upper)
        } else {
            BuyRule::Immediate
        };
        Self { buy, sale_multiple }
    }

    /// The price paid, if the strategy ever buys.
    pub fn buy_price(&self, p: f64) -> Option<f64> {
        match self.buy {
            BuyRule::Immediate => Some(p),
            BuyRule::AtUpcross(b) | BuyRule::AtDowncross(b) => Some(b),
            BuyRule::Never => None,
        }
    }

    pub(crate) fn validate(&self, p: f64) -> Result<()> {
        if !(p > 0.0) || !p.is_finite() {
            return Err(Error::Domain(format!("start price must be positive, got {p}")));
        }
        match self.buy {
            BuyRule::AtUpcross(b) if !(b >= p) || !b.is_finite() => Err(Error::Domain(format!(
                "up-cross level {b} lies below the start price {p}"
            ))),
            BuyRule::AtDowncross(b) if !(b <= p) || !(b > 0.0) => Err(Error::Domain(format!(
                "down-cross level {b} must lie in (0, {p}]"
            ))),
            BuyRule::Never => Ok(()),
            _ if !(self.sale_multiple > 0.0) => Err(Error::Domain(format!(
                "sale multiple must be positive, got {}",
                self.sale_multiple
            ))),
            _ => Ok(()),
        }
    }
}

/// Probabilities and utilities of the three possible outcomes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutcomeBreakdown {
    pub prob_never_buy: f64,
    pub prob_never_sell: f64,
    pub prob_round_trip: f64,
    pub utility_never_buy: f64,
    pub utility_never_sell: f64,
    pub utility_round_trip: f64,
}

impl OutcomeBreakdown {
    pub fn expected_utility(&self) -> f64 {
        let mut total = self.prob_never_buy * self.utility_never_buy;
        if self.prob_never_sell > 0.0 {
            total += self.prob_never_sell * self.utility_never_sell;
        }
        if self.prob_round_trip > 0.0 {
            total += self.prob_round_trip * self.utility_round_trip;
        }
        total
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrategyValue {
    pub expected_utility: f64,
    pub breakdown: OutcomeBreakdown,
}

/// Utilities of the three outcomes for a purchase at `buy_price`, plus the
/// sale level.
pub(crate) fn outcome_utilities(
    buy_price: f64,
    sale_multiple: f64,
    inputs: &ModelInputs,
) -> (f64, f64, f64) {
    let h = inputs.reference_point(buy_price);
    let gamma = inputs.costs.gamma();
    let sale = sale_threshold(sale_multiple, h, gamma);
    let won = utility(gamma * sale - h, &inputs.prefs);
    let lost = utility(-h, &inputs.prefs);
    (sale, won, lost)
}

/// Expected utility of `strategy` started at price `p`.
pub fn evaluate_strategy_exact(
    p: f64,
    strategy: &TradingStrategy,
    inputs: &ModelInputs,
) -> Result<StrategyValue> {
    let beta = inputs.beta();
    if !(beta > 0.0) {
        return Err(Error::Domain(format!(
            "exact valuation needs beta > 0, got {beta}"
        )));
    }
    strategy.validate(p)?;
    let walk_away = utility(-inputs.prefs.aspiration(), &inputs.prefs);
    let (buy_price, reach) = match strategy.buy {
        BuyRule::Never => {
            let breakdown = OutcomeBreakdown {
                prob_never_buy: 1.0,
                prob_never_sell: 0.0,
                prob_round_trip: 0.0,
                utility_never_buy: walk_away,
                utility_never_sell: f64::NAN,
                utility_round_trip: f64::NAN,
            };
            return Ok(StrategyValue {
                expected_utility: walk_away,
                breakdown,
            });
        }
        BuyRule::Immediate => (p, 1.0),
        BuyRule::AtUpcross(b) => (b, (p / b).powf(beta)),
        // the scaled price is a supermartingale drifting to zero: lower levels are hit surely
        BuyRule::AtDowncross(b) => (b, 1.0),
    };
    let (sale, won, lost) = outcome_utilities(buy_price, strategy.sale_multiple, inputs);
    let sell = if sale <= buy_price {
        1.0
    } else {
        (buy_price / sale).powf(beta)
    };
    let breakdown = OutcomeBreakdown {
        prob_never_buy: 1.0 - reach,
        prob_never_sell: reach * (1.0 - sell),
        prob_round_trip: reach * sell,
        utility_never_buy: walk_away,
        utility_never_sell: lost,
        utility_round_trip: won,
    };
    Ok(StrategyValue {
        expected_utility: breakdown.expected_utility(),
        breakdown,
    })
}

/// Result of comparing perturbed threshold strategies with the value function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DominanceReport {
    pub price: f64,
    pub value: f64,
    /// Largest `perturbed - value`, floored at zero.
    pub max_violation: f64,
    pub worst_buy_factor: f64,
    pub worst_sale_factor: f64,
    pub strategies: usize,
}

/// Perturbation factors for the buy level and the sale multiple.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationGrid {
    pub buy_factors: Vec<f64>,
    pub sale_factors: Vec<f64>,
}

impl Default for PerturbationGrid {
    /// 21 buy-level factors on `[0.5, 1.5]` and 21 sale factors on `[0.8, 1.2]`.
    fn default() -> Self {
        let lin = |lo: f64, hi: f64, n: usize| -> Vec<f64> {
            (0..n)
                .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
                .collect()
        };
        Self {
            buy_factors: lin(0.5, 1.5, 21),
            sale_factors: lin(0.8, 1.2, 21),
        }
    }
}

/// Evaluates every perturbed threshold strategy on the grid and records how
/// far any of them beats the value function at `p`.
///
/// The buy level being perturbed is the one the optimal rule waits for, or
/// the start price itself when the optimal rule buys at once or never buys.
pub fn perturbation_dominance_check(
    p: f64,
    solution: &EntrySolution,
    grid: &PerturbationGrid,
) -> Result<DominanceReport> {
    let value = solution.entry_value(p);
    let c = solution.exit.c();
    let anchor = match solution.optimal_strategy(p).buy {
        BuyRule::AtUpcross(b) | BuyRule::AtDowncross(b) => b,
        BuyRule::Immediate | BuyRule::Never => p,
    };
    let mut report = DominanceReport {
        price: p,
        value,
        max_violation: 0.0,
        worst_buy_factor: 1.0,
        worst_sale_factor: 1.0,
        strategies: 0,
    };
    for &bf in &grid.buy_factors {
        let level = anchor * bf;
        let buy = if level > p {
            BuyRule::AtUpcross(level)
        } else if level < p {
            BuyRule::AtDowncross(level)
        } else {
            BuyRule::Immediate
        };
        for &sf in &grid.sale_factors {
            let multiple = c * sf;
            let strategy = TradingStrategy::new(buy, multiple);
            let got = evaluate_strategy_exact(p, &strategy, &solution.inputs)?.expected_utility;
            report.strategies += 1;
            let excess = got - value;
            if excess > report.max_violation {
                report.max_violation = excess;
                report.worst_buy_factor = bf;
                report.worst_sale_factor = sf;
            }
        }
    }
    Ok(report)
}

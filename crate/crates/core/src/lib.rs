//! Optimal purchase and sale thresholds for an S-shaped-utility trader holding
//! one indivisible asset whose price follows geometric Brownian motion, with
//! proportional costs on both sides of the trade and a fixed entry fee.
//!
//! ```
//! use ptstop_core::{EntrySolution, ModelInputs, RegimeTag};
//!
//! // alpha, k, R, beta, lambda, gamma, psi
//! let inputs = ModelInputs::from_values(0.5, 2.25, 1.0, 0.85, 1.1, 0.9, 1.0).unwrap();
//! let solution = EntrySolution::solve(&inputs).unwrap();
//! assert_eq!(solution.tag(), RegimeTag::Interval);
//! let (p1, p2) = (solution.regime.p1_star().unwrap(), solution.regime.p2_star().unwrap());
//! assert!(p1 < p2);
//! ```

pub mod entry;
pub mod error;
pub mod exit;
pub mod majorant;
pub mod model;
mod roots;
pub mod scenario;
pub mod simulate;
pub mod strategy;
pub mod sweep;
pub mod verify;

pub use entry::{
    classify, classify_regime, critical_xi, AuxiliaryF, EntryRegime, EntrySolution, FProfile,
    RegimeTag,
};
pub use error::{Error, Result};
pub use exit::{exit_value, sale_threshold, solve_c, ExitSolution};
pub use majorant::{concave_majorant, GridFunction, GridSpec, MajorantResult};
pub use model::{
    buy_and_hold_value, classify_wellposedness, hitting_probability, scale, utility,
    MarketDynamics, ModelInputs, Preferences, TransactionCosts, WellPosedness,
};
pub use scenario::ScenarioConfig;
pub use simulate::{simulate_strategy_mc, McEstimate, SimulationConfig};
pub use strategy::{evaluate_strategy_exact, BuyRule, StrategyValue, TradingStrategy};
pub use sweep::{run_sweep, SweepParameter, SweepRecord, SweepSpec};
pub use verify::{verify_scenario, VerificationReport, VerifyOptions};

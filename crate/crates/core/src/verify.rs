//! Cross-checks of a solved scenario against the independent valuations.

use serde::{Deserialize, Serialize};

use crate::entry::{EntryRegime, EntrySolution, RegimeTag};
use crate::error::Result;
use crate::exit::{exit_value, ExitSolution};
use crate::majorant::{boundaries_from_curve, entry_oracle, exit_oracle, GridSpec};
use crate::model::ModelInputs;
use crate::strategy::{evaluate_strategy_exact, perturbation_dominance_check, PerturbationGrid};

pub const EXACT_TOLERANCE: f64 = 1e-9;
pub const DOMINANCE_TOLERANCE: f64 = 1e-12;
pub const ORACLE_TOLERANCE: f64 = 1e-3;
/// Relative errors are taken against `max(|reference|, RELATIVE_FLOOR * |U(-R)|)`
/// so that value functions crossing zero do not produce spurious failures.
pub const RELATIVE_FLOOR: f64 = 1e-6;
/// Boundaries are compared only when the payoff at the upper boundary rises
/// above `U(-R)` by more than this relative amount; below it the contact set
/// is lost in the contact tolerance.
pub const RESOLVABLE_EXCESS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerifyOptions {
    /// Prices at which the exact valuation and the dominance check run.
    pub samples: usize,
    /// Prices at which each oracle is compared.
    pub oracle_samples: usize,
    pub grid: GridSpec,
    /// Multiplies the solved `c` before anything else is computed.
    pub corrupt_c: Option<f64>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            samples: 20,
            oracle_samples: 50,
            grid: GridSpec::default(),
            corrupt_c: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub name: String,
    pub tolerance: f64,
    pub max_error: f64,
    pub worst_price: Option<f64>,
    pub samples: usize,
    pub passed: bool,
    /// Why a check compared fewer points than asked, if it did.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub regime: RegimeTag,
    pub c: f64,
    pub checks: Vec<CheckOutcome>,
    pub passed: bool,
}

impl VerificationReport {
    /// The failing check with the largest error relative to its tolerance.
    pub fn worst_failure(&self) -> Option<&CheckOutcome> {
        self.checks
            .iter()
            .filter(|c| !c.passed)
            .max_by(|a, b| (a.max_error / a.tolerance).total_cmp(&(b.max_error / b.tolerance)))
    }
}

pub fn relative_error(got: f64, want: f64, floor: f64) -> f64 {
    (got - want).abs() / want.abs().max(floor)
}

/// `n` log-spaced prices on `[lo, hi]`.
pub fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

/// Prices spread from well below the lower purchase boundary to well above
/// the upper one.
pub fn sample_prices(solution: &EntrySolution, n: usize) -> Vec<f64> {
    let inputs = &solution.inputs;
    let scale = (inputs.prefs.aspiration() + inputs.costs.psi()) / inputs.costs.gamma();
    let lo = solution.regime.p1_star().filter(|&p| p > 0.0).unwrap_or(scale);
    let hi = solution.regime.p2_star().unwrap_or(lo).max(lo);
    log_spaced(0.1 * lo, 10.0 * hi, n)
}

struct Tracker {
    name: &'static str,
    tolerance: f64,
    max_error: f64,
    worst_price: Option<f64>,
    samples: usize,
    note: Option<String>,
}

impl Tracker {
    fn new(name: &'static str, tolerance: f64) -> Self {
        Self {
            name,
            tolerance,
            max_error: 0.0,
            worst_price: None,
            samples: 0,
            note: None,
        }
    }

    fn record(&mut self, price: f64, error: f64) {
        self.samples += 1;
        if error > self.max_error || error.is_nan() {
            self.max_error = if error.is_nan() { f64::INFINITY } else { error };
            self.worst_price = Some(price);
        }
    }

    fn finish(self) -> CheckOutcome {
        CheckOutcome {
            name: self.name.to_string(),
            tolerance: self.tolerance,
            max_error: self.max_error,
            worst_price: self.worst_price,
            samples: self.samples,
            passed: self.max_error <= self.tolerance,
            note: self.note,
        }
    }
}

pub fn verify_scenario(inputs: &ModelInputs, options: &VerifyOptions) -> Result<VerificationReport> {
    let mut solution = EntrySolution::solve(inputs)?;
    if let Some(factor) = options.corrupt_c {
        let exit = ExitSolution::with_multiple(&inputs.prefs, inputs.beta(), solution.exit.c() * factor)?;
        solution = EntrySolution::with_exit(inputs, exit)?;
    }
    verify_solution(&solution, options)
}

pub fn verify_solution(solution: &EntrySolution, options: &VerifyOptions) -> Result<VerificationReport> {
    let inputs = &solution.inputs;
    let floor = RELATIVE_FLOOR * solution.inaction_utility().abs();
    let prices = sample_prices(solution, options.samples);
    let mut checks = Vec::new();

    let mut exact = Tracker::new("exact_valuation", EXACT_TOLERANCE);
    for &p in &prices {
        let strategy = solution.optimal_strategy(p);
        let got = evaluate_strategy_exact(p, &strategy, inputs)?.expected_utility;
        exact.record(p, relative_error(got, solution.entry_value(p), floor));
    }
    checks.push(exact.finish());

    let mut dominance = Tracker::new("perturbation_dominance", DOMINANCE_TOLERANCE);
    let grid = PerturbationGrid::default();
    for &p in &prices {
        let report = perturbation_dominance_check(p, solution, &grid)?;
        dominance.record(p, report.max_violation);
    }
    checks.push(dominance.finish());

    // entry oracle, inside its comparison window
    let curve = entry_oracle(solution, &options.grid)?;
    let top = curve.window_price();
    let mut entry = Tracker::new("oracle_entry_value", ORACLE_TOLERANCE);
    for p in log_spaced(1e-4 * top, 0.999 * top, options.oracle_samples) {
        let got = curve.value_at_price(p)?;
        entry.record(p, relative_error(got, solution.entry_value(p), floor));
    }
    checks.push(entry.finish());

    // boundaries: the solver's value must lie within one grid cell of the contact set's ends
    let mut bounds = Tracker::new("oracle_boundaries", 0.0);
    let found = boundaries_from_curve(&curve, solution.inaction_utility());
    let outside = |x: f64, cell: (f64, f64)| {
        if x < cell.0 {
            (cell.0 - x) / x.max(f64::MIN_POSITIVE)
        } else if x > cell.1 {
            (x - cell.1) / x
        } else {
            0.0
        }
    };
    let floor_utility = solution.inaction_utility();
    let peak_excess = match solution.regime {
        EntryRegime::Interval { p2_star, .. } => (solution.v1(p2_star) - floor_utility) / floor_utility.abs(),
        _ => f64::INFINITY,
    };
    match (solution.regime, found) {
        _ if peak_excess <= RESOLVABLE_EXCESS => {
            bounds.note = Some(format!(
                "payoff peak exceeds U(-R) by {peak_excess:.1e} relative, below the {RESOLVABLE_EXCESS:.0e} the grid can resolve; boundaries not compared"
            ));
        }
        (EntryRegime::NoTrade { .. }, None) => bounds.record(0.0, 0.0),
        (EntryRegime::OneSided { p1_star }, Some(b)) => {
            bounds.record(p1_star, outside(p1_star, b.p1_cell));
            // an unbounded ray must not come back bounded
            bounds.record(p1_star, if b.p2.is_some() { f64::INFINITY } else { 0.0 });
        }
        (
            EntryRegime::Interval {
                p1_star, p2_star, ..
            },
            Some(b),
        ) => {
            bounds.record(p1_star, outside(p1_star, b.p1_cell));
            match b.p2_cell {
                Some(cell) => bounds.record(p2_star, outside(p2_star, cell)),
                None => bounds.record(p2_star, f64::INFINITY),
            }
        }
        _ => bounds.record(0.0, f64::INFINITY),
    }
    checks.push(bounds.finish());

    // exit oracle at the reference points of a few purchase prices
    let mut exit = Tracker::new("oracle_exit_value", ORACLE_TOLERANCE);
    let per_reference = (options.oracle_samples / 5).max(1);
    for buy in log_spaced(prices[0], prices[prices.len() - 1], 5) {
        let h = inputs.reference_point(buy);
        let curve = exit_oracle(h, inputs, &options.grid)?;
        let exit_floor = RELATIVE_FLOOR * inputs.prefs.k() * h.powf(inputs.prefs.alpha());
        let top = curve.window_price();
        for p in log_spaced(1e-4 * top, top, per_reference) {
            let got = curve.value_at_price(p)?;
            let want = exit_value(p, h, inputs, &solution.exit);
            exit.record(p, relative_error(got, want, exit_floor));
        }
    }
    checks.push(exit.finish());

    let passed = checks.iter().all(|c| c.passed);
    Ok(VerificationReport {
        regime: solution.tag(),
        c: solution.exit.c(),
        checks,
        passed,
    })
}

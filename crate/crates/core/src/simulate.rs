//! Monte Carlo valuation of threshold strategies on simulated price paths.
//!
//! Paths are simulated in log space with exact Gaussian increments. A level
//! crossing between two grid times is detected with the Brownian-bridge
//! crossing probability, which removes the leading bias of checking the
//! endpoints only. Paths still waiting at the horizon are scored as never
//! having completed the pending step.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::model::{utility, ModelInputs};
use crate::strategy::{outcome_utilities, BuyRule, TradingStrategy};

pub const DEFAULT_STEPS: usize = 4096;
/// Residual crossing mass targeted when the horizon is chosen automatically.
pub const DEFAULT_RESIDUAL_TARGET: f64 = 5e-4;
/// Paths are split into this many independent streams, regardless of the
/// number of worker threads, so results do not depend on the thread count.
const CHUNKS: u64 = 64;
/// A path whose chance of ever reaching its pending level has dropped below
/// this is stopped early.
const NEGLIGIBLE_MASS: f64 = 1e-12;
/// `exp(-40)` is below the resolution of a uniform draw.
const BRIDGE_CUTOFF: f64 = 40.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub horizon: f64,
    pub n_paths: usize,
    pub seed: u64,
    pub steps: usize,
}

impl SimulationConfig {
    pub fn new(horizon: f64, n_paths: usize, seed: u64) -> Self {
        Self {
            horizon,
            n_paths,
            seed,
            steps: DEFAULT_STEPS,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.horizon > 0.0) || !self.horizon.is_finite() {
            return Err(Error::invalid("horizon", format!("must be finite and > 0, got {}", self.horizon)));
        }
        if self.n_paths == 0 {
            return Err(Error::invalid("paths", "need at least one path"));
        }
        if self.steps == 0 {
            return Err(Error::invalid("steps", "need at least one time step"));
        }
        Ok(())
    }
}

/// How many paths ended in each of the three outcomes.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutcomeCounts {
    pub never_buy: u64,
    pub never_sell: u64,
    pub round_trip: u64,
}

impl OutcomeCounts {
    fn add(self, other: Self) -> Self {
        Self {
            never_buy: self.never_buy + other.never_buy,
            never_sell: self.never_sell + other.never_sell,
            round_trip: self.round_trip + other.round_trip,
        }
    }

    pub fn total(&self) -> u64 {
        self.never_buy + self.never_sell + self.round_trip
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_paths: usize,
    pub counts: OutcomeCounts,
    pub horizon: f64,
    pub steps: usize,
}

#[derive(Clone, Copy)]
enum Outcome {
    NeverBuy,
    NeverSell,
    RoundTrip,
}

struct PathPlan {
    start: f64,
    /// `None` when the position is opened at time zero.
    buy: Option<(f64, bool)>,
    sale: f64,
    drift: f64,
    vol: f64,
    /// `2 / (sigma^2 dt)`
    bridge: f64,
    /// Distance below an up-level beyond which the path is abandoned.
    give_up: f64,
    steps: usize,
}

impl PathPlan {
    /// Moves `x` one step and reports whether `level` was touched.
    #[inline]
    fn step<R: Rng>(&self, rng: &mut R, x: &mut f64, level: f64, upward: bool) -> bool {
        let z: f64 = rng.sample(StandardNormal);
        let next = *x + self.drift + self.vol * z;
        let (d0, d1) = if upward {
            (level - *x, level - next)
        } else {
            (*x - level, next - level)
        };
        *x = next;
        if d1 <= 0.0 {
            return true;
        }
        let e = self.bridge * d0 * d1;
        e < BRIDGE_CUTOFF && rng.gen::<f64>() < (-e).exp()
    }

    fn run<R: Rng>(&self, rng: &mut R) -> Outcome {
        let mut x = self.start;
        let mut holding = self.buy.is_none();
        for _ in 0..self.steps {
            if holding && x >= self.sale {
                return Outcome::RoundTrip;
            }
            if holding {
                if self.step(rng, &mut x, self.sale, true) {
                    return Outcome::RoundTrip;
                }
                if self.sale - x > self.give_up {
                    return Outcome::NeverSell;
                }
            } else {
                let (level, upward) = self.buy.expect("buy level while waiting");
                if self.step(rng, &mut x, level, upward) {
                    // the remainder of the step is dropped; its length is at most dt
                    x = level;
                    holding = true;
                } else if upward && level - x > self.give_up {
                    return Outcome::NeverBuy;
                }
            }
        }
        if holding {
            Outcome::NeverSell
        } else {
            Outcome::NeverBuy
        }
    }
}

fn simulate_chunk(plan: &PathPlan, seed: u64, chunk: u64, paths: u64) -> OutcomeCounts {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk);
    let mut counts = OutcomeCounts::default();
    for _ in 0..paths {
        match plan.run(&mut rng) {
            Outcome::NeverBuy => counts.never_buy += 1,
            Outcome::NeverSell => counts.never_sell += 1,
            Outcome::RoundTrip => counts.round_trip += 1,
        }
    }
    counts
}

/// Monte Carlo estimate of the expected utility of `strategy` from price `p`.
///
/// Deterministic for a fixed seed, path count and step count.
pub fn simulate_strategy_mc(
    p: f64,
    strategy: &TradingStrategy,
    inputs: &ModelInputs,
    config: &SimulationConfig,
) -> Result<McEstimate> {
    config.validate()?;
    let beta = inputs.beta();
    if !(beta > 0.0) {
        return Err(Error::Domain(format!("simulation needs beta > 0, got {beta}")));
    }
    strategy.validate(p)?;
    let walk_away = utility(-inputs.prefs.aspiration(), &inputs.prefs);
    let n = config.n_paths as u64;

    let Some(buy_price) = strategy.buy_price(p) else {
        return Ok(McEstimate {
            mean: walk_away,
            std_error: 0.0,
            n_paths: config.n_paths,
            counts: OutcomeCounts {
                never_buy: n,
                ..Default::default()
            },
            horizon: config.horizon,
            steps: config.steps,
        });
    };
    let (sale, won, lost) = outcome_utilities(buy_price, strategy.sale_multiple, inputs);

    let sigma = inputs.market.sigma();
    let dt = config.horizon / config.steps as f64;
    let buy = match strategy.buy {
        BuyRule::AtUpcross(b) if b > p => Some((b.ln(), true)),
        BuyRule::AtDowncross(b) if b < p => Some((b.ln(), false)),
        _ => None,
    };
    let plan = PathPlan {
        start: p.ln(),
        buy,
        sale: sale.ln(),
        drift: inputs.market.log_drift() * dt,
        vol: sigma * dt.sqrt(),
        bridge: 2.0 / (sigma * sigma * dt),
        give_up: -NEGLIGIBLE_MASS.ln() / beta,
        steps: config.steps,
    };

    let counts = run_chunks(&plan, config.seed, n);

    let outcomes = [
        (counts.never_buy, walk_away),
        (counts.never_sell, lost),
        (counts.round_trip, won),
    ];
    let nf = n as f64;
    let mean = outcomes
        .iter()
        .filter(|(k, _)| *k > 0)
        .map(|&(k, u)| k as f64 * u)
        .sum::<f64>()
        / nf;
    let std_error = if n > 1 {
        let ss: f64 = outcomes
            .iter()
            .filter(|(k, _)| *k > 0)
            .map(|&(k, u)| k as f64 * (u - mean) * (u - mean))
            .sum();
        (ss / (nf - 1.0) / nf).sqrt()
    } else {
        0.0
    };
    Ok(McEstimate {
        mean,
        std_error,
        n_paths: config.n_paths,
        counts,
        horizon: config.horizon,
        steps: config.steps,
    })
}

fn run_chunks(plan: &PathPlan, seed: u64, n: u64) -> OutcomeCounts {
    (0..CHUNKS)
        .into_par_iter()
        .map(|chunk| {
            let share = n / CHUNKS + u64::from(chunk < n % CHUNKS);
            simulate_chunk(plan, seed, chunk, share)
        })
        .reduce(OutcomeCounts::default, OutcomeCounts::add)
}

#[inline]
fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Probability that a Brownian motion with drift `nu` towards a level at
/// distance `a > 0` reaches it eventually but only after time `t`.
fn late_passage_mass(a: f64, nu: f64, sigma: f64, t: f64) -> f64 {
    if a <= 0.0 {
        return 0.0;
    }
    let s = sigma * t.sqrt();
    let lift = 2.0 * nu * a / (sigma * sigma);
    let eventual = if nu >= 0.0 { 1.0 } else { lift.exp() };
    let mirror = normal_cdf((-a - nu * t) / s);
    let mirrored = if mirror > 0.0 {
        (lift + mirror.ln()).exp()
    } else {
        0.0
    };
    let by_t = normal_cdf((-a + nu * t) / s) + mirrored;
    (eventual - by_t).max(0.0)
}

/// Upper bound on the probability that the strategy would still complete a
/// pending step after `horizon`: the purchase has to happen within the first
/// half, the sale within the second half.
pub fn residual_crossing_mass(
    p: f64,
    strategy: &TradingStrategy,
    inputs: &ModelInputs,
    horizon: f64,
) -> Result<f64> {
    strategy.validate(p)?;
    let beta = inputs.beta();
    if !(beta > 0.0) {
        return Err(Error::Domain(format!("needs beta > 0, got {beta}")));
    }
    let Some(buy_price) = strategy.buy_price(p) else {
        return Ok(0.0);
    };
    let nu = inputs.market.log_drift();
    let sigma = inputs.market.sigma();
    let (sale, _, _) = outcome_utilities(buy_price, strategy.sale_multiple, inputs);
    let sale_gap = (sale / buy_price).ln();
    Ok(match strategy.buy {
        BuyRule::AtUpcross(b) if b > p => {
            let reach = (p / b).powf(beta);
            late_passage_mass((b / p).ln(), nu, sigma, 0.5 * horizon)
                + reach * late_passage_mass(sale_gap, nu, sigma, 0.5 * horizon)
        }
        BuyRule::AtDowncross(b) if b < p => {
            late_passage_mass((p / b).ln(), -nu, sigma, 0.5 * horizon)
                + late_passage_mass(sale_gap, nu, sigma, 0.5 * horizon)
        }
        _ => late_passage_mass(sale_gap, nu, sigma, horizon),
    })
}

/// Smallest horizon (to within 0.1%) whose residual crossing bound is below
/// `target`.
pub fn horizon_for_residual(
    p: f64,
    strategy: &TradingStrategy,
    inputs: &ModelInputs,
    target: f64,
) -> Result<f64> {
    if !(target > 0.0 && target < 1.0) {
        return Err(Error::invalid("target", format!("must lie in (0, 1), got {target}")));
    }
    let mass = |t: f64| residual_crossing_mass(p, strategy, inputs, t);
    let mut hi = 1.0;
    while mass(hi)? >= target {
        hi *= 2.0;
        if hi > 1e9 {
            return Err(Error::Numerical(format!(
                "residual crossing mass stays above {target} up to horizon {hi}"
            )));
        }
    }
    let mut lo = 0.5 * hi;
    if mass(lo)? < target {
        return Ok(lo);
    }
    while hi - lo > 1e-3 * hi {
        let mid = 0.5 * (lo + hi);
        if mass(mid)? < target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entry::EntrySolution;
    use crate::strategy::evaluate_strategy_exact;

    fn base(lambda: f64, gamma: f64, psi: f64) -> ModelInputs {
        ModelInputs::from_values(0.5, 2.25, 1.0, 0.85, lambda, gamma, psi).unwrap()
    }

    #[test]
    fn never_strategy_has_no_noise() {
        let inputs = base(1.1, 0.9, 1.0);
        let est = simulate_strategy_mc(
            3.0,
            &TradingStrategy::never(),
            &inputs,
            &SimulationConfig::new(10.0, 1000, 1),
        )
        .unwrap();
        assert_eq!(est.mean, -2.25);
        assert_eq!(est.std_error, 0.0);
    }

    #[test]
    fn same_seed_same_estimate() {
        let solution = EntrySolution::solve(&base(1.1, 0.9, 1.0)).unwrap();
        let p = 2.0;
        let strategy = solution.optimal_strategy(p);
        let config = SimulationConfig {
            steps: 256,
            ..SimulationConfig::new(20.0, 2000, 7)
        };
        let a = simulate_strategy_mc(p, &strategy, &solution.inputs, &config).unwrap();
        let b = simulate_strategy_mc(p, &strategy, &solution.inputs, &config).unwrap();
        assert_eq!(a, b);
        let c = simulate_strategy_mc(
            p,
            &strategy,
            &solution.inputs,
            &SimulationConfig { seed: 8, ..config },
        )
        .unwrap();
        assert_ne!(a.counts, c.counts);
        assert_eq!(a.counts.total(), 2000);
    }

    #[test]
    fn late_passage_mass_vanishes_and_starts_at_eventual() {
        let beta = 0.85;
        let nu = -0.5 * beta;
        let eventual = (-beta * 0.7f64).exp();
        assert!((late_passage_mass(0.7, nu, 1.0, 1e-9) - eventual).abs() < 1e-12);
        assert!(late_passage_mass(0.7, nu, 1.0, 1e4) < 1e-12);
        let mut last = 1.0;
        for t in [0.1, 1.0, 5.0, 20.0, 100.0] {
            let m = late_passage_mass(0.7, nu, 1.0, t);
            assert!(m < last);
            last = m;
        }
        // downward passage against an upward-drifting log price is certain
        assert!((late_passage_mass(0.7, -nu, 1.0, 1e-9) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn chosen_horizon_meets_target() {
        let solution = EntrySolution::solve(&base(1.1, 0.9, 1.0)).unwrap();
        let p = 2.0;
        let strategy = solution.optimal_strategy(p);
        let t = horizon_for_residual(p, &strategy, &solution.inputs, 1e-3).unwrap();
        let m = residual_crossing_mass(p, &strategy, &solution.inputs, t).unwrap();
        assert!(m < 1e-3);
        assert!(residual_crossing_mass(p, &strategy, &solution.inputs, 0.9 * t).unwrap() >= 1e-3);
    }

    #[test]
    fn immediate_purchase_agrees_with_exact_value() {
        let solution = EntrySolution::solve(&base(1.1, 0.9, 1.0)).unwrap();
        let p = 6.0;
        let strategy = solution.optimal_strategy(p);
        let exact = evaluate_strategy_exact(p, &strategy, &solution.inputs).unwrap();
        let t = horizon_for_residual(p, &strategy, &solution.inputs, 1e-3).unwrap();
        let config = SimulationConfig {
            steps: 1024,
            ..SimulationConfig::new(t, 20_000, 11)
        };
        let est = simulate_strategy_mc(p, &strategy, &solution.inputs, &config).unwrap();
        let z = (est.mean - exact.expected_utility) / est.std_error;
        assert!(z.abs() <= 4.0, "z = {z}, {est:?} vs {exact:?}");
    }
}

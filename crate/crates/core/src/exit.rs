//! Optimal liquidation of an asset bought against a fixed reference point.
//!
//! With power utility the sale rule is a pure gain-exit: sell the first time
//! the price reaches `c * H / gamma`, where `H` is the reference point and the
//! multiple `c > 1` depends only on `alpha`, `beta` and `k`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{utility, ModelInputs, Preferences};
use crate::roots::{bisect, Spacing};

/// The gain-exit multiple together with the coefficients derived from it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExitSolution {
    c: f64,
    excess: f64,
    residual: f64,
    alpha: f64,
    beta: f64,
    k: f64,
}

/// `(alpha/beta) c (c-1)^(alpha-1) - (c-1)^alpha - k` written in terms of
/// `d = c - 1` and factored to avoid cancellation near `c = 1`.
fn multiple_equation(d: f64, alpha: f64, beta: f64, k: f64) -> f64 {
    d.powf(alpha - 1.0) * ((alpha / beta) * (1.0 + d) - d) - k
}

impl ExitSolution {
    /// Builds a solution around an arbitrary multiple. The residual records how
    /// far `c` is from solving the optimality equation.
    pub fn with_multiple(prefs: &Preferences, beta: f64, c: f64) -> Result<Self> {
        if !(c > 1.0) || !c.is_finite() {
            return Err(Error::Domain(format!("gain-exit multiple must exceed 1, got {c}")));
        }
        let excess = c - 1.0;
        Ok(Self::from_excess(prefs, beta, excess))
    }

    fn from_excess(prefs: &Preferences, beta: f64, excess: f64) -> Self {
        let (alpha, k) = (prefs.alpha(), prefs.k());
        Self {
            c: 1.0 + excess,
            excess,
            residual: multiple_equation(excess, alpha, beta, k).abs(),
            alpha,
            beta,
            k,
        }
    }

    /// The gain-exit multiple `c`.
    #[inline]
    pub fn c(&self) -> f64 {
        self.c
    }

    /// `c - 1`, kept separately since it can sit far below machine epsilon.
    #[inline]
    pub fn excess(&self) -> f64 {
        self.excess
    }

    #[inline]
    pub fn residual(&self) -> f64 {
        self.residual
    }

    #[inline]
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    #[inline]
    pub fn beta(&self) -> f64 {
        self.beta
    }

    #[inline]
    pub fn k(&self) -> f64 {
        self.k
    }

    /// `c^(1-beta) (c-1)^(alpha-1)`.
    #[inline]
    pub fn tangency_coefficient(&self) -> f64 {
        self.c.powf(1.0 - self.beta) * self.excess.powf(self.alpha - 1.0)
    }

    /// `(alpha/beta) c^(1-beta) (c-1)^(alpha-1)`, the slope of the exit value in
    /// scaled coordinates per unit of `H^(alpha-beta) gamma^beta`.
    #[inline]
    pub fn chord_coefficient(&self) -> f64 {
        self.alpha / self.beta * self.tangency_coefficient()
    }
}

/// Solves for the gain-exit multiple `c > 1`.
///
/// The equation is strictly decreasing in `c` on `(1, inf)`, running from
/// `+inf` to a negative limit, so the root is unique.
pub fn solve_c(prefs: &Preferences, beta: f64) -> Result<ExitSolution> {
    let (alpha, k) = (prefs.alpha(), prefs.k());
    if !(beta > 0.0 && beta <= 1.0 && alpha <= beta) {
        return Err(Error::IllPosed { alpha, beta });
    }
    let eq = |d: f64| multiple_equation(d, alpha, beta, k);

    let mut lo = 1e-9;
    while eq(lo) <= 0.0 {
        lo *= 1e-3;
        if lo < 1e-300 {
            return Err(Error::Numerical(format!(
                "cannot bracket c from below (alpha = {alpha}, beta = {beta}, k = {k})"
            )));
        }
    }
    let mut hi = 1.0;
    while eq(hi) > 0.0 {
        hi *= 10.0;
        if hi > 1e12 {
            return Err(Error::Numerical(format!(
                "bracket for c exceeded 1e12 (alpha = {alpha}, beta = {beta}, k = {k})"
            )));
        }
    }
    let excess = bisect(eq, lo, hi, Spacing::Geometric)?;
    Ok(ExitSolution::from_excess(prefs, beta, excess))
}

/// Price at which the asset is sold: `c H / gamma`.
#[inline]
pub fn sale_threshold(c: f64, reference: f64, gamma: f64) -> f64 {
    c * reference / gamma
}

/// Value of holding the asset at price `p` against reference point `reference`
/// and selling optimally afterwards.
pub fn exit_value(p: f64, reference: f64, inputs: &ModelInputs, exit: &ExitSolution) -> f64 {
    let gamma = inputs.costs.gamma();
    let (alpha, beta, k) = (exit.alpha, exit.beta, exit.k);
    if p >= sale_threshold(exit.c, reference, gamma) {
        return utility(gamma * p - reference, &inputs.prefs);
    }
    exit.chord_coefficient() * reference.powf(alpha - beta) * (gamma * p).powf(beta)
        - k * reference.powf(alpha)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelInputs;

    fn prefs(alpha: f64, k: f64) -> Preferences {
        Preferences::new(alpha, k, 1.0).unwrap()
    }

    #[test]
    fn analytic_multiple_when_alpha_equals_beta() {
        let exit = solve_c(&prefs(0.5, 2.25), 0.5).unwrap();
        assert!((exit.c() - (1.0 + 2.25f64.powf(-2.0))).abs() < 1e-14);
        assert!((exit.c() - 1.197_530_864_197_530_9).abs() < 1e-14);

        let exit = solve_c(&prefs(0.5, 4.0), 0.5).unwrap();
        assert!((exit.c() - 1.0625).abs() < 1e-14);
    }

    #[test]
    fn reference_multiple() {
        // Independent bisection on the unfactored equation in plain f64.
        let (alpha, beta, k) = (0.5, 0.85, 2.25);
        let raw = |c: f64| (alpha / beta) * c * (c - 1.0).powf(alpha - 1.0) - (c - 1.0).powf(alpha) - k;
        let (mut lo, mut hi) = (1.0 + 1e-9, 2.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if raw(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let exit = solve_c(&prefs(alpha, k), beta).unwrap();
        assert!((exit.c() - lo).abs() < 1e-13);
        // 40-digit reference value
        assert!((exit.c() - 1.062_5).abs() < 1e-14);
        assert!(exit.residual() <= 1e-12);
    }

    #[test]
    fn tiny_excess_is_resolved() {
        let exit = solve_c(&prefs(0.95, 10.0), 0.95).unwrap();
        let expected = 10f64.powf(1.0 / (0.95 - 1.0));
        assert!((exit.excess() / expected - 1.0).abs() < 1e-12);
        assert!(exit.excess() > 0.0);
    }

    #[test]
    fn ill_posed_inputs_are_rejected() {
        assert!(matches!(solve_c(&prefs(0.5, 2.25), 0.3), Err(Error::IllPosed { .. })));
        assert!(matches!(solve_c(&prefs(0.5, 2.25), -0.5), Err(Error::IllPosed { .. })));
    }

    #[test]
    fn sale_threshold_examples() {
        assert!((sale_threshold(1.2, 10.0, 1.0) - 12.0).abs() < 1e-14);
        assert!((sale_threshold(1.2, 10.0, 0.9) - 13.333_333_333_333_334).abs() < 1e-12);
        let gammas = [0.5, 0.6, 0.7, 0.8, 0.9, 1.0];
        for w in gammas.windows(2) {
            assert!(sale_threshold(1.2, 10.0, w[0]) > sale_threshold(1.2, 10.0, w[1]));
        }
    }

    #[test]
    fn exit_value_branches() {
        let inputs = ModelInputs::from_values(0.5, 2.25, 1.0, 0.85, 1.0, 0.9, 0.0).unwrap();
        let exit = solve_c(&inputs.prefs, 0.85).unwrap();
        let h = 3.0;
        let threshold = sale_threshold(exit.c(), h, 0.9);

        // both branches meet at the threshold
        let chord = exit.chord_coefficient() * h.powf(0.5 - 0.85) * (0.9 * threshold).powf(0.85)
            - 2.25 * h.sqrt();
        let at = exit_value(threshold, h, &inputs, &exit);
        assert!((chord - at).abs() < 1e-12);
        assert!((at - h.sqrt() * (exit.c() - 1.0).sqrt()).abs() < 1e-12);

        assert!((exit_value(1e-12, h, &inputs, &exit) + 2.25 * h.sqrt()).abs() < 1e-6);

        let p = 2.0 * threshold;
        let direct = (2.0 * exit.c() * h - h).sqrt();
        assert!((exit_value(p, h, &inputs, &exit) - direct).abs() < 1e-12);
    }
}

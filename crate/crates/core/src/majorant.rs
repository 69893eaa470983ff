//! Brute-force value functions: the smallest concave majorant of the scaled
//! payoff, computed on a finite grid.
//!
//! In the coordinate `theta = p^beta` the price is a martingale, so the value
//! of an optimal stopping problem is the least concave function above the
//! payoff. The hull of a dense grid therefore gives an independent check of
//! the closed-form value functions and of the free boundaries.

use serde::{Deserialize, Serialize};

use crate::entry::{EntryRegime, EntrySolution};
use crate::error::{Error, Result};
use crate::exit::{sale_threshold, solve_c};
use crate::model::{utility, ModelInputs};

/// Relative gap below which the hull counts as touching the payoff.
pub const CONTACT_TOLERANCE: f64 = 1e-12;

/// Payoff samples on an increasing grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    thetas: Vec<f64>,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(thetas: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if thetas.len() != values.len() {
            return Err(Error::Domain(format!(
                "grid has {} abscissae but {} values",
                thetas.len(),
                values.len()
            )));
        }
        if thetas.len() < 2 {
            return Err(Error::GridTooCoarse(format!(
                "need at least 2 points, got {}",
                thetas.len()
            )));
        }
        if let Some(i) = thetas.windows(2).position(|w| !(w[0] < w[1])) {
            return Err(Error::Domain(format!(
                "grid is not strictly increasing at index {i}"
            )));
        }
        if thetas.iter().chain(&values).any(|v| !v.is_finite()) {
            return Err(Error::Domain("grid contains non-finite entries".into()));
        }
        Ok(Self { thetas, values })
    }

    pub fn thetas(&self) -> &[f64] {
        &self.thetas
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.thetas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.thetas.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MajorantResult {
    pub thetas: Vec<f64>,
    pub hull_values: Vec<f64>,
    pub contact_mask: Vec<bool>,
}

impl MajorantResult {
    /// Linear interpolation of the hull; `None` outside the grid.
    pub fn interpolate(&self, theta: f64) -> Option<f64> {
        let t = &self.thetas;
        if !(theta >= t[0] && theta <= t[t.len() - 1]) {
            return None;
        }
        let j = t.partition_point(|&x| x < theta);
        if j == 0 || t[j] == theta {
            return Some(self.hull_values[j]);
        }
        let (t0, t1) = (t[j - 1], t[j]);
        let (v0, v1) = (self.hull_values[j - 1], self.hull_values[j]);
        Some(v0 + (v1 - v0) * (theta - t0) / (t1 - t0))
    }

    /// Replaces everything right of the hull's maximum by the maximum.
    ///
    /// A concave function on `[0, inf)` that is bounded below is
    /// nondecreasing, so when the true payoff is bounded below the decreasing
    /// right tail of a finite-domain hull is purely an edge effect.
    pub fn nondecreasing_closure(mut self, payoff: &GridFunction) -> Self {
        let (imax, vmax) = self
            .hull_values
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, v)| if v > acc.1 { (i, v) } else { acc });
        for v in &mut self.hull_values[imax..] {
            *v = vmax;
        }
        self.contact_mask = contact(&self.hull_values, payoff.values());
        // past the peak the flat hull only grazes the payoff within tolerance
        for c in &mut self.contact_mask[imax + 1..] {
            *c = false;
        }
        self
    }
}

fn contact(hull: &[f64], payoff: &[f64]) -> Vec<bool> {
    hull.iter()
        .zip(payoff)
        .map(|(&h, &g)| h - g <= CONTACT_TOLERANCE * g.abs().max(1.0))
        .collect()
}

/// Upper concave envelope of the points, evaluated back on the grid.
pub fn concave_majorant(gf: &GridFunction) -> Result<MajorantResult> {
    let (t, v) = (gf.thetas(), gf.values());
    if t.len() < 2 {
        return Err(Error::GridTooCoarse("need at least 2 points".into()));
    }
    // monotone chain, upper half
    let mut hull: Vec<usize> = Vec::with_capacity(64);
    for i in 0..t.len() {
        while hull.len() >= 2 {
            let (o, a) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            let cross = (t[a] - t[o]) * (v[i] - v[o]) - (v[a] - v[o]) * (t[i] - t[o]);
            if cross >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(i);
    }
    let mut hull_values = Vec::with_capacity(t.len());
    for seg in hull.windows(2) {
        let (a, b) = (seg[0], seg[1]);
        let slope = (v[b] - v[a]) / (t[b] - t[a]);
        hull_values.push(v[a]);
        for i in a + 1..b {
            hull_values.push(v[a] + slope * (t[i] - t[a]));
        }
    }
    hull_values.push(v[t.len() - 1]);
    let contact_mask = contact(&hull_values, v);
    Ok(MajorantResult {
        thetas: t.to_vec(),
        hull_values,
        contact_mask,
    })
}

/// Grid resolution for the oracles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Total number of points, including `theta = 0`.
    pub points: usize,
    /// Decades of price covered below the comparison window.
    pub decades: f64,
    /// Overrides the default right end of the grid.
    pub theta_max: Option<f64>,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            points: 100_000,
            decades: 8.0,
            theta_max: None,
        }
    }
}

impl GridSpec {
    pub fn with_points(points: usize) -> Self {
        Self {
            points,
            ..Self::default()
        }
    }

    /// `theta = 0` followed by prices log-spaced from `decades` below the
    /// window up to `theta_max^(1/beta)`. Anchoring the bottom to the window
    /// rather than to the top keeps the region of interest on the grid when
    /// a small `beta` stretches `theta_max^(1/beta)` over many decades.
    fn thetas(&self, theta_max: f64, window: f64, beta: f64) -> Result<Vec<f64>> {
        if self.points < 3 {
            return Err(Error::GridTooCoarse(format!(
                "need at least 3 grid points, got {}",
                self.points
            )));
        }
        if !(theta_max > 0.0) || !theta_max.is_finite() || !(window > 0.0 && window <= theta_max) {
            return Err(Error::Domain(format!("invalid grid end {theta_max} or window {window}")));
        }
        if !(self.decades > 0.0) {
            return Err(Error::invalid("decades", format!("must be > 0, got {}", self.decades)));
        }
        let n = self.points - 1;
        let ln_top = theta_max.ln() / beta;
        let span = ln_top - window.ln() / beta + self.decades * std::f64::consts::LN_10;
        let mut thetas = Vec::with_capacity(self.points);
        thetas.push(0.0);
        for i in 0..n {
            let ln_p = ln_top - span * (1.0 - i as f64 / (n - 1) as f64);
            thetas.push((beta * ln_p).exp());
        }
        thetas[n] = theta_max;
        Ok(thetas)
    }
}

/// A hull together with the grid it was built on, queried by price.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleCurve {
    pub beta: f64,
    pub payoff: GridFunction,
    pub majorant: MajorantResult,
    /// Largest scaled coordinate at which comparisons are meaningful.
    pub window: f64,
}

impl OracleCurve {
    pub fn value_at_price(&self, p: f64) -> Result<f64> {
        if !(p > 0.0) {
            return Err(Error::Domain(format!("price must be positive, got {p}")));
        }
        let theta = p.powf(self.beta);
        self.majorant.interpolate(theta).ok_or_else(|| {
            Error::GridTooCoarse(format!(
                "price {p} lies beyond the grid end {}",
                self.theta_max().powf(1.0 / self.beta)
            ))
        })
    }

    pub fn theta_max(&self) -> f64 {
        *self.payoff.thetas().last().expect("non-empty grid")
    }

    /// Largest price inside the comparison window.
    pub fn window_price(&self) -> f64 {
        self.window.powf(1.0 / self.beta)
    }

    /// Price at grid index `i`.
    pub fn price(&self, i: usize) -> f64 {
        let t = self.payoff.thetas()[i];
        if t == 0.0 {
            0.0
        } else {
            t.powf(1.0 / self.beta)
        }
    }
}

fn require_positive_beta(inputs: &ModelInputs) -> Result<f64> {
    let beta = inputs.beta();
    if !(beta > 0.0) {
        return Err(Error::Domain(format!("the oracle needs beta > 0, got {beta}")));
    }
    Ok(beta)
}

/// Hull of `U(gamma theta^(1/beta) - H)` for a position held against `reference`.
pub fn exit_oracle(reference: f64, inputs: &ModelInputs, spec: &GridSpec) -> Result<OracleCurve> {
    let beta = require_positive_beta(inputs)?;
    let gamma = inputs.costs.gamma();
    let exit = solve_c(&inputs.prefs, beta)?;
    let threshold = sale_threshold(exit.c(), reference, gamma);
    let theta_max = spec.theta_max.unwrap_or(100.0 * threshold.powf(beta));
    let window = (10.0 * threshold).powf(beta).min(theta_max);
    let thetas = spec.thetas(theta_max, window, beta)?;
    let values = thetas
        .iter()
        .map(|&t| {
            let p = if t == 0.0 { 0.0 } else { t.powf(1.0 / beta) };
            utility(gamma * p - reference, &inputs.prefs)
        })
        .collect();
    let payoff = GridFunction::new(thetas, values)?;
    let majorant = concave_majorant(&payoff)?;
    Ok(OracleCurve {
        beta,
        payoff,
        majorant,
        window,
    })
}

pub fn oracle_exit_value(
    p: f64,
    reference: f64,
    inputs: &ModelInputs,
    spec: &GridSpec,
) -> Result<f64> {
    exit_oracle(reference, inputs, spec)?.value_at_price(p)
}

/// Hull of the immediate-entry payoff `max{v1, U(-R)}` in scaled coordinates.
pub fn entry_oracle(solution: &EntrySolution, spec: &GridSpec) -> Result<OracleCurve> {
    let inputs = &solution.inputs;
    let beta = require_positive_beta(inputs)?;
    let fallback = (inputs.prefs.aspiration() + inputs.costs.psi()) / inputs.costs.gamma();
    let anchor = match solution.regime {
        EntryRegime::Interval { p2_star, .. } => p2_star,
        EntryRegime::OneSided { p1_star } if p1_star > 0.0 => p1_star,
        _ => fallback,
    };
    let theta_max = spec.theta_max.unwrap_or(1000.0 * anchor.powf(beta));
    let window = match solution.regime {
        EntryRegime::Interval { p2_star, .. } => 2.0 * p2_star.powf(beta),
        _ => 0.1 * theta_max,
    }
    .min(theta_max);
    let thetas = spec.thetas(theta_max, window, beta)?;
    let values = thetas.iter().map(|&t| solution.scaled_payoff_g2(t)).collect();
    let payoff = GridFunction::new(thetas, values)?;
    let majorant = concave_majorant(&payoff)?.nondecreasing_closure(&payoff);
    Ok(OracleCurve {
        beta,
        payoff,
        majorant,
        window,
    })
}

pub fn oracle_entry_value(p: f64, solution: &EntrySolution, spec: &GridSpec) -> Result<f64> {
    entry_oracle(solution, spec)?.value_at_price(p)
}

/// Purchase boundaries read off the contact set of the entry hull.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleBoundaries {
    pub p1: f64,
    /// Prices of the grid neighbours of `p1`.
    pub p1_cell: (f64, f64),
    /// Present only when the contact set is bounded above.
    pub p2: Option<f64>,
    pub p2_cell: Option<(f64, f64)>,
    pub contact_points: usize,
}

/// Infimum and (if bounded) supremum of the contact set, excluding the grid
/// ends and the flat part of the payoff. `None` when nothing is ever bought.
pub fn oracle_boundaries(
    solution: &EntrySolution,
    spec: &GridSpec,
) -> Result<Option<OracleBoundaries>> {
    let curve = entry_oracle(solution, spec)?;
    Ok(boundaries_from_curve(&curve, solution.inaction_utility()))
}

pub fn boundaries_from_curve(curve: &OracleCurve, floor: f64) -> Option<OracleBoundaries> {
    let n = curve.payoff.len();
    let values = curve.payoff.values();
    let touching: Vec<usize> = (1..n - 1)
        .filter(|&i| curve.majorant.contact_mask[i] && values[i] > floor)
        .collect();
    let (&first, &last) = (touching.first()?, touching.last()?);
    let cell = |i: usize| (curve.price(i - 1), curve.price(i + 1));
    let bounded = last < n - 2;
    Some(OracleBoundaries {
        p1: curve.price(first),
        p1_cell: cell(first),
        p2: bounded.then(|| curve.price(last)),
        p2_cell: bounded.then(|| cell(last)),
        contact_points: touching.len(),
    })
}

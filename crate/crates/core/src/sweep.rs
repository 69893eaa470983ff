//! Comparative statics: solve the model along a one-parameter grid, locate
//! regime changes and test the boundaries for monotonicity.

use std::io::{Read, Write};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::entry::{classify_regime, critical_xi, RegimeTag};
use crate::error::{Error, Result};
use crate::exit::solve_c;
use crate::model::{classify_wellposedness, ModelInputs};

/// Width below which a regime change is considered located.
pub const TRANSITION_TOLERANCE: f64 = 1e-6;
pub const MONOTONICITY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SweepParameter {
    #[serde(rename = "lambda")]
    Lambda,
    #[serde(rename = "gamma")]
    Gamma,
    #[serde(rename = "psi")]
    Psi,
    #[serde(rename = "R")]
    Aspiration,
}

impl SweepParameter {
    pub fn name(self) -> &'static str {
        match self {
            SweepParameter::Lambda => "lambda",
            SweepParameter::Gamma => "gamma",
            SweepParameter::Psi => "psi",
            SweepParameter::Aspiration => "R",
        }
    }

    pub fn apply(self, base: &ModelInputs, value: f64) -> Result<ModelInputs> {
        match self {
            SweepParameter::Lambda => base.with_lambda(value),
            SweepParameter::Gamma => base.with_gamma(value),
            SweepParameter::Psi => base.with_psi(value),
            SweepParameter::Aspiration => base.with_aspiration(value),
        }
    }

    pub fn current(self, inputs: &ModelInputs) -> f64 {
        match self {
            SweepParameter::Lambda => inputs.costs.lambda(),
            SweepParameter::Gamma => inputs.costs.gamma(),
            SweepParameter::Psi => inputs.costs.psi(),
            SweepParameter::Aspiration => inputs.prefs.aspiration(),
        }
    }
}

impl FromStr for SweepParameter {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lambda" => Ok(SweepParameter::Lambda),
            "gamma" => Ok(SweepParameter::Gamma),
            "psi" => Ok(SweepParameter::Psi),
            "R" | "r" => Ok(SweepParameter::Aspiration),
            other => Err(Error::invalid(
                "parameter",
                format!("expected one of lambda, gamma, psi, R; got `{other}`"),
            )),
        }
    }
}

impl std::fmt::Display for SweepParameter {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub parameter: SweepParameter,
    pub start: f64,
    pub end: f64,
    /// Number of grid points, endpoints included.
    pub steps: usize,
}

impl SweepSpec {
    pub fn values(&self) -> Vec<f64> {
        let n = self.steps;
        (0..n)
            .map(|i| {
                if i + 1 == n {
                    self.end
                } else {
                    self.start + (self.end - self.start) * i as f64 / (n - 1) as f64
                }
            })
            .collect()
    }
}

/// One grid point of a sweep. Absent fields are written as empty CSV cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub parameter: String,
    pub value: f64,
    pub regime: RegimeTag,
    pub p1_star: Option<f64>,
    pub p2_star: Option<f64>,
    pub no_trade_constant: Option<f64>,
    pub c: Option<f64>,
    pub critical_xi: Option<f64>,
}

/// Solves one scenario and summarizes it.
pub fn solve_record(inputs: &ModelInputs, parameter: SweepParameter) -> Result<SweepRecord> {
    let value = parameter.current(inputs);
    let name = parameter.name().to_string();
    if !classify_wellposedness(inputs).is_well_posed() {
        return Ok(SweepRecord {
            parameter: name,
            value,
            regime: RegimeTag::IllPosed,
            p1_star: None,
            p2_star: None,
            no_trade_constant: None,
            c: None,
            critical_xi: None,
        });
    }
    let exit = solve_c(&inputs.prefs, inputs.beta())?;
    let regime = classify_regime(inputs, &exit)?;
    Ok(SweepRecord {
        parameter: name,
        value,
        regime: regime.tag(),
        p1_star: regime.p1_star(),
        p2_star: regime.p2_star(),
        no_trade_constant: regime.no_trade_constant(),
        c: Some(exit.c()),
        critical_xi: Some(critical_xi(&exit)),
    })
}

/// A change of regime between two parameter values less than
/// [`TRANSITION_TOLERANCE`] apart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub parameter: String,
    pub lower: f64,
    pub upper: f64,
    pub regime_at_lower: RegimeTag,
    pub regime_at_upper: RegimeTag,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepOutput {
    pub records: Vec<SweepRecord>,
    pub transitions: Vec<Transition>,
}

fn regime_at(base: &ModelInputs, parameter: SweepParameter, value: f64) -> Result<RegimeTag> {
    Ok(solve_record(&parameter.apply(base, value)?, parameter)?.regime)
}

/// Runs the sweep. Grid points are solved in parallel; the records come back
/// in grid order.
pub fn run_sweep(base: &ModelInputs, spec: &SweepSpec) -> Result<SweepOutput> {
    if spec.steps < 2 {
        return Err(Error::invalid("steps", format!("need at least 2 points, got {}", spec.steps)));
    }
    if !(spec.start < spec.end) {
        return Err(Error::invalid(
            "range",
            format!("start {} must be below end {}", spec.start, spec.end),
        ));
    }
    let param = spec.parameter;
    param.apply(base, spec.start)?;
    param.apply(base, spec.end)?;

    let records = spec
        .values()
        .into_par_iter()
        .map(|v| solve_record(&param.apply(base, v)?, param))
        .collect::<Result<Vec<_>>>()?;

    let mut transitions = Vec::new();
    for w in records.windows(2) {
        if w[0].regime == w[1].regime {
            continue;
        }
        let (mut lo, mut hi) = (w[0].value, w[1].value);
        let left = w[0].regime;
        while hi - lo > TRANSITION_TOLERANCE {
            let mid = 0.5 * (lo + hi);
            if regime_at(base, param, mid)? == left {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        transitions.push(Transition {
            parameter: param.name().to_string(),
            lower: lo,
            upper: hi,
            regime_at_lower: regime_at(base, param, lo)?,
            regime_at_upper: regime_at(base, param, hi)?,
        });
    }
    Ok(SweepOutput {
        records,
        transitions,
    })
}

fn csv_error(e: csv::Error) -> Error {
    Error::Serialization(e.to_string())
}

pub fn write_records_csv<W: Write>(records: &[SweepRecord], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in records {
        w.serialize(r).map_err(csv_error)?;
    }
    w.flush().map_err(|e| Error::Serialization(e.to_string()))
}

pub fn read_records_csv<R: Read>(reader: R) -> Result<Vec<SweepRecord>> {
    csv::Reader::from_reader(reader)
        .deserialize()
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(csv_error)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    P1Star,
    P2Star,
}

impl Boundary {
    fn of(self, r: &SweepRecord) -> Option<f64> {
        match self {
            Boundary::P1Star => r.p1_star,
            Boundary::P2Star => r.p2_star,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Nonincreasing,
    Nondecreasing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityVerdict {
    pub parameter: String,
    pub boundary: Boundary,
    pub direction: Direction,
    pub holds: bool,
    pub max_violation: f64,
    /// Number of neighbouring pairs where the boundary was defined on both sides.
    pub pairs: usize,
}

pub fn check_monotonicity(
    records: &[SweepRecord],
    boundary: Boundary,
    direction: Direction,
) -> MonotonicityVerdict {
    let mut max_violation: f64 = 0.0;
    let mut pairs = 0;
    for w in records.windows(2) {
        let (Some(a), Some(b)) = (boundary.of(&w[0]), boundary.of(&w[1])) else {
            continue;
        };
        pairs += 1;
        let step = match direction {
            Direction::Nonincreasing => b - a,
            Direction::Nondecreasing => a - b,
        };
        max_violation = max_violation.max(step);
    }
    MonotonicityVerdict {
        parameter: records.first().map(|r| r.parameter.clone()).unwrap_or_default(),
        boundary,
        direction,
        holds: max_violation <= MONOTONICITY_TOLERANCE,
        max_violation,
        pairs,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtremumKind {
    Minimum,
    Maximum,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalExtremum {
    pub index: usize,
    pub value: f64,
    pub boundary_value: f64,
    pub kind: ExtremumKind,
}

/// Strict interior local extrema of a boundary along the sweep.
pub fn local_extrema(records: &[SweepRecord], boundary: Boundary) -> Vec<LocalExtremum> {
    let mut found = Vec::new();
    for i in 1..records.len().saturating_sub(1) {
        let (Some(a), Some(b), Some(c)) = (
            boundary.of(&records[i - 1]),
            boundary.of(&records[i]),
            boundary.of(&records[i + 1]),
        ) else {
            continue;
        };
        let kind = if b < a && b < c {
            ExtremumKind::Minimum
        } else if b > a && b > c {
            ExtremumKind::Maximum
        } else {
            continue;
        };
        found.push(LocalExtremum {
            index: i,
            value: records[i].value,
            boundary_value: b,
            kind,
        });
    }
    found
}

//! The purchase problem: the auxiliary function `f`, regime classification,
//! the purchase boundaries and the entry value function.
//!
//! In scaled coordinates the value of buying at `p` is
//! `(R + psi)^alpha f(x)` with `x = (gamma p / (R + psi))^beta`, where
//!
//! ```text
//! f(x) = [A x - k u^beta] / u^(beta - alpha),   u = xi x^(1/beta) + 1,
//! ```
//!
//! `A = (alpha/beta) c^(1-beta) (c-1)^(alpha-1)` and `xi = lambda / gamma`.
//! The shape of `f` (increasing concave, or hump-shaped with a negative tail)
//! decides whether the agent buys on a ray, on a band, or never.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exit::{sale_threshold, solve_c, ExitSolution};
use crate::model::{classify_wellposedness, utility, ModelInputs};
use crate::roots::{bisect, Spacing};
use crate::strategy::{BuyRule, TradingStrategy};

/// `ln(1 + e^t)` without overflow.
#[inline]
fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

/// `e^t / (1 + e^t)`.
#[inline]
fn logistic(t: f64) -> f64 {
    if t > 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// The auxiliary function `f` for fixed `(alpha, beta, k, xi, c)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuxiliaryF {
    alpha: f64,
    beta: f64,
    k: f64,
    xi: f64,
    /// `c^(1-beta) (c-1)^(alpha-1)`
    tangency: f64,
    /// `(alpha/beta) * tangency`
    chord: f64,
}

impl AuxiliaryF {
    pub fn new(exit: &ExitSolution, xi: f64) -> Self {
        Self {
            alpha: exit.alpha(),
            beta: exit.beta(),
            k: exit.k(),
            xi,
            tangency: exit.tangency_coefficient(),
            chord: exit.chord_coefficient(),
        }
    }

    pub fn from_inputs(inputs: &ModelInputs, exit: &ExitSolution) -> Self {
        Self::new(exit, inputs.costs.xi())
    }

    #[inline]
    pub fn xi(&self) -> f64 {
        self.xi
    }

    /// `t = ln(xi x^(1/beta))`, so that `u = 1 + e^t`.
    #[inline]
    fn log_w(&self, x: f64) -> f64 {
        self.xi.ln() + x.ln() / self.beta
    }

    pub fn value(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return -self.k;
        }
        let (a, b) = (self.alpha, self.beta);
        let ln_u = softplus(self.log_w(x));
        (x.ln() + (a - b) * ln_u).exp() * self.chord - self.k * (a * ln_u).exp()
    }

    pub fn derivative(&self, x: f64) -> Result<f64> {
        if !(x > 0.0) {
            return Err(Error::Domain(format!(
                "closed-form f' needs x > 0, got {x} (the limit at 0+ is A)"
            )));
        }
        let (a, b) = (self.alpha, self.beta);
        let t = self.log_w(x);
        let ln_u = softplus(t);
        let r = logistic(t); // w / u
        let inv_u = (-ln_u).exp();
        let rise = self.tangency * (inv_u + a / b * r) * ((a - b) * ln_u).exp();
        let fall = self.k * r * (a * ln_u - x.ln()).exp();
        Ok(a / b * (rise - fall))
    }

    pub fn second_derivative(&self, x: f64) -> Result<f64> {
        if !(x > 0.0) {
            return Err(Error::Domain(format!("closed-form f'' needs x > 0, got {x}")));
        }
        let (a, b) = (self.alpha, self.beta);
        let t = self.log_w(x);
        let ln_u = softplus(t);
        let r = logistic(t);
        let inv_u = (-ln_u).exp();
        let rise = self.tangency / b
            * ((a - b) * ln_u).exp()
            * (a / b + (a - b - 1.0) * (inv_u + a / b * r));
        let fall = self.k * (a * ln_u - x.ln()).exp() * ((1.0 / b - 1.0) + (a - 1.0) * r / b);
        Ok(a / b * r / x * (rise - fall))
    }

    /// `h1(z) = K (z + xi alpha/beta) - k xi (z + xi)^beta`; `f'(x)` has the
    /// sign of `h1(x^(-1/beta))`.
    pub fn h1(&self, z: f64) -> f64 {
        let (a, b, xi) = (self.alpha, self.beta, self.xi);
        self.tangency * (z + xi * a / b) - self.k * xi * (z + xi).powf(b)
    }

    /// `f''(x)` has the sign of `h2(x^(-1/beta))`.
    pub fn h2(&self, z: f64) -> f64 {
        let (a, b, xi) = (self.alpha, self.beta, self.xi);
        self.tangency * (-(xi * a / (b * b)) * (b - a) + (a / b - b + a - 1.0) * z / b)
            - self.k * (xi + z).powf(b) * (-xi * (1.0 - a / b) + (1.0 / b - 1.0) * z)
    }
}

/// Free-function form of [`AuxiliaryF::value`].
pub fn f_value(x: f64, exit: &ExitSolution, xi: f64) -> f64 {
    AuxiliaryF::new(exit, xi).value(x)
}

pub fn f_derivative(x: f64, exit: &ExitSolution, xi: f64) -> Result<f64> {
    AuxiliaryF::new(exit, xi).derivative(x)
}

pub fn f_second_derivative(x: f64, exit: &ExitSolution, xi: f64) -> Result<f64> {
    AuxiliaryF::new(exit, xi).second_derivative(x)
}

/// Sign of `lim f(x)` as `x -> inf`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LimitSign {
    Positive,
    Zero,
    Negative,
}

/// Qualitative shape of `f`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FProfile {
    pub xi: f64,
    pub critical_xi: f64,
    pub limit_sign: LimitSign,
    pub x2_star: Option<f64>,
    /// Infinite when `alpha = beta`: `f` is then concave on the whole half-line.
    pub x_tilde: Option<f64>,
}

impl FProfile {
    pub fn new(inputs: &ModelInputs, exit: &ExitSolution) -> Result<Self> {
        let xi = inputs.costs.xi();
        let critical = critical_xi(exit);
        let limit_sign = if xi < critical {
            LimitSign::Positive
        } else if xi == critical {
            LimitSign::Zero
        } else {
            LimitSign::Negative
        };
        let (x2_star, x_tilde) = if xi > critical && has_maximizer(exit, xi) {
            (Some(solve_x2(inputs, exit)?), Some(solve_x_tilde(inputs, exit)?))
        } else {
            (None, None)
        };
        Ok(Self {
            xi,
            critical_xi: critical,
            limit_sign,
            x2_star,
            x_tilde,
        })
    }
}

/// `[alpha/(beta k) c^(1-beta) (c-1)^(alpha-1)]^(1/beta)`: the cost ratio above
/// which `f` eventually turns negative.
pub fn critical_xi(exit: &ExitSolution) -> f64 {
    (exit.chord_coefficient() / exit.k()).powf(1.0 / exit.beta())
}

/// For `beta = 1`, `f` is increasing for every `x` once `xi >= (c-1)^(alpha-1)/k`.
fn has_maximizer(exit: &ExitSolution, xi: f64) -> bool {
    exit.beta() < 1.0 || xi < exit.tangency_coefficient() / exit.k()
}

fn require_supercritical(inputs: &ModelInputs, exit: &ExitSolution) -> Result<AuxiliaryF> {
    let aux = AuxiliaryF::from_inputs(inputs, exit);
    let critical = critical_xi(exit);
    if !(aux.xi > critical) {
        return Err(Error::Regime(format!(
            "f has no interior maximum: xi = {} <= critical xi = {critical}",
            aux.xi
        )));
    }
    if !has_maximizer(exit, aux.xi) {
        return Err(Error::Regime(format!(
            "f is decreasing everywhere: xi = {} >= (c-1)^(alpha-1)/k at beta = 1",
            aux.xi
        )));
    }
    Ok(aux)
}

/// Beyond this `y = ln z` the scaled point `x = z^(-beta)` underflows.
const LOG_Z_CAP: f64 = 1600.0;

/// Root in `y = ln z` of a sign function whose sign as `z -> 0` is that of
/// `at_zero` and which flips exactly once. `None` when the flip lies beyond
/// [`LOG_Z_CAP`].
fn root_in_log_z<F: Fn(f64) -> f64>(g: F, at_zero: f64, what: &str) -> Result<Option<f64>> {
    let same = |y: f64| g(y).signum() == at_zero.signum();
    let (mut lo, mut hi) = (0.0, 0.0);
    if same(0.0) {
        hi = 1.0;
        while same(hi) {
            if hi >= LOG_Z_CAP {
                return Ok(None);
            }
            lo = hi;
            hi = (2.0 * hi).min(LOG_Z_CAP);
        }
    } else {
        lo = -1.0;
        while !same(lo) {
            hi = lo;
            lo *= 2.0;
            if lo < -LOG_Z_CAP {
                return Err(Error::Numerical(format!("cannot bracket {what}")));
            }
        }
    }
    Ok(Some(bisect(g, lo, hi, Spacing::Arithmetic)?))
}

/// `ln(e^a + e^b)`.
#[inline]
fn log_add_exp(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    m + softplus(a.min(b) - m)
}

impl AuxiliaryF {
    /// Has the sign of `h1(e^y)`; scaled by `1/z` for `z > 1` so that it
    /// stays finite however large `z` gets.
    fn h1_sign(&self, y: f64) -> f64 {
        if y <= 0.0 {
            return self.h1(y.exp());
        }
        let (a, b, xi) = (self.alpha, self.beta, self.xi);
        let ln_zx = log_add_exp(y, xi.ln());
        self.tangency * (1.0 + xi * a / b * (-y).exp()) - self.k * xi * (b * ln_zx - y).exp()
    }

    /// Has the sign of `h2(e^y)`; scaled by `1/(z (xi + z)^beta)` for `z > 1`.
    fn h2_sign(&self, y: f64) -> f64 {
        if y <= 0.0 {
            return self.h2(y.exp());
        }
        let (a, b, xi) = (self.alpha, self.beta, self.xi);
        let inv_z = (-y).exp();
        let ln_zx = log_add_exp(y, xi.ln());
        self.tangency
            * (-(xi * a / (b * b)) * (b - a) * inv_z + (a / b - b + a - 1.0) / b)
            * (-b * ln_zx).exp()
            - self.k * (-xi * (1.0 - a / b) * inv_z + (1.0 / b - 1.0))
    }
}

/// Maximizer of `f`: the down-crossing of `f'`, found as the root of `h1` in
/// `z = x^(-1/beta)`. Close to `beta = 1` the maximizer can sit below the
/// smallest positive double, in which case `0` is returned.
pub fn solve_x2(inputs: &ModelInputs, exit: &ExitSolution) -> Result<f64> {
    let aux = require_supercritical(inputs, exit)?;
    Ok(match root_in_log_z(|y| aux.h1_sign(y), aux.h1(0.0), "the maximizer of f")? {
        Some(y) => (-exit.beta() * y).exp(),
        None => 0.0,
    })
}

/// Inflexion point of `f`. Returns `+inf` when `alpha = beta`, where `f`
/// is concave everywhere.
pub fn solve_x_tilde(inputs: &ModelInputs, exit: &ExitSolution) -> Result<f64> {
    let aux = require_supercritical(inputs, exit)?;
    let at_zero = aux.h2(0.0);
    if at_zero <= 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(match root_in_log_z(|y| aux.h2_sign(y), at_zero, "the inflexion point of f")? {
        Some(y) => (-exit.beta() * y).exp(),
        None => 0.0,
    })
}

/// Closed-form maximizer of `f` at `beta = 1`.
pub fn x2_unit_beta(alpha: f64, k: f64, xi: f64, c: f64) -> f64 {
    let m = (c - 1.0).powf(alpha - 1.0);
    (m - k * xi) / (xi * (k * xi - alpha * m))
}

/// Closed-form inflexion point of `f` at `beta = 1`.
pub fn x_tilde_unit_beta(alpha: f64, k: f64, xi: f64, c: f64) -> f64 {
    let m = (c - 1.0).powf(alpha - 1.0);
    (2.0 * m - k * xi) / (xi * (k * xi - alpha * m))
}

/// `C = (-k / f(x2*))^(1/alpha) - 1`; no purchase ever happens once `psi >= C R`.
pub fn no_trade_constant(inputs: &ModelInputs, exit: &ExitSolution) -> Result<f64> {
    let x2 = solve_x2(inputs, exit)?;
    Ok(constant_from_x2(exit, inputs.costs.xi(), x2))
}

/// Evaluated as `expm1(-ln(-f/k) / alpha)` with
/// `-f/k = u^alpha (1 - (A/k) x u^(-beta))`, which keeps `C > 0` even when
/// `x2` is tiny and `f(x2)` rounds to `-k`.
fn constant_from_x2(exit: &ExitSolution, xi: f64, x2: f64) -> f64 {
    if x2 == 0.0 {
        return 0.0;
    }
    let (a, b) = (exit.alpha(), exit.beta());
    let ln_u = softplus(xi.ln() + x2.ln() / b);
    let gain = exit.chord_coefficient() / exit.k() * (x2.ln() - b * ln_u).exp();
    (-(a * ln_u + (-gain).ln_1p()) / a).exp_m1()
}

const SCAN_FLOOR: f64 = 1e-12;
const SCAN_PER_DECADE: usize = 40;

/// Smallest `x` where `(1 + psi/R)^alpha [x f'(x) - f(x)]` falls through `k`:
/// the tangency point of the chord from `(0, -k R^alpha)`.
pub fn solve_x1(inputs: &ModelInputs, exit: &ExitSolution) -> Result<f64> {
    let psi = inputs.costs.psi();
    if psi == 0.0 {
        return Ok(0.0);
    }
    let aux = AuxiliaryF::from_inputs(inputs, exit);
    let x2 = if aux.xi > critical_xi(exit) {
        Some(solve_x2(inputs, exit)?)
    } else {
        None
    };
    solve_x1_with(inputs, exit, &aux, x2)
}

fn solve_x1_with(
    inputs: &ModelInputs,
    exit: &ExitSolution,
    aux: &AuxiliaryF,
    x2: Option<f64>,
) -> Result<f64> {
    let (alpha, k) = (exit.alpha(), exit.k());
    let psi = inputs.costs.psi();
    if psi == 0.0 {
        return Ok(0.0);
    }
    let lift = (1.0 + psi / inputs.prefs.aspiration()).powf(alpha);
    let g = |x: f64| {
        if x <= 0.0 {
            return (lift - 1.0) * k;
        }
        let slope = aux.derivative(x).unwrap_or(f64::NAN);
        lift * (x * slope - aux.value(x)) - k
    };

    let nominal_top = 1e6 * x2.unwrap_or(1.0).max(1.0);
    let step = 10f64.powf(1.0 / SCAN_PER_DECADE as f64);
    let mut prev = SCAN_FLOOR;
    if g(prev) <= 0.0 {
        return bisect(g, 0.0, prev, Spacing::Arithmetic);
    }
    loop {
        let next = prev * step;
        let g_next = g(next);
        if g_next.is_nan() {
            return Err(Error::Numerical(format!("tangency condition is NaN at x = {next}")));
        }
        if g_next <= 0.0 {
            return bisect(g, prev, next, Spacing::Geometric);
        }
        // keep looking past the nominal range before giving up
        if next > nominal_top && next > 1e200 {
            return Err(Error::Numerical(format!(
                "no down-crossing of the tangency condition on [{SCAN_FLOOR}, {next}]"
            )));
        }
        prev = next;
    }
}

/// Which qualitative purchase rule is optimal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegimeTag {
    OneSided,
    Interval,
    NoTrade,
    IllPosed,
}

impl RegimeTag {
    pub fn as_str(self) -> &'static str {
        match self {
            RegimeTag::OneSided => "one_sided",
            RegimeTag::Interval => "interval",
            RegimeTag::NoTrade => "no_trade",
            RegimeTag::IllPosed => "ill_posed",
        }
    }
}

impl std::fmt::Display for RegimeTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for RegimeTag {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "one_sided" => Ok(RegimeTag::OneSided),
            "interval" => Ok(RegimeTag::Interval),
            "no_trade" => Ok(RegimeTag::NoTrade),
            "ill_posed" => Ok(RegimeTag::IllPosed),
            other => Err(Error::Domain(format!("unknown regime tag `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "regime", rename_all = "snake_case")]
pub enum EntryRegime {
    /// Buy as soon as the price is at or above `p1_star`.
    OneSided { p1_star: f64 },
    /// Buy while the price lies in `[p1_star, p2_star]`.
    Interval {
        p1_star: f64,
        p2_star: f64,
        no_trade_constant: f64,
    },
    /// Never buy. The constant is absent when `beta = 1` and `f` is
    /// decreasing everywhere.
    NoTrade { no_trade_constant: Option<f64> },
    IllPosed,
}

impl EntryRegime {
    pub fn tag(&self) -> RegimeTag {
        match self {
            EntryRegime::OneSided { .. } => RegimeTag::OneSided,
            EntryRegime::Interval { .. } => RegimeTag::Interval,
            EntryRegime::NoTrade { .. } => RegimeTag::NoTrade,
            EntryRegime::IllPosed => RegimeTag::IllPosed,
        }
    }

    pub fn p1_star(&self) -> Option<f64> {
        match *self {
            EntryRegime::OneSided { p1_star } | EntryRegime::Interval { p1_star, .. } => {
                Some(p1_star)
            }
            _ => None,
        }
    }

    pub fn p2_star(&self) -> Option<f64> {
        match *self {
            EntryRegime::Interval { p2_star, .. } => Some(p2_star),
            _ => None,
        }
    }

    pub fn no_trade_constant(&self) -> Option<f64> {
        match *self {
            EntryRegime::Interval {
                no_trade_constant, ..
            } => Some(no_trade_constant),
            EntryRegime::NoTrade { no_trade_constant } => no_trade_constant,
            _ => None,
        }
    }
}

/// Maps a scaled boundary back to a price: `(R + psi) x^(1/beta) / gamma`.
pub fn boundary_price(x: f64, inputs: &ModelInputs) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let scale = inputs.prefs.aspiration() + inputs.costs.psi();
    scale * x.powf(1.0 / inputs.beta()) / inputs.costs.gamma()
}

struct Classified {
    regime: EntryRegime,
    profile: FProfile,
    x1: Option<f64>,
}

fn classify_full(inputs: &ModelInputs, exit: &ExitSolution) -> Result<Classified> {
    let aux = AuxiliaryF::from_inputs(inputs, exit);
    let profile = FProfile::new(inputs, exit)?;
    let xi = aux.xi;
    if xi <= profile.critical_xi {
        let x1 = solve_x1_with(inputs, exit, &aux, None)?;
        return Ok(Classified {
            regime: EntryRegime::OneSided {
                p1_star: boundary_price(x1, inputs),
            },
            profile,
            x1: Some(x1),
        });
    }
    let Some(x2) = profile.x2_star else {
        return Ok(Classified {
            regime: EntryRegime::NoTrade {
                no_trade_constant: None,
            },
            profile,
            x1: None,
        });
    };
    let constant = constant_from_x2(exit, xi, x2);
    if inputs.costs.psi() >= constant * inputs.prefs.aspiration() {
        return Ok(Classified {
            regime: EntryRegime::NoTrade {
                no_trade_constant: Some(constant),
            },
            profile,
            x1: None,
        });
    }
    let x1 = solve_x1_with(inputs, exit, &aux, Some(x2))?;
    if !(x1 < x2) {
        return Err(Error::Numerical(format!(
            "lower scaled boundary {x1} is not below the upper one {x2}"
        )));
    }
    Ok(Classified {
        regime: EntryRegime::Interval {
            p1_star: boundary_price(x1, inputs),
            p2_star: boundary_price(x2, inputs),
            no_trade_constant: constant,
        },
        profile,
        x1: Some(x1),
    })
}

/// Classifies the entry problem and fills in the purchase boundaries.
pub fn classify_regime(inputs: &ModelInputs, exit: &ExitSolution) -> Result<EntryRegime> {
    if !classify_wellposedness(inputs).is_well_posed() {
        return Ok(EntryRegime::IllPosed);
    }
    Ok(classify_full(inputs, exit)?.regime)
}

/// Like [`classify_regime`] but solves for `c` itself.
pub fn classify(inputs: &ModelInputs) -> Result<EntryRegime> {
    if !classify_wellposedness(inputs).is_well_posed() {
        return Ok(EntryRegime::IllPosed);
    }
    let exit = solve_c(&inputs.prefs, inputs.beta())?;
    classify_regime(inputs, &exit)
}

/// A solved instance of the full entry-and-exit problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntrySolution {
    pub regime: EntryRegime,
    pub exit: ExitSolution,
    pub inputs: ModelInputs,
    pub profile: FProfile,
    /// Scaled lower boundary, when the regime has one.
    pub x1_star: Option<f64>,
}

impl EntrySolution {
    /// Solves the exit and entry problems. Ill-posed inputs are an error here;
    /// use [`classify`] to obtain the tag instead.
    pub fn solve(inputs: &ModelInputs) -> Result<Self> {
        let exit = solve_c(&inputs.prefs, inputs.beta())?;
        Self::with_exit(inputs, exit)
    }

    /// Solves the entry problem around a given (possibly perturbed) exit rule.
    pub fn with_exit(inputs: &ModelInputs, exit: ExitSolution) -> Result<Self> {
        if !classify_wellposedness(inputs).is_well_posed() {
            return Err(Error::IllPosed {
                alpha: inputs.prefs.alpha(),
                beta: inputs.beta(),
            });
        }
        let Classified {
            regime,
            profile,
            x1,
        } = classify_full(inputs, &exit)?;
        Ok(Self {
            regime,
            exit,
            inputs: *inputs,
            profile,
            x1_star: x1,
        })
    }

    #[inline]
    pub fn tag(&self) -> RegimeTag {
        self.regime.tag()
    }

    #[inline]
    pub fn inaction_utility(&self) -> f64 {
        self.inputs.prefs.inaction_utility()
    }

    /// Value of buying at `p` and then selling optimally:
    /// `A H^(alpha-beta) (gamma p)^beta - k H^alpha` with `H = lambda p + psi + R`.
    pub fn v1(&self, p: f64) -> f64 {
        let (alpha, beta, k) = (self.exit.alpha(), self.exit.beta(), self.exit.k());
        let h = self.inputs.reference_point(p);
        let gp = self.inputs.costs.gamma() * p;
        let a = self.exit.chord_coefficient();
        if p <= 0.0 {
            return -k * h.powf(alpha);
        }
        if h > 1e100 {
            let ln_h = h.ln();
            return a * ((alpha - beta) * ln_h + beta * gp.ln()).exp() - k * (alpha * ln_h).exp();
        }
        a * h.powf(alpha - beta) * gp.powf(beta) - k * h.powf(alpha)
    }

    /// Immediate-entry payoff `max{v1(p), U(-R)}`.
    pub fn g2_price(&self, p: f64) -> f64 {
        self.v1(p).max(self.inaction_utility())
    }

    /// Immediate-entry payoff in scaled coordinates `theta = p^beta`:
    /// `max{(R + psi)^alpha f((gamma/(R + psi))^beta theta), -k R^alpha}`.
    pub fn scaled_payoff_g2(&self, theta: f64) -> f64 {
        let alpha = self.exit.alpha();
        let beta = self.exit.beta();
        let base = self.inputs.prefs.aspiration() + self.inputs.costs.psi();
        let x = (self.inputs.costs.gamma() / base).powf(beta) * theta;
        let aux = AuxiliaryF::from_inputs(&self.inputs, &self.exit);
        (base.powf(alpha) * aux.value(x)).max(self.inaction_utility())
    }

    /// The entry value function.
    pub fn entry_value(&self, p: f64) -> f64 {
        let beta = self.exit.beta();
        let floor = self.inaction_utility();
        match self.regime {
            EntryRegime::NoTrade { .. } | EntryRegime::IllPosed => floor,
            EntryRegime::OneSided { p1_star } | EntryRegime::Interval { p1_star, .. }
                if p < p1_star =>
            {
                (self.v1(p1_star) - floor) * (p / p1_star).powf(beta) + floor
            }
            EntryRegime::Interval { p2_star, .. } if p > p2_star => self.v1(p2_star),
            _ => self.v1(p),
        }
    }

    pub fn in_purchase_region(&self, p: f64) -> bool {
        match self.regime {
            EntryRegime::OneSided { p1_star } => p >= p1_star,
            EntryRegime::Interval {
                p1_star, p2_star, ..
            } => p >= p1_star && p <= p2_star,
            _ => false,
        }
    }

    /// Threshold rule that attains [`Self::entry_value`] from price `p`.
    pub fn optimal_strategy(&self, p: f64) -> TradingStrategy {
        let buy = match self.regime {
            EntryRegime::NoTrade { .. } | EntryRegime::IllPosed => BuyRule::Never,
            EntryRegime::OneSided { p1_star } | EntryRegime::Interval { p1_star, .. }
                if p < p1_star =>
            {
                BuyRule::AtUpcross(p1_star)
            }
            EntryRegime::Interval { p2_star, .. } if p > p2_star => BuyRule::AtDowncross(p2_star),
            _ => BuyRule::Immediate,
        };
        TradingStrategy {
            buy,
            sale_multiple: self.exit.c(),
        }
    }

    /// Price at which a position bought at `buy_price` is sold.
    pub fn sale_price(&self, buy_price: f64) -> f64 {
        sale_threshold(
            self.exit.c(),
            self.inputs.reference_point(buy_price),
            self.inputs.costs.gamma(),
        )
    }

    /// `U(-R)`, as a convenience for reporting.
    pub fn walk_away_utility(&self) -> f64 {
        utility(-self.inputs.prefs.aspiration(), &self.inputs.prefs)
    }
}

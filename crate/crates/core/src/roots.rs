//! Bracketing root finders.

use crate::error::{Error, Result};

/// How the midpoint of a bracket is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Spacing {
    Arithmetic,
    /// Geometric midpoint while the bracket spans more than a factor of four.
    /// Needs `lo > 0`.
    Geometric,
}

/// Bisects `f` on `[lo, hi]` until the bracket collapses to adjacent floats.
///
/// `f(lo)` and `f(hi)` must have opposite signs (a zero at either end is
/// accepted). Returns whichever final endpoint has the smaller `|f|`.
pub(crate) fn bisect<F>(f: F, mut lo: f64, mut hi: f64, spacing: Spacing) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if !(lo < hi) {
        return Err(Error::Numerical(format!("empty bracket [{lo}, {hi}]")));
    }
    let mut f_lo = f(lo);
    let mut f_hi = f(hi);
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    // an infinite end value still carries a usable sign
    if f_lo.is_nan() || f_hi.is_nan() {
        return Err(Error::Numerical(format!(
            "NaN at bracket ends [{lo}, {hi}]"
        )));
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::Numerical(format!(
            "no sign change on [{lo}, {hi}]: f = ({f_lo}, {f_hi})"
        )));
    }
    for _ in 0..4096 {
        let mid = match spacing {
            Spacing::Geometric if lo > 0.0 && hi > 4.0 * lo => (lo.ln() * 0.5 + hi.ln() * 0.5).exp(),
            _ => lo + 0.5 * (hi - lo),
        };
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if f_mid.is_nan() {
            return Err(Error::Numerical(format!("NaN at {mid}")));
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
            f_hi = f_mid;
        }
    }
    Ok(if f_lo.abs() <= f_hi.abs() { lo } else { hi })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_square_root() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, Spacing::Arithmetic).unwrap();
        assert!((r - 2f64.sqrt()).abs() <= 4.0 * f64::EPSILON);
    }

    #[test]
    fn geometric_spacing_handles_many_decades() {
        let r = bisect(|x| x.ln() + 40.0, 1e-300, 1e300, Spacing::Geometric).unwrap();
        assert!((r / (-40f64).exp() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn rejects_brackets_without_sign_change() {
        assert!(bisect(|x| x * x + 1.0, -1.0, 1.0, Spacing::Arithmetic).is_err());
        assert!(bisect(|x| x, 1.0, 1.0, Spacing::Arithmetic).is_err());
    }

    #[test]
    fn infinite_end_value_is_a_valid_sign() {
        let r = bisect(|x| 1.0 / x - 2.0, 0.0, 1.0, Spacing::Arithmetic).unwrap();
        assert!((r - 0.5).abs() < 1e-15);
    }
}

//! Bracketed bisection for the increasing scalar demand equations.

use crate::error::{Error, Result};

/// Relative tolerance on θ at which bisection stops.
pub const THETA_REL_TOL: f64 = 1e-12;

/// Maximum number of times the upper end of an open bracket is doubled.
pub const MAX_DOUBLINGS: usize = 60;

/// Initial upper end of an open bracket.
pub const INITIAL_UPPER: f64 = 4.0;

/// Solves `f(x) = target` for increasing `f` on `[lo, hi]` with
/// `f(lo) < target <= f(hi)`.
pub fn bisect(f: impl Fn(f64) -> f64, target: f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        if hi - lo <= THETA_REL_TOL * hi.abs().max(1.0) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let v = f(mid);
        if v < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Where the root of a candidate equation lies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Domain {
    /// `(lo, hi]`.
    Bounded(f64, f64),
    /// `(lo, ∞)`, searched by doubling the upper end.
    Unbounded(f64),
}

/// Finds the root of `f(x) = target` inside `domain`, or `None` if `f` does
/// not cross `target` there. Errors only when an unbounded search hits the
/// doubling cap.
pub fn solve_increasing(
    f: impl Fn(f64) -> f64,
    target: f64,
    domain: Domain,
    what: &str,
) -> Result<Option<f64>> {
    match domain {
        Domain::Bounded(lo, hi) => {
            if !(lo < hi) || f(lo) >= target || f(hi) < target {
                return Ok(None);
            }
            Ok(Some(bisect(&f, target, lo, hi)))
        }
        Domain::Unbounded(lo) => {
            if f(lo) >= target {
                return Ok(None);
            }
            let mut hi = INITIAL_UPPER.max(2.0 * lo);
            for _ in 0..MAX_DOUBLINGS {
                let v = f(hi);
                if v.is_nan() {
                    break;
                }
                if v >= target {
                    let lo = if hi > 2.0 * lo && f(0.5 * hi) < target { 0.5 * hi } else { lo };
                    return Ok(Some(bisect(&f, target, lo, hi)));
                }
                hi *= 2.0;
            }
            Err(Error::RootNotBracketed(format!(
                "{what}: target {target} not reached below {hi}"
            )))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisection_hits_tolerance() {
        let x = bisect(|x| x * x, 2.0, 1.0, 2.0);
        assert!((x - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn bounded_domain_reports_absence() {
        let f = |x: f64| x;
        assert_eq!(solve_increasing(f, 5.0, Domain::Bounded(1.0, 3.0), "t").unwrap(), None);
        assert_eq!(solve_increasing(f, 0.5, Domain::Bounded(1.0, 3.0), "t").unwrap(), None);
        let r = solve_increasing(f, 3.0, Domain::Bounded(1.0, 3.0), "t").unwrap().unwrap();
        assert!((r - 3.0).abs() < 1e-11);
    }

    #[test]
    fn unbounded_doubles_then_caps() {
        let r = solve_increasing(|x| x.ln(), 20.0, Domain::Unbounded(1.0), "t").unwrap().unwrap();
        assert!((r / 20f64.exp() - 1.0).abs() < 1e-11);
        let err = solve_increasing(|x| 1.0 - 1.0 / x, 2.0, Domain::Unbounded(1.0), "t").unwrap_err();
        assert!(matches!(err, Error::RootNotBracketed(_)));
        assert_eq!(solve_increasing(|x| x, 0.5, Domain::Unbounded(1.0), "t").unwrap(), None);
    }
}

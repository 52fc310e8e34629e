//! Breakpointed analytic time functions.
//!
//! Every equilibrium profile is a sequence of constant, linear or hyperbolic
//! pieces. Keeping them analytic lets the solver hand out exact values,
//! derivatives and integrals, and leaves sampling to output time.

use crate::error::{Error, Result};

/// One piece of a profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Segment {
    Constant(f64),
    /// `start` is the value at the left breakpoint of the piece.
    Linear { start: f64, slope: f64 },
    /// `a + b/u + c/u² + d·u` with `u = 1 + rate·(t − origin)`.
    ///
    /// Car accumulation during a rush is `n_j'(1 − 1/u)`; every other rush
    /// quantity is a combination of the same four terms.
    Hyperbolic {
        origin: f64,
        rate: f64,
        a: f64,
        b: f64,
        c: f64,
        d: f64,
    },
}

impl Segment {
    pub const ZERO: Segment = Segment::Constant(0.0);

    /// Value at `t` for a piece whose left breakpoint is `left`.
    pub fn value(&self, left: f64, t: f64) -> f64 {
        match *self {
            Segment::Constant(v) => v,
            Segment::Linear { start, slope } => start + slope * (t - left),
            Segment::Hyperbolic { origin, rate, a, b, c, d } => {
                let u = 1.0 + rate * (t - origin);
                a + b / u + c / (u * u) + d * u
            }
        }
    }

    pub fn derivative(&self, _left: f64, t: f64) -> f64 {
        match *self {
            Segment::Constant(_) => 0.0,
            Segment::Linear { slope, .. } => slope,
            Segment::Hyperbolic { origin, rate, b, c, d, .. } => {
                let u = 1.0 + rate * (t - origin);
                rate * (-b / (u * u) - 2.0 * c / (u * u * u) + d)
            }
        }
    }

    /// Exact integral over `[x, y]`.
    pub fn integral(&self, left: f64, x: f64, y: f64) -> f64 {
        match *self {
            Segment::Constant(v) => v * (y - x),
            Segment::Linear { .. } => 0.5 * (self.value(left, x) + self.value(left, y)) * (y - x),
            Segment::Hyperbolic { origin, rate, a, b, c, d } => {
                if rate == 0.0 {
                    return (a + b + c + d) * (y - x);
                }
                let antider = |t: f64| {
                    let u = 1.0 + rate * (t - origin);
                    a * u + b * u.ln() - c / u + 0.5 * d * u * u
                };
                (antider(y) - antider(x)) / rate
            }
        }
    }

    /// The same piece multiplied by `k`.
    pub fn scaled(&self, k: f64) -> Segment {
        match *self {
            Segment::Constant(v) => Segment::Constant(k * v),
            Segment::Linear { start, slope } => Segment::Linear { start: k * start, slope: k * slope },
            Segment::Hyperbolic { origin, rate, a, b, c, d } => Segment::Hyperbolic {
                origin,
                rate,
                a: k * a,
                b: k * b,
                c: k * c,
                d: k * d,
            },
        }
    }
}

/// A right-continuous piecewise function of time.
///
/// Piece `i` covers `[breakpoints[i], breakpoints[i+1])`; outside the
/// support the profile takes the constant `outside`.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseProfile {
    breakpoints: Vec<f64>,
    segments: Vec<Segment>,
    outside: f64,
}

impl PiecewiseProfile {
    pub fn new(breakpoints: Vec<f64>, segments: Vec<Segment>, outside: f64) -> Result<Self> {
        if segments.is_empty() {
            if !breakpoints.is_empty() {
                return Err(Error::Contract("breakpoints given without segments".into()));
            }
        } else if breakpoints.len() != segments.len() + 1 {
            return Err(Error::Contract(format!(
                "{} segments need {} breakpoints, got {}",
                segments.len(),
                segments.len() + 1,
                breakpoints.len()
            )));
        }
        if breakpoints.iter().any(|t| !t.is_finite()) {
            return Err(Error::Contract("non-finite breakpoint".into()));
        }
        if let Some(w) = breakpoints.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::Contract(format!(
                "breakpoints must be strictly increasing, got {} then {}",
                w[0], w[1]
            )));
        }
        Ok(PiecewiseProfile { breakpoints, segments, outside })
    }

    /// A profile equal to `value` everywhere.
    pub fn constant(value: f64) -> Self {
        PiecewiseProfile { breakpoints: Vec::new(), segments: Vec::new(), outside: value }
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn outside(&self) -> f64 {
        self.outside
    }

    /// First and last breakpoint, if any.
    pub fn support(&self) -> Option<(f64, f64)> {
        Some((*self.breakpoints.first()?, *self.breakpoints.last()?))
    }

    /// Index of the piece containing `t` (right-continuous convention).
    fn piece_at(&self, t: f64) -> Option<usize> {
        let (lo, hi) = self.support()?;
        if t < lo || t >= hi {
            return None;
        }
        Some(self.breakpoints.partition_point(|&b| b <= t) - 1)
    }

    /// Index of the piece whose closure contains `t` from the left.
    fn piece_left_of(&self, t: f64) -> Option<usize> {
        let (lo, hi) = self.support()?;
        if t <= lo || t > hi {
            return None;
        }
        Some(self.breakpoints.partition_point(|&b| b < t) - 1)
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self.piece_at(t) {
            Some(i) => self.segments[i].value(self.breakpoints[i], t),
            None => self.outside,
        }
    }

    /// Left limit at `t`.
    pub fn eval_left(&self, t: f64) -> f64 {
        match self.piece_left_of(t) {
            Some(i) => self.segments[i].value(self.breakpoints[i], t),
            None => self.outside,
        }
    }

    pub fn derivative(&self, t: f64) -> f64 {
        match self.piece_at(t) {
            Some(i) => self.segments[i].derivative(self.breakpoints[i], t),
            None => 0.0,
        }
    }

    pub fn derivative_left(&self, t: f64) -> f64 {
        match self.piece_left_of(t) {
            Some(i) => self.segments[i].derivative(self.breakpoints[i], t),
            None => 0.0,
        }
    }

    /// Exact integral over `[x, y]`, including the constant tails.
    pub fn integral(&self, x: f64, y: f64) -> f64 {
        if y < x {
            return -self.integral(y, x);
        }
        let Some((lo, hi)) = self.support() else {
            return self.outside * (y - x);
        };
        let mut total = 0.0;
        if x < lo {
            total += self.outside * (lo.min(y) - x);
        }
        if y > hi {
            total += self.outside * (y - hi.max(x));
        }
        for (i, seg) in self.segments.iter().enumerate() {
            let (a, b) = (self.breakpoints[i], self.breakpoints[i + 1]);
            let (s, e) = (a.max(x), b.min(y));
            if s < e {
                total += seg.integral(a, s, e);
            }
        }
        total
    }

    /// Breakpoints strictly inside `(x, y)`.
    pub fn knots_between(&self, x: f64, y: f64) -> impl Iterator<Item = f64> + '_ {
        self.breakpoints.iter().copied().filter(move |&b| b > x && b < y)
    }
}

/// Sorted, deduplicated union of the breakpoints of several profiles.
pub fn merged_knots(profiles: &[&PiecewiseProfile]) -> Vec<f64> {
    let mut knots: Vec<f64> = profiles.iter().flat_map(|p| p.breakpoints().iter().copied()).collect();
    knots.sort_by(f64::total_cmp);
    knots.dedup();
    knots
}

/// Splits `[x, y]` into subintervals no longer than `step`, using every knot
/// inside the interval as a mandatory cut. Returns the cut points, ends included.
pub fn knot_aligned_grid(knots: &[f64], x: f64, y: f64, step: f64) -> Vec<f64> {
    let mut cuts = vec![x];
    cuts.extend(knots.iter().copied().filter(|&k| k > x && k < y));
    cuts.push(y);
    let mut grid = Vec::with_capacity(cuts.len() + ((y - x) / step) as usize + 1);
    grid.push(x);
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b <= a {
            continue;
        }
        let n = ((b - a) / step).ceil().max(1.0) as usize;
        let h = (b - a) / n as f64;
        for k in 1..n {
            grid.push(a + h * k as f64);
        }
        grid.push(b);
    }
    grid
}

//! Closed intervals of extended reals, used for scalar subdifferentials.

use core::fmt;

/// The closed interval `[lo, hi]`; either end may be infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(lo <= hi, "empty interval [{lo}, {hi}]");
        Interval { lo, hi }
    }

    pub fn point(x: f64) -> Self {
        Interval { lo: x, hi: x }
    }

    /// The convex hull of two points.
    pub fn hull(a: f64, b: f64) -> Self {
        if a <= b {
            Interval { lo: a, hi: b }
        } else {
            Interval { lo: b, hi: a }
        }
    }

    pub fn everything() -> Self {
        Interval { lo: f64::NEG_INFINITY, hi: f64::INFINITY }
    }

    pub fn is_singleton(&self) -> bool {
        self.lo == self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64, tol: f64) -> bool {
        self.lo - tol <= x && x <= self.hi + tol
    }

    /// Distance from `x` to the interval (zero inside).
    pub fn distance(&self, x: f64) -> f64 {
        if x < self.lo {
            self.lo - x
        } else if x > self.hi {
            x - self.hi
        } else {
            0.0
        }
    }

    /// The smallest `|r|` over `r` in the interval.
    pub fn min_abs(&self) -> f64 {
        self.distance(0.0)
    }

    /// Minkowski sum.
    pub fn add(&self, other: &Interval) -> Interval {
        Interval { lo: self.lo + other.lo, hi: self.hi + other.hi }
    }

    /// Minkowski difference `{a - b : a ∈ self, b ∈ other}`.
    pub fn sub(&self, other: &Interval) -> Interval {
        Interval { lo: self.lo - other.hi, hi: self.hi - other.lo }
    }

    pub fn shift(&self, s: f64) -> Interval {
        Interval { lo: self.lo + s, hi: self.hi + s }
    }

    pub fn scale(&self, s: f64) -> Interval {
        if s == 0.0 {
            return Interval::point(0.0);
        }
        Interval::hull(self.lo * s, self.hi * s)
    }

    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        (lo <= hi).then_some(Interval { lo, hi })
    }

    /// Deterministic representative: the midpoint when both ends are finite,
    /// the finite end when only one is, and zero for the whole line.
    pub fn pick(&self) -> f64 {
        match (self.lo.is_finite(), self.hi.is_finite()) {
            (true, true) => 0.5 * (self.lo + self.hi),
            (true, false) => self.lo,
            (false, true) => self.hi,
            (false, false) => 0.0,
        }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

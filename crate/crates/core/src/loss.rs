//! Per-sample losses and regularizers as convex functions of the margin `r = ⟨x, θ⟩`.

use alloc::format;

use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::math::{sigmoid, softplus};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LossKind {
    /// `(r − y)²`, jointly convex in `(r, y)`; class weights are ignored.
    SquaredDifference,
    /// `c_y · log(1 + exp(−(2y − 1) r))`.
    Logistic,
    /// `c_y · max(0, 1 − (2y − 1) r)`.
    Hinge,
    /// `(c_y / 2) · max(0, 1 − (2y − 1) r)²`.
    SquaredHinge,
}

/// A loss together with the class weights `c0` (label 0) and `c1` (label 1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossSpec {
    pub kind: LossKind,
    pub c0: f64,
    pub c1: f64,
}

impl LossSpec {
    pub fn new(kind: LossKind, c0: f64, c1: f64) -> Result<Self> {
        if !(c0 > 0.0 && c1 > 0.0 && c0.is_finite() && c1.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "class weights must be positive and finite, got c0={c0}, c1={c1}"
            )));
        }
        Ok(LossSpec { kind, c0, c1 })
    }

    pub fn unweighted(kind: LossKind) -> Self {
        LossSpec { kind, c0: 1.0, c1: 1.0 }
    }

    /// Class weight for label `y`; always 1 for the squared difference.
    pub fn weight(&self, y: bool) -> f64 {
        match self.kind {
            LossKind::SquaredDifference => 1.0,
            _ if y => self.c1,
            _ => self.c0,
        }
    }

    /// True for the losses whose objective is non-convex in `(θ, y)`.
    pub fn needs_extension(&self) -> bool {
        self.kind != LossKind::SquaredDifference
    }

    pub fn value(&self, r: f64, y: bool) -> f64 {
        let w = self.weight(y);
        let s = if y { 1.0 } else { -1.0 };
        match self.kind {
            LossKind::SquaredDifference => {
                let d = r - if y { 1.0 } else { 0.0 };
                d * d
            }
            LossKind::Logistic => w * softplus(-s * r),
            LossKind::Hinge => w * (1.0 - s * r).max(0.0),
            LossKind::SquaredHinge => {
                let h = (1.0 - s * r).max(0.0);
                0.5 * w * h * h
            }
        }
    }

    /// Exact subdifferential of `r ↦ l(r, y)`.
    pub fn subdifferential(&self, r: f64, y: bool) -> Interval {
        let w = self.weight(y);
        match self.kind {
            LossKind::SquaredDifference => Interval::point(2.0 * (r - if y { 1.0 } else { 0.0 })),
            LossKind::Logistic => {
                if y {
                    Interval::point(-w * sigmoid(-r))
                } else {
                    Interval::point(w * sigmoid(r))
                }
            }
            LossKind::Hinge => {
                if y {
                    if r < 1.0 {
                        Interval::point(-w)
                    } else if r > 1.0 {
                        Interval::point(0.0)
                    } else {
                        Interval::new(-w, 0.0)
                    }
                } else if r > -1.0 {
                    Interval::point(w)
                } else if r < -1.0 {
                    Interval::point(0.0)
                } else {
                    Interval::new(0.0, w)
                }
            }
            LossKind::SquaredHinge => {
                if y {
                    Interval::point(-w * (1.0 - r).max(0.0))
                } else {
                    Interval::point(w * (1.0 + r).max(0.0))
                }
            }
        }
    }

    /// Upper bound on `|∂l(r, y)|` over `|r| ≤ rmax`.
    pub fn lipschitz_bound(&self, rmax: f64) -> f64 {
        let w = self.c0.max(self.c1);
        match self.kind {
            LossKind::SquaredDifference => 2.0 * (rmax + 1.0),
            LossKind::Logistic | LossKind::Hinge => w,
            LossKind::SquaredHinge => w * (1.0 + rmax),
        }
    }
}

pub fn loss_value(loss: &LossSpec, r: f64, y: bool) -> f64 {
    loss.value(r, y)
}

pub fn loss_subdifferential(loss: &LossSpec, r: f64, y: bool) -> Interval {
    loss.subdifferential(r, y)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RegularizerKind {
    L1,
    L2,
}

/// `ω(θ)` together with the parameter box `Θ = [lower, upper]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegularizerSpec {
    pub kind: RegularizerKind,
    /// L2 only: use `½‖θ‖²` instead of `‖θ‖²`.
    pub half: bool,
    pub lower: alloc::vec::Vec<f64>,
    pub upper: alloc::vec::Vec<f64>,
}

impl RegularizerSpec {
    pub fn new(
        kind: RegularizerKind,
        half: bool,
        lower: alloc::vec::Vec<f64>,
        upper: alloc::vec::Vec<f64>,
    ) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::InvalidInput(format!("bound lengths differ: {} vs {}", lower.len(), upper.len())));
        }
        for (i, (b, t)) in lower.iter().zip(&upper).enumerate() {
            if b.is_nan() || t.is_nan() || b > t {
                return Err(Error::InvalidInput(format!("empty box at coordinate {i}: [{b}, {t}]")));
            }
        }
        Ok(RegularizerSpec { kind, half, lower, upper })
    }

    pub fn unbounded(kind: RegularizerKind, half: bool, m: usize) -> Self {
        RegularizerSpec { kind, half, lower: alloc::vec![f64::NEG_INFINITY; m], upper: alloc::vec![f64::INFINITY; m] }
    }

    pub fn boxed(kind: RegularizerKind, half: bool, lo: f64, hi: f64, m: usize) -> Self {
        RegularizerSpec { kind, half, lower: alloc::vec![lo; m], upper: alloc::vec![hi; m] }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn is_bounded(&self) -> bool {
        self.lower.iter().chain(&self.upper).all(|v| v.is_finite())
    }

    pub fn is_unconstrained(&self) -> bool {
        self.lower.iter().all(|v| *v == f64::NEG_INFINITY) && self.upper.iter().all(|v| *v == f64::INFINITY)
    }

    /// Curvature `κ` with `ω(θ) = (κ/2)‖θ‖²` for L2; 0 for L1.
    pub fn curvature(&self) -> f64 {
        match (self.kind, self.half) {
            (RegularizerKind::L1, _) => 0.0,
            (RegularizerKind::L2, true) => 1.0,
            (RegularizerKind::L2, false) => 2.0,
        }
    }

    pub fn in_box(&self, theta: &[f64], tol: f64) -> bool {
        theta.len() == self.dim()
            && theta.iter().zip(self.lower.iter().zip(&self.upper)).all(|(v, (b, t))| *b - tol <= *v && *v <= *t + tol)
    }

    /// `ω(θ)` ignoring the box.
    pub fn unchecked_value(&self, theta: &[f64]) -> f64 {
        match self.kind {
            RegularizerKind::L1 => theta.iter().map(|v| v.abs()).sum(),
            RegularizerKind::L2 => 0.5 * self.curvature() * theta.iter().map(|v| v * v).sum::<f64>(),
        }
    }

    /// `ω(θ)`; a domain error outside the box.
    pub fn value(&self, theta: &[f64]) -> Result<f64> {
        if theta.len() != self.dim() {
            return Err(Error::InvalidInput(format!("theta has dimension {}, box has {}", theta.len(), self.dim())));
        }
        if !self.in_box(theta, 0.0) {
            return Err(Error::Domain("theta outside the parameter box".into()));
        }
        Ok(self.unchecked_value(theta))
    }

    /// `ω(θ)` extended by `+∞` outside the box.
    pub fn extended_value(&self, theta: &[f64]) -> f64 {
        if self.in_box(theta, 0.0) {
            self.unchecked_value(theta)
        } else {
            f64::INFINITY
        }
    }

    /// Subdifferential of `θ_i ↦ ω_i(θ_i) + ι_{[b_i, t_i]}(θ_i)`.
    pub fn coordinate_subdifferential(&self, i: usize, v: f64) -> Interval {
        let (b, t) = (self.lower[i], self.upper[i]);
        let base = match self.kind {
            RegularizerKind::L1 => {
                if v > 0.0 {
                    Interval::point(1.0)
                } else if v < 0.0 {
                    Interval::point(-1.0)
                } else {
                    Interval::new(-1.0, 1.0)
                }
            }
            RegularizerKind::L2 => Interval::point(self.curvature() * v),
        };
        let lo = if v <= b { f64::NEG_INFINITY } else { base.lo };
        let hi = if v >= t { f64::INFINITY } else { base.hi };
        Interval { lo, hi }
    }

    /// Clamp into the box.
    pub fn project(&self, theta: &mut [f64]) {
        for (v, (b, t)) in theta.iter_mut().zip(self.lower.iter().zip(&self.upper)) {
            *v = v.max(*b).min(*t);
        }
    }
}

pub fn regularizer_value(reg: &RegularizerSpec, theta: &[f64]) -> Result<f64> {
    reg.value(theta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    const KINDS: [LossKind; 4] =
        [LossKind::SquaredDifference, LossKind::Logistic, LossKind::Hinge, LossKind::SquaredHinge];

    #[test]
    fn hinge_values() {
        let h = LossSpec::unweighted(LossKind::Hinge);
        assert_eq!(loss_value(&h, 0.0, true), 1.0);
        assert_eq!(loss_value(&h, 2.0, true), 0.0);
    }

    #[test]
    fn logistic_at_zero_is_ln2() {
        let l = LossSpec::unweighted(LossKind::Logistic);
        assert_abs_diff_eq!(loss_value(&l, 0.0, false), core::f64::consts::LN_2, epsilon = 1e-15);
    }

    #[test]
    fn logistic_is_stable_for_large_margins() {
        let l = LossSpec::unweighted(LossKind::Logistic);
        assert_abs_diff_eq!(l.value(-800.0, true), 800.0, epsilon = 1e-9);
        assert!(l.value(800.0, true) >= 0.0);
        assert!(l.value(800.0, true) < 1e-300);
    }

    #[test]
    fn hinge_subdifferentials() {
        let h = LossSpec::unweighted(LossKind::Hinge);
        assert_eq!(loss_subdifferential(&h, 1.0, true), Interval::new(-1.0, 0.0));
        assert_eq!(loss_subdifferential(&h, 0.0, true), Interval::point(-1.0));
        assert_eq!(loss_subdifferential(&h, -1.0, false), Interval::new(0.0, 1.0));
    }

    #[test]
    fn logistic_derivative_matches_central_difference() {
        let l = LossSpec::unweighted(LossKind::Logistic);
        let g = loss_subdifferential(&l, 0.0, true);
        assert_eq!(g, Interval::point(-0.5));
        let h = 1e-6;
        let fd = (l.value(h, true) - l.value(-h, true)) / (2.0 * h);
        assert_abs_diff_eq!(fd, -0.5, epsilon = 1e-9);
    }

    #[test]
    fn weights_scale_hinge_variants() {
        let h = LossSpec::new(LossKind::SquaredHinge, 2.0, 3.0).unwrap();
        assert_eq!(h.value(0.0, false), 1.0);
        assert_eq!(h.value(0.0, true), 1.5);
        assert!(LossSpec::new(LossKind::Hinge, 0.0, 1.0).is_err());
        let sd = LossSpec::new(LossKind::SquaredDifference, 5.0, 5.0).unwrap();
        assert_eq!(sd.value(3.0, true), 4.0);
    }

    #[test]
    fn regularizer_examples() {
        let l2 = RegularizerSpec::unbounded(RegularizerKind::L2, true, 1);
        assert_abs_diff_eq!(regularizer_value(&l2, &[-1.2]).unwrap(), 0.72, epsilon = 1e-15);
        let l1 = RegularizerSpec::unbounded(RegularizerKind::L1, false, 2);
        assert_eq!(regularizer_value(&l1, &[1.0, -2.0]).unwrap(), 3.0);
        let full = RegularizerSpec::unbounded(RegularizerKind::L2, false, 1);
        assert_eq!(regularizer_value(&full, &[0.0]).unwrap(), 0.0);
    }

    #[test]
    fn out_of_box_is_domain_error() {
        let r = RegularizerSpec::boxed(RegularizerKind::L1, false, -1.0, 1.0, 1);
        assert!(matches!(r.value(&[1.5]), Err(Error::Domain(_))));
        assert_eq!(r.extended_value(&[1.5]), f64::INFINITY);
    }

    #[test]
    fn normal_cone_at_box_faces() {
        let r = RegularizerSpec::boxed(RegularizerKind::L1, false, -1.0, 1.0, 1);
        assert_eq!(r.coordinate_subdifferential(0, 1.0), Interval { lo: 1.0, hi: f64::INFINITY });
        assert_eq!(r.coordinate_subdifferential(0, -1.0), Interval { lo: f64::NEG_INFINITY, hi: -1.0 });
        assert_eq!(r.coordinate_subdifferential(0, 0.0), Interval::new(-1.0, 1.0));
    }

    #[test]
    fn empty_box_rejected() {
        assert!(RegularizerSpec::new(RegularizerKind::L1, false, vec![1.0], vec![0.0]).is_err());
    }

    #[test]
    fn decay_at_large_margin() {
        for kind in [LossKind::Logistic, LossKind::Hinge, LossKind::SquaredHinge] {
            let l = LossSpec::unweighted(kind);
            assert!(l.value(1e3, true) < 1e-12);
            assert!(l.value(-1e3, false) < 1e-12);
            let mut prev = f64::INFINITY;
            for k in -50..=50 {
                let r = k as f64 * 0.2;
                let v = l.value(r, true);
                assert!(v <= prev);
                assert!(l.value(-r, false) == v);
                prev = v;
            }
        }
    }

    proptest! {
        #[test]
        fn convex_along_segments(k in 0usize..4, y: bool, r1 in -20.0..20.0f64, r2 in -20.0..20.0f64, lam in 0.0..1.0f64) {
            let l = LossSpec::new(KINDS[k], 0.7, 1.9).unwrap();
            let mid = l.value(lam * r1 + (1.0 - lam) * r2, y);
            let sec = lam * l.value(r1, y) + (1.0 - lam) * l.value(r2, y);
            prop_assert!(mid <= sec + 1e-12);
        }

        #[test]
        fn subgradient_inequality(k in 0usize..4, y: bool, r in -5.0..5.0f64, rp in -5.0..5.0f64, t in 0.0..1.0f64) {
            let l = LossSpec::new(KINDS[k], 1.3, 0.4).unwrap();
            let g = l.subdifferential(r, y);
            let g = g.lo + t * (g.hi - g.lo);
            prop_assert!(l.value(rp, y) >= l.value(r, y) + g * (rp - r) - 1e-10);
        }

        #[test]
        fn kinks_hit_exactly(y: bool, t in 0.0..1.0f64) {
            let l = LossSpec::unweighted(LossKind::Hinge);
            let r = if y { 1.0 } else { -1.0 };
            let g = l.subdifferential(r, y);
            let g = g.lo + t * (g.hi - g.lo);
            for rp in [-3.0, -1.0, 0.0, 1.0, 3.0] {
                prop_assert!(l.value(rp, y) >= l.value(r, y) + g * (rp - r) - 1e-12);
            }
        }
    }
}

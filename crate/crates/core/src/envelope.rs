//! Convex extensions of a single term `d(θ, y)` with `y ∈ {0, 1}`.
//!
//! For fractional `y` the tightest extension is the envelope
//! `Ψ(θ, y) = inf { (1−y)·d₀(θ⁰) + y·d₁(θ¹) : (1−y)θ⁰ + yθ¹ = θ }`,
//! and it equals `d` itself at `y ∈ {0, 1}`.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::l1::{l1_envelope_value, L1EnvelopeProblem};
use crate::l2::{solve_l2_envelope, L2EnvelopeProblem};
use crate::loss::{LossKind, LossSpec, RegularizerKind, RegularizerSpec};
use crate::math::{dot, norm_sq, softplus};

/// Labels closer than this to 0 or 1 use the integer branch.
pub const Y_EPS: f64 = 1e-12;

/// Default replacement for an infinite `y`-slope inside solvers.
pub const DEFAULT_W_CAP: f64 = 1e6;

/// Tolerance for recognising kinks and box faces when selecting subgradients.
const KINK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    /// L2 term with hinge, squared hinge or squared difference; root from a candidate list.
    ClosedFormL2,
    /// L2 term with logistic loss; root by bisection.
    BisectionL2,
    /// Box-constrained L1 term.
    ClosedFormL1,
    /// Loss-only term that vanishes at infinity; zero at fractional `y`.
    Trivial,
    /// `‖θ‖² − C⟨x, θ⟩y`, extended in closed form.
    LogisticPartial,
    /// The term is already jointly convex in `(θ, y)` and is used as is.
    Convex,
}

/// One term `d(θ, y)` of a decomposed objective together with its extension method.
#[derive(Debug, Clone, PartialEq)]
pub struct TermExtension {
    pub x: Vec<f64>,
    pub c: f64,
    pub loss: LossSpec,
    pub reg: RegularizerSpec,
    pub method: Method,
    /// Whether `ω` is part of the term.
    pub include_regularizer: bool,
}

/// The `y`-component of an envelope subgradient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum YSlope {
    Finite(f64),
    /// Valid at `y = 0`: the inequality holds for every finite slope below some threshold.
    NegInfinite,
    /// Valid at `y = 1`.
    PosInfinite,
}

impl YSlope {
    pub fn is_finite(&self) -> bool {
        matches!(self, YSlope::Finite(_))
    }

    /// Finite stand-in for use as a step direction.
    pub fn clamp(&self, cap: f64) -> f64 {
        match *self {
            YSlope::Finite(w) => w,
            YSlope::NegInfinite => -cap,
            YSlope::PosInfinite => cap,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubgradientPair {
    pub v: Vec<f64>,
    pub w: YSlope,
}

/// Minimizing split of the envelope at fractional `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub value: f64,
    pub theta0: Vec<f64>,
    pub theta1: Vec<f64>,
}

/// `ξ_{θ,y}(t) = (θ − (1−y)t)/y`.
pub fn xi_map(theta: &[f64], y: f64, t: &[f64]) -> Result<Vec<f64>> {
    if !(y > 0.0 && y <= 1.0) {
        return Err(Error::Domain(alloc::format!("xi requires y in (0, 1], got {y}")));
    }
    if theta.len() != t.len() {
        return Err(Error::InvalidInput("dimension mismatch".into()));
    }
    Ok(theta.iter().zip(t).map(|(a, b)| (a - (1.0 - y) * b) / y).collect())
}

fn fractional_label_loss(loss: &LossSpec, r: f64, y: f64) -> f64 {
    let w = match loss.kind {
        LossKind::SquaredDifference => 1.0,
        _ => (1.0 - y) * loss.c0 + y * loss.c1,
    };
    let s = 2.0 * y - 1.0;
    match loss.kind {
        LossKind::SquaredDifference => (r - y) * (r - y),
        LossKind::Logistic => w * softplus(-s * r),
        LossKind::Hinge => w * (1.0 - s * r).max(0.0),
        LossKind::SquaredHinge => {
            let h = (1.0 - s * r).max(0.0);
            0.5 * w * h * h
        }
    }
}

fn near_subdifferential(loss: &LossSpec, r: f64, label: bool) -> Interval {
    let e = KINK_TOL * (1.0 + r.abs());
    Interval { lo: loss.subdifferential(r - e, label).lo, hi: loss.subdifferential(r + e, label).hi }
}

/// Intersection, or the midpoint of the gap when rounding separated the sets.
fn meet(a: &Interval, b: &Interval) -> Interval {
    a.intersect(b).unwrap_or_else(|| {
        let m = if a.hi < b.lo { 0.5 * (a.hi + b.lo) } else { 0.5 * (b.hi + a.lo) };
        Interval::point(m)
    })
}

impl TermExtension {
    /// `d = ω + C·l` with the tightest available extension.
    pub fn full_term(x: Vec<f64>, c: f64, loss: LossSpec, reg: RegularizerSpec) -> Result<Self> {
        check_dims(&x, &reg)?;
        let method = match (reg.kind, loss.kind) {
            (RegularizerKind::L2, _) if !reg.is_unconstrained() => {
                if loss.kind == LossKind::SquaredDifference {
                    Method::Convex
                } else {
                    return Err(Error::Unsupported(
                        "L2 envelopes are only available for an unconstrained parameter space".into(),
                    ));
                }
            }
            (RegularizerKind::L2, LossKind::Logistic) => Method::BisectionL2,
            (RegularizerKind::L2, _) => Method::ClosedFormL2,
            (RegularizerKind::L1, LossKind::SquaredDifference) => Method::Convex,
            (RegularizerKind::L1, _) => Method::ClosedFormL1,
        };
        Ok(TermExtension { x, c, loss, reg, method, include_regularizer: true })
    }

    /// `d = C·l`; extended by zero at fractional `y` unless the loss is jointly convex.
    pub fn loss_only(x: Vec<f64>, c: f64, loss: LossSpec, reg: RegularizerSpec) -> Result<Self> {
        check_dims(&x, &reg)?;
        let method = if loss.kind == LossKind::SquaredDifference { Method::Convex } else { Method::Trivial };
        Ok(TermExtension { x, c, loss, reg, method, include_regularizer: false })
    }

    /// `d(θ, y) = ‖θ‖² − C⟨x, θ⟩y`.
    pub fn logistic_partial(x: Vec<f64>, c: f64) -> Self {
        let m = x.len();
        TermExtension {
            x,
            c,
            loss: LossSpec::unweighted(LossKind::Logistic),
            reg: RegularizerSpec::unbounded(RegularizerKind::L2, false, m),
            method: Method::LogisticPartial,
            include_regularizer: true,
        }
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    /// `d(θ, label)`, or `+∞` outside the parameter box.
    pub fn d(&self, theta: &[f64], label: bool) -> f64 {
        if !self.reg.in_box(theta, 0.0) {
            return f64::INFINITY;
        }
        self.d_unchecked(theta, label)
    }

    fn d_unchecked(&self, theta: &[f64], label: bool) -> f64 {
        if self.method == Method::LogisticPartial {
            return norm_sq(theta) - if label { self.c * dot(&self.x, theta) } else { 0.0 };
        }
        let omega = if self.include_regularizer { self.reg.unchecked_value(theta) } else { 0.0 };
        omega + self.c * self.loss.value(dot(&self.x, theta), label)
    }

    /// The term with the label entering the loss formula directly; non-convex in general.
    pub fn raw(&self, theta: &[f64], y: f64) -> f64 {
        if self.method == Method::LogisticPartial {
            return norm_sq(theta) - self.c * dot(&self.x, theta) * y;
        }
        let omega = if self.include_regularizer { self.reg.unchecked_value(theta) } else { 0.0 };
        omega + self.c * fractional_label_loss(&self.loss, dot(&self.x, theta), y)
    }

    fn check_point(&self, theta: &[f64], y: f64) -> Result<()> {
        if theta.len() != self.dim() {
            return Err(Error::InvalidInput(alloc::format!(
                "theta has dimension {}, expected {}",
                theta.len(),
                self.dim()
            )));
        }
        if !(0.0..=1.0).contains(&y) {
            return Err(Error::Domain(alloc::format!("label {y} outside [0, 1]")));
        }
        if !self.reg.in_box(theta, 0.0) {
            return Err(Error::Domain("theta outside the parameter box".into()));
        }
        Ok(())
    }

    /// `Some(label)` when `y` takes the integer branch.
    fn integer_label(y: f64) -> Option<bool> {
        if y <= Y_EPS {
            Some(false)
        } else if y >= 1.0 - Y_EPS {
            Some(true)
        } else {
            None
        }
    }

    pub fn value(&self, theta: &[f64], y: f64) -> Result<f64> {
        self.check_point(theta, y)?;
        match self.method {
            Method::LogisticPartial => return Ok(logistic_partial_extension_value(self.c, &self.x, theta, y)),
            Method::Convex => return Ok(self.raw(theta, y)),
            _ => {}
        }
        if let Some(label) = Self::integer_label(y) {
            return Ok(self.d_unchecked(theta, label));
        }
        match self.method {
            Method::Trivial => Ok(0.0),
            _ => Ok(self.split(theta, y)?.value),
        }
    }

    /// Minimizing split at fractional `y`.
    pub fn split(&self, theta: &[f64], y: f64) -> Result<Split> {
        self.check_point(theta, y)?;
        if Self::integer_label(y).is_some() {
            return Err(Error::Domain("split requires fractional y".into()));
        }
        if norm_sq(&self.x) == 0.0
            && matches!(self.method, Method::ClosedFormL1 | Method::ClosedFormL2 | Method::BisectionL2)
        {
            let value = (1.0 - y) * self.d_unchecked(theta, false) + y * self.d_unchecked(theta, true);
            return Ok(Split { value, theta0: theta.to_vec(), theta1: theta.to_vec() });
        }
        match self.method {
            Method::ClosedFormL2 | Method::BisectionL2 => {
                let p = L2EnvelopeProblem::new(self.x.clone(), self.c, self.loss, theta.to_vec(), y)
                    .with_curvature(self.reg.curvature());
                let s = solve_l2_envelope(&p)?;
                Ok(Split { value: s.value, theta0: s.theta0, theta1: s.theta1 })
            }
            Method::ClosedFormL1 => {
                let p = L1EnvelopeProblem {
                    x: self.x.clone(),
                    c: self.c,
                    loss: self.loss,
                    theta: theta.to_vec(),
                    y,
                    lower: self.reg.lower.clone(),
                    upper: self.reg.upper.clone(),
                };
                let s = l1_envelope_value(&p)?;
                Ok(Split { value: s.value, theta0: s.theta0, theta1: s.theta1 })
            }
            Method::LogisticPartial => {
                let a: Vec<f64> = self.x.iter().map(|v| 0.5 * self.c * v).collect();
                let theta0: Vec<f64> = theta.iter().zip(&a).map(|(t, a)| t - y * a).collect();
                let theta1: Vec<f64> = theta.iter().zip(&a).map(|(t, a)| t + (1.0 - y) * a).collect();
                Ok(Split { value: logistic_partial_extension_value(self.c, &self.x, theta, y), theta0, theta1 })
            }
            Method::Trivial | Method::Convex => {
                Err(Error::Unsupported(alloc::format!("{:?} extension exposes no minimizing split", self.method)))
            }
        }
    }

    fn reg_coordinate(&self, i: usize, v: f64) -> Interval {
        let (b, t) = (self.reg.lower[i], self.reg.upper[i]);
        let base = if !self.include_regularizer {
            Interval::point(0.0)
        } else {
            match self.reg.kind {
                RegularizerKind::L1 => {
                    if v.abs() <= KINK_TOL {
                        Interval::new(-1.0, 1.0)
                    } else {
                        Interval::point(v.signum())
                    }
                }
                RegularizerKind::L2 => Interval::point(self.reg.curvature() * v),
            }
        };
        let lo = if v <= b + KINK_TOL * (1.0 + b.abs()) { f64::NEG_INFINITY } else { base.lo };
        let hi = if v >= t - KINK_TOL * (1.0 + t.abs()) { f64::INFINITY } else { base.hi };
        Interval { lo, hi }
    }

    /// An element of `∂d_label(θ)`.
    fn d_subgradient(&self, theta: &[f64], label: bool) -> Vec<f64> {
        let alpha = near_subdifferential(&self.loss, dot(&self.x, theta), label).scale(self.c).pick();
        (0..self.dim()).map(|i| self.reg_coordinate(i, theta[i]).shift(self.x[i] * alpha).pick()).collect()
    }

    /// An element of `∂d₀(θ⁰) ∩ ∂d₁(θ¹)`.
    fn common_subgradient(&self, t0: &[f64], t1: &[f64]) -> Vec<f64> {
        let l0 = near_subdifferential(&self.loss, dot(&self.x, t0), false).scale(self.c);
        let l1 = near_subdifferential(&self.loss, dot(&self.x, t1), true).scale(self.c);
        let m = self.dim();
        let s0: Vec<Interval> = (0..m).map(|i| self.reg_coordinate(i, t0[i])).collect();
        let s1: Vec<Interval> = (0..m).map(|i| self.reg_coordinate(i, t1[i])).collect();
        // δ = α₀ − α₁ must move every coordinate from S⁰ᵢ into S¹ᵢ.
        let mut delta = l0.sub(&l1);
        for i in 0..m {
            if self.x[i] != 0.0 {
                delta = meet(&delta, &s1[i].sub(&s0[i]).scale(1.0 / self.x[i]));
            }
        }
        let d = delta.pick();
        let alpha0 = meet(&l0, &l1.shift(d)).pick();
        let alpha1 = alpha0 - d;
        (0..m).map(|i| meet(&s0[i].shift(self.x[i] * alpha0), &s1[i].shift(self.x[i] * alpha1)).pick()).collect()
    }

    pub fn subgradient(&self, theta: &[f64], y: f64) -> Result<SubgradientPair> {
        self.check_point(theta, y)?;
        match self.method {
            Method::LogisticPartial => {
                let a: Vec<f64> = self.x.iter().map(|v| 0.5 * self.c * v).collect();
                let shifted: Vec<f64> = theta.iter().zip(&a).map(|(t, a)| t - y * a).collect();
                let v = shifted.iter().map(|s| 2.0 * s).collect();
                let w = -self.c * dot(&self.x, &shifted) - norm_sq(&a);
                return Ok(SubgradientPair { v, w: YSlope::Finite(w) });
            }
            Method::Convex => {
                let r = dot(&self.x, theta);
                let g = match self.loss.kind {
                    LossKind::SquaredDifference => 2.0 * (r - y),
                    _ => return Err(Error::Unsupported("convex method needs squared difference".into())),
                };
                let v = (0..self.dim())
                    .map(|i| self.reg_coordinate(i, theta[i]).shift(self.c * g * self.x[i]).pick())
                    .collect();
                return Ok(SubgradientPair { v, w: YSlope::Finite(-self.c * g) });
            }
            _ => {}
        }
        if let Some(label) = Self::integer_label(y) {
            let v = self.d_subgradient(theta, label);
            let w = if label { YSlope::PosInfinite } else { YSlope::NegInfinite };
            return Ok(SubgradientPair { v, w });
        }
        if self.method == Method::Trivial {
            return Ok(SubgradientPair { v: alloc::vec![0.0; self.dim()], w: YSlope::Finite(0.0) });
        }
        let s = self.split(theta, y)?;
        let v = self.common_subgradient(&s.theta0, &s.theta1);
        let gap: Vec<f64> = s.theta0.iter().zip(&s.theta1).map(|(a, b)| a - b).collect();
        let w = dot(&v, &gap) + self.d_unchecked(&s.theta1, true) - self.d_unchecked(&s.theta0, false);
        Ok(SubgradientPair { v, w: YSlope::Finite(w) })
    }
}

fn check_dims(x: &[f64], reg: &RegularizerSpec) -> Result<()> {
    if x.len() != reg.dim() {
        return Err(Error::InvalidInput(alloc::format!(
            "feature dimension {} differs from parameter dimension {}",
            x.len(),
            reg.dim()
        )));
    }
    Ok(())
}

/// Envelope value: `d(θ, y)` at integer `y`, `Ψ(θ, y)` otherwise.
pub fn envelope_value(ext: &TermExtension, theta: &[f64], y: f64) -> Result<f64> {
    ext.value(theta, y)
}

/// `d(θ, y)` at integer `y` and zero in between.
pub fn trivial_extension_value(ext: &TermExtension, theta: &[f64], y: f64) -> Result<f64> {
    ext.check_point(theta, y)?;
    Ok(match TermExtension::integer_label(y) {
        Some(label) => ext.d_unchecked(theta, label),
        None => 0.0,
    })
}

/// `‖θ − y(C/2)x‖² − y‖(C/2)x‖²`.
pub fn logistic_partial_extension_value(c: f64, x: &[f64], theta: &[f64], y: f64) -> f64 {
    let h = 0.5 * c;
    let shifted: f64 = theta.iter().zip(x).map(|(t, v)| (t - y * h * v) * (t - y * h * v)).sum();
    shifted - y * h * h * norm_sq(x)
}

/// A subgradient `(v, w)` of the extension at `(θ, y)`.
pub fn envelope_subgradient(ext: &TermExtension, theta: &[f64], y: f64) -> Result<SubgradientPair> {
    ext.subgradient(theta, y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn hinge_half_l2(c: f64) -> TermExtension {
        TermExtension::full_term(
            vec![1.0],
            c,
            LossSpec::unweighted(LossKind::Hinge),
            RegularizerSpec::unbounded(RegularizerKind::L2, true, 1),
        )
        .unwrap()
    }

    fn l1_box(kind: LossKind, c: f64, x: Vec<f64>, bound: f64) -> TermExtension {
        let m = x.len();
        TermExtension::full_term(
            x,
            c,
            LossSpec::unweighted(kind),
            RegularizerSpec::boxed(RegularizerKind::L1, false, -bound, bound, m),
        )
        .unwrap()
    }

    #[test]
    fn xi_examples() {
        assert_eq!(xi_map(&[1.0], 1.0, &[5.0]).unwrap(), vec![1.0]);
        assert_eq!(xi_map(&[0.0], 0.5, &[-1.0]).unwrap(), vec![1.0]);
        assert_eq!(xi_map(&[2.0, 0.0], 0.25, &[0.0, 4.0]).unwrap(), vec![8.0, -12.0]);
        assert!(matches!(xi_map(&[1.0], 0.0, &[1.0]), Err(Error::Domain(_))));
    }

    #[test]
    fn envelope_worked_examples() {
        let e = hinge_half_l2(5.0);
        assert_abs_diff_eq!(envelope_value(&e, &[0.0], 0.5).unwrap(), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(envelope_value(&e, &[-3.0], 0.5).unwrap(), 11.375, epsilon = 1e-12);
        assert_eq!(envelope_value(&e, &[0.3], 0.0).unwrap(), e.d(&[0.3], false));
    }

    #[test]
    fn trivial_examples() {
        let e = TermExtension::loss_only(
            vec![1.0],
            5.0,
            LossSpec::unweighted(LossKind::Hinge),
            RegularizerSpec::unbounded(RegularizerKind::L2, true, 1),
        )
        .unwrap();
        assert_eq!(e.method, Method::Trivial);
        assert_eq!(trivial_extension_value(&e, &[0.0], 0.5).unwrap(), 0.0);
        assert_eq!(trivial_extension_value(&e, &[0.0], 0.0).unwrap(), 5.0);
        assert_eq!(trivial_extension_value(&e, &[2.0], 1.0).unwrap(), 0.0);
    }

    #[test]
    fn logistic_partial_examples() {
        assert_eq!(logistic_partial_extension_value(2.0, &[1.0], &[1.0], 1.0), -1.0);
        assert_abs_diff_eq!(logistic_partial_extension_value(2.0, &[1.0], &[0.5], 0.5), -0.5, epsilon = 1e-15);
        assert_eq!(logistic_partial_extension_value(3.0, &[1.0, 2.0], &[0.5, -1.0], 0.0), 1.25);
    }

    #[test]
    fn logistic_partial_gradient() {
        let e = TermExtension::logistic_partial(vec![1.0], 2.0);
        let g = envelope_subgradient(&e, &[0.5], 0.5).unwrap();
        assert_abs_diff_eq!(g.v[0], 0.0, epsilon = 1e-15);
        assert_eq!(g.w, YSlope::Finite(-1.0));
        let h = 1e-6;
        let fy = (e.value(&[0.5], 0.5 + h).unwrap() - e.value(&[0.5], 0.5 - h).unwrap()) / (2.0 * h);
        assert_abs_diff_eq!(fy, -1.0, epsilon = 1e-8);
    }

    #[test]
    fn hinge_subgradient_at_symmetric_split() {
        let e = hinge_half_l2(5.0);
        let g = envelope_subgradient(&e, &[0.0], 0.5).unwrap();
        // ∂d₀(−1) ∩ ∂d₁(1) = [−1, 1]; its midpoint is 0 and then w = 0.
        assert_abs_diff_eq!(g.v[0], 0.0, epsilon = 1e-12);
        assert_eq!(g.w, YSlope::Finite(0.0));
        // The other endpoint pairing (v, w) = (−1, 2) is also a subgradient.
        for k in -30..=30 {
            for j in 1..20 {
                let (t, y) = (k as f64 * 0.2, j as f64 * 0.05);
                let lhs = e.value(&[t], y).unwrap();
                assert!(lhs >= 0.5 - t + 2.0 * (y - 0.5) - 1e-12);
            }
        }
    }

    #[test]
    fn boundary_slopes_are_flagged() {
        let e = hinge_half_l2(5.0);
        assert_eq!(envelope_subgradient(&e, &[0.0], 0.0).unwrap().w, YSlope::NegInfinite);
        assert_eq!(envelope_subgradient(&e, &[0.0], 1.0).unwrap().w, YSlope::PosInfinite);
        assert_eq!(YSlope::NegInfinite.clamp(DEFAULT_W_CAP), -1e6);
    }

    #[test]
    fn unbounded_l1_rejects_fractional_labels() {
        let e = TermExtension::full_term(
            vec![1.0],
            5.0,
            LossSpec::unweighted(LossKind::Hinge),
            RegularizerSpec::unbounded(RegularizerKind::L1, false, 1),
        )
        .unwrap();
        assert!(matches!(e.value(&[0.0], 0.5), Err(Error::Domain(_))));
        assert_eq!(e.value(&[0.0], 1.0).unwrap(), 5.0);
    }

    #[test]
    fn boxed_l2_is_unsupported() {
        let r = TermExtension::full_term(
            vec![1.0],
            1.0,
            LossSpec::unweighted(LossKind::Hinge),
            RegularizerSpec::boxed(RegularizerKind::L2, true, -1.0, 1.0, 1),
        );
        assert!(matches!(r, Err(Error::Unsupported(_))));
    }

    #[test]
    fn zero_feature_fast_path() {
        let e = TermExtension::full_term(
            vec![0.0, 0.0],
            3.0,
            LossSpec::unweighted(LossKind::Logistic),
            RegularizerSpec::unbounded(RegularizerKind::L2, true, 2),
        )
        .unwrap();
        let v = e.value(&[0.4, -1.0], 0.3).unwrap();
        assert_abs_diff_eq!(v, 0.58 + 3.0 * core::f64::consts::LN_2, epsilon = 1e-12);
    }

    fn exts() -> Vec<TermExtension> {
        let l2 = |k, c| {
            TermExtension::full_term(
                vec![1.0, -0.5],
                c,
                LossSpec::new(k, 1.0, 1.5).unwrap(),
                RegularizerSpec::unbounded(RegularizerKind::L2, true, 2),
            )
            .unwrap()
        };
        vec![
            l2(LossKind::Hinge, 5.0),
            l2(LossKind::SquaredHinge, 4.0),
            l2(LossKind::Logistic, 16.0),
            l1_box(LossKind::Hinge, 5.0, vec![1.0, -0.5], 3.1),
            l1_box(LossKind::SquaredHinge, 4.0, vec![1.0, -0.5], 3.1),
            l1_box(LossKind::Logistic, 5.0, vec![1.0, -0.5], 3.1),
            TermExtension::logistic_partial(vec![1.0, -0.5], 2.0),
        ]
    }

    proptest! {
        #[test]
        fn below_secant(k in 0usize..7, a in -3.0..3.0f64, b in -3.0..3.0f64, y in 0.0..1.0f64) {
            let e = &exts()[k];
            let t = [a, b];
            let v = e.value(&t, y).unwrap();
            prop_assert!(v <= (1.0 - y) * e.d(&t, false) + y * e.d(&t, true) + 1e-9);
        }

        #[test]
        fn subgradient_inequality(k in 0usize..7, a in -3.0..3.0f64, b in -3.0..3.0f64, y in 0.01..0.99f64,
                                  a2 in -3.0..3.0f64, b2 in -3.0..3.0f64, y2 in 0.01..0.99f64) {
            let e = &exts()[k];
            let g = e.subgradient(&[a, b], y).unwrap();
            let w = g.w.clamp(DEFAULT_W_CAP);
            let lhs = e.value(&[a2, b2], y2).unwrap();
            let rhs = e.value(&[a, b], y).unwrap() + g.v[0] * (a2 - a) + g.v[1] * (b2 - b) + w * (y2 - y);
            prop_assert!(lhs >= rhs - 1e-8, "slack {}", lhs - rhs);
        }

        #[test]
        fn midpoint_convexity(k in 0usize..7, a in -3.0..3.0f64, b in -3.0..3.0f64, y in 0.0..1.0f64,
                              a2 in -3.0..3.0f64, b2 in -3.0..3.0f64, y2 in 0.0..1.0f64) {
            let e = &exts()[k];
            let m = e.value(&[0.5 * (a + a2), 0.5 * (b + b2)], 0.5 * (y + y2)).unwrap();
            let s = 0.5 * (e.value(&[a, b], y).unwrap() + e.value(&[a2, b2], y2).unwrap());
            prop_assert!(m <= s + 1e-8);
        }
    }
}

//! Binary envelopes of `d(θ, y) = (κ/2)‖θ‖² + C·l(⟨x, θ⟩, y)` over unconstrained `θ`.
//!
//! With `K = C/κ` the minimizing split of the envelope is
//! `θ̂⁰ = θ − yKz·x`, `θ̂¹ = θ + (1−y)Kz·x`, where the scalar `z` is the unique root of
//! `R(z) = ∂l₀(p − yKXz) − ∂l₁(p + (1−y)KXz) − z`, `p = xᵀθ`, `X = xᵀx`.
//! `R` is strictly decreasing, so the root is unique.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::loss::{LossKind, LossSpec};
use crate::math::{dot, norm_sq};
use crate::scalar::bracket_and_bisect;

/// Tolerance used to accept a closed-form candidate root.
pub const CANDIDATE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct L2EnvelopeProblem {
    pub x: Vec<f64>,
    pub c: f64,
    pub loss: LossSpec,
    pub theta: Vec<f64>,
    pub y: f64,
    /// `κ` in `ω = (κ/2)‖θ‖²`: 1 for `½‖θ‖²`, 2 for `‖θ‖²`.
    pub curvature: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RootSource {
    /// A closed-form candidate passed validation.
    Candidate,
    /// Found by bracketing and bisection.
    Bisection,
}

#[derive(Debug, Clone, PartialEq)]
pub struct L2Solution {
    pub value: f64,
    pub theta0: Vec<f64>,
    pub theta1: Vec<f64>,
    pub z: f64,
    pub source: RootSource,
}

impl L2EnvelopeProblem {
    pub fn new(x: Vec<f64>, c: f64, loss: LossSpec, theta: Vec<f64>, y: f64) -> Self {
        L2EnvelopeProblem { x, c, loss, theta, y, curvature: 1.0 }
    }

    pub fn with_curvature(mut self, curvature: f64) -> Self {
        self.curvature = curvature;
        self
    }

    fn k(&self) -> f64 {
        self.c / self.curvature
    }

    fn margins(&self, z: f64) -> (f64, f64) {
        let p = dot(&self.x, &self.theta);
        let kx = self.k() * norm_sq(&self.x);
        (p - self.y * kx * z, p + (1.0 - self.y) * kx * z)
    }

    pub fn split(&self, z: f64) -> (Vec<f64>, Vec<f64>) {
        let k = self.k();
        let t0 = self.theta.iter().zip(&self.x).map(|(t, x)| t - self.y * k * z * x).collect();
        let t1 = self.theta.iter().zip(&self.x).map(|(t, x)| t + (1.0 - self.y) * k * z * x).collect();
        (t0, t1)
    }

    pub fn d(&self, theta: &[f64], label: bool) -> f64 {
        0.5 * self.curvature * norm_sq(theta) + self.c * self.loss.value(dot(&self.x, theta), label)
    }

    pub fn objective(&self, z: f64) -> f64 {
        let (t0, t1) = self.split(z);
        (1.0 - self.y) * self.d(&t0, false) + self.y * self.d(&t1, true)
    }

    /// Closed-form candidate roots for losses that have them, in listed order.
    pub fn candidates(&self) -> Option<Vec<f64>> {
        let p = dot(&self.x, &self.theta);
        let kx = self.k() * norm_sq(&self.x);
        let (y, c0, c1) = (self.y, self.loss.c0, self.loss.c1);
        match self.loss.kind {
            LossKind::Hinge => {
                Some(alloc::vec![0.0, c0, c1, c0 + c1, (1.0 + p) / (y * kx), (1.0 - p) / ((1.0 - y) * kx),])
            }
            LossKind::SquaredHinge => Some(alloc::vec![
                0.0,
                (c0 + c0 * p) / (1.0 + c0 * y * kx),
                (c1 - c1 * p) / (1.0 + c1 * (1.0 - y) * kx),
                (c0 + c1 + (c0 - c1) * p) / (1.0 + (c0 * y + c1 * (1.0 - y)) * kx),
            ]),
            LossKind::SquaredDifference => Some(alloc::vec![2.0 / (1.0 + 2.0 * kx)]),
            LossKind::Logistic => None,
        }
    }

    /// `R(z)` with the residual inflated by nearby kinks, for validating rounded candidates.
    pub fn residual_near(&self, z: f64) -> Interval {
        let (r0, r1) = self.margins(z);
        let near = |r: f64, label: bool| {
            let e = CANDIDATE_TOL * (1.0 + r.abs());
            Interval { lo: self.loss.subdifferential(r - e, label).lo, hi: self.loss.subdifferential(r + e, label).hi }
        };
        near(r0, false).sub(&near(r1, true)).shift(-z)
    }

    pub fn validates(&self, z: f64) -> bool {
        z.is_finite() && self.residual_near(z).contains(0.0, CANDIDATE_TOL * (1.0 + z.abs()))
    }
}

/// `R(z)`; `z` solves the root condition iff the result contains 0.
pub fn l2_root_residual(p: &L2EnvelopeProblem, z: f64) -> Interval {
    let (r0, r1) = p.margins(z);
    p.loss.subdifferential(r0, false).sub(&p.loss.subdifferential(r1, true)).shift(-z)
}

/// Solves the envelope problem at fractional `y`.
pub fn solve_l2_envelope(p: &L2EnvelopeProblem) -> Result<L2Solution> {
    if !(p.y > 0.0 && p.y < 1.0) {
        return Err(Error::Domain(alloc::format!("fractional y required, got {}", p.y)));
    }
    let xx = norm_sq(&p.x);
    if xx == 0.0 || p.c == 0.0 {
        let v = (1.0 - p.y) * p.d(&p.theta, false) + p.y * p.d(&p.theta, true);
        return Ok(L2Solution {
            value: v,
            theta0: p.theta.clone(),
            theta1: p.theta.clone(),
            z: 0.0,
            source: RootSource::Candidate,
        });
    }
    if let Some(cands) = p.candidates() {
        let mut best: Option<(f64, f64)> = None;
        for z in cands {
            if !p.validates(z) {
                continue;
            }
            let v = p.objective(z);
            let better = match best {
                None => true,
                Some((bz, bv)) => v < bv || (v == bv && z.abs() < bz.abs()),
            };
            if better {
                best = Some((z, v));
            }
        }
        if let Some((z, value)) = best {
            let (theta0, theta1) = p.split(z);
            return Ok(L2Solution { value, theta0, theta1, z, source: RootSource::Candidate });
        }
    }
    let pm = dot(&p.x, &p.theta).abs();
    let b = 2.0 * (p.loss.c0 + p.loss.c1) + 2.0 * pm / (p.y.min(1.0 - p.y) * p.k() * xx + f64::EPSILON);
    let z = bracket_and_bisect(|z| l2_root_residual(p, z), b, 1e8)?;
    let (theta0, theta1) = p.split(z);
    Ok(L2Solution { value: p.objective(z), theta0, theta1, z, source: RootSource::Bisection })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::golden_unbounded;
    use alloc::vec;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn hinge_c5(theta: f64) -> L2EnvelopeProblem {
        L2EnvelopeProblem::new(vec![1.0], 5.0, LossSpec::unweighted(LossKind::Hinge), vec![theta], 0.5)
    }

    /// Direct minimization of the envelope's split objective over `θ⁰ = θ − yt·x/‖x‖`.
    fn oracle(p: &L2EnvelopeProblem) -> f64 {
        let f = |t: f64| {
            let t0: Vec<f64> = p.theta.iter().zip(&p.x).map(|(a, b)| a - p.y * t * b).collect();
            let t1: Vec<f64> = p.theta.iter().zip(&p.x).map(|(a, b)| a + (1.0 - p.y) * t * b).collect();
            (1.0 - p.y) * p.d(&t0, false) + p.y * p.d(&t1, true)
        };
        golden_unbounded(f, 0.0, 1.0, 1e-11).1
    }

    #[test]
    fn residual_contains_zero_at_the_kink_split() {
        let p = hinge_c5(0.0);
        assert!(l2_root_residual(&p, 0.4).contains(0.0, 0.0));
        let far = l2_root_residual(&p, 5.0);
        assert!(far.hi < 0.0 && far.lo >= -5.0 && far.hi <= -3.0);
    }

    #[test]
    fn hinge_worked_examples() {
        let s = solve_l2_envelope(&hinge_c5(0.0)).unwrap();
        assert_abs_diff_eq!(s.value, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(s.z, 0.4, epsilon = 1e-12);
        assert_abs_diff_eq!(s.theta0[0], -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.theta1[0], 1.0, epsilon = 1e-12);

        let s = solve_l2_envelope(&hinge_c5(-3.0)).unwrap();
        assert_abs_diff_eq!(s.value, 11.375, epsilon = 1e-12);
        assert_abs_diff_eq!(s.z, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.theta0[0], -5.5, epsilon = 1e-12);
        assert_abs_diff_eq!(s.theta1[0], -0.5, epsilon = 1e-12);
        assert_eq!(s.source, RootSource::Candidate);
    }

    #[test]
    fn smooth_region_residual_is_a_point() {
        let p = L2EnvelopeProblem::new(vec![1.0], 1.0, LossSpec::unweighted(LossKind::Logistic), vec![0.3], 0.4);
        assert!(l2_root_residual(&p, 0.2).is_singleton());
    }

    #[test]
    fn logistic_uses_bisection_and_matches_oracle() {
        let p = L2EnvelopeProblem::new(
            vec![1.0, -0.5],
            16.0,
            LossSpec::unweighted(LossKind::Logistic),
            vec![0.2, 0.7],
            0.3,
        );
        let s = solve_l2_envelope(&p).unwrap();
        assert_eq!(s.source, RootSource::Bisection);
        assert_abs_diff_eq!(s.value, oracle(&p), epsilon = 1e-9);
    }

    #[test]
    fn logistic_residual_is_strictly_decreasing() {
        let p = L2EnvelopeProblem::new(vec![0.8], 3.0, LossSpec::unweighted(LossKind::Logistic), vec![-0.4], 0.6);
        let mut prev = f64::INFINITY;
        for k in -200..=200 {
            let m = l2_root_residual(&p, k as f64 * 0.05).pick();
            assert!(m < prev);
            prev = m;
        }
    }

    #[test]
    fn squared_difference_has_a_closed_root() {
        let p =
            L2EnvelopeProblem::new(vec![2.0], 1.5, LossSpec::unweighted(LossKind::SquaredDifference), vec![0.1], 0.25);
        let s = solve_l2_envelope(&p).unwrap();
        assert_eq!(s.source, RootSource::Candidate);
        assert_abs_diff_eq!(s.value, oracle(&p), epsilon = 1e-10);
    }

    #[test]
    fn full_norm_curvature_matches_oracle() {
        let p = hinge_c5(0.3).with_curvature(2.0);
        let s = solve_l2_envelope(&p).unwrap();
        assert_abs_diff_eq!(s.value, oracle(&p), epsilon = 1e-9);
    }

    fn arb_problem(kind: LossKind) -> impl Strategy<Value = L2EnvelopeProblem> {
        (
            proptest::collection::vec(-2.0..2.0f64, 1..=3),
            0.1..20.0f64,
            0.2..3.0f64,
            0.2..3.0f64,
            proptest::collection::vec(-3.0..3.0f64, 3),
            0.01..0.99f64,
            proptest::bool::ANY,
        )
            .prop_filter("nonzero x", |(x, ..)| norm_sq(x) > 1e-6)
            .prop_map(move |(x, c, c0, c1, th, y, half)| {
                let m = x.len();
                L2EnvelopeProblem::new(x, c, LossSpec::new(kind, c0, c1).unwrap(), th[..m].to_vec(), y)
                    .with_curvature(if half { 1.0 } else { 2.0 })
            })
    }

    proptest! {
        #[test]
        fn hinge_candidates_complete(p in arb_problem(LossKind::Hinge)) {
            let s = solve_l2_envelope(&p).unwrap();
            prop_assert_eq!(s.source, RootSource::Candidate);
            prop_assert!((s.value - oracle(&p)).abs() <= 1e-7 * (1.0 + s.value.abs()));
        }

        #[test]
        fn squared_hinge_candidates_complete(p in arb_problem(LossKind::SquaredHinge)) {
            let s = solve_l2_envelope(&p).unwrap();
            prop_assert_eq!(s.source, RootSource::Candidate);
            prop_assert!((s.value - oracle(&p)).abs() <= 1e-7 * (1.0 + s.value.abs()));
        }

        #[test]
        fn split_reproduces_theta(p in arb_problem(LossKind::Logistic)) {
            let s = solve_l2_envelope(&p).unwrap();
            for i in 0..p.theta.len() {
                let back = (1.0 - p.y) * s.theta0[i] + p.y * s.theta1[i];
                prop_assert!((back - p.theta[i]).abs() <= 1e-12 * (1.0 + p.theta[i].abs() + s.theta0[i].abs() + s.theta1[i].abs()));
            }
        }
    }
}

//! Binary envelopes of `d(θ, y) = ‖θ‖₁ + C·l(⟨x, θ⟩, y)` over a finite box `[b, t]`.
//!
//! Writing `u = θ⁰`, the envelope objective is
//! `(1−y) Σ (|uᵢ| + |cᵢ − uᵢ|) + (1−y)·C·l₀(xᵀu) + y·C·l₁((xᵀθ − (1−y)xᵀu)/y)`
//! with `c = θ/(1−y)` and `u ∈ [b′, t′]`. Each regularizer term is flat between 0 and
//! `cᵢ` and has slope 2 outside, while the loss part has derivative `(1−y)·C·a(xᵀu)` with
//! `a ≥ 0` non-decreasing. The minimizer starts from the flat point with the smallest
//! margin and then pushes coordinates in order of decreasing `|xᵢ|` while
//! `C·a(xᵀu)·|xᵢ| > 2`.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::loss::{LossKind, LossSpec};
use crate::math::{clamp, dot, norm1};
use crate::scalar::bisect_decreasing;

/// Tolerance used to accept a closed-form `z` candidate.
pub const CANDIDATE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct L1EnvelopeProblem {
    pub x: Vec<f64>,
    pub c: f64,
    pub loss: LossSpec,
    pub theta: Vec<f64>,
    pub y: f64,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

/// Working state of the coordinate-pushing procedure.
#[derive(Debug, Clone, PartialEq)]
pub struct AuxState {
    pub v: Vec<f64>,
    pub b_prime: Vec<f64>,
    pub t_prime: Vec<f64>,
    /// Coordinates by decreasing `|xᵢ|`, ties by ascending index.
    pub order: Vec<usize>,
}

/// How the procedure terminated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AuxExit {
    /// The guard held for coordinate `k` before it was pushed.
    Guard { k: usize },
    /// Coordinate `k` overshot and was moved back by a root of the stationarity condition.
    BackSolve { k: usize },
    /// Every coordinate was pushed to its bound.
    Exhausted,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuxStage {
    pub k: usize,
    /// `C·min a(xᵀV)·|x_k|` before pushing `k`.
    pub pressure_before: f64,
    /// Same quantity after pushing `k` to its bound.
    pub pressure_after: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuxOutcome {
    pub v: Vec<f64>,
    pub exit: AuxExit,
    pub z: f64,
    /// True when a hinge-type `z` had to be found by bisection instead of the listed candidates.
    pub fallback: bool,
    pub stages: Vec<AuxStage>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct L1Solution {
    pub value: f64,
    pub theta0: Vec<f64>,
    pub theta1: Vec<f64>,
    pub aux: AuxOutcome,
}

impl L1EnvelopeProblem {
    pub fn validate(&self) -> Result<()> {
        let m = self.x.len();
        if self.theta.len() != m || self.lower.len() != m || self.upper.len() != m {
            return Err(Error::InvalidInput("dimension mismatch in L1 envelope problem".into()));
        }
        if !(self.y > 0.0 && self.y < 1.0) {
            return Err(Error::Domain(alloc::format!("fractional y required, got {}", self.y)));
        }
        if self.lower.iter().chain(&self.upper).any(|v| !v.is_finite()) {
            return Err(Error::Domain(
                "L1 envelope at fractional y needs a bounded box; it is discontinuous otherwise".into(),
            ));
        }
        for i in 0..m {
            if !(self.lower[i] <= self.theta[i] && self.theta[i] <= self.upper[i]) {
                return Err(Error::Domain(alloc::format!("theta[{i}] outside the box")));
            }
        }
        if self.loss.kind == LossKind::SquaredDifference {
            return Err(Error::Unsupported(
                "squared difference with L1 has no envelope evaluator; it is already jointly convex".into(),
            ));
        }
        Ok(())
    }

    /// Margin of `θ¹` when `θ⁰` has margin `q`.
    pub fn partner_margin(&self, q: f64) -> f64 {
        (dot(&self.x, &self.theta) - (1.0 - self.y) * q) / self.y
    }

    fn a_near(&self, q: f64) -> Interval {
        let near = |r: f64, label: bool| {
            let e = CANDIDATE_TOL * (1.0 + r.abs());
            Interval { lo: self.loss.subdifferential(r - e, label).lo, hi: self.loss.subdifferential(r + e, label).hi }
        };
        near(q, false).sub(&near(self.partner_margin(q), true))
    }

    /// Envelope objective at `θ⁰ = u`, evaluated without dividing by `y`.
    pub fn objective(&self, u: &[f64]) -> f64 {
        let y = self.y;
        let rest: Vec<f64> = self.theta.iter().zip(u).map(|(t, v)| t - (1.0 - y) * v).collect();
        let q = dot(&self.x, u);
        (1.0 - y) * (norm1(u) + self.c * self.loss.value(q, false))
            + norm1(&rest)
            + y * self.c * self.loss.value(self.partner_margin(q), true)
    }

    fn pressure(&self, q: f64, k: usize) -> f64 {
        self.c * a_multimap(self, q).lo.max(0.0) * self.x[k].abs()
    }

    /// The guard: some `r ∈ a(q)` has `C·|r|·|x_k| ≤ 2`.
    fn guard(&self, q: f64, k: usize) -> bool {
        self.c * a_multimap(self, q).min_abs() * self.x[k].abs() <= 2.0
    }
}

/// `a(q) = ∂l₀(q) − ∂l₁((xᵀθ − (1−y)q)/y)`.
pub fn a_multimap(p: &L1EnvelopeProblem, q: f64) -> Interval {
    p.loss.subdifferential(q, false).sub(&p.loss.subdifferential(p.partner_margin(q), true))
}

/// `b′ = max(b, (θ − y·t)/(1−y))` and `t′ = min(t, (θ − y·b)/(1−y))`: the `θ⁰` values
/// whose partner `θ¹` stays inside the box.
///
/// `b′ ≤ θ ≤ t′` holds exactly for `θ` in the box; the clamp keeps it under rounding
/// when `θ` sits on a face.
pub fn primed_bounds(p: &L1EnvelopeProblem) -> (Vec<f64>, Vec<f64>) {
    let y = p.y;
    let bp =
        (0..p.x.len()).map(|i| p.lower[i].max((p.theta[i] - y * p.upper[i]) / (1.0 - y)).min(p.theta[i])).collect();
    let tp =
        (0..p.x.len()).map(|i| p.upper[i].min((p.theta[i] - y * p.lower[i]) / (1.0 - y)).max(p.theta[i])).collect();
    (bp, tp)
}

/// The flat-region point with the smallest margin: clamp 0 into `[b′ᵢ, t′ᵢ]` when
/// `θᵢ > 0 ⇔ xᵢ > 0`, otherwise clamp `θᵢ/(1−y)`.
pub fn theta_prime_projection(p: &L1EnvelopeProblem) -> Result<Vec<f64>> {
    let (bp, tp) = primed_bounds(p);
    let mut out = Vec::with_capacity(p.x.len());
    for i in 0..p.x.len() {
        if bp[i] > tp[i] {
            return Err(Error::Infeasible(alloc::format!(
                "empty primed box at coordinate {i}: [{}, {}]",
                bp[i],
                tp[i]
            )));
        }
        let target = if (p.theta[i] > 0.0) == (p.x[i] > 0.0) { 0.0 } else { p.theta[i] / (1.0 - p.y) };
        out.push(clamp(target, bp[i], tp[i]));
    }
    Ok(out)
}

fn sort_order(x: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&i, &j| x[j].abs().total_cmp(&x[i].abs()).then(i.cmp(&j)));
    order
}

/// Closed-form `z` candidates for coordinate `k`, in listed order.
pub fn z_candidates(p: &L1EnvelopeProblem, v: &[f64], k: usize) -> Option<Vec<f64>> {
    let xk = p.x[k];
    let xk2 = xk * xk;
    let y = p.y;
    let v0 = dot(&p.x, v);
    let xt = dot(&p.x, &p.theta);
    match p.loss.kind {
        LossKind::Hinge => Some(alloc::vec![(1.0 + v0) / xk2, (y - xt + (1.0 - y) * v0) / ((1.0 - y) * xk2),]),
        LossKind::SquaredHinge => {
            let (c0, c1) = (p.loss.c0, p.loss.c1);
            let v1 = -(xt - (1.0 - y) * v0) / y;
            let tau = 2.0 / (p.c * xk.abs());
            Some(alloc::vec![
                (1.0 + v0 - tau / c0) / xk2,
                y * (1.0 + v1 - tau / c1) / ((1.0 - y) * xk2),
                y * (c0 * (1.0 + v0) + c1 * (1.0 + v1) - tau) / ((y * c0 + (1.0 - y) * c1) * xk2),
            ])
        }
        _ => None,
    }
}

/// Solves `2 ∈ C·|x_k|·a(xᵀV − z·x_k²)` for `z` between `z_end` (which moves `V_k` back
/// to `θ′_k`) and 0. Returns the root and whether bisection replaced the listed candidates.
pub fn solve_z_l1(p: &L1EnvelopeProblem, v: &[f64], k: usize, z_end: f64) -> Result<(f64, bool)> {
    let xk = p.x[k];
    if xk == 0.0 {
        return Err(Error::InvalidInput("back-solve on a zero feature".into()));
    }
    let xk2 = xk * xk;
    let q0 = dot(&p.x, v);
    let scale = p.c * xk.abs();
    let (zlo, zhi) = if z_end <= 0.0 { (z_end, 0.0) } else { (0.0, z_end) };
    let ztol = CANDIDATE_TOL * (1.0 + zlo.abs() + zhi.abs());
    if let Some(cands) = z_candidates(p, v, k) {
        let mut best: Option<(f64, f64)> = None;
        for z in cands {
            if !z.is_finite() || z < zlo - ztol || z > zhi + ztol {
                continue;
            }
            let r = p.a_near(q0 - z * xk2).scale(scale);
            if !r.contains(2.0, CANDIDATE_TOL * (1.0 + r.hi.abs())) {
                continue;
            }
            let z = clamp(z, zlo, zhi);
            let mut u = v.to_vec();
            u[k] -= z * xk;
            let val = p.objective(&u);
            if best.is_none_or(|(_, bv)| val < bv) {
                best = Some((z, val));
            }
        }
        if let Some((z, _)) = best {
            return Ok((z, false));
        }
    }
    // r(z) is non-increasing in z: moving z down raises the margin and a with it.
    let r = |z: f64| p.a_multimap_scaled(q0 - z * xk2, scale).shift(-2.0);
    let z = bisect_decreasing(r, zlo, zhi, 400)?;
    Ok((z, p.loss.kind != LossKind::Logistic))
}

impl L1EnvelopeProblem {
    fn a_multimap_scaled(&self, q: f64, scale: f64) -> Interval {
        a_multimap(self, q).scale(scale)
    }
}

/// Runs the coordinate-pushing procedure from `theta_prime`.
pub fn aux(p: &L1EnvelopeProblem, theta_prime: &[f64]) -> Result<AuxOutcome> {
    let (bp, tp) = primed_bounds(p);
    let order = sort_order(&p.x);
    let mut v = theta_prime.to_vec();
    let mut stages = Vec::new();
    for &k in &order {
        let q = dot(&p.x, &v);
        if p.guard(q, k) {
            return Ok(AuxOutcome { v, exit: AuxExit::Guard { k }, z: 0.0, fallback: false, stages });
        }
        let before = p.pressure(q, k);
        let start = v[k];
        v[k] = if p.x[k] > 0.0 { bp[k] } else { tp[k] };
        let q_after = dot(&p.x, &v);
        stages.push(AuxStage { k, pressure_before: before, pressure_after: p.pressure(q_after, k) });
        if p.guard(q_after, k) {
            let z_end = (v[k] - start) / p.x[k];
            let (z, fallback) = solve_z_l1(p, &v, k, z_end)?;
            v[k] = clamp(v[k] - z * p.x[k], bp[k], tp[k]);
            return Ok(AuxOutcome { v, exit: AuxExit::BackSolve { k }, z, fallback, stages });
        }
    }
    Ok(AuxOutcome { v, exit: AuxExit::Exhausted, z: 0.0, fallback: false, stages })
}

/// Envelope value and minimizing split at fractional `y`.
pub fn l1_envelope_value(p: &L1EnvelopeProblem) -> Result<L1Solution> {
    p.validate()?;
    let theta_prime = theta_prime_projection(p)?;
    let out = aux(p, &theta_prime)?;
    let theta0 = out.v.clone();
    let (lo, hi) = (&p.lower, &p.upper);
    let theta1 = (0..p.x.len()).map(|i| clamp((p.theta[i] - (1.0 - p.y) * theta0[i]) / p.y, lo[i], hi[i])).collect();
    Ok(L1Solution { value: p.objective(&theta0), theta0, theta1, aux: out })
}

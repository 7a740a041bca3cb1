//! Constraints on binary label vectors and their polyhedral relaxation.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Feasibility tolerance for linear rows.
pub const LINEAR_TOL: f64 = 1e-9;

/// `coeffs · y ≤ rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearConstraint {
    pub coeffs: Vec<f64>,
    pub rhs: f64,
}

impl LinearConstraint {
    pub fn slack(&self, y: &[f64]) -> f64 {
        self.rhs - self.coeffs.iter().zip(y).map(|(a, b)| a * b).sum::<f64>()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LabelConstraintSet {
    pub n: usize,
    pub fixed: BTreeMap<usize, bool>,
    /// `Σ y_s = k`.
    pub cardinality: Option<usize>,
    pub linear: Vec<LinearConstraint>,
}

impl LabelConstraintSet {
    pub fn unconstrained(n: usize) -> Self {
        LabelConstraintSet { n, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some((&i, _)) = self.fixed.iter().find(|(i, _)| **i >= self.n) {
            return Err(Error::InvalidInput(alloc::format!("fixed label index {i} out of range")));
        }
        if let Some(k) = self.cardinality {
            if k > self.n {
                return Err(Error::Infeasible(alloc::format!("cardinality {k} exceeds {} samples", self.n)));
            }
        }
        for (j, row) in self.linear.iter().enumerate() {
            if row.coeffs.len() != self.n || !row.rhs.is_finite() || row.coeffs.iter().any(|c| !c.is_finite()) {
                return Err(Error::InvalidInput(alloc::format!("malformed linear constraint {j}")));
            }
        }
        Ok(())
    }

    pub fn free_indices(&self) -> Vec<usize> {
        (0..self.n).filter(|i| !self.fixed.contains_key(i)).collect()
    }

    pub fn fixed_ones(&self) -> usize {
        self.fixed.values().filter(|b| **b).count()
    }

    /// Cardinality left for the free labels, if constrained.
    pub fn residual_cardinality(&self) -> Option<Result<usize>> {
        self.cardinality.map(|k| {
            let ones = self.fixed_ones();
            let free = self.n - self.fixed.len();
            if ones > k || k - ones > free {
                Err(Error::Infeasible("fixed labels contradict the cardinality constraint".into()))
            } else {
                Ok(k - ones)
            }
        })
    }

    pub fn contains(&self, y: &[bool]) -> bool {
        if y.len() != self.n {
            return false;
        }
        if self.fixed.iter().any(|(&i, &b)| y[i] != b) {
            return false;
        }
        if let Some(k) = self.cardinality {
            if y.iter().filter(|b| **b).count() != k {
                return false;
            }
        }
        let yf: Vec<f64> = y.iter().map(|b| if *b { 1.0 } else { 0.0 }).collect();
        self.linear.iter().all(|r| r.slack(&yf) >= -LINEAR_TOL)
    }

    /// Membership of a fractional vector in the relaxation, up to `tol`.
    pub fn contains_fractional(&self, y: &[f64], tol: f64) -> bool {
        if y.len() != self.n || y.iter().any(|v| *v < -tol || *v > 1.0 + tol) {
            return false;
        }
        if self.fixed.iter().any(|(&i, &b)| (y[i] - if b { 1.0 } else { 0.0 }).abs() > tol) {
            return false;
        }
        if let Some(k) = self.cardinality {
            if (y.iter().sum::<f64>() - k as f64).abs() > tol * (1.0 + self.n as f64) {
                return false;
            }
        }
        self.linear.iter().all(|r| r.slack(y) >= -tol)
    }

    /// All members, in increasing binary order with label 0 as the lowest bit.
    pub fn feasible_labelings(&self) -> Result<Vec<Vec<bool>>> {
        if self.n > 24 {
            return Err(Error::InvalidInput(alloc::format!("enumeration over {} labels is too large", self.n)));
        }
        let mut out = Vec::new();
        for code in 0u64..(1u64 << self.n) {
            let y: Vec<bool> = (0..self.n).map(|i| code >> i & 1 == 1).collect();
            if self.contains(&y) {
                out.push(y);
            }
        }
        Ok(out)
    }

    /// The same set with label `i` fixed to `bit`.
    pub fn with_fixed(&self, i: usize, bit: bool) -> Result<Self> {
        if i >= self.n {
            return Err(Error::InvalidInput(alloc::format!("label index {i} out of range")));
        }
        if let Some(&b) = self.fixed.get(&i) {
            if b != bit {
                return Err(Error::Infeasible(alloc::format!("label {i} already fixed to {b}")));
            }
        }
        let mut out = self.clone();
        out.fixed.insert(i, bit);
        if let Some(r) = out.residual_cardinality() {
            r?;
        }
        Ok(out)
    }
}

/// Projection onto `[0,1]^F ∩ {Σ y = k}` by a uniform shift `τ`.
fn project_capped_simplex(v: &[f64], k: f64) -> Vec<f64> {
    let total = |tau: f64| v.iter().map(|x| (x - tau).clamp(0.0, 1.0)).sum::<f64>();
    let (mut lo, mut hi) = v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(*x), b.max(*x)));
    lo -= 1.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if total(mid) > k {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut tau = 0.5 * (lo + hi);
    // Solve exactly on the active pattern found by bisection.
    let (mut inner_sum, mut inner, mut ones) = (0.0, 0usize, 0usize);
    for x in v {
        let s = x - tau;
        if s >= 1.0 {
            ones += 1;
        } else if s > 0.0 {
            inner += 1;
            inner_sum += x;
        }
    }
    if inner > 0 {
        let exact = (inner_sum + ones as f64 - k) / inner as f64;
        let same_pattern = v.iter().all(|x| {
            let (a, b) = (x - tau, x - exact);
            (a >= 1.0) == (b >= 1.0) && (a > 0.0) == (b > 0.0)
        });
        if same_pattern {
            tau = exact;
        }
    }
    v.iter().map(|x| (x - tau).clamp(0.0, 1.0)).collect()
}

fn project_simple(y: &[f64], cons: &LabelConstraintSet) -> Result<Vec<f64>> {
    let mut out: Vec<f64> = y.iter().map(|v| v.clamp(0.0, 1.0)).collect();
    for (&i, &b) in &cons.fixed {
        out[i] = if b { 1.0 } else { 0.0 };
    }
    if let Some(k) = cons.residual_cardinality() {
        let k = k?;
        let free = cons.free_indices();
        let sub: Vec<f64> = free.iter().map(|&i| y[i]).collect();
        let proj = project_capped_simplex(&sub, k as f64);
        for (j, &i) in free.iter().enumerate() {
            out[i] = proj[j];
        }
    }
    Ok(out)
}

/// Euclidean projection onto the relaxation `[0,1]^S ∩ fixed ∩ cardinality ∩ {Ay ≤ b}`.
///
/// Generic rows are handled by Dykstra's alternating projections to tolerance 1e-9.
pub fn project_labels(y: &[f64], cons: &LabelConstraintSet) -> Result<Vec<f64>> {
    cons.validate()?;
    if y.len() != cons.n {
        return Err(Error::InvalidInput(alloc::format!("label vector has length {}, expected {}", y.len(), cons.n)));
    }
    let base = project_simple(y, cons)?;
    if cons.linear.is_empty() || cons.linear.iter().all(|r| r.slack(&base) >= 0.0) {
        return Ok(base);
    }
    let sets = cons.linear.len() + 1;
    let mut x = y.to_vec();
    let mut incr = alloc::vec![alloc::vec![0.0; cons.n]; sets];
    for _ in 0..20_000 {
        let prev = x.clone();
        for (s, inc) in incr.iter_mut().enumerate() {
            let z: Vec<f64> = x.iter().zip(inc.iter()).map(|(a, b)| a + b).collect();
            let p = if s == 0 {
                project_simple(&z, cons)?
            } else {
                let row = &cons.linear[s - 1];
                let norm2: f64 = row.coeffs.iter().map(|a| a * a).sum();
                let slack = row.slack(&z);
                if slack >= 0.0 || norm2 == 0.0 {
                    if norm2 == 0.0 && slack < 0.0 {
                        return Err(Error::Infeasible(alloc::format!(
                            "linear constraint {} is 0 ≤ {}",
                            s - 1,
                            row.rhs
                        )));
                    }
                    z.clone()
                } else {
                    z.iter().zip(&row.coeffs).map(|(v, a)| v + slack / norm2 * a).collect()
                }
            };
            *inc = z.iter().zip(&p).map(|(a, b)| a - b).collect();
            x = p;
        }
        let moved = x.iter().zip(&prev).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if moved < 1e-12 && cons.contains_fractional(&x, LINEAR_TOL) {
            return Ok(x);
        }
    }
    if cons.contains_fractional(&x, LINEAR_TOL) {
        Ok(x)
    } else {
        Err(Error::Infeasible("alternating projections did not reach the relaxation".into()))
    }
}

//! Slow brute-force references: grid plus golden-section minimization of the
//! envelope, sampled convexity probes, and exhaustive enumeration of the
//! mixed-integer program. Everything here is deliberately simple.

use alloc::vec::Vec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::envelope::xi_map;
use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::loss::RegularizerKind;
use crate::scalar::nested_golden;

/// Argument tolerance of every golden-section search in this module.
pub const ORACLE_TOL: f64 = 1e-9;

/// Upper limit on the number of grid points.
pub const MAX_GRID_POINTS: usize = 10_000_000;

/// Axis-aligned grid over the `θ⁰` box.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub step: f64,
    /// Golden-section refinements around the best cell; 0 keeps the raw grid minimum.
    pub refinement_rounds: usize,
}

impl GridSpec {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>, step: f64) -> Result<Self> {
        let g = GridSpec { lower, upper, step, refinement_rounds: 1 };
        g.validate()?;
        Ok(g)
    }

    /// Cube `[−r, r]^m`.
    pub fn cube(m: usize, r: f64, step: f64) -> Result<Self> {
        GridSpec::new(alloc::vec![-r; m], alloc::vec![r; m], step)
    }

    pub fn validate(&self) -> Result<()> {
        if self.lower.len() != self.upper.len() || self.lower.is_empty() {
            return Err(Error::InvalidInput("grid bounds must have equal positive length".into()));
        }
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::InvalidInput(alloc::format!("grid step must be positive, got {}", self.step)));
        }
        for (l, u) in self.lower.iter().zip(&self.upper) {
            if !(l.is_finite() && u.is_finite() && l <= u) {
                return Err(Error::InvalidInput("grid bounds must be finite and ordered".into()));
            }
        }
        let total = self.axis_counts().iter().try_fold(1usize, |acc, n| acc.checked_mul(*n));
        match total {
            Some(t) if t <= MAX_GRID_POINTS => Ok(()),
            _ => Err(Error::InvalidInput("grid exceeds the point limit".into())),
        }
    }

    pub fn axis_counts(&self) -> Vec<usize> {
        self.lower.iter().zip(&self.upper).map(|(l, u)| libm::floor((u - l) / self.step + 1e-9) as usize + 1).collect()
    }

    fn point(&self, idx: &[usize]) -> Vec<f64> {
        idx.iter().enumerate().map(|(i, k)| (self.lower[i] + *k as f64 * self.step).min(self.upper[i])).collect()
    }
}

/// `inf { (1−y)·d₀(θ⁰) + y·d₁(θ¹) : (1−y)θ⁰ + yθ¹ = θ }` with `θ⁰` restricted to the grid box.
///
/// `d0` and `d1` must return `+∞` outside their domains. Supports `m ≤ 2`.
pub fn oracle_psi<D0, D1>(d0: D0, d1: D1, theta: &[f64], y: f64, grid: &GridSpec) -> Result<f64>
where
    D0: Fn(&[f64]) -> f64,
    D1: Fn(&[f64]) -> f64,
{
    grid.validate()?;
    let m = theta.len();
    if m == 0 || m > 2 || grid.lower.len() != m {
        return Err(Error::InvalidInput("oracle_psi supports dimension 1 or 2 matching the grid".into()));
    }
    if !(y > 0.0 && y < 1.0) {
        return Err(Error::Domain(alloc::format!("oracle_psi needs y in (0, 1), got {y}")));
    }
    let obj = |t0: &[f64]| -> f64 {
        let a = d0(t0);
        if !a.is_finite() {
            return f64::INFINITY;
        }
        let t1 = match xi_map(theta, y, t0) {
            Ok(t) => t,
            Err(_) => return f64::INFINITY,
        };
        let b = d1(&t1);
        if !b.is_finite() {
            return f64::INFINITY;
        }
        (1.0 - y) * a + y * b
    };
    let counts = grid.axis_counts();
    let mut best: (Vec<f64>, f64) = (Vec::new(), f64::INFINITY);
    let mut idx = alloc::vec![0usize; m];
    loop {
        let p = grid.point(&idx);
        let v = obj(&p);
        if v < best.1 {
            best = (p, v);
        }
        let mut i = 0;
        while i < m {
            idx[i] += 1;
            if idx[i] < counts[i] {
                break;
            }
            idx[i] = 0;
            i += 1;
        }
        if i == m {
            break;
        }
    }
    if !best.1.is_finite() {
        return Err(Error::Domain("θ¹ leaves the domain of d₁ at every grid point".into()));
    }
    for _ in 0..grid.refinement_rounds {
        let lo: Vec<f64> = (0..m).map(|i| (best.0[i] - grid.step).max(grid.lower[i])).collect();
        let hi: Vec<f64> = (0..m).map(|i| (best.0[i] + grid.step).min(grid.upper[i])).collect();
        let local = nested_golden(&obj, &lo, &hi, ORACLE_TOL);
        if local.1 < best.1 {
            best = local;
        }
        if m == 2 {
            // Joint convexity in θ⁰ makes the full-box search exact as well.
            let global = nested_golden(&obj, &grid.lower, &grid.upper, ORACLE_TOL);
            if global.1 < best.1 {
                best = global;
            }
        }
    }
    Ok(best.1)
}

/// Largest sampled `f(λp + (1−λ)q) − λf(p) − (1−λ)f(q)` over the box `[lower, upper]`.
///
/// Non-positive up to rounding for a convex `f`. Pairs with a non-finite value are skipped.
pub fn oracle_convexity<F: Fn(&[f64]) -> f64>(f: F, lower: &[f64], upper: &[f64], samples: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = lower.len();
    let mut worst = f64::NEG_INFINITY;
    let draw = |rng: &mut ChaCha8Rng| -> Vec<f64> {
        (0..n).map(|i| if upper[i] > lower[i] { rng.gen_range(lower[i]..=upper[i]) } else { lower[i] }).collect()
    };
    for _ in 0..samples {
        let p = draw(&mut rng);
        let q = draw(&mut rng);
        let lam: f64 = rng.gen_range(0.0..=1.0);
        let mid: Vec<f64> = p.iter().zip(&q).map(|(a, b)| lam * a + (1.0 - lam) * b).collect();
        let (fp, fq, fm) = (f(&p), f(&q), f(&mid));
        if !(fp.is_finite() && fq.is_finite() && fm.is_finite()) {
            continue;
        }
        worst = worst.max(fm - lam * fp - (1.0 - lam) * fq);
    }
    worst
}

/// Optimum of `min φ(θ, y)` over `θ ∈ Θ` and feasible binary `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct MipSolution {
    pub value: f64,
    pub y: Vec<bool>,
    pub theta: Vec<f64>,
}

/// Upper limit on `|S|` for exhaustive enumeration.
pub const MIP_MAX_SAMPLES: usize = 12;

/// Box that contains every minimizer of `θ ↦ φ(θ, y)`, derived from `φ ≥ ω`.
fn supervised_box(inst: &Instance, y: &[bool]) -> (Vec<f64>, Vec<f64>) {
    let reg = &inst.reg;
    let mut start: Vec<f64> = alloc::vec![0.0; inst.dim()];
    reg.project(&mut start);
    let v = inst.objective_extended(&start, y);
    let r = match reg.kind {
        RegularizerKind::L2 => libm::sqrt(2.0 * v / reg.curvature()),
        RegularizerKind::L1 => v,
    } * (1.0 + 1e-9)
        + 1e-9;
    let lo = reg.lower.iter().map(|l| l.max(-r)).collect();
    let hi = reg.upper.iter().map(|u| u.min(r)).collect();
    (lo, hi)
}

/// Minimizes the supervised problem for one labeling by nested golden-section search.
pub fn oracle_supervised(inst: &Instance, y: &[bool]) -> Result<(f64, Vec<f64>)> {
    if inst.dim() > 3 {
        return Err(Error::Unsupported("the supervised oracle supports dimension at most 3".into()));
    }
    let (lo, hi) = supervised_box(inst, y);
    let f = |t: &[f64]| inst.objective_extended(t, y);
    let (theta, value) = nested_golden(&f, &lo, &hi, ORACLE_TOL);
    if !value.is_finite() {
        return Err(Error::Numeric("supervised oracle found no finite value".into()));
    }
    Ok((value, theta))
}

/// Enumerates every feasible labeling and solves each supervised problem.
/// Ties keep the first labeling in increasing binary order.
pub fn oracle_mip(inst: &Instance) -> Result<MipSolution> {
    inst.validate()?;
    if inst.n_samples() > MIP_MAX_SAMPLES {
        return Err(Error::InvalidInput(alloc::format!(
            "exhaustive enumeration is limited to {MIP_MAX_SAMPLES} samples"
        )));
    }
    let members = inst.labels.feasible_labelings()?;
    let mut best: Option<MipSolution> = None;
    for y in members {
        let (value, theta) = oracle_supervised(inst, &y)?;
        if best.as_ref().is_none_or(|b| value < b.value) {
            best = Some(MipSolution { value, y, theta });
        }
    }
    best.ok_or_else(|| Error::Infeasible("no binary labeling satisfies the constraints".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envelope::TermExtension;
    use crate::instance::Decomposition;
    use crate::labels::LabelConstraintSet;
    use crate::loss::{LossKind, LossSpec, RegularizerSpec};
    use alloc::vec;
    use approx::assert_abs_diff_eq;

    fn hinge_term(c: f64) -> TermExtension {
        TermExtension::full_term(
            vec![1.0],
            c,
            LossSpec::unweighted(LossKind::Hinge),
            RegularizerSpec::unbounded(RegularizerKind::L2, true, 1),
        )
        .unwrap()
    }

    #[test]
    fn psi_worked_example_at_two_resolutions() {
        let t = hinge_term(5.0);
        for step in [0.05, 0.025] {
            let g = GridSpec::cube(1, 10.0, step).unwrap();
            let v = oracle_psi(|p| t.d(p, false), |p| t.d(p, true), &[0.0], 0.5, &g).unwrap();
            assert_abs_diff_eq!(v, 0.5, epsilon = 1e-6);
        }
    }

    #[test]
    fn psi_of_identical_convex_terms_is_the_term() {
        let f = |p: &[f64]| (p[0] - 0.3) * (p[0] - 0.3) + libm::fabs(p[1]);
        let g = GridSpec::cube(2, 3.0, 0.1).unwrap();
        let v = oracle_psi(f, f, &[0.5, -0.25], 0.3, &g).unwrap();
        assert_abs_diff_eq!(v, f(&[0.5, -0.25]), epsilon = 1e-7);
    }

    #[test]
    fn psi_approaches_d1_near_one() {
        let t = hinge_term(5.0);
        let g = GridSpec::cube(1, 10.0, 0.05).unwrap();
        let v = oracle_psi(|p| t.d(p, false), |p| t.d(p, true), &[-0.5], 1.0 - 1e-6, &g).unwrap();
        assert_abs_diff_eq!(v, t.d(&[-0.5], true), epsilon = 1e-4);
    }

    #[test]
    fn psi_rejects_empty_domain() {
        let g = GridSpec::cube(1, 1.0, 0.5).unwrap();
        let r = oracle_psi(|_| f64::INFINITY, |_| 0.0, &[0.0], 0.5, &g);
        assert!(matches!(r, Err(Error::Domain(_))));
    }

    #[test]
    fn grid_guard() {
        assert!(GridSpec::cube(2, 1e4, 1e-3).is_err());
        assert!(GridSpec::cube(1, 1.0, 0.0).is_err());
    }

    #[test]
    fn convexity_probe() {
        let sq = |p: &[f64]| p.iter().map(|v| v * v).sum::<f64>();
        assert!(oracle_convexity(sq, &[-2.0, -2.0], &[2.0, 2.0], 2000, 7) <= 1e-12);
        let t = hinge_term(5.0);
        let raw = |p: &[f64]| t.raw(&p[..1], p[1]);
        assert!(oracle_convexity(raw, &[-3.0, 0.0], &[3.0, 1.0], 2000, 7) > 0.01);
    }

    fn two_sample() -> Instance {
        let mut labels = LabelConstraintSet::unconstrained(2);
        labels.cardinality = Some(1);
        Instance::new(
            vec![vec![1.0], vec![-1.0]],
            1.0,
            LossSpec::unweighted(LossKind::Hinge),
            RegularizerSpec::unbounded(RegularizerKind::L2, true, 1),
            labels,
            Decomposition::FullTerm,
        )
        .unwrap()
    }

    #[test]
    fn mip_two_sample_optimum() {
        let sol = oracle_mip(&two_sample()).unwrap();
        assert_abs_diff_eq!(sol.value, 0.5, epsilon = 1e-9);
        // Both labelings attain 0.5; the first in binary order is (1, 0) with θ = 1.
        assert_eq!(sol.y, vec![true, false]);
        assert_abs_diff_eq!(sol.theta[0], 1.0, epsilon = 1e-6);
    }

    #[test]
    fn mip_fully_supervised_and_infeasible() {
        let inst = two_sample();
        let mut fixed = inst.labels.clone();
        fixed.fixed.insert(0, false);
        fixed.fixed.insert(1, true);
        let sol = oracle_mip(&inst.with_labels(fixed)).unwrap();
        assert_eq!(sol.y, vec![false, true]);
        assert_abs_diff_eq!(sol.value, 0.5, epsilon = 1e-9);
        let mut bad = LabelConstraintSet::unconstrained(2);
        bad.fixed.insert(0, true);
        bad.fixed.insert(1, true);
        bad.cardinality = Some(1);
        assert!(matches!(oracle_mip(&inst.with_labels(bad)), Err(Error::Infeasible(_))));
    }
}

//! Continuous relaxation `min φ′(θ, y)` over `θ ∈ Θ` and `y` in the polyhedral relaxation
//! of the label constraints.
//!
//! The default solver is the deep-cut ellipsoid method on a reduced space: fixed labels
//! are removed, and under a cardinality constraint one free label is expressed through the
//! others, so the feasible set has an interior. Its lower bound is certified. The
//! projected-subgradient method is the alternative and the fallback when generic linear
//! rows leave no interior.

use alloc::vec::Vec;

use crate::ellipsoid::{minimize, ConvexProblem, EllipsoidOptions};
use crate::envelope::DEFAULT_W_CAP;
use crate::error::{Error, Result};
use crate::instance::{Decomposition, ExtendedObjective, Instance};
use crate::labels::{project_labels, LabelConstraintSet, LINEAR_TOL};
use crate::loss::RegularizerKind;
use crate::math::{dot, norm1, norm2, norm_sq};

/// Which convex extension of `φ` is relaxed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Extension {
    /// `c = ω` with loss terms that vanish at fractional labels.
    Trivial,
    /// Per-term envelopes for the instance's decomposition.
    Decomposed,
    /// The tightest extension `φ**` over the label set.
    Theorem1,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RelaxMethod {
    Ellipsoid,
    ProjectedSubgradient,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelaxOptions {
    /// Iteration cap of the chosen method.
    pub budget: usize,
    /// Target gap between the best value and the certified lower bound.
    pub tol: f64,
    /// Replacement for infinite `y`-slopes at integer labels.
    pub w_cap: f64,
    pub method: RelaxMethod,
    /// Known upper bound on the optimum; enables Polyak steps in the subgradient method.
    pub upper_bound: Option<f64>,
}

impl Default for RelaxOptions {
    fn default() -> Self {
        RelaxOptions {
            budget: 50_000,
            tol: 1e-9,
            w_cap: DEFAULT_W_CAP,
            method: RelaxMethod::Ellipsoid,
            upper_bound: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelaxationResult {
    pub theta: Vec<f64>,
    pub y: Vec<f64>,
    /// `φ′(theta, y)`.
    pub value: f64,
    pub iterations: usize,
    /// `value − lower_bound`, or 0 when no bound is available.
    pub gap_estimate: f64,
    /// Certified lower bound on the relaxation optimum, `−∞` when none is known.
    pub lower_bound: f64,
}

/// Decomposition used for an extension of `inst`.
pub fn decomposition_for(inst: &Instance, extension: Extension) -> Decomposition {
    match extension {
        Extension::Trivial => Decomposition::LossOnly,
        _ => inst.decomposition,
    }
}

/// Minimizes the chosen extension over the relaxation of `inst.labels`.
pub fn solve_relaxation(inst: &Instance, extension: Extension, opts: RelaxOptions) -> Result<RelaxationResult> {
    inst.validate()?;
    if extension == Extension::Theorem1 {
        return theorem1_relaxation(inst, opts);
    }
    let mut ext = inst.with_decomposition(decomposition_for(inst, extension)).build_extensions()?;
    ext.w_cap = opts.w_cap;
    solve_extended(&ext, opts)
}

/// `min_θ φ(θ, y)` for one binary labeling.
pub fn solve_supervised(inst: &Instance, y: &[bool], opts: RelaxOptions) -> Result<RelaxationResult> {
    if y.len() != inst.n_samples() {
        return Err(Error::InvalidInput("labeling length differs from sample count".into()));
    }
    let mut labels = LabelConstraintSet::unconstrained(inst.n_samples());
    labels.fixed = y.iter().copied().enumerate().collect();
    let pinned = inst.with_labels(labels).with_decomposition(Decomposition::LossOnly);
    let mut ext = pinned.build_extensions()?;
    ext.w_cap = opts.w_cap;
    solve_extended(&ext, opts)
}

/// The minimum of `φ**` over `conv Y` equals the minimum of `φ` over `Y`.
fn theorem1_relaxation(inst: &Instance, opts: RelaxOptions) -> Result<RelaxationResult> {
    if !inst.labels.linear.is_empty() {
        return Err(Error::Unsupported(
            "the tightest-extension relaxation needs fixed and cardinality constraints only".into(),
        ));
    }
    if inst.n_samples() > 16 {
        return Err(Error::InvalidInput("the tightest-extension relaxation enumerates at most 16 labels".into()));
    }
    let mut best: Option<RelaxationResult> = None;
    let mut lower = f64::INFINITY;
    let mut iterations = 0;
    for y in inst.labels.feasible_labelings()? {
        let r = solve_supervised(inst, &y, opts)?;
        iterations += r.iterations;
        lower = lower.min(r.lower_bound);
        if best.as_ref().is_none_or(|b| r.value < b.value) {
            best = Some(r);
        }
    }
    let mut best = best.ok_or_else(|| Error::Infeasible("no binary labeling satisfies the constraints".into()))?;
    best.iterations = iterations;
    best.lower_bound = lower;
    best.gap_estimate = (best.value - lower).max(0.0);
    Ok(best)
}

fn to_f64(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

/// Minimizes an assembled extension over the relaxation of its instance's labels.
pub fn solve_extended(ext: &ExtendedObjective, opts: RelaxOptions) -> Result<RelaxationResult> {
    let labels = &ext.instance.labels;
    if let Some(r) = labels.residual_cardinality() {
        r?;
    }
    if labels.free_indices().is_empty() {
        let y: Vec<bool> = (0..labels.n).map(|i| labels.fixed[&i]).collect();
        if !labels.contains(&y) {
            return Err(Error::Infeasible("the fixed labeling violates a linear constraint".into()));
        }
    }
    match opts.method {
        RelaxMethod::Ellipsoid => {
            let reduced = Reduced::new(ext)?;
            match reduced.solve(opts)? {
                Some(r) => Ok(r),
                None if !labels.linear.is_empty() => projected_subgradient(ext, opts),
                None => Err(Error::Infeasible("the relaxation is empty".into())),
            }
        }
        RelaxMethod::ProjectedSubgradient => projected_subgradient(ext, opts),
    }
}

/// A feasible starting point: the projection of `0` into `Θ` and of `½` into the labels.
fn feasible_start(ext: &ExtendedObjective) -> Result<(Vec<f64>, Vec<f64>)> {
    let inst = &ext.instance;
    let mut theta = alloc::vec![0.0; inst.dim()];
    inst.reg.project(&mut theta);
    let y = project_labels(&alloc::vec![0.5; inst.n_samples()], &inst.labels)?;
    Ok((theta, y))
}

/// Ball radius around the origin containing every `θ` of a minimizer.
fn minimizer_radius(ext: &ExtendedObjective) -> Result<f64> {
    let (theta, y) = feasible_start(ext)?;
    let v = ext.value(&theta, &y)?;
    Ok(ext.theta_radius(v))
}

/// `(θ, y)` → reduced coordinates `(θ on non-degenerate axes, free labels minus the pivot)`.
struct Reduced<'a> {
    ext: &'a ExtendedObjective,
    /// Full `θ` with degenerate axes filled in.
    theta_base: Vec<f64>,
    theta_axes: Vec<usize>,
    /// Full `y` with fixed and forced labels filled in.
    y_base: Vec<f64>,
    label_vars: Vec<usize>,
    /// `(index, k′)` with `y_index = k′ − Σ u`.
    pivot: Option<(usize, f64)>,
    radius: f64,
    /// Rows `Σ a_j u_j ≤ β` in reduced label coordinates.
    rows: Vec<(Vec<f64>, f64)>,
}

impl<'a> Reduced<'a> {
    fn new(ext: &'a ExtendedObjective) -> Result<Self> {
        let inst = &ext.instance;
        let labels = &inst.labels;
        let reg = &inst.reg;
        let mut theta_base = alloc::vec![0.0; inst.dim()];
        reg.project(&mut theta_base);
        let theta_axes: Vec<usize> = (0..inst.dim()).filter(|&i| reg.upper[i] - reg.lower[i] > 1e-12).collect();
        let mut y_base = alloc::vec![0.0; labels.n];
        for (&i, &b) in &labels.fixed {
            y_base[i] = to_f64(b);
        }
        let free = labels.free_indices();
        let (label_vars, pivot) = match labels.residual_cardinality() {
            None => (free.clone(), None),
            Some(k) => {
                let k = k?;
                if k == 0 || k == free.len() {
                    for &i in &free {
                        y_base[i] = if k == 0 { 0.0 } else { 1.0 };
                    }
                    (Vec::new(), None)
                } else {
                    let (&p, rest) = free.split_last().expect("free labels exist when 0 < k′ < |F|");
                    (rest.to_vec(), Some((p, k as f64)))
                }
            }
        };
        let mut rows = Vec::new();
        for row in &labels.linear {
            let mut rhs = row.rhs;
            for &i in labels.fixed.keys() {
                rhs -= row.coeffs[i] * y_base[i];
            }
            if pivot.is_none() && label_vars.is_empty() {
                for &i in &free {
                    rhs -= row.coeffs[i] * y_base[i];
                }
            }
            let ap = match pivot {
                Some((p, k)) => {
                    rhs -= row.coeffs[p] * k;
                    row.coeffs[p]
                }
                None => 0.0,
            };
            rows.push((label_vars.iter().map(|&i| row.coeffs[i] - ap).collect(), rhs));
        }
        let radius = minimizer_radius(ext)?;
        Ok(Reduced { ext, theta_base, theta_axes, y_base, label_vars, pivot, radius, rows })
    }

    fn dim(&self) -> usize {
        self.theta_axes.len() + self.label_vars.len()
    }

    fn expand(&self, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut theta = self.theta_base.clone();
        for (j, &i) in self.theta_axes.iter().enumerate() {
            theta[i] = x[j];
        }
        let mut y = self.y_base.clone();
        let u = &x[self.theta_axes.len()..];
        for (j, &i) in self.label_vars.iter().enumerate() {
            y[i] = u[j];
        }
        if let Some((p, k)) = self.pivot {
            y[p] = k - u.iter().sum::<f64>();
        }
        (theta, y)
    }

    fn solve(&self, opts: RelaxOptions) -> Result<Option<RelaxationResult>> {
        let reg = &self.ext.instance.reg;
        let n = self.dim();
        if n == 0 {
            let (theta, y) = self.expand(&[]);
            if self.rows.iter().any(|(_, rhs)| *rhs < -LINEAR_TOL) {
                return Ok(None);
            }
            let value = self.ext.value(&theta, &y)?;
            return Ok(Some(RelaxationResult {
                theta,
                y,
                value,
                iterations: 0,
                gap_estimate: 0.0,
                lower_bound: value,
            }));
        }
        let mut center = Vec::with_capacity(n);
        let mut half = Vec::with_capacity(n);
        for &i in &self.theta_axes {
            let lo = reg.lower[i].max(-self.radius);
            let hi = reg.upper[i].min(self.radius);
            center.push(0.5 * (lo + hi));
            half.push((0.5 * (hi - lo)).max(1e-12));
        }
        for _ in &self.label_vars {
            center.push(0.5);
            half.push(0.5);
        }
        let eo = EllipsoidOptions { max_iter: opts.budget, tol: opts.tol };
        let r = minimize(self, center, &half, eo)?;
        let x = match r.x_best {
            Some(x) => x,
            None => {
                if r.infeasible {
                    return Ok(None);
                }
                return Err(Error::Numeric(alloc::format!(
                    "no feasible centre within {} ellipsoid iterations",
                    r.iterations
                )));
            }
        };
        let (theta, y) = self.expand(&x);
        let value = self.ext.value(&theta, &y)?;
        let lower_bound = r.lower_bound.min(value);
        Ok(Some(RelaxationResult {
            theta,
            y,
            value,
            iterations: r.iterations,
            gap_estimate: (value - lower_bound).max(0.0),
            lower_bound,
        }))
    }
}

impl ConvexProblem for Reduced<'_> {
    fn dim(&self) -> usize {
        Reduced::dim(self)
    }

    fn feasibility_cut(&self, x: &[f64]) -> Option<(f64, Vec<f64>)> {
        let n = x.len();
        let reg = &self.ext.instance.reg;
        let unit = |j: usize, s: f64| {
            let mut a = alloc::vec![0.0; n];
            a[j] = s;
            a
        };
        let nt = self.theta_axes.len();
        for (j, &i) in self.theta_axes.iter().enumerate() {
            if x[j] > reg.upper[i] {
                return Some((x[j] - reg.upper[i], unit(j, 1.0)));
            }
            if x[j] < reg.lower[i] {
                return Some((reg.lower[i] - x[j], unit(j, -1.0)));
            }
        }
        if nt > 0 {
            let (theta, _) = self.expand(x);
            let (norm, grad): (f64, Vec<f64>) = match (self.ext.instance.decomposition, reg.kind) {
                (Decomposition::LogisticPartial, _) | (_, RegularizerKind::L2) => {
                    let r = norm2(&theta);
                    (r, theta.iter().map(|v| if r > 0.0 { v / r } else { 0.0 }).collect())
                }
                (_, RegularizerKind::L1) => (
                    norm1(&theta),
                    theta
                        .iter()
                        .map(|v| {
                            if *v > 0.0 {
                                1.0
                            } else if *v < 0.0 {
                                -1.0
                            } else {
                                0.0
                            }
                        })
                        .collect(),
                ),
            };
            if norm > self.radius {
                let mut a = alloc::vec![0.0; n];
                for (j, &i) in self.theta_axes.iter().enumerate() {
                    a[j] = grad[i];
                }
                return Some((norm - self.radius, a));
            }
        }
        let u = &x[nt..];
        for (j, v) in u.iter().enumerate() {
            if *v > 1.0 {
                return Some((v - 1.0, unit(nt + j, 1.0)));
            }
            if *v < 0.0 {
                return Some((-v, unit(nt + j, -1.0)));
            }
        }
        if let Some((_, k)) = self.pivot {
            let yp = k - u.iter().sum::<f64>();
            let mut a = alloc::vec![0.0; n];
            if yp < 0.0 {
                a[nt..].iter_mut().for_each(|v| *v = 1.0);
                return Some((-yp, a));
            }
            if yp > 1.0 {
                a[nt..].iter_mut().for_each(|v| *v = -1.0);
                return Some((yp - 1.0, a));
            }
        }
        for (coeffs, rhs) in &self.rows {
            let g = dot(coeffs, u) - rhs;
            if g > 0.0 {
                let mut a = alloc::vec![0.0; n];
                a[nt..].copy_from_slice(coeffs);
                if norm_sq(coeffs) == 0.0 {
                    // A violated constant row: the set is empty.
                    return Some((f64::INFINITY, unit(0, 1.0)));
                }
                return Some((g, a));
            }
        }
        None
    }

    fn value_and_subgradient(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        let (theta, y) = self.expand(x);
        let (f, gt, gy) = self.ext.value_and_subgradient(&theta, &y)?;
        let mut g: Vec<f64> = self.theta_axes.iter().map(|&i| gt[i]).collect();
        let gp = self.pivot.map_or(0.0, |(p, _)| gy[p]);
        g.extend(self.label_vars.iter().map(|&i| gy[i] - gp));
        Ok((f, g))
    }
}

/// `min cᵀz` over `z ∈ [0,1]^F` with `Σ z = k` when given; fixed labels contribute their value.
fn linear_label_min(coef: &[f64], labels: &LabelConstraintSet) -> Result<f64> {
    let mut total = 0.0;
    for (&i, &b) in &labels.fixed {
        total += coef[i] * to_f64(b);
    }
    let free = labels.free_indices();
    match labels.residual_cardinality() {
        None => total += free.iter().map(|&i| coef[i].min(0.0)).sum::<f64>(),
        Some(k) => {
            let mut c: Vec<f64> = free.iter().map(|&i| coef[i]).collect();
            c.sort_by(|a, b| a.total_cmp(b));
            total += c.iter().take(k?).sum::<f64>();
        }
    }
    Ok(total)
}

/// Projected subgradient descent on `(θ, y)` with `1/√k` steps, or Polyak steps toward
/// `opts.upper_bound`. The bound is the best linearization over `box ∩ ball × relaxation`,
/// where generic rows are dropped so the set only grows.
fn projected_subgradient(ext: &ExtendedObjective, opts: RelaxOptions) -> Result<RelaxationResult> {
    let inst = &ext.instance;
    let reg = &inst.reg;
    let labels = &inst.labels;
    let (mut theta, mut y) = feasible_start(ext)?;
    let radius = minimizer_radius(ext)?;
    let lo: Vec<f64> = reg.lower.iter().map(|l| l.max(-radius)).collect();
    let hi: Vec<f64> = reg.upper.iter().map(|u| u.min(radius)).collect();
    let lip: f64 =
        ext.terms.iter().map(|(_, t)| t.c * t.loss.lipschitz_bound(radius * norm2(&t.x)) * norm2(&t.x)).sum::<f64>()
            / inst.n_samples() as f64;
    let step0 = 1.0 / (1.0 + lip);
    let mut best: Option<(Vec<f64>, Vec<f64>, f64)> = None;
    let mut lower = f64::NEG_INFINITY;
    let mut iterations = 0;
    for k in 1..=opts.budget.max(1) {
        iterations = k;
        let (f, gt, gy) = ext.value_and_subgradient(&theta, &y)?;
        if best.as_ref().is_none_or(|b| f < b.2) {
            best = Some((theta.clone(), y.clone(), f));
        }
        let lin_theta: f64 =
            (0..theta.len()).map(|i| gt[i] * (if gt[i] > 0.0 { lo[i] } else { hi[i] } - theta[i])).sum();
        let lin_y = linear_label_min(&gy, labels)? - dot(&gy, &y);
        lower = lower.max(f + lin_theta + lin_y);
        let fb = best.as_ref().map_or(f, |b| b.2);
        if fb - lower <= opts.tol {
            break;
        }
        let gn = norm_sq(&gt) + norm_sq(&gy);
        if gn == 0.0 {
            break;
        }
        let step = match opts.upper_bound {
            Some(u) if f > u => (f - u) / gn,
            _ => step0 / libm::sqrt(k as f64) / libm::sqrt(gn).max(1.0),
        };
        for i in 0..theta.len() {
            theta[i] -= step * gt[i];
        }
        reg.project(&mut theta);
        let yn: Vec<f64> = y.iter().zip(&gy).map(|(a, b)| a - step * b).collect();
        y = project_labels(&yn, labels)?;
    }
    let (theta, y, _) = best.expect("at least one iterate");
    let value = ext.value(&theta, &y)?;
    let lower_bound = lower.min(value);
    Ok(RelaxationResult {
        theta,
        y,
        value,
        iterations,
        gap_estimate: if lower_bound.is_finite() { value - lower_bound } else { 0.0 },
        lower_bound,
    })
}

//! The exact tightest convex extension `φ**` of a whole objective over `Θ × conv Y`
//! for a small, explicitly enumerated label set `Y`.
//!
//! With `h(v, y′) = min_θ′ φ(θ′, y′) − vᵀθ′`,
//! `φ**(θ, y) = sup_v min_{λ ∈ Λ(y)} [vᵀθ + Σ λ(y′)·h(v, y′)]`, where `Λ(y)` holds the
//! barycentric weights of `y` over `Y`. The inner minimum of a linear function over the
//! polytope `Λ(y)` is attained at a vertex, and the vertices are the affinely independent
//! supports with strictly positive weights. The outer problem is concave in `v`.
//!
//! Fixing one weight vector per `(|S|+1)`-subset instead and minimizing over subsets only
//! gives an upper bound, exposed as [`support_set_upper_bound`].

use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::loss::RegularizerKind;
use crate::math::{dot, norm2, norm_inf};
use crate::scalar::nested_golden;

/// Limits on the enumeration.
pub const MAX_MEMBERS: usize = 20;
pub const MAX_LABELS: usize = 8;
pub const MAX_DIM: usize = 2;

const LAMBDA_RESIDUAL: f64 = 1e-10;
const LAMBDA_FLOOR: f64 = 1e-12;
const RANK_TOL: f64 = 1e-9;
const INNER_TOL: f64 = 1e-10;
const OUTER_TOL: f64 = 1e-9;
const DUAL_BOX_START: f64 = 4.0;
const DUAL_BOX_LIMIT: f64 = 1e7;

/// An explicit set of feasible labelings.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelSet {
    pub n: usize,
    pub members: Vec<Vec<bool>>,
}

impl LabelSet {
    pub fn new(n: usize, members: Vec<Vec<bool>>) -> Result<Self> {
        if n == 0 || members.is_empty() {
            return Err(Error::InvalidInput("a label set needs at least one member of positive length".into()));
        }
        if members.iter().any(|y| y.len() != n) {
            return Err(Error::InvalidInput(alloc::format!("every member must have length {n}")));
        }
        for (i, a) in members.iter().enumerate() {
            if members[..i].contains(a) {
                return Err(Error::InvalidInput("label set members must be distinct".into()));
            }
        }
        Ok(LabelSet { n, members })
    }

    /// Every labeling of `n` labels.
    pub fn full(n: usize) -> Result<Self> {
        if n > MAX_LABELS {
            return Err(Error::InvalidInput(alloc::format!("at most {MAX_LABELS} labels can be enumerated")));
        }
        LabelSet::new(n, (0u32..1 << n).map(|c| (0..n).map(|i| c >> i & 1 == 1).collect()).collect())
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    fn check_limits(&self) -> Result<()> {
        if self.len() > MAX_MEMBERS || self.n > MAX_LABELS {
            return Err(Error::InvalidInput(alloc::format!(
                "enumeration is limited to {MAX_MEMBERS} members over {MAX_LABELS} labels"
            )));
        }
        Ok(())
    }
}

/// Labelings with barycentric weights; `Σ λ = 1` and `Σ λ·y′ = y`.
#[derive(Debug, Clone, PartialEq)]
pub struct SupportSet {
    pub points: Vec<Vec<bool>>,
    pub lambdas: Vec<f64>,
}

/// Family of functions `θ ↦ φ(θ, y′)`, convex for each labeling `y′`.
pub trait LabeledConvexFamily {
    fn dim(&self) -> usize;
    fn n_labels(&self) -> usize;
    /// `φ(θ, y′)`, or `+∞` outside `Θ`.
    fn value(&self, theta: &[f64], y: &[bool]) -> f64;
    /// A box containing a minimizer of `θ ↦ φ(θ, y′) − vᵀθ`, or `None` when no bounded
    /// box is known. `None` is treated as `h = −∞`, which only loosens the dual.
    fn conjugate_box(&self, v: &[f64], y: &[bool]) -> Option<(Vec<f64>, Vec<f64>)>;
}

impl LabeledConvexFamily for Instance {
    fn dim(&self) -> usize {
        Instance::dim(self)
    }

    fn n_labels(&self) -> usize {
        self.n_samples()
    }

    fn value(&self, theta: &[f64], y: &[bool]) -> f64 {
        self.objective_extended(theta, y)
    }

    fn conjugate_box(&self, v: &[f64], y: &[bool]) -> Option<(Vec<f64>, Vec<f64>)> {
        let reg = &self.reg;
        let mut start = alloc::vec![0.0; Instance::dim(self)];
        reg.project(&mut start);
        // At a minimizer φ − vᵀθ is at most its value at `start`, and φ ≥ ω.
        let d = self.objective_extended(&start, y) - dot(v, &start);
        let r = match reg.kind {
            RegularizerKind::L2 => {
                let k = reg.curvature();
                let nv = norm2(v);
                (nv + libm::sqrt((nv * nv + 2.0 * k * d).max(0.0))) / k
            }
            RegularizerKind::L1 if reg.is_bounded() => f64::INFINITY,
            RegularizerKind::L1 => {
                let nv = norm_inf(v);
                if nv >= 1.0 {
                    return None;
                }
                d / (1.0 - nv)
            }
        };
        let r = r * (1.0 + 1e-9) + 1e-9;
        let lo = reg.lower.iter().map(|l| l.max(-r)).collect();
        let hi = reg.upper.iter().map(|u| u.min(r)).collect();
        Some((lo, hi))
    }
}

/// Barycentric weights of `y` over `points` if they are affinely independent and reproduce `y`.
fn solve_lambdas(points: &[&Vec<bool>], y: &[f64]) -> Option<Vec<f64>> {
    let n = y.len();
    let k = points.len();
    let a = DMatrix::from_fn(n + 1, k, |r, c| if r == n || points[c][r] { 1.0 } else { 0.0 });
    let b = DVector::from_iterator(n + 1, y.iter().copied().chain(core::iter::once(1.0)));
    let svd = a.clone().svd(true, true);
    if svd.singular_values.iter().any(|s| *s < RANK_TOL) {
        return None;
    }
    let lam = svd.solve(&b, 0.0).ok()?;
    let res = &a * &lam - &b;
    if res.amax() > LAMBDA_RESIDUAL {
        return None;
    }
    Some(lam.iter().copied().collect())
}

fn check_query<F: LabeledConvexFamily>(family: &F, set: &LabelSet, theta: &[f64], y: &[f64]) -> Result<()> {
    set.check_limits()?;
    if family.n_labels() != set.n || y.len() != set.n {
        return Err(Error::InvalidInput("label vector, label set and family disagree on |S|".into()));
    }
    if family.dim() == 0 || family.dim() > MAX_DIM || theta.len() != family.dim() {
        return Err(Error::InvalidInput(alloc::format!("θ must have dimension 1..={MAX_DIM}")));
    }
    if y.iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::Domain("labels must lie in [0, 1]".into()));
    }
    Ok(())
}

/// Affinely independent subsets of `Y` whose strictly positive weights reproduce `y`.
/// These are the vertices of the polytope of barycentric weights.
pub fn vertex_supports(set: &LabelSet, y: &[f64]) -> Result<Vec<SupportSet>> {
    set.check_limits()?;
    if y.len() != set.n {
        return Err(Error::InvalidInput("label vector length differs from the label set".into()));
    }
    let size = (set.n + 1).min(set.len());
    let mut out = Vec::new();
    for mask in 1u32..(1 << set.len()) {
        if mask.count_ones() as usize > size {
            continue;
        }
        let points: Vec<&Vec<bool>> = (0..set.len()).filter(|i| mask >> i & 1 == 1).map(|i| &set.members[i]).collect();
        if let Some(lam) = solve_lambdas(&points, y) {
            if lam.iter().all(|l| *l > LAMBDA_FLOOR) {
                out.push(SupportSet { points: points.into_iter().cloned().collect(), lambdas: lam });
            }
        }
    }
    Ok(out)
}

/// Subsets of size `min(|S|+1, |Y|)` whose convex hull contains `y`, each with one
/// valid weight vector taken from a contained vertex support padded with zeros.
pub fn enumerate_support_sets(set: &LabelSet, y: &[f64]) -> Result<Vec<SupportSet>> {
    let vertices = vertex_supports(set, y)?;
    if vertices.is_empty() {
        return Err(Error::Domain("y lies outside the convex hull of the label set".into()));
    }
    let size = (set.n + 1).min(set.len());
    let mut out = Vec::new();
    for mask in 1u32..(1 << set.len()) {
        if mask.count_ones() as usize != size {
            continue;
        }
        let points: Vec<Vec<bool>> =
            (0..set.len()).filter(|i| mask >> i & 1 == 1).map(|i| set.members[i].clone()).collect();
        let found = vertices.iter().find(|v| v.points.iter().all(|p| points.contains(p)));
        if let Some(v) = found {
            let lambdas =
                points.iter().map(|p| v.points.iter().position(|q| q == p).map_or(0.0, |j| v.lambdas[j])).collect();
            out.push(SupportSet { points, lambdas });
        }
    }
    Ok(out)
}

/// `h(v, y′) = min_θ′ φ(θ′, y′) − vᵀθ′`.
fn conjugate_floor<F: LabeledConvexFamily>(family: &F, v: &[f64], y: &[bool]) -> f64 {
    match family.conjugate_box(v, y) {
        None => f64::NEG_INFINITY,
        Some((lo, hi)) => {
            if lo.iter().zip(&hi).any(|(l, h)| l > h) {
                return f64::NEG_INFINITY;
            }
            let f = |t: &[f64]| family.value(t, y) - dot(v, t);
            nested_golden(&f, &lo, &hi, INNER_TOL).1
        }
    }
}

/// `sup_v [vᵀθ + min_σ Σ λ_σ(y′)·h(v, y′)]` over a box in `v` that grows while the
/// maximizer sits near its boundary. Every evaluated `v` gives a valid lower bound.
fn dual_sup<F: LabeledConvexFamily>(family: &F, supports: &[SupportSet], theta: &[f64]) -> f64 {
    let m = theta.len();
    let neg_dual = |v: &[f64]| -> f64 {
        let mut cache: Vec<(&Vec<bool>, f64)> = Vec::new();
        let mut worst = f64::INFINITY;
        for s in supports {
            let mut sum = 0.0;
            for (p, l) in s.points.iter().zip(&s.lambdas) {
                if *l == 0.0 {
                    continue;
                }
                let h = match cache.iter().find(|(q, _)| *q == p) {
                    Some((_, h)) => *h,
                    None => {
                        let h = conjugate_floor(family, v, p);
                        cache.push((p, h));
                        h
                    }
                };
                sum += l * h;
            }
            worst = worst.min(sum);
        }
        -(dot(v, theta) + worst)
    };
    let mut best = f64::NEG_INFINITY;
    let mut b = DUAL_BOX_START;
    loop {
        let (v, val) = nested_golden(&neg_dual, &alloc::vec![-b; m], &alloc::vec![b; m], OUTER_TOL * b);
        let improved = !best.is_finite() || -val > best + 1e-12 * (1.0 + best.abs());
        best = best.max(-val);
        let on_edge = v.iter().any(|c| c.abs() > 0.98 * b);
        if !on_edge || !improved || b >= DUAL_BOX_LIMIT {
            break;
        }
        b *= 4.0;
    }
    best
}

/// `φ**(θ, y)` over `Θ × conv Y`.
pub fn tightest_extension_value<F: LabeledConvexFamily>(
    family: &F,
    set: &LabelSet,
    theta: &[f64],
    y: &[f64],
) -> Result<f64> {
    check_query(family, set, theta, y)?;
    // Members are vertices of conv Y, where φ** is the closed convex function φ(·, y).
    if let Some(p) =
        set.members.iter().find(|p| p.iter().zip(y).all(|(b, v)| (if *b { 1.0 } else { 0.0 } - v).abs() <= 1e-12))
    {
        return Ok(family.value(theta, p));
    }
    let vertices = vertex_supports(set, y)?;
    if vertices.is_empty() {
        return Err(Error::Domain("y lies outside the convex hull of the label set".into()));
    }
    let v = dual_sup(family, &vertices, theta);
    if v.is_nan() {
        return Err(Error::Numeric("tightest extension dual produced NaN".into()));
    }
    Ok(v)
}

/// `min` over the supports of [`enumerate_support_sets`] of the best split of `θ` with the
/// weights held fixed. An upper bound on `φ**`, strict when the optimal weights are interior.
pub fn support_set_upper_bound<F: LabeledConvexFamily>(
    family: &F,
    set: &LabelSet,
    theta: &[f64],
    y: &[f64],
) -> Result<f64> {
    check_query(family, set, theta, y)?;
    let supports = enumerate_support_sets(set, y)?;
    let mut best = f64::INFINITY;
    for s in &supports {
        best = best.min(dual_sup(family, core::slice::from_ref(s), theta));
    }
    Ok(best)
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

    /// `(θ − a(y′))²` with `a = 1` on {00, 11} and `a = −1` on {01, 10}.
    struct Parabolas;
    impl Parabolas {
        fn center(y: &[bool]) -> f64 {
            if y[0] == y[1] {
                1.0
            } else {
                -1.0
            }
        }
    }
    impl LabeledConvexFamily for Parabolas {
        fn dim(&self) -> usize {
            1
        }
        fn n_labels(&self) -> usize {
            2
        }
        fn value(&self, theta: &[f64], y: &[bool]) -> f64 {
            let d = theta[0] - Self::center(y);
            d * d
        }
        fn conjugate_box(&self, v: &[f64], y: &[bool]) -> Option<(Vec<f64>, Vec<f64>)> {
            let t = Self::center(y) + 0.5 * v[0];
            Some((vec![t - 1.0], vec![t + 1.0]))
        }
    }

    fn hinge_instance(features: Vec<Vec<f64>>, c: f64) -> Instance {
        let n = features.len();
        Instance::new(
            features,
            c,
            LossSpec::unweighted(LossKind::Hinge),
            RegularizerSpec::unbounded(RegularizerKind::L2, true, 1),
            LabelConstraintSet::unconstrained(n),
            Decomposition::FullTerm,
        )
        .unwrap()
    }

    #[test]
    fn segment_midpoint_support() {
        let set = LabelSet::full(1).unwrap();
        let s = enumerate_support_sets(&set, &[0.5]).unwrap();
        assert_eq!(s.len(), 1);
        assert_abs_diff_eq!(s[0].lambdas[0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(s[0].lambdas[1], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn square_centre_supports() {
        let set = LabelSet::full(2).unwrap();
        let s = enumerate_support_sets(&set, &[0.5, 0.5]).unwrap();
        assert_eq!(s.len(), 4);
        for sup in &s {
            let total: f64 = sup.lambdas.iter().sum();
            assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
            for i in 0..2 {
                let yi: f64 = sup.points.iter().zip(&sup.lambdas).map(|(p, l)| if p[i] { *l } else { 0.0 }).sum();
                assert_abs_diff_eq!(yi, 0.5, epsilon = 1e-10);
            }
        }
        // Only the two diagonals are vertex supports.
        assert_eq!(vertex_supports(&set, &[0.5, 0.5]).unwrap().len(), 2);
    }

    #[test]
    fn integer_query_includes_degenerate_support() {
        let set = LabelSet::full(2).unwrap();
        let s = enumerate_support_sets(&set, &[1.0, 0.0]).unwrap();
        assert!(s.iter().all(|sup| sup.points.iter().zip(&sup.lambdas).all(|(p, l)| if *p == vec![true, false] {
            (*l - 1.0).abs() < 1e-12
        } else {
            l.abs() < 1e-12
        })));
    }

    #[test]
    fn outside_hull_rejected() {
        let set = LabelSet::new(2, vec![vec![false, false], vec![true, true]]).unwrap();
        assert!(matches!(enumerate_support_sets(&set, &[0.5, 0.25]), Err(Error::Domain(_))));
    }

    #[test]
    fn fixed_weight_subsets_only_bound_from_above() {
        let set = LabelSet::full(2).unwrap();
        let upper = support_set_upper_bound(&Parabolas, &set, &[0.0], &[0.5, 0.5]).unwrap();
        let exact = tightest_extension_value(&Parabolas, &set, &[0.0], &[0.5, 0.5]).unwrap();
        assert_abs_diff_eq!(upper, 1.0, epsilon = 1e-6);
        assert_abs_diff_eq!(exact, 0.0, epsilon = 1e-6);
    }

    #[test]
    fn single_label_matches_binary_envelope() {
        let inst = hinge_instance(vec![vec![1.0]], 5.0);
        let set = LabelSet::full(1).unwrap();
        let term = TermExtension::full_term(vec![1.0], 5.0, inst.loss, inst.reg.clone()).unwrap();
        for (theta, y) in [(0.0, 0.5), (-3.0, 0.5), (0.7, 0.2), (-1.4, 0.9)] {
            let a = tightest_extension_value(&inst, &set, &[theta], &[y]).unwrap();
            let b = term.value(&[theta], y).unwrap();
            assert_abs_diff_eq!(a, b, epsilon = 1e-6);
        }
    }

    #[test]
    fn two_labels_dominate_decomposed_and_interpolate() {
        let inst = hinge_instance(vec![vec![1.0], vec![-0.5]], 2.0);
        let set = LabelSet::full(2).unwrap();
        let ext = inst.build_extensions().unwrap();
        for theta in [-1.5, -0.2, 0.4, 1.1] {
            for y in [[0.3, 0.6], [0.5, 0.5], [0.9, 0.1]] {
                let t = tightest_extension_value(&inst, &set, &[theta], &y).unwrap();
                let d = ext.value(&[theta], &y).unwrap();
                assert!(t >= d - 1e-7, "θ={theta} y={y:?}: {t} < {d}");
            }
            for p in &set.members {
                let yf: Vec<f64> = p.iter().map(|b| if *b { 1.0 } else { 0.0 }).collect();
                let t = tightest_extension_value(&inst, &set, &[theta], &yf).unwrap();
                assert_abs_diff_eq!(t, inst.objective_value(&[theta], p).unwrap(), epsilon = 1e-12);
            }
        }
    }
}

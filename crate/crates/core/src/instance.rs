//! Problem data `φ(θ, y) = ω(θ) + (C/|S|) Σ_s l(⟨x_s, θ⟩, y_s)` and its decompositions
//! `c(θ) + (1/|S|) Σ_s d_s(θ, y_s)` into a convex part and per-sample terms.

use alloc::vec::Vec;

use crate::envelope::{TermExtension, DEFAULT_W_CAP};
use crate::error::{Error, Result};
use crate::labels::LabelConstraintSet;
use crate::loss::{LossKind, LossSpec, RegularizerKind, RegularizerSpec};
use crate::math::{dot, norm2, sigmoid, softplus};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Decomposition {
    /// `c = ω`, `d_s = C·l_s`.
    LossOnly,
    /// `c = 0`, `d_s = ω + C·l_s`.
    FullTerm,
    /// Logistic loss with `ω = ‖θ‖²`: `c = (C/|S|) Σ softplus(x_sᵀθ)`, `d_s = ‖θ‖² − C⟨x_s, θ⟩y_s`.
    LogisticPartial,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub features: Vec<Vec<f64>>,
    pub c: f64,
    pub loss: LossSpec,
    pub reg: RegularizerSpec,
    pub labels: LabelConstraintSet,
    pub decomposition: Decomposition,
}

impl Instance {
    pub fn new(
        features: Vec<Vec<f64>>,
        c: f64,
        loss: LossSpec,
        reg: RegularizerSpec,
        labels: LabelConstraintSet,
        decomposition: Decomposition,
    ) -> Result<Self> {
        let inst = Instance { features, c, loss, reg, labels, decomposition };
        inst.validate()?;
        Ok(inst)
    }

    pub fn validate(&self) -> Result<()> {
        if self.features.is_empty() {
            return Err(Error::InvalidInput("an instance needs at least one sample".into()));
        }
        let m = self.reg.dim();
        if m == 0 {
            return Err(Error::InvalidInput("parameter dimension must be positive".into()));
        }
        if let Some(s) = self.features.iter().position(|x| x.len() != m) {
            return Err(Error::InvalidInput(alloc::format!(
                "sample {s} has dimension {}, expected {m}",
                self.features[s].len()
            )));
        }
        if self.features.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("features must be finite".into()));
        }
        if !(self.c >= 0.0 && self.c.is_finite()) {
            return Err(Error::InvalidInput(alloc::format!("C must be nonnegative, got {}", self.c)));
        }
        if self.labels.n != self.features.len() {
            return Err(Error::InvalidInput(alloc::format!(
                "label constraints cover {} samples, instance has {}",
                self.labels.n,
                self.features.len()
            )));
        }
        self.labels.validate()
    }

    pub fn n_samples(&self) -> usize {
        self.features.len()
    }

    pub fn dim(&self) -> usize {
        self.reg.dim()
    }

    pub fn with_labels(&self, labels: LabelConstraintSet) -> Self {
        Instance { labels, ..self.clone() }
    }

    pub fn with_decomposition(&self, decomposition: Decomposition) -> Self {
        Instance { decomposition, ..self.clone() }
    }

    /// `φ(θ, y)` at a binary labeling.
    pub fn objective_value(&self, theta: &[f64], y: &[bool]) -> Result<f64> {
        if y.len() != self.n_samples() {
            return Err(Error::InvalidInput("labeling length differs from sample count".into()));
        }
        let omega = self.reg.value(theta)?;
        let s: f64 = self.features.iter().zip(y).map(|(x, &b)| self.loss.value(dot(x, theta), b)).sum();
        Ok(omega + self.c / self.n_samples() as f64 * s)
    }

    /// `φ(θ, y)` extended by `+∞` outside the parameter box.
    pub fn objective_extended(&self, theta: &[f64], y: &[bool]) -> f64 {
        if !self.reg.in_box(theta, 0.0) {
            return f64::INFINITY;
        }
        self.objective_value(theta, y).unwrap_or(f64::INFINITY)
    }

    /// A subgradient of `θ ↦ φ(θ, y)` (box normal cone excluded).
    pub fn objective_subgradient(&self, theta: &[f64], y: &[bool]) -> Vec<f64> {
        let m = self.dim();
        let inv = self.c / self.n_samples() as f64;
        let mut g: Vec<f64> = match self.reg.kind {
            RegularizerKind::L1 => theta
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
            RegularizerKind::L2 => theta.iter().map(|v| self.reg.curvature() * v).collect(),
        };
        for (x, &b) in self.features.iter().zip(y) {
            let a = self.loss.subdifferential(dot(x, theta), b).pick();
            for i in 0..m {
                g[i] += inv * a * x[i];
            }
        }
        g
    }

    /// Splits the objective into a convex part and extended per-sample terms.
    /// Samples with fixed labels become convex terms.
    pub fn build_extensions(&self) -> Result<ExtendedObjective> {
        self.validate()?;
        let mut terms = Vec::new();
        let mut fixed = Vec::new();
        let partial_scale = match self.decomposition {
            Decomposition::LogisticPartial => {
                if self.loss.kind != LossKind::Logistic || self.loss.c0 != self.loss.c1 {
                    return Err(Error::Unsupported(
                        "the logistic partial decomposition needs the logistic loss with equal class weights".into(),
                    ));
                }
                if self.reg.kind != RegularizerKind::L2 || self.reg.half || !self.reg.is_unconstrained() {
                    return Err(Error::Unsupported(
                        "the logistic partial decomposition needs the unconstrained ‖θ‖² regularizer".into(),
                    ));
                }
                self.loss.c0
            }
            Decomposition::FullTerm
                if self.reg.kind == RegularizerKind::L1 && self.loss.needs_extension() && !self.reg.is_bounded() =>
            {
                return Err(Error::Unsupported(
                    "L1 full-term envelopes need a bounded parameter box; over an unbounded box the extension is discontinuous".into(),
                ));
            }
            _ => 1.0,
        };
        for (s, x) in self.features.iter().enumerate() {
            let ext = match self.decomposition {
                Decomposition::LossOnly => TermExtension::loss_only(x.clone(), self.c, self.loss, self.reg.clone())?,
                Decomposition::FullTerm => TermExtension::full_term(x.clone(), self.c, self.loss, self.reg.clone())?,
                Decomposition::LogisticPartial => TermExtension::logistic_partial(x.clone(), self.c * partial_scale),
            };
            match self.labels.fixed.get(&s) {
                Some(&b) => fixed.push((ext, b)),
                None => terms.push((s, ext)),
            }
        }
        Ok(ExtendedObjective { instance: self.clone(), terms, fixed, partial_scale, w_cap: DEFAULT_W_CAP })
    }
}

/// `φ′(θ, y) = c(θ) + (1/|S|) Σ_s d_s**(θ, y_s)` for a fixed decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedObjective {
    pub instance: Instance,
    /// Extended terms of the free samples.
    pub terms: Vec<(usize, TermExtension)>,
    /// Convex terms of the samples whose labels are fixed.
    pub fixed: Vec<(TermExtension, bool)>,
    partial_scale: f64,
    /// Replacement for infinite `y`-slopes.
    pub w_cap: f64,
}

impl ExtendedObjective {
    fn inv_s(&self) -> f64 {
        1.0 / self.instance.n_samples() as f64
    }

    /// The convex part `c(θ)`.
    pub fn convex_part(&self, theta: &[f64]) -> Result<f64> {
        let inst = &self.instance;
        Ok(match inst.decomposition {
            Decomposition::LossOnly => inst.reg.value(theta)?,
            Decomposition::FullTerm => 0.0,
            Decomposition::LogisticPartial => {
                let s: f64 = inst.features.iter().map(|x| softplus(dot(x, theta))).sum();
                inst.c * self.partial_scale * self.inv_s() * s
            }
        })
    }

    fn convex_part_subgradient(&self, theta: &[f64]) -> Vec<f64> {
        let inst = &self.instance;
        let m = inst.dim();
        match inst.decomposition {
            Decomposition::LossOnly => (0..m)
                .map(|i| match inst.reg.kind {
                    RegularizerKind::L1 => {
                        if theta[i] > 0.0 {
                            1.0
                        } else if theta[i] < 0.0 {
                            -1.0
                        } else {
                            0.0
                        }
                    }
                    RegularizerKind::L2 => inst.reg.curvature() * theta[i],
                })
                .collect(),
            Decomposition::FullTerm => alloc::vec![0.0; m],
            Decomposition::LogisticPartial => {
                let k = inst.c * self.partial_scale * self.inv_s();
                let mut g = alloc::vec![0.0; m];
                for x in &inst.features {
                    let a = k * sigmoid(dot(x, theta));
                    for i in 0..m {
                        g[i] += a * x[i];
                    }
                }
                g
            }
        }
    }

    /// `φ′(θ, y)`; fixed entries of `y` are ignored in favour of the fixed labels.
    pub fn value(&self, theta: &[f64], y: &[f64]) -> Result<f64> {
        let mut sum = 0.0;
        for (s, ext) in &self.terms {
            sum += ext.value(theta, y[*s])?;
        }
        for (ext, b) in &self.fixed {
            sum += ext.value(theta, if *b { 1.0 } else { 0.0 })?;
        }
        Ok(self.convex_part(theta)? + self.inv_s() * sum)
    }

    /// Value and a subgradient `(g_θ, g_y)`; `g_y` is zero on fixed labels.
    pub fn value_and_subgradient(&self, theta: &[f64], y: &[f64]) -> Result<(f64, Vec<f64>, Vec<f64>)> {
        let inv = self.inv_s();
        let mut gt = self.convex_part_subgradient(theta);
        let mut gy = alloc::vec![0.0; self.instance.n_samples()];
        let mut sum = 0.0;
        for (s, ext) in &self.terms {
            sum += ext.value(theta, y[*s])?;
            let g = ext.subgradient(theta, y[*s])?;
            for (a, b) in gt.iter_mut().zip(&g.v) {
                *a += inv * b;
            }
            gy[*s] = inv * g.w.clamp(self.w_cap);
        }
        for (ext, b) in &self.fixed {
            let yb = if *b { 1.0 } else { 0.0 };
            sum += ext.value(theta, yb)?;
            let g = ext.subgradient(theta, yb)?;
            for (a, b) in gt.iter_mut().zip(&g.v) {
                *a += inv * b;
            }
        }
        Ok((self.convex_part(theta)? + inv * sum, gt, gy))
    }

    /// Radius of a ball around the origin that contains every `θ` with `φ′(θ, ·) ≤ bound`.
    pub fn theta_radius(&self, bound: f64) -> f64 {
        let inst = &self.instance;
        let v = bound.max(0.0);
        let r = match inst.decomposition {
            Decomposition::LogisticPartial => {
                let a = inst.features.iter().map(|x| 0.5 * inst.c * self.partial_scale * norm2(x)).fold(0.0, f64::max);
                a + libm::sqrt(v + a * a)
            }
            _ => match inst.reg.kind {
                RegularizerKind::L2 => libm::sqrt(2.0 * v / inst.reg.curvature()),
                RegularizerKind::L1 => v,
            },
        };
        r * (1.0 + 1e-9) + 1e-9
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::labels::LabelConstraintSet;
    use alloc::vec;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    pub(crate) fn two_sample(decomposition: Decomposition) -> Instance {
        let mut labels = LabelConstraintSet::unconstrained(2);
        labels.cardinality = Some(1);
        Instance::new(
            vec![vec![1.0], vec![-1.0]],
            1.0,
            LossSpec::unweighted(LossKind::Hinge),
            RegularizerSpec::unbounded(RegularizerKind::L2, true, 1),
            labels,
            decomposition,
        )
        .unwrap()
    }

    #[test]
    fn objective_examples() {
        let one = Instance::new(
            vec![vec![1.0]],
            5.0,
            LossSpec::unweighted(LossKind::Hinge),
            RegularizerSpec::unbounded(RegularizerKind::L2, true, 1),
            LabelConstraintSet::unconstrained(1),
            Decomposition::FullTerm,
        )
        .unwrap();
        assert_eq!(one.objective_value(&[0.0], &[false]).unwrap(), 5.0);
        let two = two_sample(Decomposition::FullTerm);
        assert_abs_diff_eq!(two.objective_value(&[1.0], &[true, false]).unwrap(), 0.5, epsilon = 1e-15);
        let mut zero_c = one.clone();
        zero_c.c = 0.0;
        assert_eq!(zero_c.objective_value(&[2.0], &[true]).unwrap(), 2.0);
    }

    #[test]
    fn mismatched_dimensions_rejected() {
        let r = Instance::new(
            vec![vec![1.0], vec![1.0, 2.0]],
            1.0,
            LossSpec::unweighted(LossKind::Hinge),
            RegularizerSpec::unbounded(RegularizerKind::L2, true, 1),
            LabelConstraintSet::unconstrained(2),
            Decomposition::FullTerm,
        );
        assert!(matches!(r, Err(Error::InvalidInput(_))));
    }

    #[test]
    fn dispatch_per_decomposition() {
        let inst = two_sample(Decomposition::LossOnly);
        let ext = inst.build_extensions().unwrap();
        assert!(ext.terms.iter().all(|(_, e)| e.method == crate::envelope::Method::Trivial));
        // Trivial terms vanish at interior labels, leaving ω.
        assert_abs_diff_eq!(ext.value(&[0.4], &[0.5, 0.5]).unwrap(), 0.08, epsilon = 1e-15);
        let ext = inst.with_decomposition(Decomposition::FullTerm).build_extensions().unwrap();
        assert!(ext.terms.iter().all(|(_, e)| e.method == crate::envelope::Method::ClosedFormL2));
        let mut boxed = inst.clone();
        boxed.reg = RegularizerSpec::boxed(RegularizerKind::L1, false, -2.0, 2.0, 1);
        boxed.loss = LossSpec::unweighted(LossKind::SquaredHinge);
        let ext = boxed.with_decomposition(Decomposition::FullTerm).build_extensions().unwrap();
        assert!(ext.terms.iter().all(|(_, e)| e.method == crate::envelope::Method::ClosedFormL1));
    }

    #[test]
    fn logistic_partial_requires_its_regularizer() {
        let mut inst = two_sample(Decomposition::LogisticPartial);
        inst.loss = LossSpec::unweighted(LossKind::Logistic);
        assert!(matches!(inst.build_extensions(), Err(Error::Unsupported(_))));
        inst.reg = RegularizerSpec::unbounded(RegularizerKind::L2, false, 1);
        assert!(inst.build_extensions().is_ok());
    }

    fn arb_instance() -> impl Strategy<Value = (Instance, Vec<f64>, Vec<bool>)> {
        (
            0usize..4,
            0usize..3,
            proptest::collection::vec(-2.0..2.0f64, 6),
            0.1..10.0f64,
            proptest::collection::vec(-1.5..1.5f64, 2),
            proptest::collection::vec(proptest::bool::ANY, 3),
        )
            .prop_map(|(kind, dec, xs, c, theta, y)| {
                let kinds = [LossKind::Hinge, LossKind::SquaredHinge, LossKind::Logistic, LossKind::SquaredDifference];
                let (decomposition, reg) = match dec {
                    0 => (Decomposition::LossOnly, RegularizerSpec::unbounded(RegularizerKind::L2, true, 2)),
                    1 => (Decomposition::FullTerm, RegularizerSpec::boxed(RegularizerKind::L1, false, -2.0, 2.0, 2)),
                    _ => (Decomposition::FullTerm, RegularizerSpec::unbounded(RegularizerKind::L2, false, 2)),
                };
                let inst = Instance::new(
                    xs.chunks(2).map(|c| c.to_vec()).collect(),
                    c,
                    LossSpec::new(kinds[kind], 1.2, 0.8).unwrap(),
                    reg,
                    LabelConstraintSet::unconstrained(3),
                    decomposition,
                )
                .unwrap();
                (inst, theta, y)
            })
    }

    proptest! {
        #[test]
        fn decomposition_identity((inst, theta, y) in arb_instance()) {
            let ext = inst.build_extensions().unwrap();
            let yf: Vec<f64> = y.iter().map(|b| if *b { 1.0 } else { 0.0 }).collect();
            let a = ext.value(&theta, &yf).unwrap();
            let b = inst.objective_value(&theta, &y).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()));
        }

        #[test]
        fn logistic_partial_identity(xs in proptest::collection::vec(-2.0..2.0f64, 4), c in 0.1..8.0f64,
                                     theta in proptest::collection::vec(-2.0..2.0f64, 2), y in proptest::collection::vec(proptest::bool::ANY, 2)) {
            let inst = Instance::new(
                xs.chunks(2).map(|c| c.to_vec()).collect(),
                c,
                LossSpec::unweighted(LossKind::Logistic),
                RegularizerSpec::unbounded(RegularizerKind::L2, false, 2),
                LabelConstraintSet::unconstrained(2),
                Decomposition::LogisticPartial,
            ).unwrap();
            let ext = inst.build_extensions().unwrap();
            let yf: Vec<f64> = y.iter().map(|b| if *b { 1.0 } else { 0.0 }).collect();
            let a = ext.value(&theta, &yf).unwrap();
            let b = inst.objective_value(&theta, &y).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()));
        }

        #[test]
        fn full_term_dominates_loss_only((inst, theta, _y) in arb_instance(), y in proptest::collection::vec(0.0..1.0f64, 3)) {
            let full = inst.with_decomposition(Decomposition::FullTerm);
            if let (Ok(a), Ok(b)) = (full.build_extensions(), inst.with_decomposition(Decomposition::LossOnly).build_extensions()) {
                let fa = a.value(&theta, &y).unwrap();
                let fb = b.value(&theta, &y).unwrap();
                prop_assert!(fa >= fb - 1e-9);
            }
        }
    }
}

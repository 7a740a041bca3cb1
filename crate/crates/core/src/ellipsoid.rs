//! Deep-cut ellipsoid method with a certified lower bound.
//!
//! Invariant: every minimizer inside the initial ellipsoid stays inside the current one.
//! At a feasible centre `c` with subgradient `g`, `f(c) − sqrt(gᵀPg)` is therefore a lower
//! bound on the optimum.

use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};

use crate::error::Result;

pub trait ConvexProblem {
    fn dim(&self) -> usize;

    /// `Some((g, a))` when `x` violates a constraint `h(x) ≤ 0` with `g = h(x) > 0` and
    /// `a ∈ ∂h(x)`.
    fn feasibility_cut(&self, x: &[f64]) -> Option<(f64, Vec<f64>)>;

    /// Objective value and a subgradient at a feasible `x`.
    fn value_and_subgradient(&self, x: &[f64]) -> Result<(f64, Vec<f64>)>;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipsoidOptions {
    pub max_iter: usize,
    /// Stop once `f_best − lower_bound` falls below this.
    pub tol: f64,
}

impl Default for EllipsoidOptions {
    fn default() -> Self {
        EllipsoidOptions { max_iter: 50_000, tol: 1e-9 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EllipsoidResult {
    /// Best feasible point, if any centre was feasible.
    pub x_best: Option<Vec<f64>>,
    pub f_best: f64,
    pub lower_bound: f64,
    pub iterations: usize,
    /// The feasible set was proven empty.
    pub infeasible: bool,
}

impl EllipsoidResult {
    pub fn gap(&self) -> f64 {
        (self.f_best - self.lower_bound).max(0.0)
    }
}

/// Minimizes over the feasible set intersected with the axis-aligned box
/// `center ± half_widths`, which must contain a minimizer.
pub fn minimize<P: ConvexProblem>(
    problem: &P,
    center: Vec<f64>,
    half_widths: &[f64],
    opts: EllipsoidOptions,
) -> Result<EllipsoidResult> {
    let n = problem.dim();
    debug_assert_eq!(center.len(), n);
    if n == 1 {
        return minimize_interval(problem, center[0], half_widths[0], opts);
    }
    let nf = n as f64;
    let mut x = DVector::from_vec(center);
    // P = B·Bᵀ; updating the factor keeps P positive semidefinite under rounding.
    let mut bm = DMatrix::from_diagonal(&DVector::from_iterator(n, half_widths.iter().map(|h| libm::sqrt(nf) * h)));
    let mut res = EllipsoidResult {
        x_best: None,
        f_best: f64::INFINITY,
        lower_bound: f64::NEG_INFINITY,
        iterations: 0,
        infeasible: false,
    };
    for it in 0..opts.max_iter {
        res.iterations = it + 1;
        let xs = x.as_slice().to_vec();
        let (bta, depth) = match problem.feasibility_cut(&xs) {
            Some((g, a)) => {
                let bta = bm.tr_mul(&DVector::from_vec(a));
                let r = bta.norm();
                if r <= 0.0 || !r.is_finite() {
                    break;
                }
                let alpha = g / r;
                if alpha >= 1.0 {
                    if res.x_best.is_none() {
                        res.infeasible = true;
                    }
                    break;
                }
                (bta, alpha)
            }
            None => {
                let (f, g) = problem.value_and_subgradient(&xs)?;
                if f < res.f_best {
                    res.f_best = f;
                    res.x_best = Some(xs.clone());
                }
                let btg = bm.tr_mul(&DVector::from_vec(g));
                let r = btg.norm();
                if r <= 0.0 {
                    res.lower_bound = res.lower_bound.max(f);
                    break;
                }
                res.lower_bound = res.lower_bound.max(f - r);
                if res.f_best - res.lower_bound <= opts.tol {
                    break;
                }
                (btg, ((f - res.f_best) / r).clamp(0.0, 0.999))
            }
        };
        let u = &bta / bta.norm();
        let b = &bm * &u;
        x -= &b * ((1.0 + nf * depth) / (nf + 1.0));
        let shrink = nf * nf * (1.0 - depth * depth) / (nf * nf - 1.0);
        let sigma = 2.0 * (1.0 + nf * depth) / ((nf + 1.0) * (1.0 + depth));
        let gamma = 1.0 - libm::sqrt(1.0 - sigma);
        bm = (&bm - (&b * u.transpose()) * gamma) * libm::sqrt(shrink);
        if bm.iter().all(|v| v.abs() < 1e-30) {
            break;
        }
    }
    Ok(res)
}

fn minimize_interval<P: ConvexProblem>(problem: &P, c: f64, h: f64, opts: EllipsoidOptions) -> Result<EllipsoidResult> {
    let (mut lo, mut hi) = (c - h, c + h);
    let mut res = EllipsoidResult {
        x_best: None,
        f_best: f64::INFINITY,
        lower_bound: f64::NEG_INFINITY,
        iterations: 0,
        infeasible: false,
    };
    for it in 0..opts.max_iter {
        res.iterations = it + 1;
        let x = 0.5 * (lo + hi);
        let r = 0.5 * (hi - lo);
        if r <= 0.0 || x <= lo || x >= hi {
            break;
        }
        let (a, cut) = match problem.feasibility_cut(&[x]) {
            Some((g, a)) => {
                let a = a[0];
                if a == 0.0 || g / (a.abs() * r) >= 1.0 {
                    if res.x_best.is_none() {
                        res.infeasible = true;
                    }
                    break;
                }
                (a, g / a.abs())
            }
            None => {
                let (f, g) = problem.value_and_subgradient(&[x])?;
                if f < res.f_best {
                    res.f_best = f;
                    res.x_best = Some(alloc::vec![x]);
                }
                let g = g[0];
                res.lower_bound = res.lower_bound.max(f - g.abs() * r);
                if g == 0.0 {
                    res.lower_bound = res.lower_bound.max(f);
                    break;
                }
                if res.f_best - res.lower_bound <= opts.tol {
                    break;
                }
                (g, (f - res.f_best) / g.abs())
            }
        };
        if a > 0.0 {
            hi = x - cut;
        } else {
            lo = x + cut;
        }
    }
    Ok(res)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use approx::assert_abs_diff_eq;

    struct Quad;
    impl ConvexProblem for Quad {
        fn dim(&self) -> usize {
            3
        }
        fn feasibility_cut(&self, x: &[f64]) -> Option<(f64, Vec<f64>)> {
            // x0 + x1 + x2 ≥ 1
            let g = 1.0 - x.iter().sum::<f64>();
            (g > 0.0).then(|| (g, vec![-1.0; 3]))
        }
        fn value_and_subgradient(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
            Ok((x.iter().map(|v| v * v).sum(), x.iter().map(|v| 2.0 * v).collect()))
        }
    }

    struct Abs1;
    impl ConvexProblem for Abs1 {
        fn dim(&self) -> usize {
            1
        }
        fn feasibility_cut(&self, x: &[f64]) -> Option<(f64, Vec<f64>)> {
            (x[0] < 0.25).then(|| (0.25 - x[0], vec![-1.0]))
        }
        fn value_and_subgradient(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
            Ok(((x[0] - 0.1).abs(), vec![if x[0] >= 0.1 { 1.0 } else { -1.0 }]))
        }
    }

    #[test]
    fn constrained_quadratic() {
        let r = minimize(&Quad, vec![0.0; 3], &[5.0; 3], EllipsoidOptions::default()).unwrap();
        assert_abs_diff_eq!(r.f_best, 1.0 / 3.0, epsilon = 1e-8);
        assert!(r.lower_bound <= 1.0 / 3.0 + 1e-12);
        assert!(r.gap() <= 1e-8);
    }

    #[test]
    fn one_dimensional_interval() {
        let r = minimize(&Abs1, vec![0.0], &[10.0], EllipsoidOptions::default()).unwrap();
        assert_abs_diff_eq!(r.f_best, 0.15, epsilon = 1e-9);
        assert!(r.lower_bound <= 0.15 + 1e-12);
    }

    #[test]
    fn empty_set_detected() {
        struct Empty;
        impl ConvexProblem for Empty {
            fn dim(&self) -> usize {
                2
            }
            fn feasibility_cut(&self, x: &[f64]) -> Option<(f64, Vec<f64>)> {
                let g = 10.0 - x[0];
                (g > 0.0).then(|| (g, vec![-1.0, 0.0]))
            }
            fn value_and_subgradient(&self, _x: &[f64]) -> Result<(f64, Vec<f64>)> {
                Ok((0.0, vec![0.0, 0.0]))
            }
        }
        let r = minimize(&Empty, vec![0.0; 2], &[1.0; 2], EllipsoidOptions::default()).unwrap();
        assert!(r.infeasible);
    }
}

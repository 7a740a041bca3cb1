//! Derivative-free scalar minimization and root bracketing.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::interval::Interval;

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Golden-section search for a convex (possibly `+∞`-valued) `f` on `[a, b]`.
///
/// Returns the best evaluated point. When both probes are infinite the bracket
/// shrinks toward its centre, so a feasible centre is never lost.
pub fn golden_section<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let mut best = (0.5 * (a + b), f(0.5 * (a + b)));
    let consider = |x: f64, fx: f64, best: &mut (f64, f64)| {
        if fx < best.1 {
            *best = (x, fx);
        }
    };
    for x in [a, b] {
        let fx = f(x);
        consider(x, fx, &mut best);
    }
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    consider(c, fc, &mut best);
    consider(d, fd, &mut best);
    let mut iters = 0;
    while (b - a) > tol && iters < 400 {
        iters += 1;
        if fc.is_infinite() && fd.is_infinite() {
            a = c;
            b = d;
            c = b - INV_PHI * (b - a);
            d = a + INV_PHI * (b - a);
            fc = f(c);
            fd = f(d);
            consider(c, fc, &mut best);
            consider(d, fd, &mut best);
            continue;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
            consider(c, fc, &mut best);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
            consider(d, fd, &mut best);
        }
    }
    best
}

/// Golden-section search for a coercive convex `f` on the whole line, starting
/// from `x0` and doubling the bracket until the function rises on both sides.
pub fn golden_unbounded<F: FnMut(f64) -> f64>(mut f: F, x0: f64, step: f64, tol: f64) -> (f64, f64) {
    let f0 = f(x0);
    let mut lo = x0 - step;
    let mut hi = x0 + step;
    let mut s = step;
    while f(lo) < f0 && s < 1e12 {
        s *= 2.0;
        lo = x0 - s;
    }
    s = step;
    while f(hi) < f0 && s < 1e12 {
        s *= 2.0;
        hi = x0 + s;
    }
    let r = golden_section(&mut f, lo, hi, tol);
    if r.1 <= f0 {
        r
    } else {
        (x0, f0)
    }
}

/// Minimizes a jointly convex `f` over the box `[lo, hi]` by nested golden-section
/// search, one coordinate per level. Intended for dimension at most three.
pub fn nested_golden<F: Fn(&[f64]) -> f64>(f: &F, lo: &[f64], hi: &[f64], tol: f64) -> (Vec<f64>, f64) {
    debug_assert_eq!(lo.len(), hi.len());
    let mut x = Vec::with_capacity(lo.len());
    nested_level(f, lo, hi, tol, &mut x)
}

fn nested_level<F: Fn(&[f64]) -> f64>(
    f: &F,
    lo: &[f64],
    hi: &[f64],
    tol: f64,
    prefix: &mut Vec<f64>,
) -> (Vec<f64>, f64) {
    let depth = prefix.len();
    if depth == lo.len() {
        return (prefix.clone(), f(prefix));
    }
    let mut best: (Vec<f64>, f64) = (Vec::new(), f64::INFINITY);
    let mut inner = |t: f64| {
        prefix.push(t);
        let r = nested_level(f, lo, hi, tol, prefix);
        prefix.pop();
        let v = r.1;
        if v < best.1 {
            best = r;
        }
        v
    };
    golden_section(&mut inner, lo[depth], hi[depth], tol);
    if best.0.is_empty() {
        let mut p = prefix.clone();
        p.extend((depth..lo.len()).map(|i| 0.5 * (lo[i] + hi[i])));
        let v = f(&p);
        return (p, v);
    }
    best
}

/// Finds a root of a non-increasing set-valued map `r` on `[lo, hi]`.
///
/// Requires `r(lo)` to reach `≥ 0` and `r(hi)` to reach `≤ 0`. Stops as soon as
/// `0 ∈ r(z)` or the bracket cannot shrink further in floating point.
pub fn bisect_decreasing<F: FnMut(f64) -> Interval>(
    mut r: F,
    mut lo: f64,
    mut hi: f64,
    max_iter: usize,
) -> Result<f64> {
    let rl = r(lo);
    let rh = r(hi);
    if rl.hi < 0.0 || rh.lo > 0.0 {
        return Err(Error::Numeric(alloc::format!("root not bracketed on [{lo}, {hi}]: r(lo)={rl}, r(hi)={rh}")));
    }
    if rl.contains(0.0, 0.0) {
        return Ok(lo);
    }
    if rh.contains(0.0, 0.0) {
        return Ok(hi);
    }
    for _ in 0..max_iter {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let rm = r(mid);
        if rm.lo > 0.0 {
            lo = mid;
        } else if rm.hi < 0.0 {
            hi = mid;
        } else {
            return Ok(mid);
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Brackets and solves a non-increasing set-valued root starting from `[-b, b]`,
/// doubling `b` up to `limit`.
pub fn bracket_and_bisect<F: FnMut(f64) -> Interval>(mut r: F, mut b: f64, limit: f64) -> Result<f64> {
    b = b.max(1e-3);
    loop {
        let rl = r(-b);
        let rh = r(b);
        if rl.hi >= 0.0 && rh.lo <= 0.0 {
            return bisect_decreasing(&mut r, -b, b, 400);
        }
        if b >= limit {
            return Err(Error::Numeric(alloc::format!(
                "root not bracketed after expansion to ±{b}: r(-b)={rl}, r(b)={rh}"
            )));
        }
        b = (2.0 * b).min(limit);
    }
}

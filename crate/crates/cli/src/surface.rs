//! Envelope surfaces over a one-dimensional `θ` and a label `y`, written as CSV.

use std::fmt::Write as _;

use convext::{
    Decomposition, Instance, LabelConstraintSet, LossKind, LossSpec, RegularizerKind, RegularizerSpec, TermExtension,
};

use crate::error::{CliError, CliResult};

/// Box half-width standing in for an unbounded L1 parameter space in diagnostic mode.
pub const DIAGNOSTIC_BOX: f64 = 1e6;

/// Inclusive `lo:hi:step` range; the last point is clamped to `hi`.
pub fn parse_range(text: &str) -> CliResult<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        return Err(CliError::Usage(format!("range `{text}` must have the form lo:hi:step")));
    }
    let num = |s: &str| -> CliResult<f64> {
        s.trim().parse::<f64>().map_err(|_| CliError::Usage(format!("`{s}` in range `{text}` is not a number")))
    };
    let (lo, hi, step) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
    if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
        return Err(CliError::Usage(format!("range `{text}` needs finite lo ≤ hi")));
    }
    if !(step > 0.0 && step.is_finite()) {
        return Err(CliError::Usage(format!("range `{text}` needs a positive step")));
    }
    // Points within a relative hair of hi count as hi so that 0:1:0.1 has 11 points.
    let n = ((hi - lo) / step * (1.0 + 1e-12)).floor() as usize;
    let mut pts: Vec<f64> = (0..=n).map(|i| lo + i as f64 * step).collect();
    let last = *pts.last().expect("range has at least one point");
    if hi - last > 1e-9 * step {
        pts.push(hi);
    } else {
        *pts.last_mut().expect("range has at least one point") = hi;
    }
    Ok(pts)
}

/// Which function of `(θ, y)` a surface shows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SurfaceExtension {
    /// Full-term envelope `ω + C·l` extended tightly.
    Decomposed,
    /// `ω` plus the loss extended by zero at fractional labels.
    Trivial,
    /// Logistic loss with `ω = ‖θ‖²` split into `C·softplus` and an extended remainder.
    LogisticPartial,
    /// The label entering the loss formula directly; not convex.
    Raw,
}

impl std::str::FromStr for SurfaceExtension {
    type Err = CliError;
    fn from_str(s: &str) -> CliResult<Self> {
        match s {
            "decomposed" => Ok(SurfaceExtension::Decomposed),
            "trivial" => Ok(SurfaceExtension::Trivial),
            "logistic-partial" => Ok(SurfaceExtension::LogisticPartial),
            "raw" => Ok(SurfaceExtension::Raw),
            _ => Err(CliError::Usage(format!(
                "unknown surface extension `{s}`; expected decomposed, trivial, logistic-partial or raw"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceSpec {
    pub loss: LossSpec,
    pub reg_kind: RegularizerKind,
    pub half: bool,
    /// Symmetric parameter box `[−bound, bound]`; `None` is unbounded.
    pub bound: Option<f64>,
    pub c: f64,
    pub x: f64,
    pub thetas: Vec<f64>,
    pub ys: Vec<f64>,
    pub extension: SurfaceExtension,
    /// Evaluates the unbounded L1 envelope on a ±`DIAGNOSTIC_BOX` box instead of rejecting it.
    pub diagnostic_unbounded: bool,
}

/// One evaluated point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceRow {
    pub theta: f64,
    pub y: f64,
    pub value: f64,
}

fn regularizer(spec: &SurfaceSpec) -> CliResult<RegularizerSpec> {
    let b = match spec.bound {
        Some(b) if b.is_nan() || b <= 0.0 => return Err(CliError::Usage(format!("bound must be positive, got {b}"))),
        Some(b) => b,
        None if spec.diagnostic_unbounded && spec.reg_kind == RegularizerKind::L1 => DIAGNOSTIC_BOX,
        None => f64::INFINITY,
    };
    Ok(RegularizerSpec::new(spec.reg_kind, spec.half, vec![-b], vec![b])?)
}

/// Evaluates the surface with `θ` as the outer and `y` as the inner loop.
pub fn evaluate_surface(spec: &SurfaceSpec) -> CliResult<Vec<SurfaceRow>> {
    if spec.diagnostic_unbounded && (spec.reg_kind != RegularizerKind::L1 || spec.bound.is_some()) {
        return Err(CliError::Usage("the diagnostic mode only applies to an unbounded L1 regularizer".into()));
    }
    let reg = regularizer(spec)?;
    let eval: Box<dyn Fn(f64, f64) -> convext::Result<f64>> = match spec.extension {
        SurfaceExtension::Raw => {
            let term = TermExtension::full_term(vec![spec.x], spec.c, spec.loss, reg.clone())?;
            Box::new(move |t, y| {
                if !term.reg.in_box(&[t], 0.0) {
                    return Err(convext::Error::Domain("theta outside the parameter box".into()));
                }
                Ok(term.raw(&[t], y))
            })
        }
        ext => {
            let decomposition = match ext {
                SurfaceExtension::Decomposed => Decomposition::FullTerm,
                SurfaceExtension::Trivial => Decomposition::LossOnly,
                _ => Decomposition::LogisticPartial,
            };
            let inst = Instance::new(
                vec![vec![spec.x]],
                spec.c,
                spec.loss,
                reg,
                LabelConstraintSet::unconstrained(1),
                decomposition,
            )?;
            let obj = inst.build_extensions()?;
            Box::new(move |t, y| obj.value(&[t], &[y]))
        }
    };
    let mut rows = Vec::with_capacity(spec.thetas.len() * spec.ys.len());
    for &theta in &spec.thetas {
        for &y in &spec.ys {
            let value = eval(theta, y)?;
            if !value.is_finite() {
                return Err(convext::Error::Numeric(format!("non-finite value at theta={theta}, y={y}")).into());
            }
            rows.push(SurfaceRow { theta, y, value });
        }
    }
    Ok(rows)
}

/// CSV with header `theta,y,value` and 17 significant digits per number.
pub fn render_csv(rows: &[SurfaceRow]) -> String {
    let mut out = String::from("theta,y,value\n");
    for r in rows {
        writeln!(out, "{:.16e},{:.16e},{:.16e}", r.theta, r.y, r.value).expect("writing to a String cannot fail");
    }
    out
}

/// Parses a loss name as used on the command line.
pub fn parse_loss_kind(s: &str) -> CliResult<LossKind> {
    match s {
        "hinge" => Ok(LossKind::Hinge),
        "squared-hinge" | "squared_hinge" => Ok(LossKind::SquaredHinge),
        "logistic" => Ok(LossKind::Logistic),
        "squared-difference" | "squared_difference" => Ok(LossKind::SquaredDifference),
        _ => Err(CliError::Usage(format!("unknown loss `{s}`"))),
    }
}

pub fn parse_reg_kind(s: &str) -> CliResult<RegularizerKind> {
    match s {
        "l1" => Ok(RegularizerKind::L1),
        "l2" => Ok(RegularizerKind::L2),
        _ => Err(CliError::Usage(format!("unknown regularizer `{s}`; expected l1 or l2"))),
    }
}

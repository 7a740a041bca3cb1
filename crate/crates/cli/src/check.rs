//! Randomized property suites over the single-term envelopes.
//!
//! Every suite draws configurations from a seeded ChaCha stream, so a report is
//! reproducible from `(suite, samples, seed, dim)`.

use convext::{
    oracle_convexity, oracle_psi, GridSpec, LossKind, LossSpec, Method, RegularizerKind, RegularizerSpec,
    TermExtension, YSlope,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{CliError, CliResult};

pub const EXTENSION_TOL: f64 = 1e-9;
pub const ORACLE_TOL: f64 = 1e-4;
pub const ORACLE_TOL_LOGISTIC: f64 = 1e-3;
pub const CONVEXITY_TOL: f64 = 1e-8;
/// The non-convex raw term must show at least this midpoint violation.
pub const NEGATIVE_CONTROL_MIN: f64 = 0.01;
pub const SUBGRADIENT_TOL: f64 = 1e-8;
pub const FD_TOL: f64 = 1e-5;
pub const FD_STEP: f64 = 1e-6;
/// One-sided differences closer than this count as a smooth point.
pub const FD_SMOOTH: f64 = 1e-5;
/// Points of the `θ` grid in the extension suite.
pub const EXTENSION_GRID: usize = 101;
/// Configurations drawn per envelope kind in the sampling suites.
pub const CONFIGS_PER_KIND: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Extension,
    Oracle,
    Convexity,
    Subgradient,
}

impl std::str::FromStr for Suite {
    type Err = CliError;
    fn from_str(s: &str) -> CliResult<Self> {
        match s {
            "extension" => Ok(Suite::Extension),
            "oracle" => Ok(Suite::Oracle),
            "convexity" => Ok(Suite::Convexity),
            "subgradient" => Ok(Suite::Subgradient),
            _ => Err(CliError::Usage(format!(
                "unknown suite `{s}`; expected extension, oracle, convexity or subgradient"
            ))),
        }
    }
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::Extension => "extension",
            Suite::Oracle => "oracle",
            Suite::Convexity => "convexity",
            Suite::Subgradient => "subgradient",
        }
    }
}

/// The envelope implementations under test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvelopeKind {
    HingeL2,
    SquaredHingeL2,
    LogisticL2,
    HingeL1,
    SquaredHingeL1,
    LogisticL1,
    Trivial,
    LogisticPartial,
}

impl EnvelopeKind {
    pub const ALL: [EnvelopeKind; 8] = [
        EnvelopeKind::HingeL2,
        EnvelopeKind::SquaredHingeL2,
        EnvelopeKind::LogisticL2,
        EnvelopeKind::HingeL1,
        EnvelopeKind::SquaredHingeL1,
        EnvelopeKind::LogisticL1,
        EnvelopeKind::Trivial,
        EnvelopeKind::LogisticPartial,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EnvelopeKind::HingeL2 => "hinge_l2",
            EnvelopeKind::SquaredHingeL2 => "squared_hinge_l2",
            EnvelopeKind::LogisticL2 => "logistic_l2",
            EnvelopeKind::HingeL1 => "hinge_l1",
            EnvelopeKind::SquaredHingeL1 => "squared_hinge_l1",
            EnvelopeKind::LogisticL1 => "logistic_l1",
            EnvelopeKind::Trivial => "trivial",
            EnvelopeKind::LogisticPartial => "logistic_partial",
        }
    }

    fn is_logistic(self) -> bool {
        matches!(self, EnvelopeKind::LogisticL2 | EnvelopeKind::LogisticL1 | EnvelopeKind::LogisticPartial)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LossName {
    Hinge,
    SquaredHinge,
    Logistic,
}

impl From<LossName> for LossKind {
    fn from(n: LossName) -> Self {
        match n {
            LossName::Hinge => LossKind::Hinge,
            LossName::SquaredHinge => LossKind::SquaredHinge,
            LossName::Logistic => LossKind::Logistic,
        }
    }
}

/// A randomly drawn single-term configuration, serializable for failure reports.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TermConfig {
    pub kind: EnvelopeKind,
    pub loss: LossName,
    pub x: Vec<f64>,
    #[serde(rename = "C")]
    pub c: f64,
    pub c0: f64,
    pub c1: f64,
    /// `½‖θ‖²` when true, `‖θ‖²` otherwise; ignored for L1.
    pub half: bool,
    /// Box half-width for L1 terms, unbounded otherwise.
    pub bound: Option<f64>,
    /// Half-width of the `θ` region that the suites sample from.
    pub sample_radius: f64,
}

impl TermConfig {
    pub fn random(kind: EnvelopeKind, m: usize, rng: &mut ChaCha8Rng) -> Self {
        let x: Vec<f64> = loop {
            let x: Vec<f64> = (0..m).map(|_| rng.gen_range(-2.0..2.0)).collect();
            if x.iter().map(|v| v * v).sum::<f64>() > 0.01 {
                break x;
            }
        };
        let c = rng.gen_range(0.5..8.0);
        let (mut c0, mut c1) = (rng.gen_range(0.5..2.0), rng.gen_range(0.5..2.0));
        let loss = match kind {
            EnvelopeKind::HingeL2 | EnvelopeKind::HingeL1 => LossName::Hinge,
            EnvelopeKind::SquaredHingeL2 | EnvelopeKind::SquaredHingeL1 => LossName::SquaredHinge,
            EnvelopeKind::LogisticL2 | EnvelopeKind::LogisticL1 | EnvelopeKind::LogisticPartial => LossName::Logistic,
            EnvelopeKind::Trivial => [LossName::Hinge, LossName::SquaredHinge, LossName::Logistic][rng.gen_range(0..3)],
        };
        if kind == EnvelopeKind::LogisticPartial {
            c1 = c0;
        }
        if kind == EnvelopeKind::Trivial && rng.gen_bool(0.5) {
            (c0, c1) = (1.0, 1.0);
        }
        let half = kind != EnvelopeKind::LogisticPartial && rng.gen_bool(0.75);
        let is_l1 = matches!(kind, EnvelopeKind::HingeL1 | EnvelopeKind::SquaredHingeL1 | EnvelopeKind::LogisticL1);
        let bound = is_l1.then(|| rng.gen_range(1.0..4.0));
        TermConfig { kind, loss, x, c, c0, c1, half, bound, sample_radius: bound.unwrap_or(3.0) }
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    pub fn loss_spec(&self) -> LossSpec {
        LossSpec::new(self.loss.into(), self.c0, self.c1).expect("drawn class weights are positive")
    }

    pub fn reg_spec(&self) -> RegularizerSpec {
        let m = self.dim();
        match self.bound {
            Some(b) => RegularizerSpec::boxed(RegularizerKind::L1, self.half, -b, b, m),
            None => RegularizerSpec::unbounded(RegularizerKind::L2, self.half, m),
        }
    }

    pub fn term(&self) -> TermExtension {
        let (x, loss, reg) = (self.x.clone(), self.loss_spec(), self.reg_spec());
        match self.kind {
            EnvelopeKind::Trivial => TermExtension::loss_only(x, self.c, loss, reg),
            EnvelopeKind::LogisticPartial => Ok(TermExtension::logistic_partial(x, self.c * self.c0)),
            _ => TermExtension::full_term(x, self.c, loss, reg),
        }
        .expect("drawn configurations are supported")
    }

    /// `d(θ, label)` written out from the definitions, independent of the envelope code.
    pub fn direct_d(&self, theta: &[f64], label: bool) -> f64 {
        let r: f64 = self.x.iter().zip(theta).map(|(a, b)| a * b).sum();
        let sq: f64 = theta.iter().map(|t| t * t).sum();
        if self.kind == EnvelopeKind::LogisticPartial {
            return sq - if label { self.c * self.c0 * r } else { 0.0 };
        }
        let (w, s) = if label { (self.c1, 1.0) } else { (self.c0, -1.0) };
        let u = 1.0 - s * r;
        let loss = match self.loss {
            LossName::Hinge => w * u.max(0.0),
            LossName::SquaredHinge => 0.5 * w * u.max(0.0) * u.max(0.0),
            LossName::Logistic => w * (1.0 + (-s * r).exp()).ln(),
        };
        let omega = match (self.kind, self.bound) {
            (EnvelopeKind::Trivial, _) => 0.0,
            (_, Some(_)) => theta.iter().map(|t| t.abs()).sum(),
            (_, None) if self.half => 0.5 * sq,
            (_, None) => sq,
        };
        omega + self.c * loss
    }

    fn draw_theta(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        (0..self.dim()).map(|_| rng.gen_range(-self.sample_radius..=self.sample_radius)).collect()
    }

    /// Box for `θ⁰` that contains every minimizing split at `(θ, y)`.
    fn split_box(&self, theta: &[f64], y: f64) -> (Vec<f64>, Vec<f64>) {
        let m = self.dim();
        if let Some(b) = self.bound {
            // Both θ⁰ and θ¹ = (θ − (1−y)θ⁰)/y must stay in [−b, b].
            let lo = theta.iter().map(|t| ((t - y * b) / (1.0 - y)).max(-b)).collect();
            let hi = theta.iter().map(|t| ((t + y * b) / (1.0 - y)).min(b)).collect();
            return (lo, hi);
        }
        // The trivial split θ⁰ = θ¹ = θ bounds (1−y)·ω(θ⁰) from above, up to the lower bound of d.
        let v = (1.0 - y) * self.direct_d(theta, false) + y * self.direct_d(theta, true);
        let (kappa, floor) = if self.kind == EnvelopeKind::LogisticPartial {
            let xx: f64 = self.x.iter().map(|v| v * v).sum();
            (2.0, 0.25 * (self.c * self.c0).powi(2) * xx)
        } else {
            (if self.half { 1.0 } else { 2.0 }, 0.0)
        };
        let r = (2.0 * (v + y * floor) / ((1.0 - y) * kappa)).sqrt() * 1.01 + 1e-6;
        (vec![-r; m], vec![r; m])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CheckOptions {
    /// Per-kind sample count: configurations for `extension` and `oracle`, points or pairs otherwise.
    pub samples: usize,
    pub seed: u64,
    /// Parameter dimension of the drawn configurations.
    pub dim: usize,
    /// Runs the convexity suite on the raw non-convex term, which must fail.
    pub negative_control: bool,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions { samples: 200, seed: 0, dim: 1, negative_control: false }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KindReport {
    pub kind: EnvelopeKind,
    pub max_violation: f64,
    pub tolerance: f64,
    pub checked: usize,
    /// Configuration that produced `max_violation`, as JSON.
    pub worst: Option<String>,
}

impl KindReport {
    pub fn passed(&self) -> bool {
        self.max_violation <= self.tolerance
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub suite: Suite,
    pub options: CheckOptions,
    pub kinds: Vec<KindReport>,
    /// Secondary finite-difference results of the subgradient suite.
    pub finite_difference: Option<KindReport>,
    /// Set for the negative control: the largest violation of the raw term.
    pub negative_control: Option<f64>,
}

impl CheckReport {
    /// The negative control found the violation it is meant to find.
    pub fn control_detected(&self) -> bool {
        self.negative_control.is_some_and(|v| v > NEGATIVE_CONTROL_MIN)
    }

    pub fn max_violation(&self) -> f64 {
        self.kinds.iter().map(|k| k.max_violation).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Whether every checked function is within tolerance; false for a detecting negative control.
    pub fn passed(&self) -> bool {
        if let Some(v) = self.negative_control {
            return v <= CONVEXITY_TOL;
        }
        self.kinds.iter().all(KindReport::passed) && self.finite_difference.as_ref().is_none_or(KindReport::passed)
    }

    /// `key: value` lines.
    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("suite: {}\n", self.suite.name()));
        out.push_str(&format!("samples: {}\n", self.options.samples));
        out.push_str(&format!("seed: {}\n", self.options.seed));
        out.push_str(&format!("dim: {}\n", self.options.dim));
        if let Some(v) = self.negative_control {
            out.push_str("negative_control: raw hinge term, C = 5, x = 1\n");
            out.push_str(&format!("max_violation: {v:e}\n"));
            out.push_str(&format!("required_violation: {NEGATIVE_CONTROL_MIN:e}\n"));
            out.push_str(&format!("tolerance: {CONVEXITY_TOL:e}\n"));
            out.push_str(&format!("detected: {}\n", self.control_detected()));
            out.push_str(&format!("status: {}\n", if self.passed() { "pass" } else { "fail" }));
            return out;
        }
        let mut line = |prefix: &str, k: &KindReport| {
            out.push_str(&format!(
                "{prefix}{}: max_violation={:e} tolerance={:e} checked={} {}\n",
                k.kind.name(),
                k.max_violation,
                k.tolerance,
                k.checked,
                if k.passed() { "ok" } else { "FAIL" }
            ));
            if !k.passed() {
                if let Some(w) = &k.worst {
                    out.push_str(&format!("{prefix}{}_config: {w}\n", k.kind.name()));
                }
            }
        };
        for k in &self.kinds {
            line("", k);
        }
        if let Some(fd) = &self.finite_difference {
            line("finite_difference_", fd);
        }
        out.push_str(&format!("max_violation: {:e}\n", self.max_violation()));
        out.push_str(&format!("status: {}\n", if self.passed() { "pass" } else { "fail" }));
        out
    }
}

fn dump(cfg: &TermConfig, point: &str) -> String {
    let json = serde_json::to_string(cfg).expect("configurations always serialize");
    format!("{json} at {point}")
}

struct Tracker {
    kind: EnvelopeKind,
    tolerance: f64,
    max: f64,
    checked: usize,
    worst: Option<String>,
}

impl Tracker {
    fn new(kind: EnvelopeKind, tolerance: f64) -> Self {
        Tracker { kind, tolerance, max: f64::NEG_INFINITY, checked: 0, worst: None }
    }

    fn record(&mut self, violation: f64, cfg: &TermConfig, point: impl FnOnce() -> String) {
        self.checked += 1;
        // NaN counts as the worst possible outcome.
        let v = if violation.is_nan() { f64::INFINITY } else { violation };
        if v > self.max {
            self.max = v;
            self.worst = Some(dump(cfg, &point()));
        }
    }

    fn finish(self) -> KindReport {
        KindReport {
            kind: self.kind,
            max_violation: if self.checked == 0 { 0.0 } else { self.max },
            tolerance: self.tolerance,
            checked: self.checked,
            worst: self.worst,
        }
    }
}

fn kind_seed(seed: u64, kind: EnvelopeKind) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (kind as u64 + 1).wrapping_mul(0xD1B5_4A32_D192_ED69)
}

fn check_options(opts: &CheckOptions) -> CliResult<()> {
    if opts.samples == 0 {
        return Err(CliError::Usage("samples must be positive".into()));
    }
    if !(1..=2).contains(&opts.dim) {
        return Err(CliError::Usage("dim must be 1 or 2".into()));
    }
    Ok(())
}

/// Runs one suite over all eight envelope kinds.
pub fn run_check(suite: Suite, opts: &CheckOptions) -> CliResult<CheckReport> {
    check_options(opts)?;
    if opts.negative_control {
        if suite != Suite::Convexity {
            return Err(CliError::Usage("the negative control only applies to the convexity suite".into()));
        }
        return Ok(CheckReport {
            suite,
            options: *opts,
            kinds: Vec::new(),
            finite_difference: None,
            negative_control: Some(raw_hinge_violation(opts.samples, opts.seed)),
        });
    }
    let mut kinds = Vec::new();
    let mut fd_total: Option<Tracker> = None;
    for kind in EnvelopeKind::ALL {
        let mut rng = ChaCha8Rng::seed_from_u64(kind_seed(opts.seed, kind));
        let report = match suite {
            Suite::Extension => extension_kind(kind, opts, &mut rng),
            Suite::Oracle => match oracle_kind(kind, opts, &mut rng)? {
                Some(r) => r,
                None => continue,
            },
            Suite::Convexity => convexity_kind(kind, opts, &mut rng)?,
            Suite::Subgradient => {
                let (sub, fd) = subgradient_kind(kind, opts, &mut rng)?;
                let total = fd_total.get_or_insert_with(|| Tracker::new(kind, FD_TOL));
                total.checked += fd.checked;
                if fd.max > total.max {
                    total.max = fd.max;
                    total.kind = kind;
                    total.worst = fd.worst;
                }
                sub
            }
        };
        kinds.push(report);
    }
    Ok(CheckReport {
        suite,
        options: *opts,
        kinds,
        finite_difference: fd_total.map(Tracker::finish),
        negative_control: None,
    })
}

/// Integer-label values against the definition on an evenly spaced `θ` grid.
fn extension_kind(kind: EnvelopeKind, opts: &CheckOptions, rng: &mut ChaCha8Rng) -> KindReport {
    let mut t = Tracker::new(kind, EXTENSION_TOL);
    for _ in 0..opts.samples {
        let cfg = TermConfig::random(kind, opts.dim, rng);
        let term = cfg.term();
        // A random direction turns the grid into a segment through the sampled box.
        let dir: Vec<f64> = (0..opts.dim).map(|_| rng.gen_range(0.2..1.0)).collect();
        let scale = dir.iter().cloned().fold(0.0, f64::max);
        for i in 0..EXTENSION_GRID {
            let s = -1.0 + 2.0 * i as f64 / (EXTENSION_GRID - 1) as f64;
            let r = cfg.sample_radius;
            let theta: Vec<f64> = dir.iter().map(|d| (s * r * d / scale).clamp(-r, r)).collect();
            for (y, label) in [(0.0, false), (1.0, true)] {
                let want = cfg.direct_d(&theta, label);
                let v = match term.value(&theta, y) {
                    Ok(got) => (got - want).abs() / want.abs().max(1.0),
                    Err(_) => f64::INFINITY,
                };
                t.record(v, &cfg, || format!("theta={theta:?}, y={y}"));
            }
        }
    }
    t.finish()
}

/// Fractional-label values against a grid search over splits; `None` for kinds without a split.
fn oracle_kind(kind: EnvelopeKind, opts: &CheckOptions, rng: &mut ChaCha8Rng) -> CliResult<Option<KindReport>> {
    if kind == EnvelopeKind::Trivial {
        return Ok(None);
    }
    let tol = if kind.is_logistic() { ORACLE_TOL_LOGISTIC } else { ORACLE_TOL };
    let mut t = Tracker::new(kind, tol);
    for _ in 0..opts.samples {
        let cfg = TermConfig::random(kind, opts.dim, rng);
        let term = cfg.term();
        let theta = cfg.draw_theta(rng);
        let y = rng.gen_range(0.05..0.95);
        let (lo, hi) = cfg.split_box(&theta, y);
        let r = lo.iter().zip(&hi).map(|(a, b)| b - a).fold(0.0, f64::max);
        let step = if opts.dim == 1 { r / 4000.0 } else { r / 200.0 };
        let grid = GridSpec::new(lo, hi, step)?;
        let d0 = |t0: &[f64]| term.d(t0, false);
        let d1 = |t1: &[f64]| term.d(t1, true);
        let want = oracle_psi(d0, d1, &theta, y, &grid)?;
        let v = match term.value(&theta, y) {
            Ok(got) => (got - want).abs(),
            Err(_) => f64::INFINITY,
        };
        t.record(v, &cfg, || format!("theta={theta:?}, y={y}"));
    }
    Ok(Some(t.finish()))
}

/// Midpoint convexity on the joint `(θ, y)` box.
///
/// A fifth of the endpoint labels are pinned to 0 or 1, where the envelope meets `d`
/// and a jump to the interior would show.
fn convexity_kind(kind: EnvelopeKind, opts: &CheckOptions, rng: &mut ChaCha8Rng) -> CliResult<KindReport> {
    let mut t = Tracker::new(kind, CONVEXITY_TOL);
    let per = opts.samples.div_ceil(CONFIGS_PER_KIND);
    let mut remaining = opts.samples;
    while remaining > 0 {
        let cfg = TermConfig::random(kind, opts.dim, rng);
        let term = cfg.term();
        let draw = |rng: &mut ChaCha8Rng| {
            let y = match rng.gen_range(0..10) {
                0 => 0.0,
                1 => 1.0,
                _ => rng.gen_range(0.0..=1.0),
            };
            (cfg.draw_theta(rng), y)
        };
        for _ in 0..per.min(remaining) {
            remaining -= 1;
            let (tp, yp) = draw(rng);
            let (tq, yq) = draw(rng);
            let lam: f64 = rng.gen_range(0.0..=1.0);
            let tm: Vec<f64> = tp.iter().zip(&tq).map(|(a, b)| lam * a + (1.0 - lam) * b).collect();
            let ym = (lam * yp + (1.0 - lam) * yq).clamp(0.0, 1.0);
            let v = match (term.value(&tp, yp), term.value(&tq, yq), term.value(&tm, ym)) {
                (Ok(fp), Ok(fq), Ok(fm)) => fm - lam * fp - (1.0 - lam) * fq,
                _ => f64::INFINITY,
            };
            t.record(v, &cfg, || format!("p=({tp:?}, {yp}), q=({tq:?}, {yq}), lambda={lam}"));
        }
    }
    Ok(t.finish())
}

/// Midpoint convexity violation of the raw hinge term `½θ² + 5·max(0, 1 − (2y−1)θ)`.
pub fn raw_hinge_violation(samples: usize, seed: u64) -> f64 {
    let term = TermExtension::full_term(
        vec![1.0],
        5.0,
        LossSpec::unweighted(LossKind::Hinge),
        RegularizerSpec::unbounded(RegularizerKind::L2, true, 1),
    )
    .expect("hinge with ½L2 is supported");
    oracle_convexity(|p| term.raw(&p[..1], p[1]), &[-3.0, 0.0], &[3.0, 1.0], samples, seed)
}

fn slope_term(w: YSlope, dy: f64) -> f64 {
    match w {
        YSlope::Finite(w) => w * dy,
        _ if dy == 0.0 => 0.0,
        // An infinite slope at an integer label makes the inequality vacuous for any move into [0, 1].
        YSlope::NegInfinite | YSlope::PosInfinite => f64::NEG_INFINITY,
    }
}

/// Subgradient inequality on random pairs plus finite differences at smooth points.
fn subgradient_kind(kind: EnvelopeKind, opts: &CheckOptions, rng: &mut ChaCha8Rng) -> CliResult<(KindReport, Tracker)> {
    let mut t = Tracker::new(kind, SUBGRADIENT_TOL);
    let mut fd = Tracker::new(kind, FD_TOL);
    let per = opts.samples.div_ceil(CONFIGS_PER_KIND);
    let mut remaining = opts.samples;
    while remaining > 0 {
        let cfg = TermConfig::random(kind, opts.dim, rng);
        let term = cfg.term();
        let f = |theta: &[f64], y: f64| term.value(theta, y).unwrap_or(f64::NAN);
        for _ in 0..per.min(remaining) {
            remaining -= 1;
            let tp = cfg.draw_theta(rng);
            let yp = match rng.gen_range(0..10) {
                0 => 0.0,
                1 => 1.0,
                _ => rng.gen_range(0.0..1.0),
            };
            let tq = cfg.draw_theta(rng);
            let yq = rng.gen_range(0.0..=1.0);
            let g = term.subgradient(&tp, yp).map_err(CliError::from)?;
            let fp = f(&tp, yp);
            let fq = f(&tq, yq);
            let lin = fp
                + g.v.iter().zip(tq.iter().zip(&tp)).map(|(v, (a, b))| v * (a - b)).sum::<f64>()
                + slope_term(g.w, yq - yp);
            let slack = fq - lin;
            t.record(-slack, &cfg, || format!("p=({tp:?}, {yp}), q=({tq:?}, {yq})"));
            if 0.0 < yp && yp < 1.0 && term.method != Method::Trivial {
                finite_difference(&cfg, &f, &tp, yp, &g.v, g.w, &mut fd);
            }
        }
    }
    Ok((t.finish(), fd))
}

fn finite_difference(
    cfg: &TermConfig,
    f: &dyn Fn(&[f64], f64) -> f64,
    theta: &[f64],
    y: f64,
    v: &[f64],
    w: YSlope,
    fd: &mut Tracker,
) {
    let h = FD_STEP;
    let m = theta.len();
    let YSlope::Finite(w) = w else { return };
    if y < 2.0 * h || y > 1.0 - 2.0 * h {
        return;
    }
    if let Some(b) = cfg.bound {
        if theta.iter().any(|t| t.abs() > b - 2.0 * h) {
            return;
        }
    }
    let f0 = f(theta, y);
    for i in 0..=m {
        let shifted = |d: f64| {
            let mut t = theta.to_vec();
            if i < m {
                t[i] += d;
                f(&t, y)
            } else {
                f(&t, y + d)
            }
        };
        let (fp, fm) = (shifted(h), shifted(-h));
        let (fwd, bwd) = ((fp - f0) / h, (f0 - fm) / h);
        if (fwd - bwd).abs() > FD_SMOOTH {
            continue;
        }
        let central = (fp - fm) / (2.0 * h);
        let g = if i < m { v[i] } else { w };
        fd.record((central - g).abs(), cfg, || format!("theta={theta:?}, y={y}, coordinate={i}"));
    }
}

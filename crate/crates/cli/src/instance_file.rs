//! JSON instance documents.
//!
//! ```json
//! {
//!   "features": [[1.0], [-1.0]],
//!   "C": 1.0,
//!   "loss": {"kind": "hinge", "c0": 1.0, "c1": 1.0},
//!   "regularizer": {"kind": "l2", "half": true, "lower": [null], "upper": [null]},
//!   "constraints": {"fixed": {"0": 1}, "cardinality": 1, "linear": [{"coeffs": [1, 1], "rhs": 1}]},
//!   "decomposition": "full_term"
//! }
//! ```
//!
//! `null` bounds are unbounded. Missing `constraints`, bounds, weights and
//! `decomposition` default to none, unbounded, 1 and `full_term`.

use std::collections::BTreeMap;
use std::path::Path;

use convext::{
    Decomposition, Instance, LabelConstraintSet, LinearConstraint, LossKind, LossSpec, RegularizerKind, RegularizerSpec,
};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossName {
    SquaredDifference,
    Logistic,
    Hinge,
    SquaredHinge,
}

impl From<LossName> for LossKind {
    fn from(n: LossName) -> Self {
        match n {
            LossName::SquaredDifference => LossKind::SquaredDifference,
            LossName::Logistic => LossKind::Logistic,
            LossName::Hinge => LossKind::Hinge,
            LossName::SquaredHinge => LossKind::SquaredHinge,
        }
    }
}

impl From<LossKind> for LossName {
    fn from(k: LossKind) -> Self {
        match k {
            LossKind::SquaredDifference => LossName::SquaredDifference,
            LossKind::Logistic => LossName::Logistic,
            LossKind::Hinge => LossName::Hinge,
            LossKind::SquaredHinge => LossName::SquaredHinge,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegularizerName {
    L1,
    L2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecompositionName {
    LossOnly,
    FullTerm,
    LogisticPartial,
}

impl From<DecompositionName> for Decomposition {
    fn from(n: DecompositionName) -> Self {
        match n {
            DecompositionName::LossOnly => Decomposition::LossOnly,
            DecompositionName::FullTerm => Decomposition::FullTerm,
            DecompositionName::LogisticPartial => Decomposition::LogisticPartial,
        }
    }
}

impl From<Decomposition> for DecompositionName {
    fn from(d: Decomposition) -> Self {
        match d {
            Decomposition::LossOnly => DecompositionName::LossOnly,
            Decomposition::FullTerm => DecompositionName::FullTerm,
            Decomposition::LogisticPartial => DecompositionName::LogisticPartial,
        }
    }
}

fn one() -> f64 {
    1.0
}

fn yes() -> bool {
    true
}

fn full_term() -> DecompositionName {
    DecompositionName::FullTerm
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LossDoc {
    pub kind: LossName,
    #[serde(default = "one")]
    pub c0: f64,
    #[serde(default = "one")]
    pub c1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegularizerDoc {
    pub kind: RegularizerName,
    #[serde(default = "yes")]
    pub half: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lower: Option<Vec<Option<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub upper: Option<Vec<Option<f64>>>,
}

/// A fixed label written as `0`/`1` or `false`/`true`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Bit {
    Int(u8),
    Bool(bool),
}

impl Bit {
    fn value(self) -> CliResult<bool> {
        match self {
            Bit::Bool(b) => Ok(b),
            Bit::Int(0) => Ok(false),
            Bit::Int(1) => Ok(true),
            Bit::Int(v) => Err(CliError::Usage(format!("fixed labels must be 0 or 1, got {v}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearDoc {
    pub coeffs: Vec<f64>,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintsDoc {
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub fixed: BTreeMap<usize, Bit>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cardinality: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub linear: Vec<LinearDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub features: Vec<Vec<f64>>,
    #[serde(rename = "C")]
    pub c: f64,
    pub loss: LossDoc,
    pub regularizer: RegularizerDoc,
    #[serde(default)]
    pub constraints: ConstraintsDoc,
    #[serde(default = "full_term")]
    pub decomposition: DecompositionName,
}

fn bounds(v: &Option<Vec<Option<f64>>>, m: usize, fill: f64, name: &str) -> CliResult<Vec<f64>> {
    match v {
        None => Ok(vec![fill; m]),
        Some(list) if list.len() == m => Ok(list.iter().map(|b| b.unwrap_or(fill)).collect()),
        Some(list) => Err(CliError::Usage(format!("regularizer.{name} has {} entries, expected {m}", list.len()))),
    }
}

fn doc_bounds(v: &[f64]) -> Option<Vec<Option<f64>>> {
    if v.iter().all(|b| b.is_infinite()) {
        None
    } else {
        Some(v.iter().map(|b| b.is_finite().then_some(*b)).collect())
    }
}

impl InstanceFile {
    pub fn to_instance(&self) -> CliResult<Instance> {
        let m = self.features.first().map_or(0, |x| x.len());
        let loss = LossSpec::new(self.loss.kind.into(), self.loss.c0, self.loss.c1)?;
        let kind = match self.regularizer.kind {
            RegularizerName::L1 => RegularizerKind::L1,
            RegularizerName::L2 => RegularizerKind::L2,
        };
        let lower = bounds(&self.regularizer.lower, m, f64::NEG_INFINITY, "lower")?;
        let upper = bounds(&self.regularizer.upper, m, f64::INFINITY, "upper")?;
        let reg = RegularizerSpec::new(kind, self.regularizer.half, lower, upper)?;
        let mut labels = LabelConstraintSet::unconstrained(self.features.len());
        for (&i, &b) in &self.constraints.fixed {
            labels.fixed.insert(i, b.value()?);
        }
        labels.cardinality = self.constraints.cardinality;
        labels.linear =
            self.constraints.linear.iter().map(|r| LinearConstraint { coeffs: r.coeffs.clone(), rhs: r.rhs }).collect();
        Ok(Instance::new(self.features.clone(), self.c, loss, reg, labels, self.decomposition.into())?)
    }

    pub fn from_instance(inst: &Instance) -> Self {
        InstanceFile {
            features: inst.features.clone(),
            c: inst.c,
            loss: LossDoc { kind: inst.loss.kind.into(), c0: inst.loss.c0, c1: inst.loss.c1 },
            regularizer: RegularizerDoc {
                kind: match inst.reg.kind {
                    RegularizerKind::L1 => RegularizerName::L1,
                    RegularizerKind::L2 => RegularizerName::L2,
                },
                half: inst.reg.half,
                lower: doc_bounds(&inst.reg.lower),
                upper: doc_bounds(&inst.reg.upper),
            },
            constraints: ConstraintsDoc {
                fixed: inst.labels.fixed.iter().map(|(&i, &b)| (i, Bit::Int(b as u8))).collect(),
                cardinality: inst.labels.cardinality,
                linear: inst.labels.linear.iter().map(|r| LinearDoc { coeffs: r.coeffs.clone(), rhs: r.rhs }).collect(),
            },
            decomposition: inst.decomposition.into(),
        }
    }
}

/// Parses an instance document; syntax and schema errors carry line and column.
pub fn parse_instance(text: &str) -> CliResult<Instance> {
    let doc: InstanceFile = serde_json::from_str(text).map_err(|e| CliError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    doc.to_instance()
}

pub fn load_instance(path: &Path) -> CliResult<Instance> {
    let text =
        std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.display().to_string(), source })?;
    parse_instance(&text)
}

pub fn serialize_instance(inst: &Instance) -> String {
    serde_json::to_string_pretty(&InstanceFile::from_instance(inst)).expect("instance documents always serialize")
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO_SAMPLE: &str = r#"{
        "features": [[1.0], [-1.0]],
        "C": 1.0,
        "loss": {"kind": "hinge"},
        "regularizer": {"kind": "l2", "half": true},
        "constraints": {"cardinality": 1}
    }"#;

    #[test]
    fn parses_defaults() {
        let inst = parse_instance(TWO_SAMPLE).unwrap();
        assert_eq!(inst.n_samples(), 2);
        assert_eq!(inst.labels.cardinality, Some(1));
        assert_eq!(inst.decomposition, Decomposition::FullTerm);
        assert!(inst.reg.is_unconstrained());
        assert_eq!(inst.loss.c0, 1.0);
    }

    #[test]
    fn round_trip() {
        let text = r#"{
            "features": [[1.0, 0.5], [-1.0, 2.0], [0.25, -0.75]],
            "C": 2.5,
            "loss": {"kind": "squared_hinge", "c0": 0.5, "c1": 2.0},
            "regularizer": {"kind": "l1", "half": false, "lower": [-3.0, null], "upper": [3.0, 4.0]},
            "constraints": {"fixed": {"1": 1, "2": false}, "cardinality": 2,
                            "linear": [{"coeffs": [1.0, -1.0, 0.0], "rhs": 0.5}]},
            "decomposition": "loss_only"
        }"#;
        let inst = parse_instance(text).unwrap();
        assert_eq!(inst.labels.fixed.get(&2), Some(&false));
        assert_eq!(inst.reg.lower[1], f64::NEG_INFINITY);
        let again = parse_instance(&serialize_instance(&inst)).unwrap();
        assert_eq!(inst, again);
    }

    #[test]
    fn errors_carry_position() {
        let bad = "{\n  \"features\": [[1.0]],\n  \"C\": oops\n}";
        match parse_instance(bad) {
            Err(CliError::Parse { line, column, .. }) => {
                assert_eq!(line, 3);
                assert!(column > 0);
            }
            other => panic!("unexpected {other:?}"),
        }
        let unknown =
            r#"{"features": [[1]], "C": 1, "loss": {"kind": "hinge"}, "regularizer": {"kind": "l2"}, "extra": 1}"#;
        assert!(matches!(parse_instance(unknown), Err(CliError::Parse { .. })));
    }

    #[test]
    fn invalid_content_is_rejected() {
        let bad = r#"{"features": [[1], [1, 2]], "C": 1, "loss": {"kind": "hinge"}, "regularizer": {"kind": "l2"}}"#;
        assert!(matches!(parse_instance(bad), Err(CliError::Core(_)) | Err(CliError::Usage(_))));
        let bit = r#"{"features": [[1]], "C": 1, "loss": {"kind": "hinge"}, "regularizer": {"kind": "l2"}, "constraints": {"fixed": {"0": 2}}}"#;
        assert!(matches!(parse_instance(bit), Err(CliError::Usage(_))));
    }
}

//! Best-first branch-and-bound over the convexified mixed-integer program.
//!
//! Node bounds are certified lower bounds of the node relaxation, so a node is pruned
//! only when its true relaxation optimum cannot beat the incumbent by more than `tol`.

use alloc::collections::{BTreeMap, BinaryHeap};
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::labels::LabelConstraintSet;
use crate::relax::{solve_relaxation, solve_supervised, Extension, RelaxOptions, RelaxationResult};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BnbOptions {
    /// Stop when `incumbent − global lower bound ≤ tol`; also the pruning slack.
    pub tol: f64,
    pub node_cap: usize,
    pub relax: RelaxOptions,
    /// Also solve the trivial-extension relaxation at each node and log it.
    pub compare_trivial: bool,
}

impl Default for BnbOptions {
    fn default() -> Self {
        BnbOptions { tol: 1e-6, node_cap: 10_000, relax: RelaxOptions::default(), compare_trivial: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeStatus {
    /// Children were created.
    Branched,
    /// Every label fixed; solved exactly.
    Leaf,
    /// Bound no better than the incumbent.
    Pruned,
    /// The node's constraint set is empty.
    Infeasible,
    /// Left unexplored when the node cap was hit.
    Open,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeRecord {
    pub fixed: BTreeMap<usize, bool>,
    /// Certified lower bound of the node relaxation.
    pub lower_bound: f64,
    /// Relaxation value at the returned point.
    pub value: f64,
    pub status: NodeStatus,
    /// `(value, gap_estimate)` of the trivial-extension relaxation of the same node.
    pub trivial: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BnbResult {
    pub incumbent_value: f64,
    pub incumbent_theta: Vec<f64>,
    pub incumbent_y: Vec<bool>,
    pub nodes_explored: usize,
    /// `incumbent_value − global lower bound`, clamped at 0.
    pub proven_gap: f64,
    pub node_log: Vec<NodeRecord>,
}

struct Node {
    labels: LabelConstraintSet,
    relax: RelaxationResult,
    log_index: usize,
    order: usize,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    /// Max-heap order: smaller bound first, then earlier insertion.
    fn cmp(&self, other: &Self) -> Ordering {
        other.relax.lower_bound.total_cmp(&self.relax.lower_bound).then_with(|| other.order.cmp(&self.order))
    }
}

struct Incumbent {
    value: f64,
    theta: Vec<f64>,
    y: Vec<bool>,
}

/// Most fractional free label, lowest index on ties.
fn branching_label(labels: &LabelConstraintSet, y: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for i in labels.free_indices() {
        let frac = (y[i] - 0.5).abs();
        if best.is_none_or(|(_, f)| frac < f) {
            best = Some((i, frac));
        }
    }
    best.map(|(i, _)| i)
}

/// Rounds a relaxed labeling into the constraint set: top-`k′` free labels under a
/// cardinality constraint, thresholding at ½ otherwise.
fn round_labels(labels: &LabelConstraintSet, y: &[f64]) -> Option<Vec<bool>> {
    let mut out: Vec<bool> = y.iter().map(|v| *v >= 0.5).collect();
    for (&i, &b) in &labels.fixed {
        out[i] = b;
    }
    if let Some(k) = labels.residual_cardinality() {
        let k = k.ok()?;
        let mut free = labels.free_indices();
        free.sort_by(|&a, &b| y[b].total_cmp(&y[a]).then(a.cmp(&b)));
        for (rank, &i) in free.iter().enumerate() {
            out[i] = rank < k;
        }
    }
    labels.contains(&out).then_some(out)
}

/// Solves `min φ(θ, y)` over `θ ∈ Θ` and feasible binary `y`.
pub fn branch_and_bound(inst: &Instance, extension: Extension, opts: BnbOptions) -> Result<BnbResult> {
    inst.validate()?;
    if extension == Extension::Theorem1 {
        return Err(Error::Unsupported("branch-and-bound uses the trivial or decomposed extension".into()));
    }
    let mut log: Vec<NodeRecord> = Vec::new();
    let mut incumbent: Option<Incumbent> = None;
    let mut heap: BinaryHeap<Node> = BinaryHeap::new();
    let mut closed_bound = f64::INFINITY;
    let mut explored = 0usize;
    let mut counter = 0usize;

    let offer = |incumbent: &mut Option<Incumbent>, value: f64, theta: Vec<f64>, y: Vec<bool>| {
        if incumbent.as_ref().is_none_or(|c| value < c.value) {
            *incumbent = Some(Incumbent { value, theta, y });
        }
    };

    // Children awaiting evaluation, with their parent's bound.
    let mut pending: Vec<(LabelConstraintSet, f64)> = alloc::vec![(inst.labels.clone(), f64::NEG_INFINITY)];
    let mut root = true;
    loop {
        // Evaluate newly created nodes.
        for (labels, parent_bound) in pending.drain(..) {
            if explored >= opts.node_cap {
                // Unevaluated children keep their parent's bound.
                closed_bound = closed_bound.min(parent_bound);
                log.push(NodeRecord {
                    fixed: labels.fixed.clone(),
                    lower_bound: parent_bound,
                    value: f64::NAN,
                    status: NodeStatus::Open,
                    trivial: None,
                });
                continue;
            }
            explored += 1;
            let node_inst = inst.with_labels(labels.clone());
            let relax = match solve_relaxation(&node_inst, extension, opts.relax) {
                Ok(r) => r,
                Err(Error::Infeasible(msg)) => {
                    if root {
                        return Err(Error::Infeasible(msg));
                    }
                    log.push(NodeRecord {
                        fixed: labels.fixed.clone(),
                        lower_bound: f64::INFINITY,
                        value: f64::INFINITY,
                        status: NodeStatus::Infeasible,
                        trivial: None,
                    });
                    continue;
                }
                Err(e) => return Err(e),
            };
            root = false;
            let trivial = if opts.compare_trivial {
                let t = solve_relaxation(&node_inst, Extension::Trivial, opts.relax)?;
                Some((t.value, t.gap_estimate))
            } else {
                None
            };
            let leaf = labels.free_indices().is_empty();
            if leaf {
                let y: Vec<bool> = (0..labels.n).map(|i| labels.fixed[&i]).collect();
                offer(&mut incumbent, relax.value, relax.theta.clone(), y);
                closed_bound = closed_bound.min(relax.lower_bound);
            } else if let Some(y) = round_labels(&labels, &relax.y) {
                let s = solve_supervised(inst, &y, opts.relax)?;
                offer(&mut incumbent, s.value, s.theta, y);
            }
            log.push(NodeRecord {
                fixed: labels.fixed.clone(),
                lower_bound: relax.lower_bound,
                value: relax.value,
                status: if leaf { NodeStatus::Leaf } else { NodeStatus::Open },
                trivial,
            });
            if !leaf {
                heap.push(Node { labels, relax, log_index: log.len() - 1, order: counter });
                counter += 1;
            }
        }
        if root {
            // The cap stopped evaluation before the root.
            return Err(Error::InvalidInput("node cap must allow at least the root node".into()));
        }
        let inc = incumbent.as_ref().map_or(f64::INFINITY, |c| c.value);
        let open_bound = heap.peek().map_or(f64::INFINITY, |n| n.relax.lower_bound);
        if inc - closed_bound.min(open_bound) <= opts.tol && incumbent.is_some() {
            break;
        }
        let Some(node) = heap.pop() else { break };
        if node.relax.lower_bound >= inc - opts.tol {
            log[node.log_index].status = NodeStatus::Pruned;
            closed_bound = closed_bound.min(node.relax.lower_bound);
            continue;
        }
        if explored >= opts.node_cap {
            heap.push(node);
            break;
        }
        let i = branching_label(&node.labels, &node.relax.y).expect("open nodes have free labels");
        log[node.log_index].status = NodeStatus::Branched;
        for bit in [false, true] {
            match node.labels.with_fixed(i, bit) {
                Ok(child) => pending.push((child, node.relax.lower_bound)),
                Err(Error::Infeasible(_)) => {}
                Err(e) => return Err(e),
            }
        }
    }
    let incumbent =
        incumbent.ok_or_else(|| Error::Infeasible("no binary labeling satisfies the constraints".into()))?;
    let open_bound = heap.iter().map(|n| n.relax.lower_bound).fold(f64::INFINITY, f64::min);
    let global = closed_bound.min(open_bound).min(incumbent.value);
    Ok(BnbResult {
        incumbent_value: incumbent.value,
        incumbent_theta: incumbent.theta,
        incumbent_y: incumbent.y,
        nodes_explored: explored,
        proven_gap: (incumbent.value - global).max(0.0),
        node_log: log,
    })
}

//! Convex extensions of regularized empirical risk objectives with binary labels.
//!
//! The objective `φ(θ, y) = ω(θ) + C/|S| Σ l(⟨x_s, θ⟩, y_s)` is non-convex in `(θ, y)`
//! for the logistic, hinge and squared hinge losses. This crate computes convex
//! functions on `Θ × [0,1]^S` that agree with `φ` at every binary labeling:
//!
//! - [`envelope`]: the tightest convex extension of a single term `d(θ, y)` with
//!   `y ∈ {0,1}`, its subgradients, and the trivial and logistic-partial extensions.
//! - [`l2`] and [`l1`]: closed forms and root conditions for L2- and box-constrained
//!   L1-regularized terms.
//! - [`tightest`]: the exact tightest extension of the whole objective over a small,
//!   explicitly enumerated label set.
//! - [`relax`] and [`bnb`]: continuous relaxation and branch-and-bound over the
//!   convexified mixed-integer program.
//! - [`oracle`]: slow brute-force references used to validate everything above.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod bnb;
pub mod ellipsoid;
pub mod envelope;
pub mod error;
pub mod instance;
pub mod interval;
pub mod l1;
pub mod l2;
pub mod labels;
pub mod loss;
pub mod math;
pub mod oracle;
pub mod relax;
pub mod scalar;
pub mod tightest;

pub use bnb::{branch_and_bound, BnbOptions, BnbResult, NodeRecord, NodeStatus};
pub use envelope::{
    envelope_subgradient, envelope_value, logistic_partial_extension_value, trivial_extension_value, xi_map, Method,
    SubgradientPair, TermExtension, YSlope,
};
pub use error::{Error, Result};
pub use instance::{Decomposition, ExtendedObjective, Instance};
pub use interval::Interval;
pub use labels::{project_labels, LabelConstraintSet, LinearConstraint};
pub use loss::{
    loss_subdifferential, loss_value, regularizer_value, LossKind, LossSpec, RegularizerKind, RegularizerSpec,
};
pub use oracle::{oracle_convexity, oracle_mip, oracle_psi, GridSpec, MipSolution};
pub use relax::{solve_relaxation, solve_supervised, Extension, RelaxMethod, RelaxOptions, RelaxationResult};
pub use tightest::{
    enumerate_support_sets, support_set_upper_bound, tightest_extension_value, LabelSet, LabeledConvexFamily,
    SupportSet,
};

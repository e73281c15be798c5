//! Sign-constrained rectifier networks: ReLU networks whose output weights
//! (and, with two hidden layers, second-layer weights) are non-positive, so
//! every output is concave layerwise.
//!
//! The crate provides convex-hull separability oracles, constructive
//! separators for one and two hidden layers, activation-pattern
//! decompositions of trained or constructed models, and
//! majorization-minimization training with hinge losses.

// `!(x > 0.0)` is used on purpose so that NaN takes the rejecting branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod construct;
pub mod data;
pub mod decompose;
pub mod error;
pub mod geometry;
pub mod linalg;
pub mod mm;
pub mod network;
pub mod plot;
pub mod train;
pub mod verify;

pub use error::{Result, ScrnError};
pub use geometry::{PointSet, SeparabilityVerdict, DEFAULT_TOL};
pub use linalg::Matrix;
pub use network::{ActiveSet, CanonicalShl, CanonicalThl, Model, ReluLayer, Scrn1Model, Scrn2Model, SignConstraint};

//! Singular gradient flows on the plane.
//!
//! A singular metric is a field of symmetric 2x2 forms that is positive
//! definite away from a thin set and only semidefinite on it. Dividing by the
//! determinant is impossible on that set, so the flow is driven by the
//! adjugate field `adj(H) * df`, which is defined everywhere and vanishes on
//! the degeneracy locus while sharing oriented trajectories with the gradient
//! elsewhere.
//!
//! The crate provides:
//!
//! * [`metric`]: symmetric forms, degeneracy classification, and the built-in
//!   metrics on the blow-up cover and on the unit ball.
//! * [`scalar`]: scalar fields with closed-form gradients and a finite
//!   difference oracle.
//! * [`charts`]: blow-down, angle lift, inversion, and pullbacks.
//! * [`flow`]: adjugate and gradient fields and an adaptive 5(4) integrator.
//! * [`analysis`]: winding numbers, ray crossings, log-spiral fits and secant
//!   direction coverage.
//! * [`scenarios`]: runnable, self-checking experiments.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]
pub mod analysis;
pub mod charts;
pub mod error;
pub mod flow;
pub mod metric;
pub mod scalar;
pub mod scenarios;

/// A point in chart coordinates. On the cover chart the order is `(phi, r)`.
pub type Point = [f64; 2];

/// Row-major 2x2 matrix.
pub type Mat2 = [[f64; 2]; 2];

pub use analysis::{RayCrossings, SecantCoverage, SpiralFit};
pub use charts::ChartMap;
pub use error::{Error, Result};
pub use flow::{IntegrationOptions, Mode, Sample, StopReason, Trajectory, VectorField2};
pub use metric::{ChartId, Degeneracy, DegeneracyKind, MetricField, SymmetricForm2};
pub use scalar::{Covector2, Perturbation, PlaneFunction, ScalarField};
pub use scenarios::{Check, Overrides, Scenario, ScenarioId, ScenarioReport};

//! Fixtures shared by the criterion benches.

use singrad_core::flow::xi_field;
use singrad_core::{MetricField, ScalarField, VectorField2};

/// The spiral field of the blown-down metric with `delta`.
pub fn spiral_field() -> VectorField2 {
    xi_field(&MetricField::blown_down(), &ScalarField::neg_sq_radius()).expect("charts agree")
}

/// The canonical field on the cover.
pub fn cover_field() -> VectorField2 {
    xi_field(&MetricField::cover(), &ScalarField::neg_cover_radius()).expect("charts agree")
}

//! Singular gradient vector fields and their integration.
//!
//! The adjugate field `xi = adj(H) * df` equals `det(H) * grad f` off the
//! degeneracy locus and stays finite on it, so it is the field integrated by
//! default. Trajectories follow `+xi` (ascent of `f`).

mod integrator;
mod trajectory;

use std::fmt;
use std::sync::Arc;

pub use integrator::{integrate, IntegrationOptions, Mode};
pub use trajectory::{Sample, StopReason, Trajectory};

use crate::error::{Error, Result};
use crate::metric::{ChartId, MetricField};
use crate::scalar::ScalarField;
use crate::Point;

type VectorFn = dyn Fn(Point) -> Result<[f64; 2]> + Send + Sync;

#[derive(Clone)]
pub struct VectorField2 {
    chart: ChartId,
    label: String,
    eval: Arc<VectorFn>,
}

impl fmt::Debug for VectorField2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("VectorField2")
            .field("chart", &self.chart)
            .field("label", &self.label)
            .finish_non_exhaustive()
    }
}

impl VectorField2 {
    pub fn new(
        chart: ChartId,
        label: impl Into<String>,
        eval: impl Fn(Point) -> Result<[f64; 2]> + Send + Sync + 'static,
    ) -> Self {
        Self {
            chart,
            label: label.into(),
            eval: Arc::new(eval),
        }
    }

    pub fn chart(&self) -> ChartId {
        self.chart
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn eval(&self, p: Point) -> Result<[f64; 2]> {
        (self.eval)(p)
    }
}

fn same_chart(m: &MetricField, f: &ScalarField) -> Result<()> {
    if m.chart() != f.chart() {
        return Err(Error::ChartMismatch {
            expected: m.chart(),
            found: f.chart(),
        });
    }
    Ok(())
}

/// `xi_m f = adj(m) * df`.
pub fn xi_field(m: &MetricField, f: &ScalarField) -> Result<VectorField2> {
    same_chart(m, f)?;
    let (m, f) = (m.clone(), f.clone());
    Ok(VectorField2::new(
        m.chart(),
        format!("xi[{}]({})", m.label(), f.label()),
        move |p| {
            let q = m.eval(p)?;
            let df = f.eval_grad(p)?;
            Ok(q.adjugate().apply(df.to_array()))
        },
    ))
}

/// `grad_m f = xi_m f / det(m)`, refused where `det(m) <= det_floor`.
pub fn grad_field(m: &MetricField, f: &ScalarField, det_floor: f64) -> Result<VectorField2> {
    same_chart(m, f)?;
    if !(det_floor > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "det_floor {det_floor} must be positive"
        )));
    }
    let (m, f) = (m.clone(), f.clone());
    Ok(VectorField2::new(
        m.chart(),
        format!("grad[{}]({})", m.label(), f.label()),
        move |p| {
            let q = m.eval(p)?;
            let det = q.determinant();
            if !(det > det_floor) {
                return Err(Error::DegeneratePoint {
                    point: p,
                    det,
                    floor: det_floor,
                });
            }
            let xi = q.adjugate().apply(f.eval_grad(p)?.to_array());
            Ok([xi[0] / det, xi[1] / det])
        },
    ))
}

/// True when `v1(p)` and `v2(p)` point the same way: positive inner product
/// and `|v1 x v2| / (|v1| |v2|) <= tol`.
pub fn time_rescale_equivalence(
    v1: &VectorField2,
    v2: &VectorField2,
    p: Point,
    tol: f64,
) -> Result<bool> {
    let a = v1.eval(p)?;
    let b = v2.eval(p)?;
    let (na, nb) = (a[0].hypot(a[1]), b[0].hypot(b[1]));
    if na == 0.0 || nb == 0.0 {
        return Err(Error::ZeroVector { point: p });
    }
    let cross = (a[0] * b[1] - a[1] * b[0]) / (na * nb);
    let dot = a[0] * b[0] + a[1] * b[1];
    Ok(dot > 0.0 && cross.abs() <= tol)
}

/// Normalized cross product of two vectors. Zero means parallel.
pub fn normalized_cross(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] * b[1] - a[1] * b[0]) / (a[0].hypot(a[1]) * b[0].hypot(b[1]))
}

//! Maps between charts, pullbacks, and transport of trajectories.
//!
//! Jacobians are stored as `J[i][k] = d(out_i) / d(in_k)`.

use std::f64::consts::TAU;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::flow::{Sample, Trajectory};
use crate::metric::{ChartId, MetricField};
use crate::scalar::{Covector2, ScalarField};
use crate::{Mat2, Point};

/// `(phi, r) -> (r cos phi, r sin phi)`.
pub fn blowdown(p: Point) -> Point {
    let [phi, r] = p;
    let (s, c) = phi.sin_cos();
    [r * c, r * s]
}

/// Inverse of [`blowdown`] off the origin, choosing the `2 pi` translate of
/// the polar angle nearest to `phi_hint`.
pub fn blowup(p: Point, phi_hint: f64) -> Result<Point> {
    let [x, y] = p;
    if x == 0.0 && y == 0.0 {
        return Err(Error::UndefinedAngle { point: p });
    }
    Ok([nearest_lift(y.atan2(x), phi_hint), x.hypot(y)])
}

/// `p -> p / |p|^2`.
pub fn inversion(p: Point) -> Result<Point> {
    let s = p[0] * p[0] + p[1] * p[1];
    if s == 0.0 {
        return Err(Error::Domain {
            point: p,
            chart: ChartId::Plane,
            label: "inversion".into(),
        });
    }
    Ok([p[0] / s, p[1] / s])
}

/// The representative of `angle + 2 pi k` closest to `hint`.
pub fn nearest_lift(angle: f64, hint: f64) -> f64 {
    angle + TAU * ((hint - angle) / TAU).round()
}

type ApplyFn = dyn Fn(Point) -> Result<Point> + Send + Sync;
type JacobianFn = dyn Fn(Point) -> Result<Mat2> + Send + Sync;

/// A smooth map between charts together with its Jacobian.
#[derive(Clone)]
pub struct ChartMap {
    source: ChartId,
    target: ChartId,
    label: String,
    apply: Arc<ApplyFn>,
    jacobian: Arc<JacobianFn>,
    inverse: Option<Arc<ChartMap>>,
}

impl fmt::Debug for ChartMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ChartMap")
            .field("source", &self.source)
            .field("target", &self.target)
            .field("label", &self.label)
            .field("has_inverse", &self.inverse.is_some())
            .finish_non_exhaustive()
    }
}

impl ChartMap {
    pub fn new(
        source: ChartId,
        target: ChartId,
        label: impl Into<String>,
        apply: impl Fn(Point) -> Result<Point> + Send + Sync + 'static,
        jacobian: impl Fn(Point) -> Result<Mat2> + Send + Sync + 'static,
    ) -> Self {
        Self {
            source,
            target,
            label: label.into(),
            apply: Arc::new(apply),
            jacobian: Arc::new(jacobian),
            inverse: None,
        }
    }

    pub fn with_inverse(mut self, inverse: ChartMap) -> Self {
        self.inverse = Some(Arc::new(inverse));
        self
    }

    pub fn source(&self) -> ChartId {
        self.source
    }

    pub fn target(&self) -> ChartId {
        self.target
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn apply(&self, p: Point) -> Result<Point> {
        (self.apply)(p)
    }

    pub fn jacobian(&self, p: Point) -> Result<Mat2> {
        (self.jacobian)(p)
    }

    pub fn inverse(&self) -> Option<&ChartMap> {
        self.inverse.as_deref()
    }

    pub fn identity(chart: ChartId) -> Self {
        let id = || Self::new(chart, chart, "id", Ok, |_| Ok([[1.0, 0.0], [0.0, 1.0]]));
        id().with_inverse(id())
    }

    /// Cover to plane; the inverse uses the principal polar angle.
    pub fn blowdown() -> Self {
        blowdown_map().with_inverse(blowup_map())
    }

    /// Plane to cover with the principal polar angle in `(-pi, pi]`.
    pub fn blowup() -> Self {
        blowup_map().with_inverse(blowdown_map())
    }

    /// The involution `p -> p / |p|^2` on the punctured plane.
    pub fn inversion() -> Self {
        inversion_map().with_inverse(inversion_map())
    }

    /// Counterclockwise rotation by `alpha` about the origin.
    pub fn rotation(alpha: f64) -> Self {
        rotation_map(alpha).with_inverse(rotation_map(-alpha))
    }

    /// `self o inner`, applying `inner` first.
    pub fn compose(&self, inner: &ChartMap) -> Result<ChartMap> {
        if inner.target != self.source {
            return Err(Error::ChartMismatch {
                expected: self.source,
                found: inner.target,
            });
        }
        let (outer_a, inner_a) = (self.clone(), inner.clone());
        let (outer_j, inner_j) = (self.clone(), inner.clone());
        Ok(Self::new(
            inner.source,
            self.target,
            format!("{} o {}", self.label, inner.label),
            move |p| outer_a.apply(inner_a.apply(p)?),
            move |p| {
                let q = inner_j.apply(p)?;
                Ok(mat_mul(&outer_j.jacobian(q)?, &inner_j.jacobian(p)?))
            },
        ))
    }
}

fn blowdown_map() -> ChartMap {
    ChartMap::new(
        ChartId::Cover,
        ChartId::Plane,
        "blowdown",
        |p| {
            if p[1] < 0.0 {
                return Err(Error::Domain {
                    point: p,
                    chart: ChartId::Cover,
                    label: "blowdown".into(),
                });
            }
            Ok(blowdown(p))
        },
        |[phi, r]| {
            let (s, c) = phi.sin_cos();
            Ok([[-r * s, c], [r * c, s]])
        },
    )
}

fn blowup_map() -> ChartMap {
    ChartMap::new(
        ChartId::Plane,
        ChartId::Cover,
        "blowup",
        |p| blowup(p, 0.0),
        |p| {
            let [x, y] = p;
            let r2 = x * x + y * y;
            if r2 == 0.0 {
                return Err(Error::UndefinedAngle { point: p });
            }
            let r = r2.sqrt();
            Ok([[-y / r2, x / r2], [x / r, y / r]])
        },
    )
}

fn inversion_map() -> ChartMap {
    ChartMap::new(
        ChartId::Plane,
        ChartId::Plane,
        "inversion",
        inversion,
        |p| {
            let [x, y] = p;
            let s = x * x + y * y;
            if s == 0.0 {
                return Err(Error::Domain {
                    point: p,
                    chart: ChartId::Plane,
                    label: "inversion".into(),
                });
            }
            let s2 = s * s;
            Ok([
                [(y * y - x * x) / s2, -2.0 * x * y / s2],
                [-2.0 * x * y / s2, (x * x - y * y) / s2],
            ])
        },
    )
}

fn rotation_map(alpha: f64) -> ChartMap {
    let (s, c) = alpha.sin_cos();
    ChartMap::new(
        ChartId::Plane,
        ChartId::Plane,
        format!("rot({alpha})"),
        move |[x, y]| Ok([c * x - s * y, s * x + c * y]),
        move |_| Ok([[c, -s], [s, c]]),
    )
}

pub fn mat_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[0.0; 2]; 2];
    for (i, row) in out.iter_mut().enumerate() {
        for (k, entry) in row.iter_mut().enumerate() {
            *entry = a[i][0] * b[0][k] + a[i][1] * b[1][k];
        }
    }
    out
}

/// Central-difference Jacobian of `psi`, one column per input coordinate.
pub fn fd_jacobian(psi: &ChartMap, p: Point, step: f64) -> Result<Mat2> {
    let mut out = [[0.0; 2]; 2];
    for k in 0..2 {
        let (mut fwd, mut back) = (p, p);
        fwd[k] += step;
        back[k] -= step;
        let (a, b) = (psi.apply(fwd)?, psi.apply(back)?);
        // the cover angle is only defined up to 2 pi
        let mut d0 = a[0] - b[0];
        if psi.target == ChartId::Cover {
            d0 = nearest_lift(d0, 0.0);
        }
        out[0][k] = d0 / (2.0 * step);
        out[1][k] = (a[1] - b[1]) / (2.0 * step);
    }
    Ok(out)
}

/// `(psi^* m)(p) = J(p)^T m(psi(p)) J(p)` on the source chart of `psi`.
pub fn pullback_metric(psi: &ChartMap, m: &MetricField) -> MetricField {
    let (map_d, metric_d) = (psi.clone(), m.clone());
    let (map_e, metric_e) = (psi.clone(), m.clone());
    MetricField::new(
        psi.source,
        format!("({})^*{}", psi.label, m.label()),
        move |p| {
            map_d
                .apply(p)
                .map(|q| metric_d.contains(q))
                .unwrap_or(false)
        },
        move |p| {
            let q = map_e.apply(p)?;
            let j = map_e.jacobian(p)?;
            Ok(metric_e.eval(q)?.congruence(&j))
        },
    )
}

/// `psi^* f = f o psi` with differential `J^T (df o psi)`.
pub fn pullback_function(psi: &ChartMap, f: &ScalarField) -> ScalarField {
    let (map_d, field_d) = (psi.clone(), f.clone());
    let (map_e, field_e) = (psi.clone(), f.clone());
    ScalarField::new(
        psi.source,
        format!("({})^*{}", psi.label, f.label()),
        move |p| map_d.apply(p).map(|q| field_d.contains(q)).unwrap_or(false),
        move |p| {
            let q = map_e.apply(p)?;
            let j = map_e.jacobian(p)?;
            let (v, g) = field_e.eval(q)?;
            Ok((
                v,
                Covector2::new(
                    j[0][0] * g.d1 + j[1][0] * g.d2,
                    j[0][1] * g.d1 + j[1][1] * g.d2,
                ),
            ))
        },
    )
}

/// Pointwise image of a trajectory with the angle re-lifted by continuity,
/// starting from the source trajectory's initial angle.
pub fn transport_trajectory(psi: &ChartMap, t: &Trajectory) -> Result<Trajectory> {
    if t.chart() != psi.source {
        return Err(Error::ChartMismatch {
            expected: psi.source,
            found: t.chart(),
        });
    }
    let Some(first) = t.samples().first() else {
        return Ok(Trajectory::from_samples(
            psi.target,
            Vec::new(),
            t.stop_reason(),
        ));
    };
    let mut prev_phi = first.phi;
    let mut samples = Vec::with_capacity(t.len());
    for s in t.samples() {
        let q = psi.apply(s.p)?;
        let (p, r, phi) = match psi.target {
            ChartId::Cover => {
                let phi = nearest_lift(q[0], prev_phi);
                ([phi, q[1]], q[1], phi)
            }
            ChartId::Plane => {
                let lifted = blowup(q, prev_phi)?;
                (q, lifted[1], lifted[0])
            }
        };
        prev_phi = phi;
        samples.push(Sample { t: s.t, p, r, phi });
    }
    Ok(Trajectory::from_samples(
        psi.target,
        samples,
        t.stop_reason(),
    ))
}

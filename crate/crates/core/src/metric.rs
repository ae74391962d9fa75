//! Symmetric 2x2 forms, their degeneracy, and plane metric fields.
//!
//! Cover chart matrices are written in the coordinate order `(phi, r)`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::charts::ChartMap;
use crate::error::{Error, Result};
use crate::scalar::ScalarField;
use crate::{Mat2, Point};

/// Default absolute tolerance for eigenvalue sign tests.
pub const DEFAULT_CLASSIFY_TOL: f64 = 1e-12;

/// Coordinate chart a field or point lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChartId {
    /// Universal cover of the spherical blow-up, coordinates `(phi, r)`.
    Cover,
    /// Cartesian plane, coordinates `(x, y)`.
    Plane,
}

impl fmt::Display for ChartId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChartId::Cover => f.write_str("cover"),
            ChartId::Plane => f.write_str("plane"),
        }
    }
}

/// The symmetric matrix `[[a, b], [b, c]]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SymmetricForm2 {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl SymmetricForm2 {
    pub const fn new(a: f64, b: f64, c: f64) -> Self {
        Self { a, b, c }
    }

    pub const fn identity() -> Self {
        Self::new(1.0, 0.0, 1.0)
    }

    pub const fn zero() -> Self {
        Self::new(0.0, 0.0, 0.0)
    }

    pub fn determinant(&self) -> f64 {
        self.a * self.c - self.b * self.b
    }

    pub fn trace(&self) -> f64 {
        self.a + self.c
    }

    /// `[[a, b], [b, c]] -> [[c, -b], [-b, a]]`, so that `q * adj(q) = det(q) * Id`.
    pub fn adjugate(&self) -> Self {
        Self::new(self.c, -self.b, self.a)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(s * self.a, s * self.b, s * self.c)
    }

    pub fn to_matrix(&self) -> Mat2 {
        [[self.a, self.b], [self.b, self.c]]
    }

    /// Matrix-vector product.
    pub fn apply(&self, v: [f64; 2]) -> [f64; 2] {
        [self.a * v[0] + self.b * v[1], self.b * v[0] + self.c * v[1]]
    }

    /// Quadratic form value `v^T Q v`.
    pub fn value(&self, v: [f64; 2]) -> f64 {
        self.a * v[0] * v[0] + 2.0 * self.b * v[0] * v[1] + self.c * v[1] * v[1]
    }

    /// Congruence `J^T Q J`, the pullback of the form along a linear map `J`.
    pub fn congruence(&self, j: &Mat2) -> Self {
        let q = self.to_matrix();
        let mut qj = [[0.0; 2]; 2];
        for (i, row) in qj.iter_mut().enumerate() {
            for (k, entry) in row.iter_mut().enumerate() {
                *entry = q[i][0] * j[0][k] + q[i][1] * j[1][k];
            }
        }
        let entry = |i: usize, k: usize| j[0][i] * qj[0][k] + j[1][i] * qj[1][k];
        Self::new(entry(0, 0), 0.5 * (entry(0, 1) + entry(1, 0)), entry(1, 1))
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.a.abs().max(self.b.abs()).max(self.c.abs())
    }

    /// Entrywise maximum absolute difference.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        (self.a - other.a)
            .abs()
            .max((self.b - other.b).abs())
            .max((self.c - other.c).abs())
    }

    /// Eigenvalues `(lo, hi)`.
    ///
    /// The smaller one is recovered as `det / hi` when that is the
    /// well-conditioned route, which keeps tiny eigenvalues of nearly rank-one
    /// forms accurate.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let mean = 0.5 * (self.a + self.c);
        let half_diff = 0.5 * (self.a - self.c);
        let radius = half_diff.hypot(self.b);
        if mean >= 0.0 {
            let hi = mean + radius;
            let lo = if hi > 0.0 {
                self.determinant() / hi
            } else {
                mean - radius
            };
            (lo, hi)
        } else {
            let lo = mean - radius;
            let hi = if lo < 0.0 {
                self.determinant() / lo
            } else {
                mean + radius
            };
            (lo, hi)
        }
    }

    pub fn classify(&self, tol: f64) -> Degeneracy {
        let (lo, hi) = self.eigenvalues();
        let rank = [lo, hi].iter().filter(|l| l.abs() > tol).count() as u8;
        let kind = if rank == 0 {
            DegeneracyKind::Zero
        } else if lo < -tol {
            DegeneracyKind::Indefinite
        } else if lo > tol {
            DegeneracyKind::PositiveDefinite
        } else {
            DegeneracyKind::PositiveSemidefinite
        };
        Degeneracy { kind, rank }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DegeneracyKind {
    PositiveDefinite,
    PositiveSemidefinite,
    /// Any form with an eigenvalue below `-tol`.
    Indefinite,
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Degeneracy {
    pub kind: DegeneracyKind,
    pub rank: u8,
}

type FormFn = dyn Fn(Point) -> Result<SymmetricForm2> + Send + Sync;
type DomainFn = dyn Fn(Point) -> bool + Send + Sync;

/// A chart-tagged field of symmetric forms with a domain predicate.
#[derive(Clone)]
pub struct MetricField {
    chart: ChartId,
    label: String,
    domain: Arc<DomainFn>,
    eval: Arc<FormFn>,
}

impl fmt::Debug for MetricField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MetricField")
            .field("chart", &self.chart)
            .field("label", &self.label)
            .finish_non_exhaustive()
    }
}

impl MetricField {
    /// `eval` is only called on points accepted by `domain`.
    pub fn new(
        chart: ChartId,
        label: impl Into<String>,
        domain: impl Fn(Point) -> bool + Send + Sync + 'static,
        eval: impl Fn(Point) -> Result<SymmetricForm2> + Send + Sync + 'static,
    ) -> Self {
        Self {
            chart,
            label: label.into(),
            domain: Arc::new(domain),
            eval: Arc::new(eval),
        }
    }

    pub fn chart(&self) -> ChartId {
        self.chart
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn contains(&self, p: Point) -> bool {
        p[0].is_finite() && p[1].is_finite() && (self.domain)(p)
    }

    pub fn eval(&self, p: Point) -> Result<SymmetricForm2> {
        if !self.contains(p) {
            return Err(Error::Domain {
                point: p,
                chart: self.chart,
                label: self.label.clone(),
            });
        }
        (self.eval)(p)
    }

    pub fn euclidean(chart: ChartId) -> Self {
        Self::new(
            chart,
            "euclidean",
            |_| true,
            |_| Ok(SymmetricForm2::identity()),
        )
    }

    /// `dr^2 + 2 r^3 dr dphi + r^4 dphi^2` on `R x [0, 1)`, i.e.
    /// `[[r^4, r^3], [r^3, 1]]` in `(phi, r)` order. Determinant `r^4 (1 - r^2)`.
    pub fn cover() -> Self {
        Self::new(
            ChartId::Cover,
            "g",
            |p| (0.0..1.0).contains(&p[1]),
            |p| Ok(cover_form(p[1])),
        )
    }

    /// The blown-down metric on the unit ball: the pullback of `r^2 g` along
    /// the inverse of the polar map; the zero form at the origin.
    pub fn blown_down() -> Self {
        let lifted = Self::cover().conformal_rescale(&ScalarField::cover_radius_squared());
        let downstairs = crate::charts::pullback_metric(&ChartMap::blowup(), &lifted);
        Self::new(ChartId::Plane, "h", in_unit_ball, move |p| {
            if p == [0.0, 0.0] {
                Ok(SymmetricForm2::zero())
            } else {
                downstairs.eval(p)
            }
        })
    }

    /// Regression fixture: the coefficient expansion of `h` with the cross
    /// term `xy + r^2 (x^2 - y^2 - 2xy)`. It differs from [`Self::blown_down`]
    /// by `r^2 xy` in the off-diagonal entry.
    pub fn blown_down_printed() -> Self {
        Self::new(ChartId::Plane, "h (printed expansion)", in_unit_ball, |p| {
            let [x, y] = p;
            let r2 = x * x + y * y;
            Ok(SymmetricForm2::new(
                x * x + r2 * (-2.0 * x * y + y * y),
                x * y + r2 * (x * x - y * y - 2.0 * x * y),
                y * y + r2 * (2.0 * x * y + x * x),
            ))
        })
    }

    /// Pointwise product `lambda(p) * m(p)`; evaluation fails where `lambda <= 0`.
    pub fn conformal_rescale(&self, lambda: &ScalarField) -> Self {
        let base = self.clone();
        let factor = lambda.clone();
        let domain = self.domain.clone();
        Self {
            chart: self.chart,
            label: format!("({})*{}", lambda.label(), self.label),
            domain,
            eval: Arc::new(move |p| {
                let value = factor.value(p)?;
                if !(value > 0.0) {
                    return Err(Error::NonPositiveRescale { point: p, value });
                }
                Ok(base.eval(p)?.scale(value))
            }),
        }
    }
}

/// Closed form of `g` at radius `r`, `(phi, r)` order.
pub fn cover_form(r: f64) -> SymmetricForm2 {
    let r3 = r * r * r;
    SymmetricForm2::new(r3 * r, r3, 1.0)
}

fn in_unit_ball(p: Point) -> bool {
    p[0] * p[0] + p[1] * p[1] < 1.0
}

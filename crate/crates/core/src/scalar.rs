//! Scalar fields with closed-form gradients.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::ChartId;
use crate::Point;

/// Differential `(d1, d2)` of a function in the chart's coordinate order.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Covector2 {
    pub d1: f64,
    pub d2: f64,
}

impl Covector2 {
    pub const fn new(d1: f64, d2: f64) -> Self {
        Self { d1, d2 }
    }

    pub fn to_array(self) -> [f64; 2] {
        [self.d1, self.d2]
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        (self.d1 - other.d1).abs().max((self.d2 - other.d2).abs())
    }
}

impl From<[f64; 2]> for Covector2 {
    fn from(v: [f64; 2]) -> Self {
        Self::new(v[0], v[1])
    }
}

type EvalFn = dyn Fn(Point) -> Result<(f64, Covector2)> + Send + Sync;
type DomainFn = dyn Fn(Point) -> bool + Send + Sync;

/// A chart-tagged function returning its value and differential together.
#[derive(Clone)]
pub struct ScalarField {
    chart: ChartId,
    label: String,
    domain: Arc<DomainFn>,
    eval: Arc<EvalFn>,
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarField")
            .field("chart", &self.chart)
            .field("label", &self.label)
            .finish_non_exhaustive()
    }
}

impl ScalarField {
    pub fn new(
        chart: ChartId,
        label: impl Into<String>,
        domain: impl Fn(Point) -> bool + Send + Sync + 'static,
        eval: impl Fn(Point) -> Result<(f64, Covector2)> + Send + Sync + 'static,
    ) -> Self {
        Self {
            chart,
            label: label.into(),
            domain: Arc::new(domain),
            eval: Arc::new(eval),
        }
    }

    /// A field defined at every finite point.
    pub fn from_closure(
        chart: ChartId,
        label: impl Into<String>,
        eval: impl Fn(Point) -> Result<(f64, Covector2)> + Send + Sync + 'static,
    ) -> Self {
        Self::new(chart, label, |_| true, eval)
    }

    pub fn constant(chart: ChartId, value: f64) -> Self {
        Self::from_closure(chart, format!("{value}"), move |_| {
            Ok((value, Covector2::default()))
        })
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

    pub fn eval(&self, p: Point) -> Result<(f64, Covector2)> {
        if !self.contains(p) {
            return Err(Error::Domain {
                point: p,
                chart: self.chart,
                label: self.label.clone(),
            });
        }
        (self.eval)(p)
    }

    pub fn value(&self, p: Point) -> Result<f64> {
        self.eval(p).map(|(v, _)| v)
    }

    pub fn eval_grad(&self, p: Point) -> Result<Covector2> {
        self.eval(p).map(|(_, g)| g)
    }

    /// Central differences `(f(p + s e_i) - f(p - s e_i)) / 2s`.
    pub fn fd_gradient(&self, p: Point, step: f64) -> Result<Covector2> {
        if !(step > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "finite difference step {step} must be positive"
            )));
        }
        let mut out = [0.0; 2];
        for (i, slot) in out.iter_mut().enumerate() {
            let mut fwd = p;
            let mut back = p;
            fwd[i] += step;
            back[i] -= step;
            *slot = (self.value(fwd)? - self.value(back)?) / (2.0 * step);
        }
        Ok(out.into())
    }

    /// Same domain and chart, negated value and differential.
    pub fn negated(&self) -> Self {
        let inner = self.clone();
        Self {
            chart: self.chart,
            label: format!("-({})", self.label),
            domain: self.domain.clone(),
            eval: Arc::new(move |p| {
                let (v, g) = inner.eval(p)?;
                Ok((-v, Covector2::new(-g.d1, -g.d2)))
            }),
        }
    }

    /// `f = -r` on the cover.
    pub fn neg_cover_radius() -> Self {
        Self::new(ChartId::Cover, "-r", cover_domain, |p| {
            Ok((-p[1], Covector2::new(0.0, -1.0)))
        })
    }

    /// `r^2` on the cover.
    pub fn cover_radius_squared() -> Self {
        Self::new(ChartId::Cover, "r^2", cover_domain, |p| {
            Ok((p[1] * p[1], Covector2::new(0.0, 2.0 * p[1])))
        })
    }

    /// `-r^2` on the cover, the lift of [`Self::neg_sq_radius`].
    pub fn neg_cover_radius_squared() -> Self {
        Self::new(ChartId::Cover, "-r^2", cover_domain, |p| {
            Ok((-p[1] * p[1], Covector2::new(0.0, -2.0 * p[1])))
        })
    }

    /// `delta = -(x^2 + y^2)`.
    pub fn neg_sq_radius() -> Self {
        Self::from_closure(ChartId::Plane, "delta", |[x, y]| {
            Ok((-(x * x + y * y), Covector2::new(-2.0 * x, -2.0 * y)))
        })
    }

    /// `|p|^2 / (1 + |p|^2)`.
    pub fn f_infinity() -> Self {
        Self::from_closure(ChartId::Plane, "f_inf", |[x, y]| {
            let s = x * x + y * y;
            let denom = 1.0 + s;
            let k = 2.0 / (denom * denom);
            Ok((s / denom, Covector2::new(k * x, k * y)))
        })
    }

    /// `-r + r^4 h(phi, r)` on the cover.
    pub fn perturbed_cover(h: &PlaneFunction) -> Self {
        Self::perturbed_cover_with_exponent(h, 4)
    }

    /// `-r + r^k h(phi, r)` on the cover.
    pub fn perturbed_cover_with_exponent(h: &PlaneFunction, exponent: i32) -> Self {
        let h = h.clone();
        let k = exponent;
        let label = format!("-r + r^{k}*{}", h.label);
        Self::new(ChartId::Cover, label, cover_domain, move |p| {
            let r = p[1];
            let (hv, hg) = (h.eval)(p);
            let rk = r.powi(k);
            let drk = if k == 0 {
                0.0
            } else {
                k as f64 * r.powi(k - 1)
            };
            Ok((
                -r + rk * hv,
                Covector2::new(rk * hg[0], -1.0 + drk * hv + rk * hg[1]),
            ))
        })
    }

    /// `-(x^2 + y^2) + |p|^5 h(x, y)` on the plane.
    pub fn perturbed_ball(h: &PlaneFunction) -> Self {
        Self::perturbed_ball_with_exponent(h, 5)
    }

    /// `-(x^2 + y^2) + |p|^k h(x, y)`; the perturbation contributes no
    /// gradient at the origin. Requires `k >= 2` for the closed-form gradient.
    pub fn perturbed_ball_with_exponent(h: &PlaneFunction, exponent: i32) -> Self {
        let h = h.clone();
        let k = exponent;
        let label = format!("delta + |p|^{k}*{}", h.label);
        Self::from_closure(ChartId::Plane, label, move |p| {
            let [x, y] = p;
            let r = x.hypot(y);
            let (hv, hg) = (h.eval)(p);
            let rk = r.powi(k);
            let mut grad = [-2.0 * x, -2.0 * y];
            if r > 0.0 {
                // d(r^k) = k r^(k-2) p
                let dk = k as f64 * r.powi(k - 2);
                grad[0] += dk * x * hv + rk * hg[0];
                grad[1] += dk * y * hv + rk * hg[1];
            }
            Ok((-(x * x + y * y) + rk * hv, grad.into()))
        })
    }
}

fn cover_domain(p: Point) -> bool {
    p[1] >= 0.0
}

type PlaneFn = dyn Fn(Point) -> (f64, [f64; 2]) + Send + Sync;

/// An auxiliary smooth function given as a value and gradient pair.
#[derive(Clone)]
pub struct PlaneFunction {
    pub label: String,
    pub eval: Arc<PlaneFn>,
}

impl fmt::Debug for PlaneFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PlaneFunction")
            .field("label", &self.label)
            .finish_non_exhaustive()
    }
}

impl PlaneFunction {
    pub fn new(
        label: impl Into<String>,
        eval: impl Fn(Point) -> (f64, [f64; 2]) + Send + Sync + 'static,
    ) -> Self {
        Self {
            label: label.into(),
            eval: Arc::new(eval),
        }
    }
}

/// The catalogue of perturbation functions `h(a, b)` offered by the scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Perturbation {
    /// `h = 0`
    Zero,
    /// `h = 1`
    Const,
    /// `h = sin(a) (1 + b)`
    Sin,
    /// `h = a`
    Linear,
}

impl Perturbation {
    pub const ALL: [Perturbation; 4] = [Self::Zero, Self::Const, Self::Sin, Self::Linear];

    pub fn name(self) -> &'static str {
        match self {
            Self::Zero => "zero",
            Self::Const => "const",
            Self::Sin => "sin",
            Self::Linear => "linear",
        }
    }

    pub fn function(self) -> PlaneFunction {
        match self {
            Self::Zero => PlaneFunction::new("0", |_| (0.0, [0.0, 0.0])),
            Self::Const => PlaneFunction::new("1", |_| (1.0, [0.0, 0.0])),
            Self::Sin => PlaneFunction::new("sin(a)(1+b)", |[a, b]| {
                let (s, c) = a.sin_cos();
                (s * (1.0 + b), [c * (1.0 + b), s])
            }),
            Self::Linear => PlaneFunction::new("a", |[a, _]| (a, [1.0, 0.0])),
        }
    }
}

impl fmt::Display for Perturbation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Perturbation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown perturbation `{s}`")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_gradients() {
        let f = ScalarField::neg_cover_radius();
        assert_eq!(f.eval_grad([3.0, 0.7]).unwrap(), Covector2::new(0.0, -1.0));

        let delta = ScalarField::neg_sq_radius();
        assert_eq!(
            delta.eval_grad([0.3, -0.2]).unwrap(),
            Covector2::new(-0.6, 0.4)
        );

        let finf = ScalarField::f_infinity();
        let g = finf.eval_grad([1.0, 0.0]).unwrap();
        assert!((g.d1 - 0.5).abs() < 1e-16 && g.d2 == 0.0);
        let fd = finf.fd_gradient([1.0, 0.0], 1e-5).unwrap();
        assert!(fd.max_abs_diff(&g) < 1e-9);
    }

    #[test]
    fn fd_examples() {
        let delta = ScalarField::neg_sq_radius();
        let fd = delta.fd_gradient([0.3, -0.2], 1e-5).unwrap();
        assert!(fd.max_abs_diff(&Covector2::new(-0.6, 0.4)) < 1e-9);

        let f = ScalarField::neg_cover_radius();
        let fd = f.fd_gradient([0.0, 0.5], 1e-5).unwrap();
        assert!(fd.max_abs_diff(&Covector2::new(0.0, -1.0)) < 1e-9);

        let sin_phi = PlaneFunction::new("sin(phi)", |[a, _]| (a.sin(), [a.cos(), 0.0]));
        let g = ScalarField::perturbed_cover(&sin_phi);
        let fd = g.fd_gradient([0.0, 0.5], 1e-5).unwrap();
        assert!(fd.max_abs_diff(&Covector2::new(0.0625, -1.0)) < 1e-8);
        assert!(
            g.eval_grad([0.0, 0.5])
                .unwrap()
                .max_abs_diff(&Covector2::new(0.0625, -1.0))
                < 1e-15
        );
    }

    #[test]
    fn fd_rejects_bad_step_and_stencil() {
        let f = ScalarField::neg_cover_radius();
        assert!(f.fd_gradient([0.0, 0.5], 0.0).is_err());
        // stencil point r = -1e-3 is outside the cover
        assert!(matches!(
            f.fd_gradient([0.0, 0.0], 1e-3),
            Err(Error::Domain { .. })
        ));
    }

    #[test]
    fn perturbed_cover_values() {
        let zero = ScalarField::perturbed_cover(&Perturbation::Zero.function());
        assert_eq!(
            zero.eval([1.0, 0.3]).unwrap(),
            ScalarField::neg_cover_radius().eval([1.0, 0.3]).unwrap()
        );

        let one = ScalarField::perturbed_cover(&Perturbation::Const.function());
        assert!((one.value([2.0, 0.5]).unwrap() + 0.4375).abs() < 1e-16);

        let sin_phi = PlaneFunction::new("sin(phi)", |[a, _]| (a.sin(), [a.cos(), 0.0]));
        let g = ScalarField::perturbed_cover(&sin_phi);
        let v = g.value([std::f64::consts::FRAC_PI_2, 0.1]).unwrap();
        assert!((v - (-0.1 + 1e-4)).abs() < 1e-16);
    }

    #[test]
    fn perturbed_ball_values() {
        let zero = ScalarField::perturbed_ball(&Perturbation::Zero.function());
        assert_eq!(
            zero.eval([0.2, -0.4]).unwrap(),
            ScalarField::neg_sq_radius().eval([0.2, -0.4]).unwrap()
        );

        let one = ScalarField::perturbed_ball(&Perturbation::Const.function());
        let (v, g) = one.eval([0.5, 0.0]).unwrap();
        assert!((v + 0.21875).abs() < 1e-16);
        assert!(g.max_abs_diff(&Covector2::new(-0.6875, 0.0)) < 1e-15);
        assert!(one.fd_gradient([0.5, 0.0], 1e-5).unwrap().max_abs_diff(&g) < 1e-9);

        // the perturbation has no gradient at the origin
        assert_eq!(one.eval_grad([0.0, 0.0]).unwrap(), Covector2::new(0.0, 0.0));
    }

    #[test]
    fn catalogue_round_trips_names() {
        for p in Perturbation::ALL {
            assert_eq!(p.name().parse::<Perturbation>().unwrap(), p);
        }
        assert!("cubic".parse::<Perturbation>().is_err());
    }

    #[test]
    fn negation() {
        let f = ScalarField::f_infinity().negated();
        let (v, g) = f.eval([1.0, 0.0]).unwrap();
        assert_eq!(v, -0.5);
        assert_eq!(g, Covector2::new(-0.5, -0.0));
    }
}

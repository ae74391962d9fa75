//! Dormand-Prince 5(4) with PI step control, an angular step cap, and
//! stop events on the distance to the origin.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::trajectory::{Sample, StopReason, Trajectory};
use super::VectorField2;
use crate::error::{Error, Result};
use crate::metric::ChartId;
use crate::Point;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    /// Integrate the field as given; time is the natural parameter.
    #[serde(rename = "xi")]
    Xi,
    /// Integrate the unit field; time is arclength in chart coordinates.
    #[serde(rename = "unit")]
    UnitSpeed,
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "xi" => Ok(Self::Xi),
            "unit" => Ok(Self::UnitSpeed),
            other => Err(Error::InvalidArgument(format!("unknown mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegrationOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Bound on step attempts, accepted or rejected.
    pub max_steps: usize,
    pub mode: Mode,
    pub stop_r_min: f64,
    pub stop_r_max: f64,
    /// Cap on the change of the polar angle in one accepted step.
    pub max_angle_step: f64,
    pub min_step: f64,
}

impl Default for IntegrationOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-9,
            abs_tol: 1e-15,
            max_steps: 5_000_000,
            mode: Mode::UnitSpeed,
            stop_r_min: 1e-6,
            stop_r_max: 1e3,
            max_angle_step: PI / 16.0,
            min_step: 1e-14,
        }
    }
}

impl IntegrationOptions {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return bad(format!(
                "tolerances must be positive (rel {}, abs {})",
                self.rel_tol, self.abs_tol
            ));
        }
        if !(self.max_angle_step > 0.0 && self.max_angle_step <= PI / 8.0) {
            return bad(format!(
                "max_angle_step {} must lie in (0, pi/8]",
                self.max_angle_step
            ));
        }
        if !(self.min_step > 0.0) {
            return bad(format!("min_step {} must be positive", self.min_step));
        }
        if !(self.stop_r_min >= 0.0 && self.stop_r_min < self.stop_r_max) {
            return bad(format!(
                "stop radii must satisfy 0 <= r_min < r_max (got {}, {})",
                self.stop_r_min, self.stop_r_max
            ));
        }
        if self.max_steps == 0 {
            return bad("max_steps must be positive".into());
        }
        Ok(())
    }
}

// Dormand-Prince tableau; the field is autonomous so the nodes are not needed.
const A2: [f64; 1] = [1.0 / 5.0];
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [
    19372.0 / 6561.0,
    -25360.0 / 2187.0,
    64448.0 / 6561.0,
    -212.0 / 729.0,
];
const A6: [f64; 5] = [
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
];
const B: [f64; 6] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
];
// b5 - b4
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 5.0;
const PI_ALPHA: f64 = 0.7 / 5.0;
const PI_BETA: f64 = 0.4 / 5.0;
const EVENT_BISECTIONS: usize = 80;

struct Rhs<'a> {
    field: &'a VectorField2,
    mode: Mode,
}

impl Rhs<'_> {
    fn eval(&self, p: Point) -> Result<[f64; 2]> {
        let v = self.field.eval(p)?;
        if !(v[0].is_finite() && v[1].is_finite()) {
            return Err(Error::Domain {
                point: p,
                chart: self.field.chart(),
                label: self.field.label().to_string(),
            });
        }
        match self.mode {
            Mode::Xi => Ok(v),
            Mode::UnitSpeed => {
                let n = v[0].hypot(v[1]);
                if n == 0.0 {
                    return Err(Error::ZeroVector { point: p });
                }
                Ok([v[0] / n, v[1] / n])
            }
        }
    }
}

struct Step {
    y: Point,
    k7: [f64; 2],
    err: [f64; 2],
}

fn combine(y: Point, h: f64, ks: &[[f64; 2]], coeffs: &[f64]) -> Point {
    let mut out = y;
    for (k, &a) in ks.iter().zip(coeffs) {
        out[0] += h * a * k[0];
        out[1] += h * a * k[1];
    }
    out
}

fn dopri_step(rhs: &Rhs<'_>, y: Point, k1: [f64; 2], h: f64) -> Result<Step> {
    let mut ks = [[0.0; 2]; 7];
    ks[0] = k1;
    ks[1] = rhs.eval(combine(y, h, &ks[..1], &A2))?;
    ks[2] = rhs.eval(combine(y, h, &ks[..2], &A3))?;
    ks[3] = rhs.eval(combine(y, h, &ks[..3], &A4))?;
    ks[4] = rhs.eval(combine(y, h, &ks[..4], &A5))?;
    ks[5] = rhs.eval(combine(y, h, &ks[..5], &A6))?;
    let y_new = combine(y, h, &ks[..6], &B);
    ks[6] = rhs.eval(y_new)?;
    let mut err = [0.0; 2];
    for (k, &e) in ks.iter().zip(&E) {
        err[0] += h * e * k[0];
        err[1] += h * e * k[1];
    }
    Ok(Step {
        y: y_new,
        k7: ks[6],
        err,
    })
}

fn radius(chart: ChartId, p: Point) -> f64 {
    match chart {
        ChartId::Cover => p[1],
        ChartId::Plane => p[0].hypot(p[1]),
    }
}

fn angle_increment(chart: ChartId, from: Point, to: Point) -> f64 {
    match chart {
        ChartId::Cover => to[0] - from[0],
        ChartId::Plane => {
            let cross = from[0] * to[1] - from[1] * to[0];
            let dot = from[0] * to[0] + from[1] * to[1];
            cross.atan2(dot)
        }
    }
}

/// Scaled RMS error. Plane states use the Euclidean norm as the scale so the
/// control is rotation invariant; cover states are scaled per component.
fn error_norm(chart: ChartId, opts: &IntegrationOptions, y: Point, step: &Step) -> f64 {
    let scale = |a: f64, b: f64| opts.abs_tol + opts.rel_tol * a.max(b);
    let sc = match chart {
        ChartId::Plane => {
            let s = scale(y[0].hypot(y[1]), step.y[0].hypot(step.y[1]));
            [s, s]
        }
        ChartId::Cover => [
            scale(y[0].abs(), step.y[0].abs()),
            scale(y[1].abs(), step.y[1].abs()),
        ],
    };
    let e0 = step.err[0] / sc[0];
    let e1 = step.err[1] / sc[1];
    (0.5 * (e0 * e0 + e1 * e1)).sqrt()
}

fn failure_kind(e: &Error) -> StopReason {
    match e {
        Error::ZeroVector { .. } | Error::DegeneratePoint { .. } => StopReason::StepUnderflow,
        _ => StopReason::LeftDomain,
    }
}

/// Integrates `v` from `p0` until a stop radius is reached or the step
/// control gives up; the latter is reported through the stop reason.
///
/// Returns an error only when the initial point cannot be evaluated.
pub fn integrate(v: &VectorField2, p0: Point, opts: &IntegrationOptions) -> Result<Trajectory> {
    opts.validate()?;
    let chart = v.chart();
    let rhs = Rhs {
        field: v,
        mode: opts.mode,
    };

    let r0 = radius(chart, p0);
    let phi0 = match chart {
        ChartId::Cover => p0[0],
        ChartId::Plane => {
            if r0 == 0.0 {
                return Err(Error::UndefinedAngle { point: p0 });
            }
            p0[1].atan2(p0[0])
        }
    };
    let mut k1 = rhs.eval(p0)?;
    let mut samples = vec![Sample {
        t: 0.0,
        p: p0,
        r: r0,
        phi: phi0,
    }];
    if r0 <= opts.stop_r_min {
        return Ok(Trajectory::from_samples(
            chart,
            samples,
            StopReason::RMinReached,
        ));
    }
    if r0 >= opts.stop_r_max {
        return Ok(Trajectory::from_samples(
            chart,
            samples,
            StopReason::RMaxReached,
        ));
    }

    let crossed = |p: Point| {
        let r = radius(chart, p);
        if r <= opts.stop_r_min {
            Some(StopReason::RMinReached)
        } else if r >= opts.stop_r_max {
            Some(StopReason::RMaxReached)
        } else {
            None
        }
    };

    let speed = k1[0].hypot(k1[1]);
    let mut h = 1e-4 * r0 / speed;
    let (mut t, mut y, mut phi) = (0.0, p0, phi0);
    let mut err_prev: f64 = 1e-4;
    let mut failure = StopReason::StepUnderflow;
    let mut attempts = 0usize;

    let stop = loop {
        if attempts >= opts.max_steps {
            break StopReason::MaxSteps;
        }
        attempts += 1;
        if !(h >= opts.min_step) {
            break failure;
        }
        let step = match dopri_step(&rhs, y, k1, h) {
            Ok(s) => s,
            Err(e) => {
                failure = failure_kind(&e);
                h *= 0.5;
                continue;
            }
        };
        let err = error_norm(chart, opts, y, &step);
        if !(err <= 1.0) {
            failure = StopReason::StepUnderflow;
            h *= if err.is_finite() {
                (SAFETY * err.powf(-0.2)).max(FAC_MIN)
            } else {
                FAC_MIN
            };
            continue;
        }
        let dphi = angle_increment(chart, y, step.y);
        if dphi.abs() > opts.max_angle_step {
            failure = StopReason::StepUnderflow;
            h *= SAFETY * opts.max_angle_step / dphi.abs();
            continue;
        }

        if let Some(reason) = crossed(step.y) {
            // earliest sub-step that reaches a stop radius
            let (mut lo, mut hi, mut hit, mut hit_reason) = (0.0, h, step, reason);
            for _ in 0..EVENT_BISECTIONS {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                match dopri_step(&rhs, y, k1, mid) {
                    Ok(s) => match crossed(s.y) {
                        Some(r) => {
                            hi = mid;
                            hit = s;
                            hit_reason = r;
                        }
                        None => lo = mid,
                    },
                    Err(_) => break,
                }
            }
            let p = hit.y;
            samples.push(Sample {
                t: t + hi,
                p,
                r: radius(chart, p),
                phi: phi + angle_increment(chart, y, p),
            });
            break hit_reason;
        }

        t += h;
        phi += dphi;
        y = step.y;
        k1 = step.k7;
        samples.push(Sample {
            t,
            p: y,
            r: radius(chart, y),
            phi,
        });

        let fac = SAFETY * err.max(1e-10).powf(-PI_ALPHA) * err_prev.powf(PI_BETA);
        h *= fac.clamp(FAC_MIN, FAC_MAX);
        err_prev = err.max(1e-4);
    };

    Ok(Trajectory::from_samples(chart, samples, stop))
}

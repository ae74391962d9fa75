use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::charts::{blowdown, blowup};
use crate::error::{Error, Result};
use crate::metric::ChartId;
use crate::Point;

/// Why an integration stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StopReason {
    RMinReached,
    RMaxReached,
    MaxSteps,
    StepUnderflow,
    LeftDomain,
}

impl StopReason {
    /// Everything except reaching one of the two stop radii.
    pub fn is_failure(self) -> bool {
        !matches!(self, Self::RMinReached | Self::RMaxReached)
    }
}

/// One accepted point of a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    /// Chart coordinates.
    pub p: Point,
    /// Distance to the origin of the plane (the `r` coordinate on the cover).
    pub r: f64,
    /// Polar angle lifted continuously along the trajectory.
    pub phi: f64,
}

/// Time-ordered samples of an integrated curve.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    chart: ChartId,
    samples: Vec<Sample>,
    stop_reason: StopReason,
}

impl Trajectory {
    pub fn from_samples(chart: ChartId, samples: Vec<Sample>, stop_reason: StopReason) -> Self {
        Self {
            chart,
            samples,
            stop_reason,
        }
    }

    /// Builds a trajectory from bare chart points, using the index as time.
    /// On the plane the angle starts at the principal value and is lifted by
    /// continuity.
    pub fn from_points(chart: ChartId, points: &[Point]) -> Result<Self> {
        let mut samples = Vec::with_capacity(points.len());
        let mut prev = None;
        for (i, &p) in points.iter().enumerate() {
            let (r, phi) = match chart {
                ChartId::Cover => (p[1], p[0]),
                ChartId::Plane => {
                    let hint = prev.unwrap_or_else(|| p[1].atan2(p[0]));
                    let lifted = blowup(p, hint)?;
                    (lifted[1], lifted[0])
                }
            };
            prev = Some(phi);
            samples.push(Sample {
                t: i as f64,
                p,
                r,
                phi,
            });
        }
        Ok(Self::from_samples(chart, samples, StopReason::RMinReached))
    }

    pub fn chart(&self) -> ChartId {
        self.chart
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn stop_reason(&self) -> StopReason {
        self.stop_reason
    }

    pub fn first(&self) -> Option<&Sample> {
        self.samples.first()
    }

    pub fn last(&self) -> Option<&Sample> {
        self.samples.last()
    }

    /// Plane position of sample `s` (blown down on the cover chart).
    pub fn cartesian(&self, s: &Sample) -> Point {
        match self.chart {
            ChartId::Cover => blowdown(s.p),
            ChartId::Plane => s.p,
        }
    }

    pub fn cartesian_points(&self) -> Vec<Point> {
        self.samples.iter().map(|s| self.cartesian(s)).collect()
    }

    /// Accumulated turns `(phi - phi_0) / 2 pi` at every sample.
    pub fn winding_profile(&self) -> Vec<f64> {
        let phi0 = self.first().map_or(0.0, |s| s.phi);
        self.samples.iter().map(|s| (s.phi - phi0) / TAU).collect()
    }

    /// Lifted polar angles about `center`, re-derived from the plane positions
    /// unless `center` is the origin.
    pub fn lifted_angles(&self, center: Point) -> Result<Vec<f64>> {
        if center == [0.0, 0.0] {
            if let Some(s) = self.samples.iter().find(|s| s.r == 0.0) {
                return Err(Error::UndefinedAngle {
                    point: self.cartesian(s),
                });
            }
            return Ok(self.samples.iter().map(|s| s.phi).collect());
        }
        let mut out = Vec::with_capacity(self.len());
        let mut prev: Option<f64> = None;
        for s in &self.samples {
            let q = self.cartesian(s);
            let rel = [q[0] - center[0], q[1] - center[1]];
            let hint = prev.unwrap_or_else(|| rel[1].atan2(rel[0]));
            let phi = blowup(rel, hint).map_err(|_| Error::UndefinedAngle { point: q })?[0];
            prev = Some(phi);
            out.push(phi);
        }
        Ok(out)
    }
}

//! Spiral and oscillation diagnostics over sampled trajectories.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::Trajectory;
use crate::Point;

/// Samples closer than this (radians) to a ray count as lying on it.
pub const ON_RAY_TOL: f64 = 1e-12;

/// Least-squares fit of `phi = c0 - ln r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpiralFit {
    pub c0: f64,
    pub residual_max: f64,
    pub residual_rms: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SecantCoverage {
    pub bins: usize,
    pub hit_fraction: f64,
    /// Distance to the center at the sample where the last empty bin was filled.
    pub first_full_cover_radius: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RayCrossings {
    pub count: usize,
    /// Set when some sample lay on the ray within [`ON_RAY_TOL`].
    pub flagged: bool,
}

/// Net turns around `center` between the first and last sample.
pub fn winding(t: &Trajectory, center: Point) -> Result<f64> {
    let angles = t.lifted_angles(center)?;
    match (angles.first(), angles.last()) {
        (Some(a), Some(b)) => Ok((b - a) / TAU),
        _ => Err(Error::InvalidArgument("empty trajectory".into())),
    }
}

/// Transversal crossings of the ray `{angle = ray_angle mod 2 pi, r > 0}`
/// from the origin.
///
/// A run of samples on the ray between two off-ray samples counts once,
/// whether the curve passes through or only touches; runs at either end of
/// the trajectory do not count.
pub fn ray_crossings(t: &Trajectory, ray_angle: f64) -> Result<RayCrossings> {
    let angles = t.lifted_angles([0.0, 0.0])?;
    let mut count: u64 = 0;
    let mut flagged = false;
    let mut last_cell: Option<i64> = None;
    let mut on_run = false;
    for phi in angles {
        let turns = (phi - ray_angle) / TAU;
        if (turns - turns.round()).abs() * TAU <= ON_RAY_TOL {
            flagged = true;
            on_run = true;
            continue;
        }
        let cell = turns.floor() as i64;
        if let Some(prev) = last_cell {
            let jump = (cell - prev).unsigned_abs();
            count += if on_run { jump.max(1) } else { jump };
        }
        last_cell = Some(cell);
        on_run = false;
    }
    Ok(RayCrossings {
        count: count as usize,
        flagged,
    })
}

/// Fits `phi = c0 - ln r` with `c0` the mean of `phi + ln r`.
pub fn fit_log_spiral(t: &Trajectory) -> Result<SpiralFit> {
    if t.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 samples, got {}",
            t.len()
        )));
    }
    if let Some(s) = t.samples().iter().find(|s| !(s.r > 0.0)) {
        return Err(Error::InvalidArgument(format!(
            "sample at t = {} has r = {}",
            s.t, s.r
        )));
    }
    let invariants: Vec<f64> = t.samples().iter().map(|s| s.phi + s.r.ln()).collect();
    let n = invariants.len() as f64;
    let c0 = invariants.iter().sum::<f64>() / n;
    let (mut max, mut sq) = (0.0f64, 0.0);
    for v in &invariants {
        let res = (v - c0).abs();
        max = max.max(res);
        sq += res * res;
    }
    Ok(SpiralFit {
        c0,
        residual_max: max,
        residual_rms: (sq / n).sqrt(),
    })
}

/// Fraction of `bins` equal arcs of directions seen from `center`.
///
/// Consecutive samples are joined: the curve is continuous, so it meets
/// every direction between two consecutive lifted angles.
pub fn secant_coverage(t: &Trajectory, center: Point, bins: usize) -> Result<SecantCoverage> {
    if bins < 8 {
        return Err(Error::InvalidArgument(format!(
            "bins = {bins} must be at least 8"
        )));
    }
    let angles = t.lifted_angles(center)?;
    let width = TAU / bins as f64;
    let bin_of = |phi: f64| (phi / width).floor() as i64;
    let mut hit = vec![false; bins];
    let mut filled = 0usize;
    let mut full_at = None;
    let mut mark = |lo: i64, hi: i64, hit: &mut Vec<bool>| {
        let span = (hi - lo).min(bins as i64 - 1);
        for k in lo..=lo + span {
            let idx = k.rem_euclid(bins as i64) as usize;
            if !hit[idx] {
                hit[idx] = true;
                filled += 1;
            }
        }
        filled
    };
    for (i, phi) in angles.iter().enumerate() {
        let (lo, hi) = match i {
            0 => (bin_of(*phi), bin_of(*phi)),
            _ => {
                let prev = angles[i - 1];
                (bin_of(prev.min(*phi)), bin_of(prev.max(*phi)))
            }
        };
        if mark(lo, hi, &mut hit) == bins && full_at.is_none() {
            let q = t.cartesian(&t.samples()[i]);
            full_at = Some((q[0] - center[0]).hypot(q[1] - center[1]));
        }
    }
    Ok(SecantCoverage {
        bins,
        hit_fraction: hit.iter().filter(|h| **h).count() as f64 / bins as f64,
        first_full_cover_radius: full_at,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::ChartId;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    /// Closed-form spiral `phi = c0 - ln r` sampled densely in `ln r`.
    fn spiral(c0: f64, r0: f64, turns: f64, n: usize) -> Trajectory {
        let pts: Vec<Point> = (0..=n)
            .map(|k| {
                let r = r0 * (-(k as f64) / n as f64 * turns * TAU).exp();
                [c0 - r.ln(), r]
            })
            .collect();
        Trajectory::from_points(ChartId::Cover, &pts).unwrap()
    }

    fn plane(points: impl Iterator<Item = Point>) -> Trajectory {
        Trajectory::from_points(ChartId::Plane, &points.collect::<Vec<_>>()).unwrap()
    }

    fn radial(angle: f64) -> Trajectory {
        plane((1..50).map(|k| {
            let r = k as f64 / 50.0;
            [r * angle.cos(), r * angle.sin()]
        }))
    }

    fn arc(from: f64, to: f64, n: usize) -> Trajectory {
        plane((0..=n).map(|k| {
            let a = from + (to - from) * k as f64 / n as f64;
            [a.cos(), a.sin()]
        }))
    }

    /// Brute-force crossing count: walk the closed form on a fine grid and count
    /// how many lifts of the ray angle lie strictly inside the swept range.
    fn crossings_oracle(phi_start: f64, phi_end: f64, ray: f64) -> usize {
        let (lo, hi) = (phi_start.min(phi_end), phi_start.max(phi_end));
        let mut count = 0;
        let mut n = ((lo - ray) / TAU).floor() as i64 - 1;
        loop {
            let lift = ray + TAU * n as f64;
            if lift >= hi {
                break;
            }
            if lift > lo {
                count += 1;
            }
            n += 1;
        }
        count
    }

    #[test]
    fn winding_examples() {
        let s = spiral(0.0, 0.5, 1.0, 400);
        assert!((winding(&s, [0.0, 0.0]).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(winding(&radial(0.3), [0.0, 0.0]).unwrap(), 0.0);
        let w = winding(&arc(0.0, FRAC_PI_2, 30), [0.0, 0.0]).unwrap();
        assert!((w - 0.25).abs() < 1e-12);
    }

    #[test]
    fn winding_about_another_center() {
        let shifted = plane((0..=64).map(|k| {
            let a = TAU * k as f64 / 64.0;
            [2.0 + 0.5 * a.cos(), -1.0 + 0.5 * a.sin()]
        }));
        assert!((winding(&shifted, [2.0, -1.0]).unwrap() - 1.0).abs() < 1e-12);
        assert!(winding(&shifted, [0.0, 0.0]).unwrap().abs() < 1e-12);
        assert!(matches!(
            winding(&shifted, [2.5, -1.0]),
            Err(Error::UndefinedAngle { .. })
        ));
    }

    #[test]
    fn crossing_examples() {
        let s = spiral(1.0, 0.5, 3.0, 3000);
        let ray = 3.0;
        let first = s.first().unwrap().phi;
        let last = s.last().unwrap().phi;
        assert_eq!(crossings_oracle(first, last, ray), 3);
        let c = ray_crossings(&s, ray).unwrap();
        assert_eq!(
            c,
            RayCrossings {
                count: 3,
                flagged: false
            }
        );

        let along = ray_crossings(&radial(0.0), 0.0).unwrap();
        assert!(along.flagged && along.count <= 1);
        let off = ray_crossings(&radial(1.0), 0.0).unwrap();
        assert_eq!(
            off,
            RayCrossings {
                count: 0,
                flagged: false
            }
        );
    }

    #[test]
    fn touching_the_ray_counts_once() {
        let touch = plane([[1.0, 0.5], [1.0, 0.0], [1.0, 0.5]].into_iter());
        assert_eq!(
            ray_crossings(&touch, 0.0).unwrap(),
            RayCrossings {
                count: 1,
                flagged: true
            }
        );
        let through = plane([[1.0, 0.5], [1.0, 0.0], [1.0, -0.5]].into_iter());
        assert_eq!(
            ray_crossings(&through, 0.0).unwrap(),
            RayCrossings {
                count: 1,
                flagged: true
            }
        );
        let through = plane([[1.0, 0.5], [1.0, -0.5]].into_iter());
        assert_eq!(
            ray_crossings(&through, 0.0).unwrap(),
            RayCrossings {
                count: 1,
                flagged: false
            }
        );
    }

    #[test]
    fn fit_examples() {
        let s = spiral(2.0, 0.5, 2.0, 500);
        let fit = fit_log_spiral(&s).unwrap();
        assert!((fit.c0 - 2.0).abs() < 1e-12 && fit.residual_max < 1e-12);

        let circle = Trajectory::from_points(
            ChartId::Cover,
            &(0..=100)
                .map(|k| [PI * k as f64 / 100.0, 0.5])
                .collect::<Vec<_>>(),
        )
        .unwrap();
        let fit = fit_log_spiral(&circle).unwrap();
        assert!(fit.residual_max >= 1.0 && fit.residual_max >= fit.residual_rms);

        let single = Trajectory::from_points(ChartId::Cover, &[[0.0, 0.5]]).unwrap();
        assert!(fit_log_spiral(&single).is_err());
    }

    #[test]
    fn coverage_examples() {
        let s = spiral(0.0, 0.5, 1.0, 64 * 4);
        let cov = secant_coverage(&s, [0.0, 0.0], 64).unwrap();
        assert_eq!(cov.hit_fraction, 1.0);
        assert!(cov.first_full_cover_radius.is_some());

        // brute force over the samples alone agrees for this dense spiral
        let mut seen = [false; 64];
        for q in s.cartesian_points() {
            let a = q[1].atan2(q[0]).rem_euclid(TAU);
            seen[((a / (TAU / 64.0)) as usize).min(63)] = true;
        }
        assert!(seen.iter().all(|b| *b));

        let cov = secant_coverage(&radial(0.4), [0.0, 0.0], 64).unwrap();
        assert_eq!(cov.hit_fraction, 1.0 / 64.0);
        assert_eq!(cov.first_full_cover_radius, None);

        let half = arc(0.1, 0.1 + PI, 40);
        assert!(secant_coverage(&half, [0.0, 0.0], 8).unwrap().hit_fraction >= 0.5);
        assert!(secant_coverage(&half, [0.0, 0.0], 4).is_err());
    }

    #[test]
    fn coverage_uses_segments_not_only_samples() {
        // 8 samples a quarter turn apart still sweep all 64 arcs
        let coarse = arc(0.0, 1.75 * TAU, 7);
        assert_eq!(
            secant_coverage(&coarse, [0.0, 0.0], 64)
                .unwrap()
                .hit_fraction,
            1.0
        );
    }

    proptest! {
        #[test]
        fn winding_brackets_crossings(turns in 0.05f64..5.0, c0 in -3.0f64..3.0, ray in 0.0f64..TAU) {
            let s = spiral(c0, 0.5, turns, (turns * 200.0) as usize + 10);
            let (first, last) = (s.first().unwrap().phi, s.last().unwrap().phi);
            let dist = |phi: f64| {
                let x = (phi - ray) / TAU;
                (x - x.round()).abs() * TAU
            };
            prop_assume!(dist(first) > 1e-6 && dist(last) > 1e-6);
            let w = winding(&s, [0.0, 0.0]).unwrap().abs();
            let c = ray_crossings(&s, ray).unwrap().count;
            prop_assert_eq!(c, crossings_oracle(first, last, ray));
            prop_assert!(w.floor() as usize <= c && c <= w.floor() as usize + 1);
        }

        #[test]
        fn rotation_invariance(turns in 0.1f64..3.0, alpha in -6.0f64..6.0, ray in 0.0f64..TAU, shift in 0usize..64) {
            let s = spiral(0.3, 0.5, turns, 600);
            let pts = s.cartesian_points();
            let (sa, ca) = alpha.sin_cos();
            let rotated = plane(pts.iter().map(|q| [ca * q[0] - sa * q[1], sa * q[0] + ca * q[1]]));
            let base = Trajectory::from_points(ChartId::Plane, &pts).unwrap();
            let w0 = winding(&base, [0.0, 0.0]).unwrap();
            let w1 = winding(&rotated, [0.0, 0.0]).unwrap();
            prop_assert!((w0 - w1).abs() < 1e-9);
            prop_assert_eq!(
                ray_crossings(&base, ray).unwrap().count,
                ray_crossings(&rotated, ray + alpha).unwrap().count
            );
            // a rotation by whole bins permutes the bins
            let beta = shift as f64 * TAU / 64.0 + 1e-3;
            let (sb, cb) = beta.sin_cos();
            let turned = plane(pts.iter().map(|q| [cb * q[0] - sb * q[1], sb * q[0] + cb * q[1]]));
            let nudged = plane(pts.iter().map(|q| {
                let (s1, c1) = 1e-3f64.sin_cos();
                [c1 * q[0] - s1 * q[1], s1 * q[0] + c1 * q[1]]
            }));
            prop_assert_eq!(
                secant_coverage(&nudged, [0.0, 0.0], 64).unwrap().hit_fraction,
                secant_coverage(&turned, [0.0, 0.0], 64).unwrap().hit_fraction
            );
        }
    }
}

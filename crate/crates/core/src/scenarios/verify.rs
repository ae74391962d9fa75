//! Cross-module identity checks on seeded random points.

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Check, Params, ScenarioReport, VerifyParams};
use crate::charts::{fd_jacobian, inversion, pullback_function, pullback_metric, ChartMap};
use crate::error::Result;
use crate::flow::{normalized_cross, xi_field};
use crate::metric::{
    cover_form, ChartId, DegeneracyKind, MetricField, SymmetricForm2, DEFAULT_CLASSIFY_TOL,
};
use crate::scalar::{Covector2, Perturbation, ScalarField};
use crate::Point;

/// Which coefficient formula stands in for the blown-down metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HDefinition {
    /// Pullback of `r^2 g` along the inverse polar map.
    #[default]
    Pullback,
    /// The regression fixture with the `-2xy` cross term.
    Printed,
}

impl HDefinition {
    fn metric(self) -> MetricField {
        match self {
            Self::Pullback => MetricField::blown_down(),
            Self::Printed => MetricField::blown_down_printed(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyConfig {
    pub points: usize,
    pub seed: u64,
    /// Replaces every check's own tolerance when set.
    pub tol: Option<f64>,
    pub h_definition: HDefinition,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            points: 1000,
            seed: 42,
            tol: None,
            h_definition: HDefinition::Pullback,
        }
    }
}

struct Sampler(ChaCha8Rng);

impl Sampler {
    fn cover(&mut self, r_lo: f64, r_hi: f64) -> Point {
        [
            self.0.gen_range(-3.0 * PI..3.0 * PI),
            self.0.gen_range(r_lo..r_hi),
        ]
    }

    /// Uniform in the annulus `r_lo < |p| < r_hi` by area.
    fn annulus(&mut self, r_lo: f64, r_hi: f64) -> Point {
        let u: f64 = self.0.gen_range(r_lo * r_lo..r_hi * r_hi);
        let r = u.sqrt();
        let a: f64 = self.0.gen_range(0.0..TAU);
        [r * a.cos(), r * a.sin()]
    }

    fn form(&mut self) -> SymmetricForm2 {
        let scale = 10f64.powf(self.0.gen_range(-3.0..3.0));
        let mut e = || scale * self.0.gen_range(-1.0..1.0);
        SymmetricForm2::new(e(), e(), e())
    }
}

fn max_of(values: impl IntoIterator<Item = Result<f64>>) -> Result<f64> {
    let mut worst = 0.0f64;
    for v in values {
        let v = v?;
        worst = if v.is_nan() { f64::NAN } else { worst.max(v) };
        if worst.is_nan() {
            break;
        }
    }
    Ok(worst)
}

/// Runs the identity suite and returns it as a report with id `verify`.
pub fn verify_identities(config: &VerifyConfig) -> Result<ScenarioReport> {
    let n = config.points.max(1);
    let mut rng = Sampler(ChaCha8Rng::seed_from_u64(config.seed));
    let h = config.h_definition.metric();
    let g = MetricField::cover();
    let tol = |default: f64| config.tol.unwrap_or(default);
    let mut checks = Vec::new();
    let mut notes = Vec::new();

    // pullback of h along the blow-down against r^2 g
    let lifted = pullback_metric(&ChartMap::blowdown(), &h);
    let pts: Vec<Point> = (0..n).map(|_| rng.cover(0.05, 0.95)).collect();
    let err = max_of(pts.iter().map(|&p| {
        let r2 = p[1] * p[1];
        Ok(lifted.eval(p)?.max_abs_diff(&cover_form(p[1]).scale(r2)))
    }))?;
    checks.push(Check::at_most("pullback_identity", err, 0.0, tol(1e-9)));

    // the printed cross term differs from the pullback by 2 r^2 |xy| in the dx dy coefficient
    let printed = MetricField::blown_down_printed();
    let exact = MetricField::blown_down();
    let ball: Vec<Point> = (0..n).map(|_| rng.annulus(0.0, 0.999)).collect();
    let mut largest = 0.0f64;
    let err = max_of(ball.iter().map(|&p| {
        let disc = 2.0 * (printed.eval(p)?.b - exact.eval(p)?.b).abs();
        largest = largest.max(disc);
        let r2 = p[0] * p[0] + p[1] * p[1];
        Ok((disc - 2.0 * r2 * (p[0] * p[1]).abs()).abs())
    }))?;
    checks.push(Check::at_most("printed_h_cross_term", err, 0.0, tol(1e-12)));
    notes.push(format!(
        "printed h cross-term discrepancy: max {largest:.3e} over {n} points, equal to 2 r^2 |xy| (residual {err:.1e})"
    ));

    let forms: Vec<SymmetricForm2> = (0..n)
        .map(|_| rng.form())
        .chain(pts.iter().map(|p| cover_form(p[1])))
        .chain(ball.iter().filter_map(|&p| h.eval(p).ok()))
        .collect();
    let err = max_of(forms.iter().map(|q| {
        let adj = q.adjugate();
        let (m, a) = (q.to_matrix(), adj.to_matrix());
        let det = q.determinant();
        let scale = q.max_abs().powi(2).max(f64::MIN_POSITIVE);
        let mut worst = 0.0f64;
        for i in 0..2 {
            for k in 0..2 {
                let prod = m[i][0] * a[0][k] + m[i][1] * a[1][k];
                let target = if i == k { det } else { 0.0 };
                worst = worst.max((prod - target).abs() / scale);
            }
        }
        Ok(worst)
    }))?;
    checks.push(Check::at_most("adjugate_identity", err, 0.0, tol(1e-14)));

    let err = max_of((0..n).map(|_| {
        let p = rng.cover(0.0, 0.99);
        let r = p[1];
        Ok((g.eval(p)?.determinant() - r.powi(4) * (1.0 - r * r)).abs())
    }))?;
    checks.push(Check::at_most("determinant_g", err, 0.0, tol(1e-12)));

    let err = max_of(ball.iter().map(|&p| {
        let r2 = p[0] * p[0] + p[1] * p[1];
        Ok((h.eval(p)?.determinant() - r2.powi(3) * (1.0 - r2)).abs())
    }))?;
    checks.push(Check::at_most("determinant_h", err, 0.0, tol(1e-12)));

    let mut nonpositive = 0usize;
    for i in 0..64 {
        let a = TAU * i as f64 / 64.0;
        for j in 0..64 {
            let r = (j as f64 + 0.5) / 64.0;
            if !(cover_form(r).value([a.cos(), a.sin()]) > 0.0) {
                nonpositive += 1;
            }
        }
    }
    checks.push(Check::within(
        "g_positivity",
        nonpositive as f64,
        0.0,
        tol(0.0),
    ));

    let err = fd_gradient_suite(&mut rng, n)?;
    checks.push(Check::at_most("fd_gradient", err, 0.0, tol(1e-6)));

    let delta = ScalarField::neg_sq_radius();
    let plain = xi_field(&h, &delta)?;
    let factors = [
        ScalarField::constant(ChartId::Plane, 2.0),
        ScalarField::from_closure(ChartId::Plane, "1+x^2+2y^2", |[x, y]| {
            Ok((1.0 + x * x + 2.0 * y * y, Covector2::new(2.0 * x, 4.0 * y)))
        }),
    ];
    let mut worst = 0.0f64;
    for lambda in &factors {
        let scaled = xi_field(&h.conformal_rescale(lambda), &delta)?;
        for _ in 0..n {
            let p = rng.annulus(0.01, 0.99);
            let (a, b) = (scaled.eval(p)?, plain.eval(p)?);
            let aligned = a[0] * b[0] + a[1] * b[1] > 0.0;
            worst = worst.max(if aligned {
                normalized_cross(a, b).abs()
            } else {
                f64::INFINITY
            });
        }
    }
    checks.push(Check::at_most(
        "conformal_parallelism",
        worst,
        0.0,
        tol(1e-8),
    ));

    let err = max_of((0..n).map(|_| {
        let p = rng.annulus(0.1, 10.0);
        let back = inversion(inversion(p)?)?;
        Ok((back[0] - p[0]).abs().max((back[1] - p[1]).abs()))
    }))?;
    checks.push(Check::at_most("inversion_involution", err, 0.0, tol(1e-12)));

    let err = jacobian_suite(&mut rng, n)?;
    checks.push(Check::at_most("jacobian_fd", err, 0.0, tol(1e-6)));

    let mut worst = 0.0f64;
    for _ in 0..n.clamp(1, 100) {
        let alpha = rng.0.gen_range(-PI..PI);
        let rot = ChartMap::rotation(alpha);
        let down = ChartMap::blowdown();
        let composed = pullback_metric(&rot.compose(&down)?, &h);
        let staged = pullback_metric(&down, &pullback_metric(&rot, &h));
        let p = rng.cover(0.05, 0.95);
        worst = worst.max(composed.eval(p)?.max_abs_diff(&staged.eval(p)?));
    }
    checks.push(Check::at_most(
        "pullback_functoriality",
        worst,
        0.0,
        tol(1e-10),
    ));

    let not_pd = ball
        .iter()
        .filter(|p| **p != [0.0, 0.0])
        .filter(|&&p| {
            h.eval(p)
                .map(|q| q.classify(DEFAULT_CLASSIFY_TOL).kind != DegeneracyKind::PositiveDefinite)
                .unwrap_or(true)
        })
        .count();
    checks.push(Check::within(
        "classify_h_interior",
        not_pd as f64,
        0.0,
        tol(0.0),
    ));
    let origin = h.eval([0.0, 0.0])?.classify(DEFAULT_CLASSIFY_TOL);
    let hit = (origin.kind == DegeneracyKind::Zero && origin.rank == 0) as u8 as f64;
    checks.push(Check::within("classify_h_origin", hit, 1.0, tol(0.0)));
    let boundary = g
        .eval([rng.0.gen_range(-PI..PI), 0.0])?
        .classify(DEFAULT_CLASSIFY_TOL);
    let hit =
        (boundary.kind == DegeneracyKind::PositiveSemidefinite && boundary.rank == 1) as u8 as f64;
    checks.push(Check::within("classify_g_boundary", hit, 1.0, tol(0.0)));

    Ok(ScenarioReport {
        scenario_id: "verify".into(),
        params: Params::Verify(VerifyParams {
            points: n,
            seed: config.seed,
            tol: config.tol,
            h_definition: config.h_definition,
        }),
        trajectory_summary: None,
        checks,
        notes,
    })
}

/// Every built-in scalar field against central differences with step 1e-5.
fn fd_gradient_suite(rng: &mut Sampler, n: usize) -> Result<f64> {
    let mut cover = vec![
        ScalarField::neg_cover_radius(),
        ScalarField::cover_radius_squared(),
        ScalarField::neg_cover_radius_squared(),
    ];
    let mut ball = vec![ScalarField::neg_sq_radius(), ScalarField::f_infinity()];
    for p in Perturbation::ALL {
        cover.push(ScalarField::perturbed_cover(&p.function()));
        ball.push(ScalarField::perturbed_ball(&p.function()));
    }
    let inv = ChartMap::inversion();
    let exterior = [
        pullback_function(&inv, &ScalarField::f_infinity()),
        pullback_function(&inv, &ScalarField::f_infinity().negated()),
    ];

    let mut worst = 0.0f64;
    let mut probe = |f: &ScalarField, p: Point| -> Result<()> {
        let d = f.eval_grad(p)?.max_abs_diff(&f.fd_gradient(p, 1e-5)?);
        worst = worst.max(d);
        Ok(())
    };
    for _ in 0..n {
        let pc = rng.cover(0.05, 0.95);
        let pb = rng.annulus(0.05, 0.95);
        let pe = rng.annulus(1.1, 10.0);
        for f in &cover {
            probe(f, pc)?;
        }
        for f in &ball {
            probe(f, pb)?;
        }
        for f in &exterior {
            probe(f, pe)?;
        }
    }
    Ok(worst)
}

fn jacobian_suite(rng: &mut Sampler, n: usize) -> Result<f64> {
    let maps = [
        ChartMap::blowdown(),
        ChartMap::blowup(),
        ChartMap::inversion(),
        ChartMap::rotation(0.9),
    ];
    let mut worst = 0.0f64;
    for _ in 0..n {
        let points = [
            rng.cover(0.05, 0.95),
            rng.annulus(0.05, 0.95),
            rng.annulus(0.1, 10.0),
            rng.annulus(0.0, 5.0),
        ];
        for (psi, p) in maps.iter().zip(points) {
            let j = psi.jacobian(p)?;
            let fd = fd_jacobian(psi, p, 1e-6)?;
            for i in 0..2 {
                for k in 0..2 {
                    worst = worst.max((j[i][k] - fd[i][k]).abs());
                }
            }
        }
    }
    Ok(worst)
}

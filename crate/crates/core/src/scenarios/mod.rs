//! Named, self-checking experiments built from the metric, function and flow
//! pieces.

mod verify;

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use verify::{verify_identities, HDefinition, VerifyConfig};

use crate::analysis::{fit_log_spiral, ray_crossings, secant_coverage, winding};
use crate::charts::{pullback_function, pullback_metric, ChartMap};
use crate::error::{Error, Result};
use crate::flow::{integrate, xi_field, IntegrationOptions, Mode, StopReason, Trajectory};
use crate::metric::{ChartId, MetricField};
use crate::scalar::{Perturbation, ScalarField};
use crate::Point;

/// Slack on "at least" winding checks, in turns.
pub const WINDING_TOL: f64 = 0.01;
pub const CLOSED_FORM_TOL: f64 = 1e-6;
pub const MONOTONE_SLACK: f64 = 1e-9;
pub const SECANT_BINS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ScenarioId {
    S1,
    S2,
    S3,
    S4,
    S5,
    S6,
}

impl ScenarioId {
    pub const ALL: [ScenarioId; 6] = [Self::S1, Self::S2, Self::S3, Self::S4, Self::S5, Self::S6];

    pub fn code(self) -> &'static str {
        match self {
            Self::S1 => "S1",
            Self::S2 => "S2",
            Self::S3 => "S3",
            Self::S4 => "S4",
            Self::S5 => "S5",
            Self::S6 => "S6",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::S1 => "cover-canonical",
            Self::S2 => "cover-perturbed",
            Self::S3 => "ball-spiral",
            Self::S4 => "ball-perturbed",
            Self::S5 => "infinity-spiral",
            Self::S6 => "euclidean-control",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Self::S1 => "g = dr^2 + 2r^3 dr dphi + r^4 dphi^2 on the cover, f = -r; phi = C0 - ln r",
            Self::S2 => "g on the cover, f = -r + r^4 h; phi diverges as r -> 0",
            Self::S3 => "blown-down h on the unit ball, delta = -(x^2+y^2); trajectories spiral into the origin",
            Self::S4 => "h on the unit ball, -r^2 + r^5 h; spiraling survives the perturbation",
            Self::S5 => "inverted metric I*h on |p| > 1, function I*(-f_inf); spirals out to infinity",
            Self::S6 => "euclidean metric, delta; radial negative control",
        }
    }

    /// Whether the scenario takes a perturbation function.
    pub fn is_perturbed(self) -> bool {
        matches!(self, Self::S2 | Self::S4)
    }
}

impl fmt::Display for ScenarioId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for ScenarioId {
    type Err = Error;

    /// Accepts the short code (`S3`, `s3`) or the long name (`ball-spiral`).
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|id| id.code().eq_ignore_ascii_case(s) || id.name() == s)
            .ok_or_else(|| Error::UnknownScenario(s.to_string()))
    }
}

/// How a scenario's default inner stop radius is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
enum InnerStop {
    Fixed(f64),
    /// `r0 * exp(-2 pi turns)`, i.e. the closed-form spiral makes `turns` turns.
    Turns(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Relation {
    Within,
    AtLeast,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Measure {
    /// `max |phi - (phi0 + ln(r0 / r))|`
    ClosedFormResidual,
    LogSpiralResidual,
    /// Winding in turns against `|ln(r_end / r0)| / 2 pi`.
    Winding(Relation),
    WindingZero,
    /// Lifted angle gain against `ln(r0 / r_end)`.
    PhiGain,
    /// Crossings of the positive x-axis against `floor(|ln(r_end / r0)| / 2 pi)`.
    CrossingsClosedForm,
    CrossingsAtMostOne,
    RadiusMonotone {
        increasing: bool,
    },
    AngleIncreasing,
    FunctionNondecreasing,
    Stopped(StopReason),
    RadiusGrowth,
    SecantHitFraction,
    SecantFullCoverRadius,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct CheckDef {
    name: &'static str,
    measure: Measure,
    tol: f64,
}

const fn check(name: &'static str, measure: Measure, tol: f64) -> CheckDef {
    CheckDef { name, measure, tol }
}

/// One evaluated check of a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub expected: f64,
    pub tol: f64,
    pub pass: bool,
}

impl Check {
    pub fn within(name: impl Into<String>, measured: f64, expected: f64, tol: f64) -> Self {
        let pass = (measured - expected).abs() <= tol;
        Self::new(name, measured, expected, tol, pass)
    }

    pub fn at_least(name: impl Into<String>, measured: f64, expected: f64, tol: f64) -> Self {
        let pass = measured >= expected - tol;
        Self::new(name, measured, expected, tol, pass)
    }

    pub fn at_most(name: impl Into<String>, measured: f64, expected: f64, tol: f64) -> Self {
        let pass = measured <= expected + tol;
        Self::new(name, measured, expected, tol, pass)
    }

    fn new(name: impl Into<String>, measured: f64, expected: f64, tol: f64, pass: bool) -> Self {
        Self {
            name: name.into(),
            measured,
            expected,
            tol,
            pass,
        }
    }
}

/// A runnable experiment: metric and function on a chart, with a default
/// start and the checks its report is judged by.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub id: ScenarioId,
    pub chart: ChartId,
    pub metric: MetricField,
    pub function: ScalarField,
    pub default_start: Point,
    pub perturbation: Option<Perturbation>,
    default_options: IntegrationOptions,
    inner_stop: InnerStop,
    checks: Vec<CheckDef>,
    notes: Vec<String>,
}

impl Scenario {
    /// The scenario with its default perturbation (if it takes one).
    pub fn new(id: ScenarioId) -> Self {
        Self::with_perturbation(id, None)
    }

    /// `perturbation` is ignored by scenarios that do not take one.
    pub fn with_perturbation(id: ScenarioId, perturbation: Option<Perturbation>) -> Self {
        use Measure::*;
        let base = IntegrationOptions::default();
        let inside_ball = IntegrationOptions {
            stop_r_max: 0.99,
            ..base
        };
        let f_monotone = check("f_nondecreasing", FunctionNondecreasing, MONOTONE_SLACK);
        let reached_min = check("stop_reason", Stopped(crate::StopReason::RMinReached), 0.0);

        match id {
            ScenarioId::S1 => Self {
                id,
                chart: ChartId::Cover,
                metric: MetricField::cover(),
                function: ScalarField::neg_cover_radius(),
                default_start: [0.0, 0.5],
                perturbation: None,
                default_options: inside_ball,
                inner_stop: InnerStop::Fixed(1e-6),
                checks: vec![
                    check("closed_form_residual", ClosedFormResidual, CLOSED_FORM_TOL),
                    check(
                        "log_spiral_residual_max",
                        LogSpiralResidual,
                        CLOSED_FORM_TOL,
                    ),
                    check("winding", Winding(Relation::Within), WINDING_TOL),
                    check("r_decreasing", RadiusMonotone { increasing: false }, 0.0),
                    check("phi_increasing", AngleIncreasing, 0.0),
                    f_monotone,
                    reached_min,
                ],
                notes: vec![],
            },
            ScenarioId::S2 => {
                let pert = perturbation.unwrap_or(Perturbation::Sin);
                Self {
                    id,
                    chart: ChartId::Cover,
                    metric: MetricField::cover(),
                    function: ScalarField::perturbed_cover(&pert.function()),
                    default_start: [0.0, 0.5],
                    perturbation: Some(pert),
                    default_options: inside_ball,
                    inner_stop: InnerStop::Turns(2.0),
                    checks: vec![
                        check("phi_gain", PhiGain, WINDING_TOL * TAU),
                        check("r_decreasing", RadiusMonotone { increasing: false }, 0.0),
                        f_monotone,
                        reached_min,
                    ],
                    notes: vec![
                        "on the cover the trajectories do not spiral: they reach the boundary line only as phi -> +inf, so the check is the phi gain".into(),
                    ],
                }
            }
            ScenarioId::S3 => Self {
                id,
                chart: ChartId::Plane,
                metric: MetricField::blown_down(),
                function: ScalarField::neg_sq_radius(),
                default_start: [0.5, 0.0],
                perturbation: None,
                default_options: inside_ball,
                inner_stop: InnerStop::Turns(2.0),
                checks: vec![
                    check("winding", Winding(Relation::Within), WINDING_TOL),
                    check("ray_crossings", CrossingsClosedForm, 1.0),
                    check("closed_form_residual", ClosedFormResidual, CLOSED_FORM_TOL),
                    check("r_decreasing", RadiusMonotone { increasing: false }, 0.0),
                    f_monotone,
                    reached_min,
                ],
                notes: vec![],
            },
            ScenarioId::S4 => {
                let pert = perturbation.unwrap_or(Perturbation::Linear);
                Self {
                    id,
                    chart: ChartId::Plane,
                    metric: MetricField::blown_down(),
                    function: ScalarField::perturbed_ball(&pert.function()),
                    default_start: [0.5, 0.0],
                    perturbation: Some(pert),
                    default_options: inside_ball,
                    inner_stop: InnerStop::Turns(2.0),
                    checks: vec![
                        check("winding", Winding(Relation::AtLeast), WINDING_TOL),
                        check("r_decreasing", RadiusMonotone { increasing: false }, 0.0),
                        f_monotone,
                        reached_min,
                    ],
                    notes: vec![],
                }
            }
            ScenarioId::S5 => {
                let inversion = ChartMap::inversion();
                Self {
                    id,
                    chart: ChartId::Plane,
                    metric: pullback_metric(&inversion, &MetricField::blown_down()),
                    function: pullback_function(&inversion, &ScalarField::f_infinity().negated()),
                    default_start: [3.0, 0.0],
                    perturbation: None,
                    default_options: IntegrationOptions {
                        stop_r_max: 1e4,
                        ..base
                    },
                    inner_stop: InnerStop::Fixed(1.001),
                    checks: vec![
                        check("radius_reached", RadiusGrowth, 0.0),
                        check("r_increasing", RadiusMonotone { increasing: true }, 0.0),
                        check("secant_hit_fraction", SecantHitFraction, 0.0),
                        check("secant_full_cover_radius", SecantFullCoverRadius, 0.0),
                        check("winding", Winding(Relation::Within), WINDING_TOL),
                        f_monotone,
                        check("stop_reason", Stopped(crate::StopReason::RMaxReached), 0.0),
                    ],
                    notes: vec![],
                }
            }
            ScenarioId::S6 => Self {
                id,
                chart: ChartId::Plane,
                metric: MetricField::euclidean(ChartId::Plane),
                function: ScalarField::neg_sq_radius(),
                default_start: [0.5, 0.0],
                perturbation: None,
                default_options: base,
                inner_stop: InnerStop::Fixed(1e-6),
                checks: vec![
                    check("winding", WindingZero, 1e-6),
                    check("ray_crossings", CrossingsAtMostOne, 0.0),
                    f_monotone,
                    reached_min,
                ],
                notes: vec!["negative control: same function, euclidean metric".into()],
            },
        }
    }

    /// Options after applying `overrides` for a run starting at `start`.
    pub fn options_for(&self, start: Point, overrides: &Overrides) -> IntegrationOptions {
        let mut opts = self.default_options;
        opts.stop_r_min = match self.inner_stop {
            InnerStop::Fixed(r) => r,
            InnerStop::Turns(turns) => start_radius(self.chart, start) * (-TAU * turns).exp(),
        };
        if let Some(v) = overrides.rel_tol {
            opts.rel_tol = v;
        }
        if let Some(v) = overrides.max_steps {
            opts.max_steps = v;
        }
        if let Some(v) = overrides.mode {
            opts.mode = v;
        }
        if let Some(v) = overrides.stop_r_min {
            opts.stop_r_min = v;
        }
        if let Some(v) = overrides.stop_r_max {
            opts.stop_r_max = v;
        }
        opts
    }
}

fn start_radius(chart: ChartId, p: Point) -> f64 {
    match chart {
        ChartId::Cover => p[1],
        ChartId::Plane => p[0].hypot(p[1]),
    }
}

/// All scenarios with their defaults, in id order.
pub fn list_scenarios() -> Vec<Scenario> {
    ScenarioId::ALL.into_iter().map(Scenario::new).collect()
}

/// Partial integration options, start point and perturbation choice.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Overrides {
    pub start: Option<Point>,
    pub rel_tol: Option<f64>,
    pub max_steps: Option<usize>,
    pub mode: Option<Mode>,
    pub stop_r_min: Option<f64>,
    pub stop_r_max: Option<f64>,
    pub perturbation: Option<Perturbation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunParams {
    pub chart: ChartId,
    pub metric: String,
    pub function: String,
    pub start: Point,
    pub perturbation: Option<Perturbation>,
    pub options: IntegrationOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyParams {
    pub points: usize,
    pub seed: u64,
    pub tol: Option<f64>,
    pub h_definition: HDefinition,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Params {
    Run(RunParams),
    Verify(VerifyParams),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySummary {
    pub start: Point,
    pub end: Point,
    pub stop_reason: StopReason,
    pub winding: f64,
    pub crossings: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub scenario_id: String,
    pub params: Params,
    pub trajectory_summary: Option<TrajectorySummary>,
    pub checks: Vec<Check>,
    pub notes: Vec<String>,
}

impl ScenarioReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    /// The integrator stopped for a reason other than a stop radius.
    pub fn numerical_failure(&self) -> bool {
        self.trajectory_summary
            .as_ref()
            .is_some_and(|s| s.stop_reason.is_failure())
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

pub fn run_scenario(id: ScenarioId, overrides: &Overrides) -> Result<ScenarioReport> {
    simulate(id, overrides).map(|(report, _)| report)
}

/// Runs a scenario and returns the trajectory alongside the report.
///
/// Fails only when the start point is unusable; integration trouble is
/// reported through the stop reason and failed checks.
pub fn simulate(id: ScenarioId, overrides: &Overrides) -> Result<(ScenarioReport, Trajectory)> {
    let scenario = Scenario::with_perturbation(id, overrides.perturbation);
    let start = overrides.start.unwrap_or(scenario.default_start);
    if !scenario.metric.contains(start) {
        return Err(Error::Domain {
            point: start,
            chart: scenario.chart,
            label: scenario.metric.label().to_string(),
        });
    }
    let opts = scenario.options_for(start, overrides);
    let field = xi_field(&scenario.metric, &scenario.function)?;
    let traj = integrate(&field, start, &opts)?;
    let report = evaluate(&scenario, start, opts, &traj)?;
    Ok((report, traj))
}

/// One report per start on a grid of `grid` angles about the origin, at the
/// radius of the (possibly overridden) start. Index 0 is the start itself.
pub fn sweep(id: ScenarioId, overrides: &Overrides, grid: usize) -> Result<Vec<ScenarioReport>> {
    if grid == 0 {
        return Err(Error::InvalidArgument("grid must be at least 1".into()));
    }
    let scenario = Scenario::new(id);
    let start = overrides.start.unwrap_or(scenario.default_start);
    let starts: Vec<Point> = (0..grid)
        .map(|k| {
            let angle = TAU * k as f64 / grid as f64;
            match scenario.chart {
                ChartId::Cover => [start[0] + angle, start[1]],
                ChartId::Plane if k == 0 => start,
                ChartId::Plane => {
                    let (s, c) = angle.sin_cos();
                    [c * start[0] - s * start[1], s * start[0] + c * start[1]]
                }
            }
        })
        .collect();
    sweep_starts(id, overrides, &starts)
}

/// One report per explicit start, in input order. The start in `overrides`
/// is ignored.
pub fn sweep_starts(
    id: ScenarioId,
    overrides: &Overrides,
    starts: &[Point],
) -> Result<Vec<ScenarioReport>> {
    starts
        .par_iter()
        .map(|&p| {
            run_scenario(
                id,
                &Overrides {
                    start: Some(p),
                    ..*overrides
                },
            )
        })
        .collect()
}

fn evaluate(
    scenario: &Scenario,
    start: Point,
    opts: IntegrationOptions,
    traj: &Trajectory,
) -> Result<ScenarioReport> {
    let samples = traj.samples();
    let (first, last) = match (samples.first(), samples.last()) {
        (Some(a), Some(b)) => (*a, *b),
        _ => return Err(Error::InvalidArgument("empty trajectory".into())),
    };
    let turns = winding(traj, [0.0, 0.0])?;
    let crossings = ray_crossings(traj, 0.0)?;
    let log_ratio = (last.r / first.r).ln().abs();
    let closed_turns = log_ratio / TAU;

    let mut checks = Vec::with_capacity(scenario.checks.len());
    for def in &scenario.checks {
        let (name, tol) = (def.name, def.tol);
        let c = match def.measure {
            Measure::ClosedFormResidual => {
                let worst = samples
                    .iter()
                    .map(|s| (s.phi - (first.phi + (first.r / s.r).ln())).abs())
                    .fold(0.0, f64::max);
                Check::at_most(name, worst, 0.0, tol)
            }
            Measure::LogSpiralResidual => {
                let fit = fit_log_spiral(traj)?;
                Check::at_most(name, fit.residual_max, 0.0, tol)
            }
            Measure::Winding(Relation::Within) => Check::within(name, turns, closed_turns, tol),
            Measure::Winding(Relation::AtLeast) => Check::at_least(name, turns, closed_turns, tol),
            Measure::WindingZero => Check::within(name, turns, 0.0, tol),
            Measure::PhiGain => Check::at_least(name, last.phi - first.phi, log_ratio, tol),
            Measure::CrossingsClosedForm => {
                Check::within(name, crossings.count as f64, closed_turns.floor(), tol)
            }
            Measure::CrossingsAtMostOne => Check::at_most(name, crossings.count as f64, 1.0, tol),
            Measure::RadiusMonotone { increasing } => {
                let bad = samples
                    .windows(2)
                    .filter(|w| {
                        if increasing {
                            w[1].r <= w[0].r
                        } else {
                            w[1].r >= w[0].r
                        }
                    })
                    .count();
                Check::within(name, bad as f64, 0.0, tol)
            }
            Measure::AngleIncreasing => {
                let bad = samples.windows(2).filter(|w| w[1].phi <= w[0].phi).count();
                Check::within(name, bad as f64, 0.0, tol)
            }
            Measure::FunctionNondecreasing => {
                let mut worst_drop = 0.0f64;
                let mut prev = scenario.function.value(first.p)?;
                for s in &samples[1..] {
                    let v = scenario.function.value(s.p)?;
                    worst_drop = worst_drop.max(prev - v);
                    prev = v;
                }
                Check::at_most(name, worst_drop, 0.0, tol)
            }
            Measure::Stopped(expected) => {
                let hit = if traj.stop_reason() == expected {
                    1.0
                } else {
                    0.0
                };
                Check::within(name, hit, 1.0, tol)
            }
            Measure::RadiusGrowth => Check::at_least(name, last.r, first.r * TAU.exp(), tol),
            Measure::SecantHitFraction => {
                let cov = secant_coverage(traj, [0.0, 0.0], SECANT_BINS)?;
                Check::within(name, cov.hit_fraction, 1.0, tol)
            }
            Measure::SecantFullCoverRadius => {
                let cov = secant_coverage(traj, [0.0, 0.0], SECANT_BINS)?;
                let at = cov.first_full_cover_radius.unwrap_or(f64::INFINITY);
                Check::at_most(name, at, first.r * TAU.exp(), tol)
            }
        };
        checks.push(c);
    }

    let mut notes = scenario.notes.clone();
    if traj.stop_reason().is_failure() {
        notes.push(format!(
            "integration stopped early: {:?} after {} samples at r = {:e}",
            traj.stop_reason(),
            traj.len(),
            last.r
        ));
    }
    if scenario.id == ScenarioId::S5 {
        let literal = pullback_function(&ChartMap::inversion(), &ScalarField::f_infinity());
        let f_inf = ScalarField::f_infinity();
        notes.push(format!(
            "I*f_inf = f_inf o I = 1/(1+|p|^2) = 1 - f_inf, not f_inf: at the start {} vs {}; \
             the flow uses I*(-f_inf) = f_inf - 1, whose ascent leaves every compact set",
            literal.value(start)?,
            f_inf.value(start)?
        ));
    }

    Ok(ScenarioReport {
        scenario_id: scenario.id.code().to_string(),
        params: Params::Run(RunParams {
            chart: scenario.chart,
            metric: scenario.metric.label().to_string(),
            function: scenario.function.label().to_string(),
            start,
            perturbation: scenario.perturbation,
            options: opts,
        }),
        trajectory_summary: Some(TrajectorySummary {
            start: first.p,
            end: last.p,
            stop_reason: traj.stop_reason(),
            winding: turns,
            crossings: crossings.count,
        }),
        checks,
        notes,
    })
}

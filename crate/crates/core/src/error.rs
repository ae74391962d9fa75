use thiserror::Error;

use crate::metric::ChartId;
use crate::Point;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("point ({}, {}) is outside the domain of {label} on the {chart} chart", .point[0], .point[1])]
    Domain {
        point: Point,
        chart: ChartId,
        label: String,
    },

    #[error("angle is undefined at the center ({}, {})", .point[0], .point[1])]
    UndefinedAngle { point: Point },

    #[error("conformal factor {value} at ({}, {}) is not positive", .point[0], .point[1])]
    NonPositiveRescale { point: Point, value: f64 },

    #[error("metric is degenerate at ({}, {}): det = {det:e} <= {floor:e}", .point[0], .point[1])]
    DegeneratePoint { point: Point, det: f64, floor: f64 },

    #[error("vector field vanishes at ({}, {})", .point[0], .point[1])]
    ZeroVector { point: Point },

    #[error("chart mismatch: expected {expected}, found {found}")]
    ChartMismatch { expected: ChartId, found: ChartId },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unknown scenario id `{0}`")]
    UnknownScenario(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

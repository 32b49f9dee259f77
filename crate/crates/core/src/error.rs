use thiserror::Error;

use crate::vec3::Vec3;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("point {0:?} lies on an edge or corner where the normal is undefined")]
    EdgePoint(Vec3),
    #[error("point {0:?} is not on the reduced boundary")]
    NotOnBoundary(Vec3),
    #[error("half-space boundary needs an explicit bounding window")]
    UnboundedSurface,
    #[error("field is undefined at {point:?}")]
    UndefinedPoint { point: Vec3 },
    #[error("ball of radius {radius} about {center:?} leaves the working box")]
    OutsideDomain { center: Vec3, radius: f64 },
    #[error("test function support (radius {radius} about {center:?}) leaves the working box")]
    SupportEscapes { center: Vec3, radius: f64 },
    #[error("field does not vanish outside the declared support: nonzero at {0:?}")]
    SupportNotCompact(Vec3),
    #[error("extrapolation needs at least 3 strictly decreasing levels, got {0}")]
    InsufficientLevels(usize),
    #[error("trace estimates refer to different points or normals")]
    PointMismatch,
    #[error("no closed-form or numeric trace available for scenario {0}")]
    NoTraceAvailable(String),
    #[error("invalid shape: {0}")]
    InvalidShape(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("sampler kept landing on the field's singular set")]
    RedrawExhausted,
}

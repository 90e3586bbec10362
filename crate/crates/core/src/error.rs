use crate::lattice::Site;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    Geometry(String),
    #[error("invalid frozen spec: {0}")]
    FrozenSpec(String),
    #[error("site ({}, {}) is outside the box", .0.x, .0.y)]
    OutsideBox(Site),
    #[error("site ({}, {}) is frozen", .0.x, .0.y)]
    FrozenSite(Site),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("{free} free sites exceed the enumeration cap of {cap}; use the transfer method or a smaller box")]
    TooManySites { free: usize, cap: usize },
    #[error("strip height {rows} exceeds the transfer limit of {max} rows")]
    StripTooWide { rows: usize, max: usize },
    #[error("event is not supported on a single column")]
    EventNotColumnar,
    #[error("frozen specs are not comparable: {0}")]
    NotComparable(String),
    #[error("FKG violation at ({}, {}): p_low = {p_low} > p_high = {p_high}", site.x, site.y)]
    FkgViolation { site: Site, p_low: f64, p_high: f64 },
    #[error("contour: {0}")]
    Contour(String),
    #[error("raster: {0}")]
    Raster(String),
}

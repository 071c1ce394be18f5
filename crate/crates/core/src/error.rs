use alloc::string::String;

use crate::math::Vec2;

/// Errors raised by the geometric and dynamical operations of this crate.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("level {level} is a critical value of the defining field; the boundary would be singular")]
    SingularBoundary { level: f64 },

    #[error("resolution {resolution} does not separate declared critical points at ({a:?}) and ({b:?})")]
    ResolutionTooCoarse { resolution: f64, a: Vec2, b: Vec2 },

    #[error("mesh is empty")]
    EmptyMesh,

    #[error("point ({0:?}) lies outside the mesh")]
    OutsideMesh(Vec2),

    #[error("trajectory left the chart atlas at ({0:?})")]
    LeftAtlas(Vec2),

    #[error("integration time {requested} exceeds the configured maximum {max_time}")]
    MaxTimeExceeded { requested: f64, max_time: f64 },

    #[error("orbit period requested at an equilibrium ({0:?})")]
    Equilibrium(Vec2),

    #[error("finite-difference stencil leaves the surface near ({0:?})")]
    StencilOutside(Vec2),

    #[error("field is not in class F: {0}")]
    NotInClassF(String),

    #[error("inconsistent topology: {0}")]
    InconsistentTopology(String),

    #[error("vector fields are not parallel: residual {residual:e} at ({at:?})")]
    NotParallel { residual: f64, at: Vec2 },

    #[error("scaling function vanishes at ({0:?})")]
    VanishingScale(Vec2),

    #[error("no continuous integer multiple of the period up to k = {max_k} was found")]
    NoThetaProfile { max_k: u32 },

    #[error("PL critical vertex at ({at:?}) has no matching critical point (mesh too coarse)")]
    SpuriousCritical { at: Vec2 },

    #[error("graph function is discontinuous at node {node}: {detail}")]
    Discontinuous { node: usize, detail: String },

    #[error("function is not constant on level components ({at}): spread {spread:e}")]
    NotConstant { at: String, spread: f64 },

    #[error("graph function does not match the Reeb graph: {0}")]
    GraphMismatch(String),

    #[error("level {0} is a critical value")]
    CriticalLevel(f64),

    #[error("involution does not preserve the field: residual {0:e}")]
    InvolutionNotPreserving(f64),

    #[error("involution does not permute sublevel components")]
    InvolutionNotPermuting,

    #[error("verification failed: {0}")]
    VerificationFailed(String),
}

pub type Result<T> = core::result::Result<T, Error>;

//! Weighted straight skeletons, offset polygons and roof surfaces computed by
//! propagating a polygon wavefront with a predictor-corrector event scheme.

// `!(x > 0.0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod engine;
mod error;
pub mod geom;
pub mod io;
pub mod kinetics;
pub mod mesh;
pub mod oracle;
pub mod skeleton;
pub mod velocity;
pub mod wavefront;

pub use engine::{Engine, EngineError, EngineOptions, Output, Status};
pub use error::Error;
pub use geom::{Vec2, Vec3};

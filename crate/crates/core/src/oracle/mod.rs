//! Independent references for testing the engine: an exact construction for
//! convex polygons and a brute-force fixed-step replay for everything else.
//! Neither shares geometry code with the engine beyond vector arithmetic.

mod check;
mod convex;
mod replay;

pub use check::{cross_check, engine_events, OracleReport};
pub use convex::{convex_bisector_skeleton, convex_hull, ConvexSkeleton};
pub use replay::{compare_events, dense_replay, EventMatch, ReplayEvent, ReplayKind, ReplayResult};

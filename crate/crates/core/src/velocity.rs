//! Vertex velocities from the inclination angles of the two roof planes
//! meeting at a vertex, and detection of the colinear singularity.
//!
//! Conventions: `n_out` is the outward unit normal of an edge, and an
//! inclination below π/2 moves the edge inward when `v_z > 0`. An edge with
//! inclination `alpha` has inward planar speed `v_z · cot(alpha)`.

use crate::geom::{Vec2, Vec3};

/// Inclinations are kept this far from 0 and π.
pub const ALPHA_MARGIN: f64 = 1e-6;

/// Threshold on the sine of the angle between the projected plane normals.
pub const SINGULAR_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoofPlane {
    pub s: Vec3,
    pub alpha: f64,
    pub edge_u: Vec2,
    pub edge_n_out: Vec2,
}

impl RoofPlane {
    pub fn new(alpha: f64, edge_u: Vec2, edge_n_out: Vec2) -> Self {
        let t = roof_tangent(alpha, edge_n_out);
        let s = roof_normal(edge_u.extend(0.0), t);
        RoofPlane {
            s,
            alpha,
            edge_u,
            edge_n_out,
        }
    }
}

/// Result of the 2×2 velocity solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Solve {
    Velocity(Vec2),
    /// Rows are linearly dependent: the vertex is colinear and must be removed.
    Singular,
}

impl Solve {
    pub fn velocity(self) -> Option<Vec2> {
        match self {
            Solve::Velocity(v) => Some(v),
            Solve::Singular => None,
        }
    }

    pub fn is_singular(self) -> bool {
        matches!(self, Solve::Singular)
    }
}

pub fn clamp_alpha(alpha: f64) -> f64 {
    alpha.clamp(ALPHA_MARGIN, std::f64::consts::PI - ALPHA_MARGIN)
}

/// Unit vector lying in the roof plane, perpendicular to the edge.
pub fn roof_tangent(alpha: f64, n_out: Vec2) -> Vec3 {
    let a = std::f64::consts::PI - alpha;
    n_out.extend(0.0) * a.cos() + Vec3::UNIT_Z * a.sin()
}

/// Roof plane normal `u × t`.
pub fn roof_normal(u: Vec3, t: Vec3) -> Vec3 {
    u.cross(t)
}

fn solve_rows(r1: Vec2, b1: f64, r2: Vec2, b2: f64) -> Solve {
    let det = r1.cross(r2);
    let scale = r1.norm() * r2.norm();
    if !(scale > 0.0) || det.abs() <= SINGULAR_EPS * scale {
        return Solve::Singular;
    }
    // Cramer's rule
    let vx = (b1 * r2.y - b2 * r1.y) / det;
    let vy = (r1.x * b2 - r2.x * b1) / det;
    Solve::Velocity(Vec2::new(vx, vy))
}

/// Planar velocity keeping the vertex inside both roof planes:
/// `s̄_prev·v̄ = -s_prev,z·v_z` and `s̄_next·v̄ = -s_next,z·v_z`.
pub fn solve_vertex_velocity(s_prev: Vec3, s_next: Vec3, v_z: f64) -> Solve {
    solve_rows(s_prev.xy(), -s_prev.z * v_z, s_next.xy(), -s_next.z * v_z)
}

pub fn is_colinear(s_prev: Vec3, s_next: Vec3) -> bool {
    let (a, b) = (s_prev.xy(), s_next.xy());
    let scale = a.norm() * b.norm();
    !(scale > 0.0) || a.cross(b).abs() <= SINGULAR_EPS * scale
}

/// Planar variant with inward normal speeds; `w = cot(alpha)` at `v_z = 1`.
pub fn velocity_from_weights(n_out_prev: Vec2, w_prev: f64, n_out_next: Vec2, w_next: f64) -> Solve {
    solve_rows(-n_out_prev, w_prev, -n_out_next, w_next)
}

/// `alpha = arccot(weight)`, in (0, π).
pub fn weight_to_alpha(weight: f64) -> f64 {
    1.0f64.atan2(weight)
}

pub fn alpha_to_weight(alpha: f64) -> f64 {
    if alpha == std::f64::consts::FRAC_PI_2 {
        return 0.0;
    }
    alpha.cos() / alpha.sin()
}

//! The deforming polygon: circular doubly linked vertex loops and the
//! surgery that keeps them consistent through collapse, split and
//! colinear-vertex events.
//!
//! Every vertex owns the attributes of the edge *before* it (from `prev` to
//! the vertex). Edges translate but never rotate, so `u`/`n` are fixed for the
//! lifetime of an edge and travel with the vertex that owns it.

use std::f64::consts::FRAC_PI_2;

use thiserror::Error;

use crate::geom::{segments_intersect, signed_area, point_in_rings, Tolerances, Vec2, Vec3};
use crate::skeleton::{NodeId, NodeKind};
use crate::velocity::{
    alpha_to_weight, velocity_from_weights, weight_to_alpha, RoofPlane, Solve, ALPHA_MARGIN, SINGULAR_EPS,
};

/// Largest admissible inward speed, reached at the minimum inclination.
pub const MAX_WEIGHT: f64 = 1.0 / ALPHA_MARGIN;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VertexId(pub u32);

impl VertexId {
    #[inline]
    pub fn idx(self) -> usize {
        self.0 as usize
    }
}

impl std::fmt::Display for VertexId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "v{}", self.0)
    }
}

pub type FaceId = u32;

/// Attributes of one wavefront edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeAttr {
    /// Unit direction from the previous vertex toward the owning vertex.
    pub u: Vec2,
    /// Outward unit normal.
    pub n: Vec2,
    /// Roof inclination in (0, π).
    pub alpha: f64,
    /// Inward planar speed at unit vertical rate, `cot(alpha)`.
    pub weight: f64,
    pub face: FaceId,
    /// Index of the input edge this one descends from.
    pub input_edge: u32,
    /// The edge is held stationary until this time.
    pub start_time: f64,
}

impl EdgeAttr {
    pub fn along(u: Vec2, weight: f64, face: FaceId, input_edge: u32) -> Self {
        EdgeAttr {
            u,
            n: u.right_normal(),
            alpha: weight_to_alpha(weight),
            weight,
            face,
            input_edge,
            start_time: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct VertexFlags {
    pub colinear: bool,
    pub split_origin: bool,
    pub collapse_origin: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WavefrontVertex {
    pub id: VertexId,
    pub pos: Vec2,
    /// Planar velocity plus the common vertical rate.
    pub vel: Vec3,
    pub edge: EdgeAttr,
    pub prev: VertexId,
    pub next: VertexId,
    /// Skeleton node where the current trajectory started.
    pub below: Option<NodeId>,
    /// Skeleton node where the trajectory ended, once the vertex is gone.
    pub above: Option<NodeId>,
    pub alive: bool,
    /// Member of a terminal loop; retained for output, never moved.
    pub frozen: bool,
    pub flags: VertexFlags,
    /// Pending reason for a trajectory change, consumed by the recorder.
    pub cause: Option<NodeKind>,
    /// Vertices resolved together in one contact cluster share a tag.
    pub cluster_tag: u64,
    pub merged_into: Option<VertexId>,
}

impl WavefrontVertex {
    pub fn u_prev(&self) -> Vec2 {
        self.edge.u
    }
    pub fn n_prev(&self) -> Vec2 {
        self.edge.n
    }
    pub fn alpha_prev(&self) -> f64 {
        self.edge.alpha
    }
    pub fn planar_vel(&self) -> Vec2 {
        self.vel.xy()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoopInfo {
    pub entry: VertexId,
    pub len: usize,
    pub frozen: bool,
    pub hole: bool,
    pub area: f64,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WavefrontError {
    #[error("ring {ring} requires at least 3 points")]
    TooFewPoints { ring: usize },
    #[error("ring {ring} has a non-finite coordinate at point {index}")]
    NonFinite { ring: usize, index: usize },
    #[error("ring {ring} repeats point {index}")]
    RepeatedPoint { ring: usize, index: usize },
    #[error("ring {ring} has zero area")]
    Degenerate { ring: usize },
    #[error("rings {a} and {b} intersect")]
    SelfIntersecting { a: usize, b: usize },
    #[error("expected {expected} edge attributes, got {got}")]
    CountMismatch { expected: usize, got: usize },
    #[error("edge {edge}: weight {weight} is not a finite speed")]
    WeightOutOfRange { edge: usize, weight: f64 },
    #[error("surgery precondition failed: {0}")]
    Precondition(String),
    #[error("broken links at {0}")]
    BrokenLinks(VertexId),
}

/// Per-edge input for [`build_wavefront_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeInit {
    pub weight: f64,
    pub start_time: f64,
}

impl EdgeInit {
    pub fn from_alpha(alpha: f64) -> Self {
        EdgeInit { weight: alpha_to_weight(alpha), start_time: 0.0 }
    }

    pub fn from_weight(weight: f64) -> Self {
        EdgeInit { weight, start_time: 0.0 }
    }
}

/// Result of [`Wavefront::remove_colinear_vertices`] for one vertex.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ColinearRemoval {
    pub removed: VertexId,
    pub before: VertexId,
    pub after: VertexId,
    pub at: Vec2,
    pub before_at: Vec2,
    pub from_face: FaceId,
    pub to_face: FaceId,
    pub from_edge: u32,
    pub to_edge: u32,
}

/// A face boundary contribution produced by an edit: `face` gets the
/// directed segment `a → b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FacePiece {
    pub face: FaceId,
    pub input_edge: u32,
    pub a: Vec2,
    pub b: Vec2,
}

#[derive(Debug, Clone)]
pub struct Wavefront {
    pub verts: Vec<WavefrontVertex>,
    pub loops: Vec<LoopInfo>,
    pub t: f64,
    pub z: f64,
    pub tol: Tolerances,
    next_face: FaceId,
    next_tag: u64,
}

fn straight_with_equal_weights(a: &EdgeAttr, wa: f64, b: &EdgeAttr, wb: f64) -> bool {
    a.u.dot(b.u) > 0.0 && (wa - wb).abs() <= 1e-12 * wa.abs().max(wb.abs()).max(1.0)
}

pub fn build_wavefront(
    rings: &[Vec<Vec2>],
    angles: &[f64],
    tol: Tolerances,
) -> Result<Wavefront, WavefrontError> {
    let init: Vec<EdgeInit> = angles.iter().map(|&a| EdgeInit::from_alpha(a)).collect();
    build_wavefront_with(rings, &init, tol)
}

/// Builds the wavefront with outer rings counter-clockwise and holes
/// clockwise. Edge `k` of a ring runs from point `k` to point `k+1`;
/// attributes are listed ring by ring.
pub fn build_wavefront_with(
    rings: &[Vec<Vec2>],
    edges: &[EdgeInit],
    tol: Tolerances,
) -> Result<Wavefront, WavefrontError> {
    let total: usize = rings.iter().map(Vec::len).sum();
    if edges.len() != total {
        return Err(WavefrontError::CountMismatch {
            expected: total,
            got: edges.len(),
        });
    }
    for (r, ring) in rings.iter().enumerate() {
        if ring.len() < 3 {
            return Err(WavefrontError::TooFewPoints { ring: r });
        }
        for (i, p) in ring.iter().enumerate() {
            if !p.is_finite() {
                return Err(WavefrontError::NonFinite { ring: r, index: i });
            }
            if p.dist(ring[(i + 1) % ring.len()]) <= tol.eps_geom {
                return Err(WavefrontError::RepeatedPoint {
                    ring: r,
                    index: (i + 1) % ring.len(),
                });
            }
        }
    }
    for (k, e) in edges.iter().enumerate() {
        if !(e.weight.abs() <= MAX_WEIGHT) {
            return Err(WavefrontError::WeightOutOfRange { edge: k, weight: e.weight });
        }
    }
    check_simple(rings, tol.eps_geom)?;
    for (r, ring) in rings.iter().enumerate() {
        if signed_area(ring).abs() <= tol.eps_geom * tol.eps_geom {
            return Err(WavefrontError::Degenerate { ring: r });
        }
    }

    let mut w = Wavefront {
        verts: Vec::with_capacity(total),
        loops: Vec::new(),
        t: 0.0,
        z: 0.0,
        tol,
        next_face: total as FaceId,
        next_tag: 1,
    };
    let mut offset = 0usize;
    for (r, ring) in rings.iter().enumerate() {
        let m = ring.len();
        let depth = rings
            .iter()
            .enumerate()
            .filter(|&(o, other)| o != r && point_in_rings(ring[0], std::slice::from_ref(other)))
            .count();
        let hole = depth % 2 == 1;
        let ccw = signed_area(ring) > 0.0;
        // (point, attributes of the edge leaving it, global input edge index)
        let mut seq: Vec<(Vec2, EdgeInit, u32)> = (0..m)
            .map(|k| (ring[k], edges[offset + k], (offset + k) as u32))
            .collect();
        if ccw == hole {
            // reversed edge i runs between original points m-1-i and m-2-i
            let orig = seq.clone();
            for (i, slot) in seq.iter_mut().enumerate() {
                let j = (2 * m - 2 - i) % m;
                *slot = (orig[m - 1 - i].0, orig[j].1, orig[j].2);
            }
        }
        let base = w.verts.len();
        for i in 0..m {
            let prev_i = (i + m - 1) % m;
            let (p, _, _) = seq[i];
            let (q, init, input_edge) = seq[prev_i];
            let u = (p - q).normalized().expect("repeated points rejected above");
            let mut edge = EdgeAttr::along(u, init.weight, input_edge, input_edge);
            edge.start_time = init.start_time.max(0.0);
            let id = VertexId((base + i) as u32);
            w.verts.push(WavefrontVertex {
                id,
                pos: p,
                vel: Vec3::ZERO,
                edge,
                prev: VertexId((base + prev_i) as u32),
                next: VertexId((base + (i + 1) % m) as u32),
                below: None,
                above: None,
                alive: true,
                frozen: false,
                flags: VertexFlags::default(),
                cause: None,
                cluster_tag: 0,
                merged_into: None,
            });
        }
        offset += m;
    }
    w.rebuild_loops()?;
    Ok(w)
}

fn check_simple(rings: &[Vec<Vec2>], eps: f64) -> Result<(), WavefrontError> {
    let segs: Vec<(usize, usize, Vec2, Vec2)> = rings
        .iter()
        .enumerate()
        .flat_map(|(r, ring)| {
            (0..ring.len()).map(move |k| (r, k, ring[k], ring[(k + 1) % ring.len()]))
        })
        .collect();
    for i in 0..segs.len() {
        for j in (i + 1)..segs.len() {
            let (ra, ka, a0, a1) = segs[i];
            let (rb, kb, b0, b1) = segs[j];
            if ra == rb {
                let m = rings[ra].len();
                if (ka + 1) % m == kb || (kb + 1) % m == ka {
                    // adjacent: only overlapping back-tracks are a problem
                    let shared = if (ka + 1) % m == kb { a1 } else { a0 };
                    let (x, y) = if (ka + 1) % m == kb { (a0, b1) } else { (a1, b0) };
                    let (dx, dy) = (x - shared, y - shared);
                    if dx.cross(dy).abs() <= eps * dx.norm() * dy.norm() && dx.dot(dy) > 0.0 {
                        return Err(WavefrontError::SelfIntersecting { a: ra, b: rb });
                    }
                    continue;
                }
            }
            if segments_intersect(a0, a1, b0, b1, eps) {
                return Err(WavefrontError::SelfIntersecting { a: ra, b: rb });
            }
        }
    }
    Ok(())
}

impl Wavefront {
    #[inline]
    pub fn v(&self, id: VertexId) -> &WavefrontVertex {
        &self.verts[id.idx()]
    }

    #[inline]
    pub fn v_mut(&mut self, id: VertexId) -> &mut WavefrontVertex {
        &mut self.verts[id.idx()]
    }

    pub fn alive_ids(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.verts.iter().filter(|v| v.alive).map(|v| v.id)
    }

    /// Alive vertices of non-terminal loops.
    pub fn moving_ids(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.verts.iter().filter(|v| v.alive && !v.frozen).map(|v| v.id)
    }

    pub fn alive_count(&self) -> usize {
        self.verts.iter().filter(|v| v.alive).count()
    }

    /// Follows `merged_into` links to the vertex that replaced `id`.
    pub fn resolve(&self, mut id: VertexId) -> VertexId {
        while let Some(m) = self.v(id).merged_into {
            id = m;
        }
        id
    }

    pub fn loop_vertices(&self, entry: VertexId) -> Vec<VertexId> {
        let mut out = vec![entry];
        let mut cur = self.v(entry).next;
        while cur != entry && out.len() <= self.verts.len() {
            out.push(cur);
            cur = self.v(cur).next;
        }
        out
    }

    pub fn loop_positions(&self, entry: VertexId) -> Vec<Vec2> {
        self.loop_vertices(entry).into_iter().map(|id| self.v(id).pos).collect()
    }

    pub fn loop_of(&self, id: VertexId) -> Option<usize> {
        self.loops
            .iter()
            .position(|l| self.loop_vertices(l.entry).contains(&id))
    }

    pub fn fresh_face(&mut self) -> FaceId {
        let f = self.next_face;
        self.next_face += 1;
        f
    }

    pub fn face_count(&self) -> FaceId {
        self.next_face
    }

    fn fresh_tag(&mut self) -> u64 {
        let t = self.next_tag;
        self.next_tag += 1;
        t
    }

    fn link(&mut self, a: VertexId, b: VertexId) {
        self.v_mut(a).next = b;
        self.v_mut(b).prev = a;
    }

    fn push_vertex(&mut self, pos: Vec2, edge: EdgeAttr, prev: VertexId, next: VertexId) -> VertexId {
        let id = VertexId(self.verts.len() as u32);
        self.verts.push(WavefrontVertex {
            id,
            pos,
            vel: Vec3::ZERO,
            edge,
            prev,
            next,
            below: None,
            above: None,
            alive: true,
            frozen: false,
            flags: VertexFlags::default(),
            cause: None,
            cluster_tag: 0,
            merged_into: None,
        });
        id
    }

    /// Recomputes the loop table by walking alive vertices in id order.
    /// Loops with at most two vertices become terminal and are frozen.
    pub fn rebuild_loops(&mut self) -> Result<(), WavefrontError> {
        let mut seen = vec![false; self.verts.len()];
        let mut loops = Vec::new();
        for i in 0..self.verts.len() {
            if !self.verts[i].alive || seen[i] {
                continue;
            }
            let entry = VertexId(i as u32);
            let mut members = Vec::new();
            let mut cur = entry;
            loop {
                let v = self.v(cur);
                if !v.alive || seen[cur.idx()] || self.v(v.next).prev != cur {
                    return Err(WavefrontError::BrokenLinks(cur));
                }
                seen[cur.idx()] = true;
                members.push(cur);
                cur = v.next;
                if cur == entry {
                    break;
                }
            }
            let ring: Vec<Vec2> = members.iter().map(|&id| self.v(id).pos).collect();
            let area = signed_area(&ring);
            let frozen = members.len() <= 2 || members.iter().any(|&id| self.v(id).frozen);
            if frozen {
                for &id in &members {
                    let v = self.v_mut(id);
                    v.frozen = true;
                    v.vel = Vec3::ZERO;
                }
            }
            loops.push(LoopInfo {
                entry,
                len: members.len(),
                frozen,
                hole: area < 0.0,
                area,
            });
        }
        self.loops = loops;
        Ok(())
    }

    pub fn is_terminated(&self) -> bool {
        self.loops.iter().all(|l| l.frozen)
    }

    /// Inward speed in effect at the current time; edges wait at rest until
    /// their start time.
    pub fn effective_weight(&self, e: &EdgeAttr) -> f64 {
        if e.start_time > self.t + self.tol.eps_geom {
            0.0
        } else {
            e.weight
        }
    }

    /// Inclination in effect at the current time.
    pub fn effective_alpha(&self, e: &EdgeAttr) -> f64 {
        if e.start_time > self.t + self.tol.eps_geom {
            FRAC_PI_2
        } else {
            e.alpha
        }
    }

    pub fn roof_plane(&self, e: &EdgeAttr) -> RoofPlane {
        RoofPlane::new(self.effective_alpha(e), e.u, e.n)
    }

    /// Roof planes of the edges before and after `id`.
    pub fn planes_at(&self, id: VertexId) -> (RoofPlane, RoofPlane) {
        let v = self.v(id);
        (self.roof_plane(&v.edge), self.roof_plane(&self.v(v.next).edge))
    }

    /// Solves every moving vertex's velocity with unit vertical rate. Singular
    /// vertices are flagged colinear and left at rest.
    pub fn refresh_velocities(&mut self) {
        for i in 0..self.verts.len() {
            let v = &self.verts[i];
            if !v.alive {
                continue;
            }
            if v.frozen {
                self.verts[i].vel = Vec3::ZERO;
                continue;
            }
            let (a, b) = (&v.edge, &self.v(v.next).edge);
            let (wa, wb) = (self.effective_weight(a), self.effective_weight(b));
            let (vel, colinear) = match velocity_from_weights(a.n, wa, b.n, wb) {
                Solve::Velocity(vel) => (vel.extend(1.0), false),
                Solve::Singular if straight_with_equal_weights(a, wa, b, wb) => ((-a.n * wa).extend(1.0), false),
                Solve::Singular => (Vec3::new(0.0, 0.0, 1.0), true),
            };
            let v = &mut self.verts[i];
            v.vel = vel;
            v.flags.colinear = colinear;
        }
    }

    /// True when the vertex's two roof planes project to parallel lines
    /// and its edges continue in the same direction.
    /// Equal speeds on both sides leave the vertex well defined (it moves
    /// straight inward), so only unequal speeds count.
    pub fn is_colinear_vertex(&self, id: VertexId) -> bool {
        let v = self.v(id);
        let nx = self.v(v.next);
        let (a, b) = (v.edge.n, nx.edge.n);
        let (wa, wb) = (self.effective_weight(&v.edge), self.effective_weight(&nx.edge));
        a.cross(b).abs() <= SINGULAR_EPS * a.norm() * b.norm()
            && v.edge.u.dot(nx.edge.u) > 0.0
            && !straight_with_equal_weights(&v.edge, wa, &nx.edge, wb)
    }

    fn unlink(&mut self, id: VertexId, into: VertexId) {
        let (p, n) = (self.v(id).prev, self.v(id).next);
        if p != id {
            self.link(p, n);
        }
        let v = self.v_mut(id);
        v.alive = false;
        v.merged_into = Some(into);
    }

    /// Removes `v` after the edge before it has collapsed; `v.prev` survives
    /// at the shared position and keeps its own edge.
    pub fn collapse_edge(&mut self, v: VertexId) -> Result<VertexId, WavefrontError> {
        let vx = self.v(v);
        if !vx.alive {
            return Err(WavefrontError::Precondition(format!("{v} is not alive")));
        }
        let b = vx.prev;
        if b == v {
            return Err(WavefrontError::Precondition(format!(
                "{v} is the last vertex of its loop"
            )));
        }
        let gap = vx.pos.dist(self.v(b).pos);
        if gap > self.tol.eps_geom {
            return Err(WavefrontError::Precondition(format!(
                "edge before {v} has length {gap:e}"
            )));
        }
        self.unlink(v, b);
        self.v_mut(v).cause = Some(NodeKind::Collapse);
        let s = self.v_mut(b);
        s.flags.collapse_origin = true;
        s.cause = Some(NodeKind::Collapse);
        Ok(b)
    }

    /// Collapses every zero-length edge in moving loops until none is left.
    /// Returns the number of collapses.
    pub fn collapse_degenerate_edges(&mut self) -> usize {
        let eps = self.tol.eps_geom;
        let mut count = 0;
        loop {
            let mut hit = None;
            for v in self.verts.iter() {
                if v.alive && !v.frozen && v.prev != v.id && v.pos.dist(self.v(v.prev).pos) <= eps {
                    hit = Some(v.id);
                    break;
                }
            }
            match hit {
                Some(id) => {
                    self.collapse_edge(id).expect("checked above");
                    count += 1;
                }
                None => return count,
            }
        }
    }

    /// Exchanges the successors of two coincident vertices. Within one loop
    /// this splits it in two; across loops it joins them.
    pub fn merge_vertex_on_vertex(&mut self, p: VertexId, q: VertexId) -> Result<(), WavefrontError> {
        if p == q {
            return Err(WavefrontError::Precondition("identical vertices".into()));
        }
        let (vp, vq) = (self.v(p), self.v(q));
        if !vp.alive || !vq.alive {
            return Err(WavefrontError::Precondition("dead vertex".into()));
        }
        let gap = vp.pos.dist(vq.pos);
        if gap > 4.0 * self.tol.eps_geom {
            return Err(WavefrontError::Precondition(format!(
                "{p} and {q} are {gap:e} apart"
            )));
        }
        let (pn, qn) = (vp.next, vq.next);
        self.link(p, qn);
        self.link(q, pn);
        Ok(())
    }

    /// Splits the edge before `e` at `p`'s position and resolves the contact.
    /// Returns `p` and the vertex created on the edge.
    pub fn split_vertex_in_edge(
        &mut self,
        p: VertexId,
        e: VertexId,
    ) -> Result<(VertexId, VertexId), WavefrontError> {
        let q = self.v(e).prev;
        if p == e || p == q {
            return Err(WavefrontError::Precondition(format!(
                "{p} is incident to the edge before {e}"
            )));
        }
        let eps = self.tol.eps_geom;
        let (a, b) = (self.v(q).pos, self.v(e).pos);
        let x = self.v(p).pos;
        let u = self.v(e).edge.u;
        let s = (x - a).dot(u);
        let len = (b - a).dot(u);
        if s <= eps || s >= len - eps {
            return Err(WavefrontError::Precondition(
                "contact at an edge endpoint is a vertex-on-vertex event".into(),
            ));
        }
        let foot = a + u * s;
        if foot.dist(x) > 4.0 * eps {
            return Err(WavefrontError::Precondition(format!(
                "{p} is {:e} off the edge",
                foot.dist(x)
            )));
        }
        let n = self.insert_on_edge(e, foot);
        self.resolve_cluster(&[p, n], Some(foot))?;
        Ok((p, n))
    }

    /// Inserts a vertex on the edge before `e`; both pieces keep the edge's
    /// attributes.
    pub fn insert_on_edge(&mut self, e: VertexId, at: Vec2) -> VertexId {
        let q = self.v(e).prev;
        let edge = self.v(e).edge;
        let n = self.push_vertex(at, edge, q, e);
        self.link(q, n);
        self.link(n, e);
        n
    }

    /// Resolves a set of coincident vertices. Each outgoing edge is joined to
    /// the first incoming edge found turning counter-clockwise from it; the
    /// pairing is realized as a sequence of pairwise successor exchanges.
    pub fn resolve_cluster(&mut self, members: &[VertexId], at: Option<Vec2>) -> Result<(), WavefrontError> {
        let mut members: Vec<VertexId> = members.to_vec();
        members.sort();
        members.dedup();
        if members.len() < 2 {
            return Ok(());
        }
        let x = at.unwrap_or_else(|| {
            let sum = members.iter().fold(Vec2::ZERO, |acc, &m| acc + self.v(m).pos);
            sum / members.len() as f64
        });
        for &m in &members {
            self.v_mut(m).pos = x;
        }

        #[derive(Clone, Copy)]
        struct Ray {
            angle: f64,
            outgoing: bool,
            member: usize,
        }
        let mut rays = Vec::with_capacity(2 * members.len());
        for (k, &m) in members.iter().enumerate() {
            let v = self.v(m);
            let din = self.v(v.prev).pos - x;
            let dout = self.v(v.next).pos - x;
            // zero-length rays fall back to the edge directions
            let din = if din.norm() > 0.0 { din } else { -v.edge.u };
            let dout = if dout.norm() > 0.0 { dout } else { self.v(v.next).edge.u };
            rays.push(Ray { angle: din.angle(), outgoing: false, member: k });
            rays.push(Ray { angle: dout.angle(), outgoing: true, member: k });
        }
        rays.sort_by(|a, b| {
            a.angle
                .total_cmp(&b.angle)
                .then(b.outgoing.cmp(&a.outgoing))
                .then(a.member.cmp(&b.member))
        });
        let n = rays.len();
        let mut taken = vec![false; n];
        // target[i] = member whose old successor member i adopts
        let mut target = vec![usize::MAX; members.len()];
        for i in 0..n {
            if !rays[i].outgoing {
                continue;
            }
            for step in 1..=n {
                let j = (i + step) % n;
                if !rays[j].outgoing && !taken[j] {
                    taken[j] = true;
                    target[rays[j].member] = rays[i].member;
                    break;
                }
            }
        }
        let old_next: Vec<VertexId> = members.iter().map(|&m| self.v(m).next).collect();
        for i in 0..members.len() {
            let want = old_next[target[i]];
            if self.v(members[i]).next == want {
                continue;
            }
            let j = (0..members.len())
                .find(|&j| self.v(members[j]).next == want)
                .expect("successor permutation is a bijection");
            self.merge_vertex_on_vertex(members[i], members[j])?;
        }
        let tag = self.fresh_tag();
        for &m in &members {
            let v = self.v_mut(m);
            v.cluster_tag = tag;
            v.flags.split_origin = true;
            v.cause = Some(NodeKind::Split);
        }
        Ok(())
    }

    /// Removes colinear vertices to a fixed point. The merged edge keeps the
    /// attributes of the edge after the removed vertex.
    pub fn remove_colinear_vertices(&mut self) -> Vec<ColinearRemoval> {
        let mut removed = Vec::new();
        loop {
            let hit = self.verts.iter().find(|v| {
                v.alive && !v.frozen && v.prev != v.next && self.is_colinear_vertex(v.id)
            });
            let Some(c) = hit.map(|v| v.id) else {
                break;
            };
            let (b, a) = (self.v(c).prev, self.v(c).next);
            let rec = ColinearRemoval {
                removed: c,
                before: b,
                after: a,
                at: self.v(c).pos,
                before_at: self.v(b).pos,
                from_face: self.v(c).edge.face,
                to_face: self.v(a).edge.face,
                from_edge: self.v(c).edge.input_edge,
                to_edge: self.v(a).edge.input_edge,
            };
            self.unlink(c, b);
            {
                let cv = self.v_mut(c);
                cv.flags.colinear = true;
                cv.cause = Some(NodeKind::Colinear);
            }
            self.v_mut(b).cause.get_or_insert(NodeKind::Colinear);
            removed.push(rec);
            // a loop dropping to two vertices becomes terminal
            if self.v(b).next == self.v(b).prev {
                self.v_mut(b).frozen = true;
                self.v_mut(a).frozen = true;
            }
        }
        removed
    }

    /// Gives the edge before `e` a new inclination under a fresh face id.
    /// Returns the boundary pieces closing the old face and opening the new.
    pub fn reface_edge(&mut self, e: VertexId, weight: f64) -> [FacePiece; 2] {
        let q = self.v(e).prev;
        let (a, b) = (self.v(q).pos, self.v(e).pos);
        let old = self.v(e).edge;
        let face = self.fresh_face();
        let ev = self.v_mut(e);
        ev.edge.alpha = weight_to_alpha(weight);
        ev.edge.weight = weight;
        ev.edge.face = face;
        ev.edge.start_time = 0.0;
        [
            FacePiece { face: old.face, input_edge: old.input_edge, a: b, b: a },
            FacePiece { face, input_edge: old.input_edge, a, b },
        ]
    }

    /// Inserts a vertex on the edge before `e`; the piece before the new
    /// vertex gets a fresh face id.
    pub fn insert_vertex(&mut self, e: VertexId, at: Vec2) -> Result<(VertexId, [FacePiece; 2]), WavefrontError> {
        let q = self.v(e).prev;
        let (a, b) = (self.v(q).pos, self.v(e).pos);
        let u = self.v(e).edge.u;
        let s = (at - a).dot(u);
        let len = (b - a).dot(u);
        let eps = self.tol.eps_geom;
        if !(s > eps && s < len - eps) {
            return Err(WavefrontError::Precondition("point is not inside the edge".into()));
        }
        let foot = a + u * s;
        let n = self.insert_on_edge(e, foot);
        let old = self.v(e).edge;
        let face = self.fresh_face();
        self.v_mut(n).edge.face = face;
        self.v_mut(n).cause = Some(NodeKind::Bend);
        Ok((
            n,
            [
                FacePiece { face: old.face, input_edge: old.input_edge, a: foot, b: a },
                FacePiece { face, input_edge: old.input_edge, a, b: foot },
            ],
        ))
    }

    /// Removes a vertex; the two edges are replaced by the chord between its
    /// neighbours carrying the inclination of the edge after it. The cut-off
    /// triangle becomes a flat patch with its own face id.
    pub fn remove_vertex(&mut self, c: VertexId) -> Result<Vec<FacePiece>, WavefrontError> {
        let cv = self.v(c);
        if !cv.alive || cv.frozen {
            return Err(WavefrontError::Precondition(format!("{c} is not a moving vertex")));
        }
        let (b, a) = (cv.prev, cv.next);
        let len = self.loop_vertices(c).len();
        if len < 4 {
            return Err(WavefrontError::Precondition("loop would drop below 3 vertices".into()));
        }
        let (pb, pc, pa) = (self.v(b).pos, cv.pos, self.v(a).pos);
        let Some(u) = (pa - pb).normalized() else {
            return Err(WavefrontError::Precondition("neighbours coincide".into()));
        };
        let (e_before, e_after) = (cv.edge, self.v(a).edge);
        let patch = self.fresh_face();
        let chord = self.fresh_face();
        let mut edge = EdgeAttr::along(u, e_after.weight, chord, e_after.input_edge);
        edge.start_time = e_after.start_time;
        self.unlink(c, b);
        self.v_mut(c).cause = Some(NodeKind::Bend);
        self.v_mut(a).edge = edge;
        let ie = e_before.input_edge;
        Ok(vec![
            FacePiece { face: e_before.face, input_edge: e_before.input_edge, a: pc, b: pb },
            FacePiece { face: e_after.face, input_edge: e_after.input_edge, a: pa, b: pc },
            FacePiece { face: patch, input_edge: ie, a: pb, b: pc },
            FacePiece { face: patch, input_edge: ie, a: pc, b: pa },
            FacePiece { face: patch, input_edge: ie, a: pa, b: pb },
            FacePiece { face: chord, input_edge: e_after.input_edge, a: pb, b: pa },
        ])
    }

    /// Link integrity: every alive vertex's neighbours point back at it.
    pub fn check_links(&self) -> Result<(), WavefrontError> {
        for v in self.verts.iter().filter(|v| v.alive) {
            let (p, n) = (self.v(v.prev), self.v(v.next));
            if !p.alive || !n.alive || p.next != v.id || n.prev != v.id {
                return Err(WavefrontError::BrokenLinks(v.id));
            }
        }
        Ok(())
    }
}

//! Skeleton graph recorded while the wavefront propagates: nodes where
//! vertex trajectories start and end, arcs traced by vertices, and the face
//! boundary pieces needed to assemble one face per wavefront edge.

use std::collections::HashMap;

use thiserror::Error;

use crate::geom::{signed_area, Vec2, Vec3};
use crate::wavefront::{FaceId, Wavefront};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub u32);

impl NodeId {
    #[inline]
    pub fn idx(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Input,
    /// A vertex changed direction without a topological event.
    Bend,
    Colinear,
    Collapse,
    Split,
    /// Propagation stopped at the requested height.
    Terminal,
}

impl NodeKind {
    fn priority(self) -> u8 {
        match self {
            NodeKind::Input => 5,
            NodeKind::Split => 4,
            NodeKind::Collapse => 3,
            NodeKind::Colinear => 2,
            NodeKind::Bend => 1,
            NodeKind::Terminal => 0,
        }
    }

    pub fn is_event(self) -> bool {
        matches!(self, NodeKind::Collapse | NodeKind::Split)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SkeletonNode {
    pub pos: Vec2,
    pub t: f64,
    pub z: f64,
    pub kind: NodeKind,
}

impl SkeletonNode {
    pub fn point(&self) -> Vec3 {
        self.pos.extend(self.z)
    }
}

/// Straight segment traced by one vertex, or a ridge left by a terminal
/// two-vertex loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SkeletonArc {
    pub a: NodeId,
    pub b: NodeId,
    /// Face on the left of `a → b`, seen from above.
    pub left: FaceId,
    pub right: FaceId,
    /// Vertex that traced the arc; `None` for ridges.
    pub vertex: Option<u32>,
    pub ridge: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Piece {
    face: FaceId,
    a: NodeId,
    b: NodeId,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Face {
    pub face: FaceId,
    pub input_edge: u32,
    /// Counter-clockwise boundary for faces that are not vertical.
    pub nodes: Vec<NodeId>,
    pub area: f64,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SkeletonError {
    #[error("boundary of face {face} does not close at node {node}")]
    OpenFace { face: FaceId, node: u32 },
}

/// State of one vertex before a batch of surgery.
#[derive(Debug, Clone, Copy)]
struct PreVertex {
    prev_face: FaceId,
    next_face: FaceId,
    vel: Vec3,
    frozen: bool,
}

#[derive(Debug, Clone, Default)]
pub struct PreState(Vec<Option<PreVertex>>);

#[derive(Debug, Clone, Default)]
pub struct SkeletonGraph {
    pub nodes: Vec<SkeletonNode>,
    pub arcs: Vec<SkeletonArc>,
    pieces: Vec<Piece>,
    face_edge: HashMap<FaceId, u32>,
    merge_radius: f64,
}

impl SkeletonGraph {
    /// Creates input nodes and edges and points each vertex's trace at its
    /// input node.
    pub fn record_input(w: &mut Wavefront) -> Self {
        let mut g = SkeletonGraph {
            merge_radius: 16.0 * w.tol.eps_geom,
            ..Default::default()
        };
        for i in 0..w.verts.len() {
            let v = &w.verts[i];
            if !v.alive {
                continue;
            }
            let id = g.push_node(SkeletonNode { pos: v.pos, t: w.t, z: w.z, kind: NodeKind::Input });
            w.verts[i].below = Some(id);
        }
        for v in w.verts.iter().filter(|v| v.alive) {
            let (a, b) = (w.v(v.prev).below.unwrap(), v.below.unwrap());
            g.face_edge.insert(v.edge.face, v.edge.input_edge);
            g.pieces.push(Piece { face: v.edge.face, a, b });
        }
        g
    }

    fn push_node(&mut self, node: SkeletonNode) -> NodeId {
        self.nodes.push(node);
        NodeId(self.nodes.len() as u32 - 1)
    }

    pub fn node_at(&mut self, pos: Vec2, t: f64, z: f64, kind: NodeKind) -> NodeId {
        // nodes are appended in time order; only same-time nodes can merge
        let hit = (0..self.nodes.len())
            .rev()
            .take_while(|&i| self.nodes[i].t == t)
            .find(|&i| self.nodes[i].pos.dist(pos) <= self.merge_radius);
        match hit {
            Some(i) => {
                let n = &mut self.nodes[i];
                if kind.priority() > n.kind.priority() {
                    n.kind = kind;
                }
                NodeId(i as u32)
            }
            None => self.push_node(SkeletonNode { pos, t, z, kind }),
        }
    }

    pub fn capture(w: &Wavefront) -> PreState {
        PreState(
            w.verts
                .iter()
                .map(|v| {
                    v.alive.then(|| PreVertex {
                        prev_face: v.edge.face,
                        next_face: w.v(v.next).edge.face,
                        vel: v.vel,
                        frozen: v.frozen,
                    })
                })
                .collect(),
        )
    }

    fn close(&mut self, v: u32, from: Option<NodeId>, to: NodeId, left: FaceId, right: FaceId) {
        if let Some(a) = from {
            if a != to {
                self.arcs.push(SkeletonArc { a, b: to, left, right, vertex: Some(v), ridge: false });
            }
        }
    }

    /// Closes the arcs of vertices whose trajectory changed since `pre` and
    /// opens new ones. Clears pending causes.
    pub fn record_changes(&mut self, pre: &PreState, w: &mut Wavefront) {
        let (t, z) = (w.t, w.z);
        for i in 0..w.verts.len() {
            let before = pre.0.get(i).copied().flatten();
            let v = w.verts[i].clone();
            match (before, v.alive) {
                (None, false) => {}
                (Some(b), false) => {
                    if b.frozen {
                        continue;
                    }
                    let node = self.node_at(v.pos, t, z, v.cause.unwrap_or(NodeKind::Collapse));
                    self.close(v.id.0, v.below, node, b.prev_face, b.next_face);
                    w.verts[i].above = Some(node);
                }
                (Some(b), true) => {
                    if b.frozen {
                        continue;
                    }
                    let next_face = w.v(v.next).edge.face;
                    let changed = v.cause.is_some()
                        || v.frozen
                        || b.prev_face != v.edge.face
                        || b.next_face != next_face
                        || b.vel != v.vel;
                    if changed {
                        let node = self.node_at(v.pos, t, z, v.cause.unwrap_or(NodeKind::Bend));
                        self.close(v.id.0, v.below, node, b.prev_face, b.next_face);
                        w.verts[i].below = Some(node);
                    }
                }
                (None, true) => {
                    let node = self.node_at(v.pos, t, z, v.cause.unwrap_or(NodeKind::Split));
                    w.verts[i].below = Some(node);
                }
            }
        }
        for v in w.verts.iter_mut() {
            v.cause = None;
        }
    }

    /// Adds a boundary piece `a → b` to `face`.
    pub fn add_piece(&mut self, face: FaceId, input_edge: u32, a: Vec2, b: Vec2, t: f64, z: f64) {
        self.face_edge.entry(face).or_insert(input_edge);
        let na = self.node_at(a, t, z, NodeKind::Bend);
        let nb = self.node_at(b, t, z, NodeKind::Bend);
        if na != nb {
            self.pieces.push(Piece { face, a: na, b: nb });
        }
    }

    /// Stops all moving vertices at the current height, closes every face
    /// along the final wavefront and adds ridge arcs for terminal segments.
    pub fn finish(&mut self, w: &mut Wavefront) {
        let (t, z) = (w.t, w.z);
        for i in 0..w.verts.len() {
            let v = w.verts[i].clone();
            if !v.alive || v.frozen {
                continue;
            }
            let node = self.node_at(v.pos, t, z, NodeKind::Terminal);
            self.close(v.id.0, v.below, node, v.edge.face, w.v(v.next).edge.face);
            w.verts[i].below = Some(node);
        }
        for l in w.loops.clone() {
            let ids = w.loop_vertices(l.entry);
            if ids.len() == 2 {
                let (a, b) = (w.v(ids[0]), w.v(ids[1]));
                if let (Some(na), Some(nb)) = (a.below, b.below) {
                    if na != nb {
                        self.arcs.push(SkeletonArc {
                            a: na,
                            b: nb,
                            left: b.edge.face,
                            right: a.edge.face,
                            vertex: None,
                            ridge: true,
                        });
                    }
                }
            }
            for &id in &ids {
                let r = w.v(id);
                if r.prev == id {
                    continue;
                }
                let (na, nb) = (r.below.unwrap(), w.v(r.prev).below.unwrap());
                self.face_edge.entry(r.edge.face).or_insert(r.edge.input_edge);
                if na != nb {
                    self.pieces.push(Piece { face: r.edge.face, a: na, b: nb });
                }
            }
        }
    }

    /// Node ids of trajectories still open, paired with the vertex position
    /// they currently reach.
    pub fn open_arcs(&self, w: &Wavefront) -> Vec<(NodeId, Vec2)> {
        w.verts
            .iter()
            .filter(|v| v.alive && !v.frozen)
            .filter_map(|v| v.below.map(|b| (b, v.pos)))
            .collect()
    }

    pub fn event_nodes(&self) -> impl Iterator<Item = (NodeId, &SkeletonNode)> {
        self.nodes
            .iter()
            .enumerate()
            .filter(|(_, n)| n.kind.is_event())
            .map(|(i, n)| (NodeId(i as u32), n))
    }

    /// Nodes with at least one arc, not counting input nodes.
    pub fn interior_nodes(&self) -> Vec<NodeId> {
        let mut used = vec![false; self.nodes.len()];
        for a in &self.arcs {
            used[a.a.idx()] = true;
            used[a.b.idx()] = true;
        }
        (0..self.nodes.len())
            .filter(|&i| used[i] && self.nodes[i].kind != NodeKind::Input)
            .map(|i| NodeId(i as u32))
            .collect()
    }

    pub fn node(&self, id: NodeId) -> &SkeletonNode {
        &self.nodes[id.idx()]
    }

    /// Chains boundary pieces into one or more closed loops per face.
    pub fn build_faces(&self) -> Result<Vec<Face>, SkeletonError> {
        let mut per_face: HashMap<FaceId, Vec<(NodeId, NodeId)>> = HashMap::new();
        for p in &self.pieces {
            per_face.entry(p.face).or_default().push((p.a, p.b));
        }
        for a in self.arcs.iter().filter(|a| !a.ridge) {
            per_face.entry(a.left).or_default().push((a.a, a.b));
            per_face.entry(a.right).or_default().push((a.b, a.a));
        }
        let mut ids: Vec<FaceId> = per_face.keys().copied().collect();
        ids.sort();
        let mut faces = Vec::new();
        for f in ids {
            let input_edge = self.face_edge.get(&f).copied().unwrap_or(f);
            for nodes in self.chain(f, &per_face[&f])? {
                let ring: Vec<Vec2> = nodes.iter().map(|&n| self.node(n).pos).collect();
                faces.push(Face { face: f, input_edge, area: signed_area(&ring), nodes });
            }
        }
        Ok(faces)
    }

    fn chain(&self, face: FaceId, pieces: &[(NodeId, NodeId)]) -> Result<Vec<Vec<NodeId>>, SkeletonError> {
        // opposite pieces cancel: they are cuts inside the face
        let mut count: HashMap<(NodeId, NodeId), i64> = HashMap::new();
        for &(a, b) in pieces {
            if a != b {
                *count.entry((a, b)).or_default() += 1;
            }
        }
        let mut keys: Vec<(NodeId, NodeId)> = count.keys().copied().collect();
        keys.sort();
        let mut live: Vec<(NodeId, NodeId)> = Vec::new();
        for (a, b) in keys {
            let net = count[&(a, b)] - count.get(&(b, a)).copied().unwrap_or(0);
            for _ in 0..net.max(0) {
                live.push((a, b));
            }
        }
        let mut out: HashMap<NodeId, Vec<usize>> = HashMap::new();
        for (i, &(a, _)) in live.iter().enumerate() {
            out.entry(a).or_default().push(i);
        }
        let mut used = vec![false; live.len()];
        let mut loops = Vec::new();
        for start in 0..live.len() {
            if used[start] {
                continue;
            }
            used[start] = true;
            let origin = live[start].0;
            let mut ring = vec![origin];
            let (mut prev, mut cur) = live[start];
            while cur != origin {
                ring.push(cur);
                let back = self.node(prev).pos - self.node(cur).pos;
                let cand = out
                    .get(&cur)
                    .map(|v| v.iter().copied().filter(|&i| !used[i]).collect::<Vec<_>>())
                    .unwrap_or_default();
                // smallest clockwise turn from the reversed incoming ray
                let pick = cand.into_iter().min_by(|&i, &j| {
                    let cw = |k: usize| {
                        let d = self.node(live[k].1).pos - self.node(cur).pos;
                        let mut a = back.angle() - d.angle();
                        if a <= 0.0 {
                            a += std::f64::consts::TAU;
                        }
                        a
                    };
                    cw(i).total_cmp(&cw(j)).then(i.cmp(&j))
                });
                let Some(i) = pick else {
                    return Err(SkeletonError::OpenFace { face, node: cur.0 });
                };
                used[i] = true;
                prev = cur;
                cur = live[i].1;
            }
            loops.push(ring);
        }
        Ok(loops)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph(points: &[(f64, f64)]) -> SkeletonGraph {
        let mut g = SkeletonGraph { merge_radius: 1e-8, ..Default::default() };
        for &(x, y) in points {
            g.push_node(SkeletonNode { pos: Vec2::new(x, y), t: 0.0, z: 0.0, kind: NodeKind::Input });
        }
        g
    }

    #[test]
    fn node_merge_keeps_strongest_kind() {
        let mut g = graph(&[]);
        let a = g.node_at(Vec2::new(1.0, 1.0), 0.5, 0.5, NodeKind::Bend);
        let b = g.node_at(Vec2::new(1.0, 1.0 + 1e-10), 0.5, 0.5, NodeKind::Split);
        let c = g.node_at(Vec2::new(1.0, 1.0), 0.5, 0.5, NodeKind::Collapse);
        assert_eq!(a, b);
        assert_eq!(a, c);
        assert_eq!(g.node(a).kind, NodeKind::Split);
        let d = g.node_at(Vec2::new(2.0, 1.0), 0.5, 0.5, NodeKind::Bend);
        assert_ne!(a, d);
    }

    #[test]
    fn chains_triangle_with_cut() {
        let mut g = graph(&[(0.0, 0.0), (1.0, 0.0), (0.5, 0.5), (0.5, 0.2)]);
        let n = |i| NodeId(i);
        for (a, b) in [(0, 1), (1, 2), (2, 0), (2, 3), (3, 2)] {
            g.pieces.push(Piece { face: 0, a: n(a), b: n(b) });
        }
        let faces = g.build_faces().unwrap();
        assert_eq!(faces.len(), 1);
        assert_eq!(faces[0].nodes, vec![n(0), n(1), n(2)]);
        assert!((faces[0].area - 0.25).abs() < 1e-15);
    }

    #[test]
    fn pinched_face_splits_into_two_loops() {
        // two triangles touching at node 0
        let mut g = graph(&[(0.0, 0.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0), (-1.0, -1.0)]);
        let n = |i| NodeId(i);
        for (a, b) in [(0, 1), (1, 2), (2, 0), (0, 3), (3, 4), (4, 0)] {
            g.pieces.push(Piece { face: 3, a: n(a), b: n(b) });
        }
        let faces = g.build_faces().unwrap();
        assert_eq!(faces.len(), 2);
        for f in &faces {
            assert_eq!(f.nodes.len(), 3);
            assert!(f.area > 0.0);
        }
    }

    #[test]
    fn open_boundary_is_reported() {
        let mut g = graph(&[(0.0, 0.0), (1.0, 0.0), (0.5, 0.5)]);
        g.pieces.push(Piece { face: 0, a: NodeId(0), b: NodeId(1) });
        g.pieces.push(Piece { face: 0, a: NodeId(1), b: NodeId(2) });
        assert!(matches!(g.build_faces(), Err(SkeletonError::OpenFace { face: 0, .. })));
    }
}

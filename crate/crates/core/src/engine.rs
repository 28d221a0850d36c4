//! Step driver: normalizes the input, converts height steps into time
//! increments under the height schedule, runs the kinetic steps, records the
//! skeleton and applies interactive edits.

use thiserror::Error;

use crate::geom::{Tolerances, Vec2, Vec3};
use crate::kinetics::{self, EventKind, KineticsError, StepConfig};
use crate::mesh::{build_roof_mesh, HeightTrack, Mesh};
use crate::skeleton::{Face, NodeKind, SkeletonArc, SkeletonError, SkeletonGraph, SkeletonNode};
use crate::velocity::alpha_to_weight;
use crate::wavefront::{
    build_wavefront_with, ColinearRemoval, EdgeInit, FacePiece, VertexId, Wavefront, WavefrontError,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error(transparent)]
    Input(#[from] WavefrontError),
    #[error(transparent)]
    Fault(#[from] KineticsError),
    #[error(transparent)]
    Trace(#[from] SkeletonError),
    #[error("invalid schedule: {0}")]
    Schedule(String),
    #[error("invalid edit: {0}")]
    Edit(String),
    #[error("propagation is not running ({0})")]
    NotRunning(&'static str),
    #[error("inputs with non-positive weights need a maximum height")]
    MaxHeightRequired,
}

/// Piecewise constant vertical rate: band `i` starts at height `z_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct HeightSchedule {
    bands: Vec<(f64, f64)>,
}

impl Default for HeightSchedule {
    fn default() -> Self {
        HeightSchedule { bands: vec![(0.0, 1.0)] }
    }
}

impl HeightSchedule {
    /// Breakpoints `(z, vz)`; the first band is extended down to zero.
    pub fn new(entries: &[(f64, f64)]) -> Result<Self, EngineError> {
        if entries.is_empty() {
            return Ok(Self::default());
        }
        let mut bands = Vec::with_capacity(entries.len());
        for (i, &(z, vz)) in entries.iter().enumerate() {
            if !z.is_finite() || !(vz > 0.0 && vz.is_finite()) {
                return Err(EngineError::Schedule(format!("entry {i}: need finite z and vz > 0")));
            }
            if let Some(&(z0, _)) = bands.last() {
                if z <= z0 {
                    return Err(EngineError::Schedule(format!("entry {i}: heights must increase")));
                }
            }
            bands.push((z, vz));
        }
        bands[0].0 = bands[0].0.min(0.0);
        Ok(HeightSchedule { bands })
    }

    pub fn entries(&self) -> &[(f64, f64)] {
        &self.bands
    }

    pub fn vz_at(&self, z: f64) -> f64 {
        self.bands.iter().rev().find(|b| b.0 <= z).unwrap_or(&self.bands[0]).1
    }

    /// First breakpoint strictly above `z`.
    pub fn next_break(&self, z: f64) -> Option<f64> {
        self.bands.iter().map(|b| b.0).find(|&b| b > z)
    }

    fn scaled(&self, k: f64) -> Self {
        HeightSchedule { bands: self.bands.iter().map(|&(z, vz)| (z * k, vz)).collect() }
    }
}

/// Maps world coordinates to a frame where the input bounding box starts at
/// the origin and has unit extent. Lengths, times and heights scale alike.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frame {
    pub origin: Vec2,
    pub scale: f64,
}

impl Frame {
    pub fn fit(rings: &[Vec<Vec2>]) -> Frame {
        let mut lo = Vec2::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in rings.iter().flatten() {
            lo = Vec2::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = Vec2::new(hi.x.max(p.x), hi.y.max(p.y));
        }
        let scale = (hi.x - lo.x).max(hi.y - lo.y);
        if !(scale > 0.0 && scale.is_finite()) {
            return Frame { origin: Vec2::ZERO, scale: 1.0 };
        }
        Frame { origin: lo, scale }
    }

    pub fn to_local(&self, p: Vec2) -> Vec2 {
        if self.is_identity() {
            return p;
        }
        (p - self.origin) / self.scale
    }

    pub fn to_world(&self, p: Vec2) -> Vec2 {
        if self.is_identity() {
            return p;
        }
        p * self.scale + self.origin
    }

    pub fn is_identity(&self) -> bool {
        self.origin == Vec2::ZERO && self.scale == 1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Running,
    Terminated,
    /// Stopped at the requested maximum height.
    MaxHeight,
    Faulted,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EngineOptions {
    pub tol: Tolerances,
    /// World-frame maximum height.
    pub max_z: Option<f64>,
    pub step: StepConfig,
}

/// One recorded offset polygon, in the local frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub z: f64,
    pub loops: Vec<Vec<Vec2>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventRecord {
    pub t: f64,
    pub z: f64,
    pub kind: EventKind,
    pub at: Vec2,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdvanceReport {
    /// World-frame height gained.
    pub advanced_dz: f64,
    pub increments: usize,
    pub events: usize,
    pub status: Status,
}

/// Skeleton, faces and roof in world coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    pub nodes: Vec<SkeletonNode>,
    pub arcs: Vec<SkeletonArc>,
    pub faces: Vec<Face>,
    pub mesh: Mesh,
}

/// World-frame view of a vertex.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VertexView {
    pub id: u32,
    pub pos: Vec2,
    pub vel: Vec3,
    pub alpha: f64,
    pub frozen: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoopView {
    pub vertices: Vec<VertexView>,
    pub hole: bool,
    pub frozen: bool,
}

/// The removed vertex's face is closed along the merged stretch, which the
/// face of the edge after it takes over.
fn removal_pieces(r: &ColinearRemoval) -> [FacePiece; 2] {
    [
        FacePiece { face: r.from_face, input_edge: r.from_edge, a: r.at, b: r.before_at },
        FacePiece { face: r.to_face, input_edge: r.to_edge, a: r.before_at, b: r.at },
    ]
}

/// Events of one batch closer than this many geometric tolerances are one site.
const SITE_TOL: f64 = 1e3;

/// Groups a batch by location. A site where an edge collapsed is logged as a
/// collapse even if vertices also met there.
fn event_sites(events: &[kinetics::Event], tol: f64) -> Vec<(Vec2, EventKind)> {
    let rank = |k: EventKind| match k {
        EventKind::EdgeCollapse => 0,
        EventKind::VertexOnVertex => 1,
        EventKind::VertexInEdge => 2,
    };
    let mut sites: Vec<(Vec2, EventKind)> = Vec::new();
    for e in events {
        match sites.iter_mut().find(|(p, _)| p.dist(e.at) <= tol) {
            Some(site) if rank(e.kind) < rank(site.1) => site.1 = e.kind,
            Some(_) => {}
            None => sites.push((e.at, e.kind)),
        }
    }
    sites
}

const MAX_IDLE_INCREMENTS: usize = 10_000;
/// Runs without a maximum height give up beyond this multiple of the extent.
const RUNAWAY_HEIGHT: f64 = 1e4;

#[derive(Debug, Clone)]
pub struct Engine {
    frame: Frame,
    w: Wavefront,
    graph: SkeletonGraph,
    schedule: HeightSchedule,
    track: HeightTrack,
    max_z: Option<f64>,
    cfg: StepConfig,
    status: Status,
    fault: Option<String>,
    input: Vec<Vec<Vec2>>,
    snapshots: Vec<Snapshot>,
    events: Vec<EventRecord>,
}

impl Engine {
    /// Rings and per-edge attributes in world coordinates, listed as in
    /// [`build_wavefront_with`]. Start times are world-frame times.
    pub fn new(
        rings: &[Vec<Vec2>],
        edges: &[EdgeInit],
        schedule: &[(f64, f64)],
        opts: EngineOptions,
    ) -> Result<Engine, EngineError> {
        let frame = Frame::fit(rings);
        let local: Vec<Vec<Vec2>> = rings
            .iter()
            .map(|r| r.iter().map(|&p| frame.to_local(p)).collect())
            .collect();
        let edges: Vec<EdgeInit> = edges
            .iter()
            .map(|e| EdgeInit { weight: e.weight, start_time: e.start_time / frame.scale })
            .collect();
        let schedule = HeightSchedule::new(schedule)?.scaled(1.0 / frame.scale);
        let mut w = build_wavefront_with(&local, &edges, opts.tol)?;
        w.refresh_velocities();
        let mut graph = SkeletonGraph::record_input(&mut w);
        let pre = SkeletonGraph::capture(&w);
        let removals = kinetics::settle(&mut w, &opts.step)?;
        graph.record_changes(&pre, &mut w);
        for p in removals.iter().flat_map(removal_pieces) {
            graph.add_piece(p.face, p.input_edge, p.a, p.b, w.t, w.z);
        }
        let track = HeightTrack::new(schedule.vz_at(0.0));
        let mut e = Engine {
            frame,
            w,
            graph,
            schedule,
            track,
            max_z: opts.max_z.map(|z| z / frame.scale),
            cfg: opts.step,
            status: Status::Running,
            fault: None,
            input: local,
            snapshots: Vec::new(),
            events: Vec::new(),
        };
        e.snapshot();
        e.update_status();
        Ok(e)
    }

    pub fn status(&self) -> Status {
        self.status
    }

    pub fn fault(&self) -> Option<&str> {
        self.fault.as_deref()
    }

    pub fn frame(&self) -> Frame {
        self.frame
    }

    pub fn z(&self) -> f64 {
        self.w.z * self.frame.scale
    }

    pub fn t(&self) -> f64 {
        self.w.t * self.frame.scale
    }

    pub fn wavefront(&self) -> &Wavefront {
        &self.w
    }

    pub fn graph(&self) -> &SkeletonGraph {
        &self.graph
    }

    pub fn schedule(&self) -> &HeightSchedule {
        &self.schedule
    }

    pub fn max_z(&self) -> Option<f64> {
        self.max_z.map(|z| z * self.frame.scale)
    }

    /// Event log in world coordinates.
    pub fn events(&self) -> Vec<EventRecord> {
        let s = self.frame.scale;
        self.events
            .iter()
            .map(|e| EventRecord { t: e.t * s, z: e.z * s, kind: e.kind, at: self.frame.to_world(e.at) })
            .collect()
    }

    /// Input rings in world coordinates.
    pub fn input(&self) -> Vec<Vec<Vec2>> {
        self.input
            .iter()
            .map(|r| r.iter().map(|&p| self.frame.to_world(p)).collect())
            .collect()
    }

    /// Offset history in world coordinates.
    pub fn snapshots(&self) -> Vec<Snapshot> {
        let s = self.frame.scale;
        self.snapshots
            .iter()
            .map(|sn| Snapshot {
                t: sn.t * s,
                z: sn.z * s,
                loops: sn
                    .loops
                    .iter()
                    .map(|l| l.iter().map(|&p| self.frame.to_world(p)).collect())
                    .collect(),
            })
            .collect()
    }

    fn snapshot(&mut self) {
        let loops = self
            .w
            .loops
            .iter()
            .filter(|l| !l.frozen)
            .map(|l| self.w.loop_positions(l.entry))
            .collect();
        self.snapshots.push(Snapshot { t: self.w.t, z: self.w.z, loops });
    }

    fn update_status(&mut self) {
        if self.status != Status::Running {
            return;
        }
        if self.w.is_terminated() {
            self.status = Status::Terminated;
        } else if self.max_z.is_some_and(|m| self.w.z >= m) {
            self.status = Status::MaxHeight;
        }
    }

    fn fail(&mut self, err: KineticsError) -> EngineError {
        self.status = Status::Faulted;
        self.fault = Some(err.to_string());
        EngineError::Fault(err)
    }

    fn add_pieces(&mut self, pieces: &[FacePiece]) {
        for p in pieces {
            self.graph.add_piece(p.face, p.input_edge, p.a, p.b, self.w.t, self.w.z);
        }
    }

    fn add_removals(&mut self, removals: &[ColinearRemoval]) {
        let pieces: Vec<FacePiece> = removals.iter().flat_map(removal_pieces).collect();
        self.add_pieces(&pieces);
    }

    /// Earliest pending start time after the current time.
    fn next_start(&self) -> Option<f64> {
        let eps = self.w.tol.eps_geom;
        self.w
            .verts
            .iter()
            .filter(|v| v.alive && !v.frozen && v.edge.start_time > self.w.t + eps)
            .map(|v| v.edge.start_time)
            .min_by(f64::total_cmp)
    }

    /// Releases edges whose start time has come; each gets a fresh face.
    fn activate_edges(&mut self) -> Vec<FacePiece> {
        let eps = self.w.tol.eps_geom;
        let due: Vec<VertexId> = self
            .w
            .verts
            .iter()
            .filter(|v| v.alive && !v.frozen && v.edge.start_time > 0.0 && v.edge.start_time <= self.w.t + eps)
            .map(|v| v.id)
            .collect();
        let mut pieces = Vec::new();
        for id in due {
            let weight = self.w.v(id).edge.weight;
            pieces.extend(self.w.reface_edge(id, weight));
        }
        pieces
    }

    /// Propagates until the height has grown by `dz` (world units), the
    /// wavefront terminates, or the maximum height is reached. With
    /// `pause_at_event` it also stops after the first increment with an event.
    pub fn advance(&mut self, dz: f64, pause_at_event: bool) -> Result<AdvanceReport, EngineError> {
        match self.status {
            Status::Running => {}
            Status::Faulted => return Err(EngineError::NotRunning("faulted")),
            _ => return Err(EngineError::NotRunning("finished")),
        }
        if !(dz >= 0.0 && dz.is_finite()) {
            return Err(EngineError::Edit(format!("step {dz} must be a finite non-negative height")));
        }
        let z0 = self.w.z;
        let mut target = z0 + dz / self.frame.scale;
        if let Some(m) = self.max_z {
            target = target.min(m);
        }
        let (mut increments, mut events, mut idle) = (0, 0, 0);
        while self.w.z < target && self.status == Status::Running {
            let vz = self.schedule.vz_at(self.w.z);
            self.track.push(self.w.t, self.w.z, vz);
            let z_lim = self.schedule.next_break(self.w.z).map_or(target, |b| b.min(target));
            let mut dt = (z_lim - self.w.z) / vz;
            let mut start = None;
            if let Some(ts) = self.next_start() {
                if ts - self.w.t <= dt {
                    dt = ts - self.w.t;
                    start = Some(ts);
                }
            }
            let pre = SkeletonGraph::capture(&self.w);
            let t0 = self.w.t;
            let report = match kinetics::step(&mut self.w, dt, &self.cfg) {
                Ok(r) => r,
                Err(e) => return Err(self.fail(e)),
            };
            increments += 1;
            let full = report.advanced == dt;
            match (full, start) {
                (true, Some(ts)) => {
                    self.w.t = ts;
                    self.w.z += vz * dt;
                }
                (true, None) => self.w.z = z_lim,
                _ => self.w.z += vz * report.advanced,
            }
            let mut pieces = Vec::new();
            let mut removals: Vec<ColinearRemoval> = report.removals.clone();
            if full && start.is_some() {
                pieces = self.activate_edges();
                match kinetics::settle(&mut self.w, &self.cfg) {
                    Ok(r) => removals.extend(r),
                    Err(e) => return Err(self.fail(e)),
                }
            }
            self.graph.record_changes(&pre, &mut self.w);
            self.add_pieces(&pieces);
            self.add_removals(&removals);
            if report.had_event() {
                events += 1;
                let (t, z) = (self.w.t, self.w.z);
                let sites = event_sites(&report.events, SITE_TOL * self.w.tol.eps_geom);
                self.events.extend(sites.into_iter().map(|(at, kind)| EventRecord { t, z, kind, at }));
            }
            self.update_status();
            if self.w.t == t0 {
                idle += 1;
                if idle > MAX_IDLE_INCREMENTS {
                    return Err(self.fail(KineticsError::Robustness {
                        t: self.w.t,
                        reason: "no progress in time".into(),
                    }));
                }
            } else {
                idle = 0;
            }
            if self.max_z.is_none() && self.w.z > RUNAWAY_HEIGHT {
                return Err(self.fail(KineticsError::Robustness {
                    t: self.w.t,
                    reason: "wavefront does not terminate".into(),
                }));
            }
            if pause_at_event && report.had_event() {
                break;
            }
        }
        self.snapshot();
        Ok(AdvanceReport {
            advanced_dz: (self.w.z - z0) * self.frame.scale,
            increments,
            events,
            status: self.status,
        })
    }

    /// Runs to termination in steps of `dz`.
    pub fn run_to_end(&mut self, dz: f64) -> Result<(), EngineError> {
        if !(dz > 0.0) {
            return Err(EngineError::Edit("step must be positive".into()));
        }
        if self.max_z.is_none() && self.w.verts.iter().any(|v| v.alive && v.edge.weight <= 0.0) {
            return Err(EngineError::MaxHeightRequired);
        }
        while self.status == Status::Running {
            self.advance(dz, false)?;
        }
        Ok(())
    }

    fn check_editable(&self) -> Result<(), EngineError> {
        match self.status {
            Status::Running => Ok(()),
            Status::Faulted => Err(EngineError::NotRunning("faulted")),
            _ => Err(EngineError::NotRunning("finished")),
        }
    }

    /// The vertex owning edge `edge` of loop `loop_index` in view order.
    fn edge_owner(&self, loop_index: usize, edge: usize) -> Result<VertexId, EngineError> {
        let l = self
            .w
            .loops
            .get(loop_index)
            .ok_or_else(|| EngineError::Edit(format!("no loop {loop_index}")))?;
        if l.frozen {
            return Err(EngineError::Edit(format!("loop {loop_index} has terminated")));
        }
        let ids = self.w.loop_vertices(l.entry);
        if edge >= ids.len() {
            return Err(EngineError::Edit(format!("loop {loop_index} has no edge {edge}")));
        }
        Ok(ids[(edge + 1) % ids.len()])
    }

    fn after_edit(&mut self, pre: crate::skeleton::PreState, pieces: Vec<FacePiece>) -> Result<(), EngineError> {
        let removals = match kinetics::settle(&mut self.w, &self.cfg) {
            Ok(r) => r,
            Err(e) => return Err(self.fail(e)),
        };
        self.graph.record_changes(&pre, &mut self.w);
        self.add_pieces(&pieces);
        self.add_removals(&removals);
        self.update_status();
        Ok(())
    }

    pub fn set_alpha(&mut self, loop_index: usize, edge: usize, alpha: f64) -> Result<(), EngineError> {
        self.check_editable()?;
        if !(alpha > 0.0 && alpha < std::f64::consts::PI) {
            return Err(EngineError::Edit(format!("angle {alpha} outside (0, π)")));
        }
        let e = self.edge_owner(loop_index, edge)?;
        let pre = SkeletonGraph::capture(&self.w);
        let pieces = self.w.reface_edge(e, alpha_to_weight(alpha)).to_vec();
        self.after_edit(pre, pieces)
    }

    pub fn insert_vertex(&mut self, loop_index: usize, edge: usize, point: Vec2) -> Result<u32, EngineError> {
        self.check_editable()?;
        if !point.is_finite() {
            return Err(EngineError::Edit("point is not finite".into()));
        }
        let e = self.edge_owner(loop_index, edge)?;
        let pre = SkeletonGraph::capture(&self.w);
        let (id, pieces) = self
            .w
            .insert_vertex(e, self.frame.to_local(point))
            .map_err(|e| EngineError::Edit(e.to_string()))?;
        self.after_edit(pre, pieces.to_vec())?;
        Ok(id.0)
    }

    pub fn remove_vertex(&mut self, id: u32) -> Result<(), EngineError> {
        self.check_editable()?;
        let vid = VertexId(id);
        if vid.idx() >= self.w.verts.len() || !self.w.v(vid).alive {
            return Err(EngineError::Edit(format!("vertex {id} does not exist")));
        }
        let pre = SkeletonGraph::capture(&self.w);
        let pieces = self.w.remove_vertex(vid).map_err(|e| EngineError::Edit(e.to_string()))?;
        self.after_edit(pre, pieces)
    }

    /// Replaces the schedule for the remaining propagation (world heights).
    pub fn set_schedule(&mut self, entries: &[(f64, f64)]) -> Result<(), EngineError> {
        self.check_editable()?;
        self.schedule = HeightSchedule::new(entries)?.scaled(1.0 / self.frame.scale);
        Ok(())
    }

    /// Current loops in world coordinates; the first vertex of each loop is
    /// its lowest id, and edge `k` runs from vertex `k` to vertex `k+1`.
    pub fn loops(&self) -> Vec<LoopView> {
        self.w
            .loops
            .iter()
            .map(|l| LoopView {
                hole: l.hole,
                frozen: l.frozen,
                vertices: self
                    .w
                    .loop_vertices(l.entry)
                    .into_iter()
                    .map(|id| {
                        let v = self.w.v(id);
                        let nx = self.w.v(v.next);
                        VertexView {
                            id: id.0,
                            pos: self.frame.to_world(v.pos),
                            vel: v.vel * self.schedule.vz_at(self.w.z),
                            alpha: self.w.effective_alpha(&nx.edge),
                            frozen: v.frozen,
                        }
                    })
                    .collect(),
            })
            .collect()
    }

    /// Skeleton so far: closed arcs plus open trajectories ending at the
    /// current vertex positions (world frame).
    pub fn partial_skeleton(&self) -> (Vec<SkeletonNode>, Vec<SkeletonArc>, Vec<(u32, Vec2)>) {
        let nodes = self.graph.nodes.iter().map(|n| self.node_to_world(n)).collect();
        let open = self
            .graph
            .open_arcs(&self.w)
            .into_iter()
            .map(|(n, p)| (n.0, self.frame.to_world(p)))
            .collect();
        (nodes, self.graph.arcs.clone(), open)
    }

    fn node_to_world(&self, n: &SkeletonNode) -> SkeletonNode {
        let s = self.frame.scale;
        SkeletonNode { pos: self.frame.to_world(n.pos), t: n.t * s, z: n.z * s, kind: n.kind }
    }

    /// Closes the current state into a complete skeleton with faces and
    /// roof. Open trajectories end at terminal nodes.
    pub fn output(&self) -> Result<Output, EngineError> {
        let mut w = self.w.clone();
        let mut g = self.graph.clone();
        g.finish(&mut w);
        let faces = g.build_faces()?;
        let mut track = self.track.clone();
        track.push(w.t, w.z, self.schedule.vz_at(w.z));
        let mesh = build_roof_mesh(&g, &faces, &track);
        let s = self.frame.scale;
        let faces = faces
            .into_iter()
            .map(|f| Face { area: f.area * s * s, ..f })
            .collect();
        let mesh = Mesh {
            vertices: mesh
                .vertices
                .iter()
                .map(|v| self.frame.to_world(v.xy()).extend(v.z * s))
                .collect(),
            ..mesh
        };
        Ok(Output {
            nodes: g.nodes.iter().map(|n| self.node_to_world(n)).collect(),
            arcs: g.arcs,
            faces,
            mesh,
        })
    }

    /// Nodes where at least one collapse or split happened.
    pub fn event_node_count(&self) -> usize {
        self.graph.nodes.iter().filter(|n| n.kind.is_event()).count()
    }

    pub fn node_kinds(&self) -> Vec<NodeKind> {
        self.graph.nodes.iter().map(|n| n.kind).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    fn p(x: f64, y: f64) -> Vec2 {
        Vec2::new(x, y)
    }

    fn square() -> Vec<Vec<Vec2>> {
        vec![vec![p(0.0, 0.0), p(1.0, 0.0), p(1.0, 1.0), p(0.0, 1.0)]]
    }

    fn unit(n: usize) -> Vec<EdgeInit> {
        vec![EdgeInit::from_weight(1.0); n]
    }

    #[test]
    fn square_apex() {
        let mut e = Engine::new(&square(), &unit(4), &[], EngineOptions::default()).unwrap();
        e.run_to_end(0.1).unwrap();
        assert_eq!(e.status(), Status::Terminated);
        let out = e.output().unwrap();
        assert_eq!(out.nodes.len(), 5);
        assert_eq!(out.arcs.len(), 4);
        let apex = out.nodes[4];
        assert_eq!(apex.kind, NodeKind::Collapse);
        assert!(apex.pos.dist(p(0.5, 0.5)) < 1e-12);
        assert!((apex.z - 0.5).abs() < 1e-12);
        assert_eq!(out.faces.len(), 4);
        for f in &out.faces {
            assert!((f.area - 0.25).abs() < 1e-12);
        }
        assert_eq!(out.mesh.triangles.len(), 4);
        assert!((out.mesh.plan_area() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn steps_stop_at_collapse_height() {
        let mut e = Engine::new(&square(), &unit(4), &[], EngineOptions::default()).unwrap();
        let r = e.advance(0.2, false).unwrap();
        assert!((r.advanced_dz - 0.2).abs() < 1e-15);
        let r = e.advance(0.4, false).unwrap();
        assert!((r.advanced_dz - 0.3).abs() < 1e-12);
        assert_eq!(r.status, Status::Terminated);
        assert!(e.advance(0.1, false).is_err());
    }

    #[test]
    fn scaled_and_shifted_square() {
        let ring: Vec<Vec2> = square()[0].iter().map(|&q| q * 3.0 + p(10.0, -4.0)).collect();
        let mut e = Engine::new(&[ring], &unit(4), &[], EngineOptions::default()).unwrap();
        e.run_to_end(0.7).unwrap();
        let out = e.output().unwrap();
        let apex = out.nodes.iter().find(|n| n.kind == NodeKind::Collapse).unwrap();
        assert!(apex.pos.dist(p(11.5, -2.5)) < 1e-12);
        assert!((apex.z - 1.5).abs() < 1e-12);
        let total: f64 = out.faces.iter().map(|f| f.area).sum();
        assert!((total - 9.0).abs() < 1e-10);
    }

    #[test]
    fn faster_rise_keeps_plan() {
        let mut e = Engine::new(&square(), &unit(4), &[(0.0, 2.0)], EngineOptions::default()).unwrap();
        e.run_to_end(0.3).unwrap();
        let out = e.output().unwrap();
        let apex = out.nodes.iter().find(|n| n.kind == NodeKind::Collapse).unwrap();
        assert!(apex.pos.dist(p(0.5, 0.5)) < 1e-12);
        assert!((apex.z - 1.0).abs() < 1e-12);
    }

    #[test]
    fn two_band_schedule_kinks_roof() {
        let sched = [(0.0, 1.0), (0.25, 0.5)];
        let mut e = Engine::new(&square(), &unit(4), &sched, EngineOptions::default()).unwrap();
        e.run_to_end(1.0).unwrap();
        let out = e.output().unwrap();
        let apex = out.nodes.iter().find(|n| n.kind == NodeKind::Collapse).unwrap();
        assert!(apex.pos.dist(p(0.5, 0.5)) < 1e-12);
        assert!((apex.z - 0.375).abs() < 1e-12);
        // each face split into a lower band and an upper band
        assert!(out.mesh.vertices.iter().any(|v| (v.z - 0.25).abs() < 1e-15));
        assert!((out.mesh.plan_area() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn stationary_edit_freezes_edge() {
        let mut e = Engine::new(&square(), &unit(4), &[], EngineOptions::default()).unwrap();
        e.advance(0.1, false).unwrap();
        e.set_alpha(0, 0, FRAC_PI_2).unwrap();
        let loops = e.loops();
        let vs = &loops[0].vertices;
        let (a, b) = (vs[0], vs[1]);
        let n = (b.pos - a.pos).normalized().unwrap().right_normal();
        assert!(a.vel.xy().dot(n).abs() < 1e-12);
        assert!(b.vel.xy().dot(n).abs() < 1e-12);
        assert!(e.set_alpha(0, 0, 0.0).is_err());
        assert!(e.set_alpha(0, 9, FRAC_PI_4).is_err());
    }

    #[test]
    fn start_time_holds_edge() {
        let mut edges = unit(4);
        edges[0].start_time = 0.2;
        let opts = EngineOptions { max_z: Some(2.0), ..Default::default() };
        let mut e = Engine::new(&square(), &edges, &[], opts).unwrap();
        e.advance(0.1, false).unwrap();
        let bottom = e.loops()[0].vertices[0].pos.y;
        assert_eq!(bottom, 0.0);
        e.run_to_end(0.1).unwrap();
        assert_eq!(e.status(), Status::Terminated);
        let out = e.output().unwrap();
        let total: f64 = out.faces.iter().map(|f| f.area).sum();
        assert!((total - 1.0).abs() < 1e-10);
    }

    #[test]
    fn non_positive_weight_needs_max_height() {
        let mut edges = unit(4);
        edges[0] = EdgeInit::from_weight(0.0);
        let mut e = Engine::new(&square(), &edges, &[], EngineOptions::default()).unwrap();
        assert_eq!(e.run_to_end(0.1), Err(EngineError::MaxHeightRequired));
    }

    #[test]
    fn schedule_validation() {
        assert!(HeightSchedule::new(&[(0.0, 0.0)]).is_err());
        assert!(HeightSchedule::new(&[(0.0, 1.0), (0.0, 2.0)]).is_err());
        let s = HeightSchedule::new(&[(0.5, 1.0), (1.0, 2.0)]).unwrap();
        assert_eq!(s.vz_at(0.0), 1.0);
        assert_eq!(s.vz_at(1.5), 2.0);
        assert_eq!(s.next_break(0.0), Some(1.0));
    }
}

//! Predictor-corrector time stepping. Each increment predicts positions
//! with constant velocities, looks for edge swaps and penetrations through
//! the sign of a signed gap, and when it finds one corrects back to the
//! earliest event, applies surgery and re-probes at zero time until the
//! wavefront is admissible again.

use thiserror::Error;

use crate::geom::{xi_to_dt, zero_crossing_xi, Tolerances, Vec2};
use crate::wavefront::{ColinearRemoval, VertexId, Wavefront, WavefrontError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EventKind {
    /// The edge before `subject` shrinks to zero length.
    EdgeCollapse,
    /// `subject` reaches the interior of the edge before `target`.
    VertexInEdge,
    /// `subject` reaches the vertex `target`.
    VertexOnVertex,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub kind: EventKind,
    /// Time from the start of the increment.
    pub dt: f64,
    pub xi: f64,
    pub subject: VertexId,
    pub target: Option<VertexId>,
    pub loop_index: usize,
    pub at: Vec2,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KineticsError {
    #[error(transparent)]
    Surgery(#[from] WavefrontError),
    #[error("robustness fault at t={t}: {reason}")]
    Robustness { t: f64, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepConfig {
    /// Skip penetration pairs whose swept bounding boxes are disjoint.
    pub broad_phase: bool,
    /// Maximum zero-time surgery rounds after one event.
    pub max_cascade: usize,
}

impl Default for StepConfig {
    fn default() -> Self {
        StepConfig { broad_phase: true, max_cascade: 256 }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct StepReport {
    pub advanced: f64,
    pub events: Vec<Event>,
    pub removals: Vec<ColinearRemoval>,
}

impl StepReport {
    pub fn had_event(&self) -> bool {
        !self.events.is_empty()
    }
}

/// Positions of every vertex after `dt`, indexed by vertex id.
pub fn predict(w: &Wavefront, dt: f64) -> Vec<Vec2> {
    w.verts
        .iter()
        .map(|v| {
            if v.alive && !v.frozen {
                v.pos + v.planar_vel() * dt
            } else {
                v.pos
            }
        })
        .collect()
}

fn loop_index_map(w: &Wavefront) -> Vec<usize> {
    let mut map = vec![usize::MAX; w.verts.len()];
    for (k, l) in w.loops.iter().enumerate() {
        for id in w.loop_vertices(l.entry) {
            map[id.idx()] = k;
        }
    }
    map
}

/// Edges whose length along their own direction reaches zero.
pub fn detect_edge_swaps(w: &Wavefront, pred: &[Vec2], dt: f64) -> Vec<Event> {
    let loops = loop_index_map(w);
    let eps = w.tol.eps_geom;
    let mut out = Vec::new();
    for v in w.verts.iter().filter(|v| v.alive && !v.frozen) {
        let b = v.prev;
        if b == v.id {
            continue;
        }
        let u = v.edge.u;
        let l_n = (v.pos - w.v(b).pos).dot(u);
        let l_np1 = (pred[v.id.idx()] - pred[b.idx()]).dot(u);
        if let Some(xi) = zero_crossing_xi(l_n, l_np1, eps) {
            let dt_c = xi_to_dt(xi, dt);
            out.push(Event {
                kind: EventKind::EdgeCollapse,
                dt: dt_c,
                xi,
                subject: v.id,
                target: None,
                loop_index: loops[v.id.idx()],
                at: v.pos + v.planar_vel() * dt_c,
            });
        }
    }
    out
}

#[derive(Clone, Copy)]
struct Aabb {
    lo: Vec2,
    hi: Vec2,
}

impl Aabb {
    fn of(points: &[Vec2], pad: f64) -> Aabb {
        let mut lo = points[0];
        let mut hi = points[0];
        for p in &points[1..] {
            lo = Vec2::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = Vec2::new(hi.x.max(p.x), hi.y.max(p.y));
        }
        Aabb { lo: lo - Vec2::new(pad, pad), hi: hi + Vec2::new(pad, pad) }
    }

    fn overlaps(&self, o: &Aabb) -> bool {
        self.lo.x <= o.hi.x && o.lo.x <= self.hi.x && self.lo.y <= o.hi.y && o.lo.y <= self.hi.y
    }
}

/// Vertices crossing or touching a non-incident edge of any moving loop.
pub fn detect_penetrations(w: &Wavefront, pred: &[Vec2], dt: f64, broad_phase: bool) -> Vec<Event> {
    let loops = loop_index_map(w);
    let eps = w.tol.eps_geom;
    let moving: Vec<VertexId> = w.moving_ids().collect();
    let boxes: Vec<Option<Aabb>> = if broad_phase {
        w.verts
            .iter()
            .map(|v| {
                (v.alive && !v.frozen).then(|| {
                    let q = v.prev;
                    Aabb::of(&[v.pos, pred[v.id.idx()], w.v(q).pos, pred[q.idx()]], 4.0 * eps)
                })
            })
            .collect()
    } else {
        Vec::new()
    };
    let mut out = Vec::new();
    for &p in &moving {
        let pv = w.v(p);
        let pbox = broad_phase.then(|| Aabb::of(&[pv.pos, pred[p.idx()]], 4.0 * eps));
        for &r in &moving {
            let rv = w.v(r);
            let q = rv.prev;
            if r == p || q == p || q == r {
                continue;
            }
            if let (Some(pb), Some(Some(eb))) = (pbox, boxes.get(r.idx())) {
                if !pb.overlaps(eb) {
                    continue;
                }
            }
            let qv = w.v(q);
            let n = rv.edge.n;
            let g_n = (pv.pos - qv.pos).dot(n);
            let g_np1 = (pred[p.idx()] - pred[q.idx()]).dot(n);
            let Some(xi) = zero_crossing_xi(g_n, g_np1, eps) else {
                continue;
            };
            // contacts created by the last cluster resolution are not new
            let coincident = |o: &crate::wavefront::WavefrontVertex| {
                pv.cluster_tag != 0 && pv.cluster_tag == o.cluster_tag && pv.pos.dist(o.pos) <= eps
            };
            if coincident(qv) || coincident(rv) {
                continue;
            }
            let dt_s = xi_to_dt(xi, dt);
            let ps = pv.pos + pv.planar_vel() * dt_s;
            let qs = qv.pos + qv.planar_vel() * dt_s;
            let rs = rv.pos + rv.planar_vel() * dt_s;
            let u = rv.edge.u;
            let s = (ps - qs).dot(u);
            let len = (rs - qs).dot(u);
            if len < -eps || s < -eps || s > len + eps {
                continue;
            }
            let (kind, target) = if s <= eps {
                (EventKind::VertexOnVertex, q)
            } else if s >= len - eps {
                (EventKind::VertexOnVertex, r)
            } else {
                (EventKind::VertexInEdge, r)
            };
            out.push(Event {
                kind,
                dt: dt_s,
                xi,
                subject: p,
                target: Some(target),
                loop_index: loops[p.idx()],
                at: ps,
            });
        }
    }
    out
}

/// Events within the simultaneity window of the earliest one, collapses
/// first, then by loop and vertex.
pub fn earliest_event_batch(events: &[Event], dt: f64, tol: &Tolerances) -> Vec<Event> {
    let Some(min) = events.iter().map(|e| e.dt).min_by(f64::total_cmp) else {
        return Vec::new();
    };
    let window = tol.eps_time_cluster * dt;
    let mut batch: Vec<Event> = events.iter().copied().filter(|e| e.dt <= min + window).collect();
    batch.sort_by(|a, b| {
        let ca = a.kind != EventKind::EdgeCollapse;
        let cb = b.kind != EventKind::EdgeCollapse;
        ca.cmp(&cb)
            .then(a.loop_index.cmp(&b.loop_index))
            .then(a.subject.cmp(&b.subject))
            .then(a.target.cmp(&b.target))
    });
    batch
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// Applies one batch of surgery at the current positions. Returns whether
/// anything changed.
pub fn apply_batch(w: &mut Wavefront, batch: &[Event], contact_tol: f64) -> Result<bool, KineticsError> {
    let mut changed = w.collapse_degenerate_edges() > 0;

    // contact pairs; an inserted vertex's position becomes its cluster's snap point
    let mut pairs: Vec<(VertexId, VertexId)> = Vec::new();
    let mut anchors: Vec<(VertexId, Vec2)> = Vec::new();
    for ev in batch.iter().filter(|e| e.kind != EventKind::EdgeCollapse) {
        let p = w.resolve(ev.subject);
        if !w.v(p).alive || w.v(p).frozen {
            continue;
        }
        let target = ev.target.expect("contacts carry a target");
        let x = w.v(p).pos;
        let face = match ev.kind {
            EventKind::VertexInEdge => Some(w.v(target).edge.face),
            _ => None,
        };
        // nearest edge of the right face, or any edge for vertex contacts
        let mut best: Option<(f64, VertexId)> = None;
        for r in w.moving_ids() {
            let rv = w.v(r);
            let q = rv.prev;
            if r == p || q == p || q == r || face.is_some_and(|f| rv.edge.face != f) {
                continue;
            }
            let (a, b) = (w.v(q).pos, rv.pos);
            let len = (b - a).dot(rv.edge.u);
            let s = (x - a).dot(rv.edge.u).clamp(0.0, len.max(0.0));
            let d = x.dist(a + rv.edge.u * s);
            if d <= contact_tol && best.is_none_or(|(bd, _)| d < bd) {
                best = Some((d, r));
            }
        }
        let Some((_, r)) = best else {
            continue;
        };
        let q = w.v(r).prev;
        let (a, b) = (w.v(q).pos, w.v(r).pos);
        if x.dist(a) <= contact_tol {
            pairs.push((p, q));
        } else if x.dist(b) <= contact_tol {
            pairs.push((p, r));
        } else {
            let u = w.v(r).edge.u;
            let foot = a + u * (x - a).dot(u);
            let n = w.insert_on_edge(r, foot);
            w.refresh_velocities();
            anchors.push((n, foot));
            pairs.push((p, n));
            changed = true;
        }
    }
    if pairs.is_empty() {
        return Ok(changed);
    }

    let n = w.verts.len();
    let mut parent: Vec<usize> = (0..n).collect();
    for &(a, b) in &pairs {
        let (ra, rb) = (find(&mut parent, a.idx()), find(&mut parent, b.idx()));
        if ra != rb {
            parent[ra.max(rb)] = ra.min(rb);
        }
    }
    let mut clusters: std::collections::BTreeMap<usize, Vec<VertexId>> = Default::default();
    for &(a, b) in &pairs {
        for v in [a, b] {
            let root = find(&mut parent, v.idx());
            clusters.entry(root).or_default().push(v);
        }
    }
    // pick up vertices that reached the same spot without their own event
    let moving: Vec<VertexId> = w.moving_ids().collect();
    for members in clusters.values_mut() {
        let c = members.iter().fold(Vec2::ZERO, |acc, &m| acc + w.v(m).pos) / members.len() as f64;
        for &v in &moving {
            if w.v(v).pos.dist(c) <= contact_tol && !members.contains(&v) {
                members.push(v);
            }
        }
        members.sort();
        members.dedup();
    }
    // expansion can make clusters overlap; merge them
    let mut merged: Vec<Vec<VertexId>> = Vec::new();
    for members in clusters.into_values() {
        match merged.iter_mut().find(|m| m.iter().any(|v| members.contains(v))) {
            Some(m) => {
                m.extend(members);
                m.sort();
                m.dedup();
            }
            None => merged.push(members),
        }
    }
    for mut members in merged {
        let at = anchors.iter().find(|(a, _)| members.contains(a)).map(|&(_, p)| p);
        let snap = at.unwrap_or_else(|| {
            members.iter().fold(Vec2::ZERO, |acc, &m| acc + w.v(m).pos) / members.len() as f64
        });
        // neighbours inside one cluster share a zero-length edge
        loop {
            let adj = members.iter().copied().find(|&m| {
                let prev = w.v(m).prev;
                prev != m && members.contains(&prev)
            });
            let Some(m) = adj else { break };
            let prev = w.v(m).prev;
            w.v_mut(m).pos = w.v(prev).pos;
            w.collapse_edge(m)?;
            members.retain(|&x| x != m);
            changed = true;
        }
        if members.len() >= 2 {
            w.resolve_cluster(&members, Some(snap))?;
            changed = true;
        }
    }
    Ok(changed)
}

/// Restores invariants after surgery: loop table, colinear removal,
/// velocities, and zero-time re-probing until no event is pending.
pub fn settle(w: &mut Wavefront, cfg: &StepConfig) -> Result<Vec<ColinearRemoval>, KineticsError> {
    let mut removals = Vec::new();
    for _ in 0..cfg.max_cascade {
        w.rebuild_loops()?;
        w.refresh_velocities();
        let removed = w.remove_colinear_vertices();
        if !removed.is_empty() {
            removals.extend(removed);
            w.rebuild_loops()?;
            w.refresh_velocities();
        }
        if let Some(v) = w.verts.iter().find(|v| v.alive && !v.frozen && v.flags.colinear) {
            return Err(KineticsError::Robustness {
                t: w.t,
                reason: format!("{} has antiparallel edges", v.id),
            });
        }
        let pred = predict(w, 0.0);
        let mut events = detect_edge_swaps(w, &pred, 0.0);
        events.extend(detect_penetrations(w, &pred, 0.0, cfg.broad_phase));
        if events.is_empty() {
            return Ok(removals);
        }
        let batch = earliest_event_batch(&events, 0.0, &w.tol);
        if !apply_batch(w, &batch, contact_tolerance(w, 0.0))? {
            return Err(KineticsError::Robustness {
                t: w.t,
                reason: format!("surgery cannot clear {} pending events", batch.len()),
            });
        }
    }
    Err(KineticsError::Robustness {
        t: w.t,
        reason: format!("event cascade exceeded {} rounds", cfg.max_cascade),
    })
}

fn contact_tolerance(w: &Wavefront, dt: f64) -> f64 {
    let vmax = w
        .moving_ids()
        .map(|id| w.v(id).planar_vel().norm())
        .fold(0.0, f64::max);
    (16.0 * w.tol.eps_geom).max(4.0 * vmax * w.tol.eps_time_cluster * dt)
}

/// One predictor-corrector increment of at most `dt`.
pub fn step(w: &mut Wavefront, dt: f64, cfg: &StepConfig) -> Result<StepReport, KineticsError> {
    if w.moving_ids().next().is_none() {
        w.t += dt;
        return Ok(StepReport { advanced: dt, ..Default::default() });
    }
    let pred = predict(w, dt);
    let mut events = detect_edge_swaps(w, &pred, dt);
    events.extend(detect_penetrations(w, &pred, dt, cfg.broad_phase));
    let batch = earliest_event_batch(&events, dt, &w.tol);
    if batch.is_empty() {
        for (v, p) in w.verts.iter_mut().zip(pred) {
            v.pos = p;
        }
        w.t += dt;
        return Ok(StepReport { advanced: dt, ..Default::default() });
    }
    let dt_e = batch.iter().map(|e| e.dt).fold(f64::INFINITY, f64::min);
    let ctol = contact_tolerance(w, dt);
    for v in w.verts.iter_mut().filter(|v| v.alive && !v.frozen) {
        v.pos += v.vel.xy() * dt_e;
    }
    w.t += dt_e;
    let changed = apply_batch(w, &batch, ctol)?;
    if !changed && dt_e == 0.0 {
        return Err(KineticsError::Robustness {
            t: w.t,
            reason: "event could not be localized".into(),
        });
    }
    let removals = settle(w, cfg)?;
    Ok(StepReport { advanced: dt_e, events: batch, removals })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wavefront::{build_wavefront, build_wavefront_with, EdgeInit};
    use std::f64::consts::FRAC_PI_4;

    fn p(x: f64, y: f64) -> Vec2 {
        Vec2::new(x, y)
    }

    fn square() -> Wavefront {
        let ring = vec![p(0.0, 0.0), p(1.0, 0.0), p(1.0, 1.0), p(0.0, 1.0)];
        let unit = [EdgeInit::from_weight(1.0); 4];
        let mut w = build_wavefront_with(&[ring], &unit, Tolerances::default()).unwrap();
        settle(&mut w, &StepConfig::default()).unwrap();
        w
    }

    #[test]
    fn unit_square_collapse_time_is_exact() {
        let w = square();
        let pred = predict(&w, 1.0);
        let ev = detect_edge_swaps(&w, &pred, 1.0);
        assert_eq!(ev.len(), 4);
        for e in &ev {
            assert_eq!(e.dt, 0.5);
        }
        let batch = earliest_event_batch(&ev, 1.0, &w.tol);
        assert_eq!(batch.len(), 4);
    }

    #[test]
    fn no_event_inside_short_increment() {
        let w = square();
        let pred = predict(&w, 0.25);
        assert!(detect_edge_swaps(&w, &pred, 0.25).is_empty());
        assert!(detect_penetrations(&w, &pred, 0.25, false).is_empty());
    }

    #[test]
    fn square_runs_to_single_point() {
        let mut w = square();
        let r = step(&mut w, 1.0, &StepConfig::default()).unwrap();
        assert_eq!(r.advanced, 0.5);
        assert!(w.is_terminated());
        assert_eq!(w.alive_count(), 1);
        let v = w.alive_ids().next().unwrap();
        assert!(w.v(v).pos.dist(p(0.5, 0.5)) < 1e-12);
    }

    #[test]
    fn reflex_vertex_splits_l_shape() {
        // reflex vertex at (1,1) hits the far edge of the long arm first
        let ring = vec![
            p(0.0, 0.0),
            p(4.0, 0.0),
            p(4.0, 1.0),
            p(1.0, 1.0),
            p(1.0, 3.0),
            p(0.0, 3.0),
        ];
        let mut w = build_wavefront(&[ring], &[FRAC_PI_4; 6], Tolerances::default()).unwrap();
        settle(&mut w, &StepConfig::default()).unwrap();
        let cfg = StepConfig::default();
        let mut t = 0.0;
        while !w.is_terminated() && t < 10.0 {
            let r = step(&mut w, 0.1, &cfg).unwrap();
            t += r.advanced;
            // admissibility: nothing pending at zero time
            let pred = predict(&w, 0.0);
            assert!(detect_edge_swaps(&w, &pred, 0.0).is_empty());
            assert!(detect_penetrations(&w, &pred, 0.0, false).is_empty());
        }
        assert!(w.is_terminated());
    }

    #[test]
    fn broad_phase_does_not_change_events() {
        let ring = vec![
            p(0.0, 0.0),
            p(3.0, 0.2),
            p(2.8, 2.0),
            p(1.5, 0.8),
            p(0.3, 2.5),
        ];
        let mut w = build_wavefront(&[ring], &[FRAC_PI_4; 5], Tolerances::default()).unwrap();
        settle(&mut w, &StepConfig::default()).unwrap();
        for dt in [0.05, 0.2, 0.6, 1.5] {
            let pred = predict(&w, dt);
            let a = detect_penetrations(&w, &pred, dt, false);
            let b = detect_penetrations(&w, &pred, dt, true);
            assert_eq!(a, b);
        }
    }
}

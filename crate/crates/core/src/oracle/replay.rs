//! Brute-force replay: advance every vertex by a small fixed step and detect
//! events by direct geometric thresholds after each step. Slow and only
//! first-order accurate in time, but built on nothing the engine uses.

use crate::geom::Vec2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ReplayKind {
    Collapse,
    Split,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReplayEvent {
    pub t: f64,
    pub at: Vec2,
    pub kind: ReplayKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplayResult {
    pub events: Vec<ReplayEvent>,
    /// Loops that ended as a point or a segment.
    pub terminal_loops: usize,
    pub final_t: f64,
    /// Largest vertex speed seen.
    pub vmax: f64,
    /// Set when the replay met a configuration it cannot resolve.
    pub inconclusive: Option<String>,
}

#[derive(Debug, Clone, Copy)]
struct OutEdge {
    dir: Vec2,
    normal: Vec2,
    w: f64,
}

#[derive(Debug, Clone, Copy)]
struct Pt {
    pos: Vec2,
    vel: Vec2,
    next: usize,
    prev: usize,
    live: bool,
    done: bool,
    /// Edge from this point to `next`.
    out: OutEdge,
}

fn cross(a: Vec2, b: Vec2) -> f64 {
    a.x * b.y - a.y * b.x
}

fn dot(a: Vec2, b: Vec2) -> f64 {
    a.x * b.x + a.y * b.y
}

fn len(a: Vec2) -> f64 {
    dot(a, a).sqrt()
}

fn area(ring: &[Vec2]) -> f64 {
    let mut s = 0.0;
    for i in 0..ring.len() {
        s += cross(ring[i], ring[(i + 1) % ring.len()]);
    }
    s / 2.0
}

/// Winding number of `ring` around `p`.
fn winding(ring: &[Vec2], p: Vec2) -> i32 {
    let mut wn = 0;
    for i in 0..ring.len() {
        let (a, b) = (ring[i], ring[(i + 1) % ring.len()]);
        let side = cross(b - a, p - a);
        if a.y <= p.y && b.y > p.y && side > 0.0 {
            wn += 1;
        } else if a.y > p.y && b.y <= p.y && side < 0.0 {
            wn -= 1;
        }
    }
    wn
}

/// Clockwise angle from `from` to `to`, in [0, 2π).
fn cw_angle(from: Vec2, to: Vec2) -> f64 {
    let a = from.y.atan2(from.x) - to.y.atan2(to.x);
    let a = a.rem_euclid(std::f64::consts::TAU);
    if a >= std::f64::consts::TAU {
        0.0
    } else {
        a
    }
}

/// Gap below which a point counts as lying on an edge line.
const GAP_EPS: f64 = 1e-9;

struct Replay {
    pts: Vec<Pt>,
    events: Vec<ReplayEvent>,
    terminal: usize,
    t: f64,
    inconclusive: Option<String>,
}

impl Replay {
    fn new(rings: &[Vec<Vec2>], weights: &[f64]) -> Replay {
        let mut pts = Vec::new();
        let mut base = 0;
        for (r, ring) in rings.iter().enumerate() {
            let m = ring.len();
            let nested = rings
                .iter()
                .enumerate()
                .filter(|&(o, other)| o != r && winding(other, ring[0]) != 0)
                .count();
            let want_ccw = nested % 2 == 0;
            // (point, weight of the edge leaving it)
            let mut seq: Vec<(Vec2, f64)> = (0..m).map(|k| (ring[k], weights[base + k])).collect();
            if (area(ring) > 0.0) != want_ccw {
                seq = (0..m).map(|i| (ring[m - 1 - i], weights[base + (2 * m - 2 - i) % m])).collect();
            }
            let first = pts.len();
            for i in 0..m {
                let (a, w) = seq[i];
                let b = seq[(i + 1) % m].0;
                let d = b - a;
                let dir = d / len(d);
                pts.push(Pt {
                    pos: a,
                    vel: Vec2::ZERO,
                    next: first + (i + 1) % m,
                    prev: first + (i + m - 1) % m,
                    live: true,
                    done: false,
                    out: OutEdge { dir, normal: Vec2::new(dir.y, -dir.x), w },
                });
            }
            base += m;
        }
        Replay { pts, events: Vec::new(), terminal: 0, t: 0.0, inconclusive: None }
    }

    fn active(&self) -> Vec<usize> {
        (0..self.pts.len()).filter(|&i| self.pts[i].live && !self.pts[i].done).collect()
    }

    fn ring_of(&self, i: usize) -> Vec<usize> {
        let mut out = vec![i];
        let mut c = self.pts[i].next;
        while c != i && out.len() <= self.pts.len() {
            out.push(c);
            c = self.pts[c].next;
        }
        out
    }

    fn unlink(&mut self, i: usize) {
        let (p, n) = (self.pts[i].prev, self.pts[i].next);
        self.pts[p].next = n;
        self.pts[n].prev = p;
        self.pts[i].live = false;
    }

    /// Removes points whose two edges continue in the same direction; the
    /// merged edge keeps the data of the edge after the point.
    fn drop_straight(&mut self) {
        loop {
            let hit = self.active().into_iter().find(|&i| {
                let p = self.pts[i].prev;
                let (a, b) = (self.pts[p].out.dir, self.pts[i].out.dir);
                self.ring_of(i).len() > 2 && cross(a, b).abs() <= 1e-9 && dot(a, b) > 0.0
            });
            match hit {
                Some(i) => {
                    let p = self.pts[i].prev;
                    self.pts[p].out = self.pts[i].out;
                    self.unlink(i);
                }
                None => return,
            }
        }
    }

    fn velocities(&mut self) -> f64 {
        let mut vmax: f64 = 0.0;
        for i in self.active() {
            let e_in = self.pts[self.pts[i].prev].out;
            let e_out = self.pts[i].out;
            // inward speeds: -n·v = w on both edge lines
            let (a, b) = (e_in.normal * -1.0, e_out.normal * -1.0);
            let det = cross(a, b);
            if det.abs() <= 1e-9 {
                self.inconclusive = Some(format!("point {i} has antiparallel edges at t={}", self.t));
                self.pts[i].vel = Vec2::ZERO;
                continue;
            }
            let v = Vec2::new((e_in.w * b.y - e_out.w * a.y) / det, (a.x * e_out.w - b.x * e_in.w) / det);
            self.pts[i].vel = v;
            vmax = vmax.max(len(v));
        }
        vmax
    }

    /// A collapse and a contact at the same place count as one collapse.
    fn record(&mut self, at: Vec2, kind: ReplayKind, tol: f64) {
        let t = self.t;
        if let Some(e) = self.events.iter_mut().rev().take_while(|e| e.t == t).find(|e| len(e.at - at) <= tol) {
            e.kind = e.kind.min(kind);
            return;
        }
        self.events.push(ReplayEvent { t, at, kind });
    }

    fn collapses(&mut self, tol: f64) {
        loop {
            let hit = self.active().into_iter().find(|&i| {
                let n = self.pts[i].next;
                n != i && self.ring_of(i).len() > 2 && dot(self.pts[n].pos - self.pts[i].pos, self.pts[i].out.dir) <= 1e-9
            });
            let Some(i) = hit else { return };
            let n = self.pts[i].next;
            let mid = (self.pts[i].pos + self.pts[n].pos) * 0.5;
            self.pts[i].pos = mid;
            self.pts[i].out = self.pts[n].out;
            self.unlink(n);
            self.record(mid, ReplayKind::Collapse, tol);
        }
    }

    fn retire_small_loops(&mut self) {
        for i in self.active() {
            if self.pts[i].done {
                continue;
            }
            let ring = self.ring_of(i);
            if ring.len() <= 2 {
                for j in ring {
                    self.pts[j].done = true;
                }
                self.terminal += 1;
            }
        }
    }

    /// Finds vertices that crossed or touched another edge during the last
    /// step and resolves each contact group.
    fn contacts(&mut self, old: &[Vec2], snap: f64) {
        let act = self.active();
        let mut groups: Vec<Vec<usize>> = Vec::new();
        let mut anchors: Vec<(usize, Vec2)> = Vec::new();
        // (subject, edge start, foot) for crossings of an edge interior
        let mut interior: Vec<(usize, usize, Vec2)> = Vec::new();
        for &p in &act {
            for &a in &act {
                let b = self.pts[a].next;
                if a == p || b == p {
                    continue;
                }
                let e = self.pts[a].out;
                let g_old = dot(old[p] - old[a], e.normal);
                let g_new = dot(self.pts[p].pos - self.pts[a].pos, e.normal);
                // points already on the edge line (left there by a split) do not count
                if !(g_old < -GAP_EPS && g_new >= -GAP_EPS) {
                    continue;
                }
                let x = self.pts[p].pos;
                let (pa, pb) = (self.pts[a].pos, self.pts[b].pos);
                let s = dot(x - pa, e.dir);
                let l = dot(pb - pa, e.dir);
                if s < -snap || s > l + snap {
                    continue;
                }
                if len(x - pa) <= snap {
                    groups.push(vec![p, a]);
                } else if len(x - pb) <= snap {
                    groups.push(vec![p, b]);
                } else {
                    interior.push((p, a, pa + e.dir * s));
                }
            }
        }
        for (p, a, foot) in interior {
            // the edge may already carry a new point from another contact
            let mut a = a;
            loop {
                let n = self.pts[a].next;
                let ahead = dot(foot - self.pts[a].pos, self.pts[a].out.dir);
                let reach = dot(self.pts[n].pos - self.pts[a].pos, self.pts[a].out.dir);
                if n != a && ahead > reach && self.pts[n].out.dir == self.pts[a].out.dir {
                    a = n;
                } else {
                    break;
                }
            }
            let b = self.pts[a].next;
            let id = self.pts.len();
            let mut np = self.pts[a];
            np.pos = foot;
            np.prev = a;
            np.next = b;
            self.pts.push(np);
            self.pts[a].next = id;
            self.pts[b].prev = id;
            anchors.push((id, foot));
            groups.push(vec![p, id]);
        }
        if groups.is_empty() {
            return;
        }
        // merge groups sharing points or lying on top of each other
        let mut merged: Vec<Vec<usize>> = Vec::new();
        for g in groups {
            let centre = |v: &Vec<usize>, pts: &Vec<Pt>| v.iter().fold(Vec2::ZERO, |s, &i| s + pts[i].pos) / v.len() as f64;
            let c = centre(&g, &self.pts);
            match merged
                .iter_mut()
                .find(|m| m.iter().any(|i| g.contains(i)) || len(centre(m, &self.pts) - c) <= snap)
            {
                Some(m) => {
                    m.extend(g);
                    m.sort();
                    m.dedup();
                }
                None => merged.push(g),
            }
        }
        for mut group in merged {
            group.retain(|&i| self.pts[i].live && !self.pts[i].done);
            let at = anchors
                .iter()
                .find(|(i, _)| group.contains(i))
                .map(|&(_, p)| p)
                .unwrap_or_else(|| group.iter().fold(Vec2::ZERO, |s, &i| s + self.pts[i].pos) / group.len() as f64);
            // points joined by an edge inside the group collapse first
            while let Some(&i) = group.iter().find(|&&i| group.contains(&self.pts[i].next) && self.pts[i].next != i) {
                let n = self.pts[i].next;
                self.pts[i].out = self.pts[n].out;
                self.unlink(n);
                group.retain(|&x| x != n);
            }
            for &i in &group {
                self.pts[i].pos = at;
            }
            if group.len() >= 2 {
                self.pinch(&group, at);
            }
            self.record(at, ReplayKind::Split, snap);
        }
    }

    /// Reconnects points meeting at `at`: every incoming edge continues with
    /// the outgoing edge found first when turning clockwise from it.
    fn pinch(&mut self, group: &[usize], at: Vec2) {
        let dir_of = |q: Vec2, fallback: Vec2| {
            let d = q - at;
            if len(d) > 0.0 {
                d
            } else {
                fallback
            }
        };
        let ins: Vec<Vec2> = group
            .iter()
            .map(|&i| {
                let p = self.pts[i].prev;
                dir_of(self.pts[p].pos, self.pts[p].out.dir * -1.0)
            })
            .collect();
        let outs: Vec<(usize, OutEdge, Vec2)> = group
            .iter()
            .map(|&i| (self.pts[i].next, self.pts[i].out, dir_of(self.pts[self.pts[i].next].pos, self.pts[i].out.dir)))
            .collect();
        let mut used = vec![false; group.len()];
        let mut plan = vec![0usize; group.len()];
        for (k, &din) in ins.iter().enumerate() {
            let pick = (0..group.len())
                .filter(|&j| !used[j])
                .min_by(|&x, &y| cw_angle(din, outs[x].2).total_cmp(&cw_angle(din, outs[y].2)).then(x.cmp(&y)))
                .expect("as many outgoing as incoming edges");
            used[pick] = true;
            plan[k] = pick;
        }
        for (k, &i) in group.iter().enumerate() {
            let (next, out, _) = outs[plan[k]];
            self.pts[i].next = next;
            self.pts[i].out = out;
            self.pts[next].prev = i;
        }
    }
}

/// Replays the propagation with time step `h` until every loop is a point or
/// a segment, or until `t_max`. Weights are inward speeds per edge, listed
/// ring by ring with edge `k` running from point `k` to point `k+1`.
pub fn dense_replay(rings: &[Vec<Vec2>], weights: &[f64], h: f64, t_max: f64) -> ReplayResult {
    let mut r = Replay::new(rings, weights);
    let mut vmax: f64 = 0.0;
    r.drop_straight();
    let mut v = r.velocities();
    while r.t < t_max && !r.active().is_empty() && r.inconclusive.is_none() {
        vmax = vmax.max(v);
        let snap = 3.0 * h * v.max(1.0);
        let old: Vec<Vec2> = r.pts.iter().map(|p| p.pos).collect();
        for i in r.active() {
            let d = r.pts[i].vel * h;
            r.pts[i].pos += d;
        }
        r.t += h;
        r.collapses(snap);
        r.retire_small_loops();
        let mut old = old;
        old.resize(r.pts.len(), Vec2::ZERO);
        r.contacts(&old, snap);
        r.collapses(snap);
        r.retire_small_loops();
        r.drop_straight();
        r.retire_small_loops();
        v = r.velocities();
    }
    ReplayResult {
        events: r.events,
        terminal_loops: r.terminal,
        final_t: r.t,
        vmax,
        inconclusive: r.inconclusive,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventMatch {
    pub matched: usize,
    /// Engine events without a replay counterpart.
    pub unmatched_engine: Vec<ReplayEvent>,
    pub unmatched_replay: Vec<ReplayEvent>,
    pub max_time_error: f64,
    pub max_position_error: f64,
    /// Matched pairs appear in the same time order in both sequences.
    pub same_order: bool,
}

impl EventMatch {
    pub fn is_exact(&self) -> bool {
        self.unmatched_engine.is_empty() && self.unmatched_replay.is_empty() && self.same_order
    }
}

/// Pairs engine events with replay events of the same kind within `tol` in
/// time and position.
pub fn compare_events(engine: &[ReplayEvent], replay: &[ReplayEvent], tol: f64) -> EventMatch {
    let mut used = vec![false; replay.len()];
    let mut pairs = Vec::new();
    let mut unmatched_engine = Vec::new();
    let (mut dt_max, mut dp_max) = (0.0f64, 0.0f64);
    for (i, e) in engine.iter().enumerate() {
        let best = (0..replay.len())
            .filter(|&j| !used[j] && replay[j].kind == e.kind)
            .map(|j| (j, (replay[j].t - e.t).abs(), len(replay[j].at - e.at)))
            .filter(|&(_, dt, dp)| dt <= tol && dp <= tol)
            .min_by(|a, b| (a.1 + a.2).total_cmp(&(b.1 + b.2)));
        match best {
            Some((j, dt, dp)) => {
                used[j] = true;
                pairs.push((i, j));
                dt_max = dt_max.max(dt);
                dp_max = dp_max.max(dp);
            }
            None => unmatched_engine.push(*e),
        }
    }
    // order check on times: replay times are first-order, so only pairs
    // separated by more than the tolerance are compared
    let same_order = pairs.iter().all(|&(i, j)| {
        pairs.iter().all(|&(k, l)| {
            let de = engine[k].t - engine[i].t;
            let dr = replay[l].t - replay[j].t;
            de.abs() <= 2.0 * tol || de.signum() == dr.signum()
        })
    });
    EventMatch {
        matched: pairs.len(),
        unmatched_engine,
        unmatched_replay: (0..replay.len()).filter(|&j| !used[j]).map(|j| replay[j]).collect(),
        max_time_error: dt_max,
        max_position_error: dp_max,
        same_order,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(x: f64, y: f64) -> Vec2 {
        Vec2::new(x, y)
    }

    #[test]
    fn square_collapses_once() {
        let sq = vec![vec![p(0.0, 0.0), p(1.0, 0.0), p(1.0, 1.0), p(0.0, 1.0)]];
        let r = dense_replay(&sq, &[1.0; 4], 1e-3, 2.0);
        assert!(r.inconclusive.is_none());
        assert_eq!(r.terminal_loops, 1);
        assert_eq!(r.events.len(), 1);
        assert_eq!(r.events[0].kind, ReplayKind::Collapse);
        assert!((r.events[0].t - 0.5).abs() < 2e-3);
        assert!(len(r.events[0].at - p(0.5, 0.5)) < 2e-3);
    }

    #[test]
    fn clockwise_input_is_reoriented() {
        let sq = vec![vec![p(0.0, 1.0), p(1.0, 1.0), p(1.0, 0.0), p(0.0, 0.0)]];
        let r = dense_replay(&sq, &[1.0; 4], 1e-3, 2.0);
        assert_eq!(r.events.len(), 1);
        assert!((r.events[0].t - 0.5).abs() < 2e-3);
    }

    #[test]
    fn l_shape_splits_on_long_arm() {
        let l = vec![vec![p(0.0, 0.0), p(4.0, 0.0), p(4.0, 1.0), p(1.0, 1.0), p(1.0, 3.0), p(0.0, 3.0)]];
        let r = dense_replay(&l, &[1.0; 6], 1e-3, 5.0);
        assert!(r.inconclusive.is_none());
        assert_eq!(r.terminal_loops, 2);
        assert!(r.events.iter().any(|e| e.kind == ReplayKind::Split));
    }

    #[test]
    fn event_matching() {
        let e = |t: f64, x: f64, kind| ReplayEvent { t, at: p(x, 0.0), kind };
        let a = [e(0.1, 0.0, ReplayKind::Collapse), e(0.5, 1.0, ReplayKind::Split)];
        let b = [e(0.1005, 0.0, ReplayKind::Collapse), e(0.5, 1.0005, ReplayKind::Split)];
        let m = compare_events(&a, &b, 1e-3);
        assert!(m.is_exact());
        assert_eq!(m.matched, 2);
        let c = [e(0.1, 0.0, ReplayKind::Split)];
        assert!(!compare_events(&a, &c, 1e-3).is_exact());
    }
}

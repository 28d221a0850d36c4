//! Weighted skeleton of a convex polygon by direct line arithmetic: every
//! edge line moves inward at its weight, and an edge vanishes when its line
//! and both neighbours' lines pass through one point.

use crate::geom::Vec2;

#[derive(Debug, Clone, PartialEq)]
pub struct ConvexSkeleton {
    /// `(position, time)`; the first `n` entries are the input corners.
    pub nodes: Vec<(Vec2, f64)>,
    pub arcs: Vec<(usize, usize)>,
}

#[derive(Clone, Copy)]
struct Line {
    n: Vec2,
    c: f64,
    w: f64,
}

impl Line {
    /// Offset `n·x = c - w t`.
    fn meet(&self, o: &Line, t: f64) -> Option<Vec2> {
        let det = self.n.x * o.n.y - self.n.y * o.n.x;
        if det.abs() < 1e-15 {
            return None;
        }
        let (a, b) = (self.c - self.w * t, o.c - o.w * t);
        Some(Vec2::new((a * o.n.y - b * self.n.y) / det, (self.n.x * b - o.n.x * a) / det))
    }
}

fn det3(r: [[f64; 3]; 3]) -> f64 {
    r[0][0] * (r[1][1] * r[2][2] - r[1][2] * r[2][1]) - r[0][1] * (r[1][0] * r[2][2] - r[1][2] * r[2][0])
        + r[0][2] * (r[1][0] * r[2][1] - r[1][1] * r[2][0])
}

/// Time at which three moving lines become concurrent.
fn concurrency(a: &Line, b: &Line, c: &Line) -> Option<f64> {
    let rows = |f: &dyn Fn(&Line) -> f64| [[a.n.x, a.n.y, f(a)], [b.n.x, b.n.y, f(b)], [c.n.x, c.n.y, f(c)]];
    let d0 = det3(rows(&|l| l.c));
    let d1 = det3(rows(&|l| l.w));
    if d1.abs() < 1e-300 {
        return None;
    }
    Some(d0 / d1)
}

/// Counter-clockwise convex polygon with one positive weight per edge
/// (edge `k` from corner `k` to corner `k+1`).
pub fn convex_bisector_skeleton(corners: &[Vec2], weights: &[f64]) -> ConvexSkeleton {
    let n = corners.len();
    assert_eq!(n, weights.len());
    let lines: Vec<Line> = (0..n)
        .map(|k| {
            let (a, b) = (corners[k], corners[(k + 1) % n]);
            let d = b - a;
            let len = (d.x * d.x + d.y * d.y).sqrt();
            let nrm = Vec2::new(d.y / len, -d.x / len);
            Line { n: nrm, c: nrm.x * a.x + nrm.y * a.y, w: weights[k] }
        })
        .collect();
    let mut nodes: Vec<(Vec2, f64)> = corners.iter().map(|&p| (p, 0.0)).collect();
    let mut arcs = Vec::new();
    // active edges in order; corner i sits between edge i-1 and edge i
    let mut edges: Vec<usize> = (0..n).collect();
    // start node of the corner preceding each active edge
    let mut start: Vec<usize> = (0..n).collect();
    let mut t = 0.0;
    let dedupe = |nodes: &mut Vec<(Vec2, f64)>, p: Vec2, t: f64| -> usize {
        if let Some(i) = nodes.iter().skip(n).position(|&(q, s)| (s - t).abs() < 1e-9 && q.dist(p) < 1e-9) {
            return i + n;
        }
        nodes.push((p, t));
        nodes.len() - 1
    };
    while edges.len() > 3 {
        let m = edges.len();
        let mut best: Option<(f64, usize)> = None;
        for j in 0..m {
            let (a, b, c) = (&lines[edges[(j + m - 1) % m]], &lines[edges[j]], &lines[edges[(j + 1) % m]]);
            if let Some(tc) = concurrency(a, b, c) {
                if tc >= t - 1e-12 && best.is_none_or(|(bt, _)| tc < bt) {
                    best = Some((tc, j));
                }
            }
        }
        let (tc, j) = best.expect("a convex polygon always has a next event");
        t = tc;
        let (i, k) = ((j + m - 1) % m, (j + 1) % m);
        let p = lines[edges[i]].meet(&lines[edges[k]], t).unwrap_or_else(|| {
            lines[edges[i]].meet(&lines[edges[j]], t).expect("adjacent lines meet")
        });
        let node = dedupe(&mut nodes, p, t);
        for s in [start[j], start[k]] {
            if s != node {
                arcs.push((s, node));
            }
        }
        edges.remove(j);
        start.remove(j);
        let j = if j == m - 1 { 0 } else { j };
        start[j] = node;
    }
    let (a, b, c) = (&lines[edges[0]], &lines[edges[1]], &lines[edges[2]]);
    let tc = concurrency(a, b, c).expect("triangle collapses");
    let p = a.meet(b, tc).or_else(|| b.meet(c, tc)).or_else(|| c.meet(a, tc)).expect("two of three lines meet");
    let node = dedupe(&mut nodes, p, tc);
    for s in start {
        if s != node {
            arcs.push((s, node));
        }
    }
    ConvexSkeleton { nodes, arcs }
}

/// Counter-clockwise hull without collinear points (monotone chain).
pub fn convex_hull(points: &[Vec2]) -> Vec<Vec2> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let turn = |o: Vec2, a: Vec2, b: Vec2| (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
    let mut lower: Vec<Vec2> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && turn(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<Vec2> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && turn(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

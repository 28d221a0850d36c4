//! Roof triangulation: each face loop is ear-clipped in plan (or in its own
//! plane when vertical), then lifted to the recorded node heights. When the
//! vertical rate changes over time, triangles are cut along the iso-time
//! lines of the rate changes so every band stays planar.

use std::collections::HashMap;

use crate::geom::{signed_area, Vec2, Vec3};
use crate::skeleton::{Face, SkeletonGraph};

/// Height as a function of propagation time: a list of `(t0, z0, vz)`
/// segments sorted by `t0`.
#[derive(Debug, Clone, PartialEq)]
pub struct HeightTrack(pub Vec<(f64, f64, f64)>);

impl HeightTrack {
    pub fn new(vz: f64) -> Self {
        HeightTrack(vec![(0.0, 0.0, vz)])
    }

    /// Records that from `(t, z)` on, height grows at rate `vz`.
    pub fn push(&mut self, t: f64, z: f64, vz: f64) {
        if let Some(last) = self.0.last_mut() {
            if last.2 == vz {
                return;
            }
            if last.0 == t {
                *last = (t, z, vz);
                return;
            }
        }
        self.0.push((t, z, vz));
    }

    pub fn z_at(&self, t: f64) -> f64 {
        let seg = self.0.iter().rev().find(|s| s.0 <= t).unwrap_or(&self.0[0]);
        seg.1 + seg.2 * (t - seg.0)
    }

    /// Times at which the rate changes.
    pub fn kinks(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.0.iter().skip(1).map(|s| (s.0, s.1))
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Mesh {
    pub vertices: Vec<Vec3>,
    pub triangles: Vec<[usize; 3]>,
    /// Face id of each triangle.
    pub faces: Vec<u32>,
}

impl Mesh {
    fn vertex(&mut self, index: &mut HashMap<[u64; 3], usize>, p: Vec3) -> usize {
        let key = [p.x.to_bits(), p.y.to_bits(), p.z.to_bits()];
        *index.entry(key).or_insert_with(|| {
            self.vertices.push(p);
            self.vertices.len() - 1
        })
    }

    /// Sum of triangle areas projected onto the plane.
    pub fn plan_area(&self) -> f64 {
        self.triangles
            .iter()
            .map(|t| {
                let [a, b, c] = t.map(|i| self.vertices[i].xy());
                0.5 * (b - a).cross(c - a)
            })
            .sum()
    }
}

/// Ear clipping of a simple polygon. Returns index triples, counter-clockwise
/// when the input is counter-clockwise. Zero-area ears are dropped.
pub fn ear_clip(pts: &[Vec2]) -> Vec<[usize; 3]> {
    let mut idx: Vec<usize> = (0..pts.len()).collect();
    let ccw = signed_area(pts) >= 0.0;
    if !ccw {
        idx.reverse();
    }
    let scale = pts.iter().fold(0.0f64, |m, p| m.max(p.x.abs()).max(p.y.abs())).max(1e-300);
    let tiny = 1e-14 * scale * scale;
    let mut out = Vec::new();
    while idx.len() > 3 {
        let n = idx.len();
        let mut ear = None;
        let mut flat = None;
        for k in 0..n {
            let (a, b, c) = (idx[(k + n - 1) % n], idx[k], idx[(k + 1) % n]);
            let (pa, pb, pc) = (pts[a], pts[b], pts[c]);
            let turn = (pb - pa).cross(pc - pb);
            if turn.abs() <= tiny {
                flat.get_or_insert(k);
                continue;
            }
            if turn < 0.0 {
                continue;
            }
            let blocked = idx.iter().any(|&o| {
                let po = pts[o];
                if po == pa || po == pb || po == pc {
                    return false;
                }
                (pb - pa).cross(po - pa) >= -tiny
                    && (pc - pb).cross(po - pb) >= -tiny
                    && (pa - pc).cross(po - pc) >= -tiny
            });
            if !blocked {
                ear = Some(k);
                break;
            }
        }
        let k = match (ear, flat) {
            (Some(k), _) => {
                let (a, b, c) = (idx[(k + n - 1) % n], idx[k], idx[(k + 1) % n]);
                out.push(if ccw { [a, b, c] } else { [c, b, a] });
                k
            }
            (None, Some(k)) => k,
            // not simple; fall back to the first convex corner
            (None, None) => (0..n)
                .find(|&k| {
                    let (a, b, c) = (idx[(k + n - 1) % n], idx[k], idx[(k + 1) % n]);
                    (pts[b] - pts[a]).cross(pts[c] - pts[b]) > 0.0
                })
                .inspect(|&k| {
                    let (a, b, c) = (idx[(k + n - 1) % n], idx[k], idx[(k + 1) % n]);
                    out.push(if ccw { [a, b, c] } else { [c, b, a] });
                })
                .unwrap_or(0),
        };
        idx.remove(k);
    }
    if idx.len() == 3 {
        let (a, b, c) = (idx[0], idx[1], idx[2]);
        if (pts[b] - pts[a]).cross(pts[c] - pts[b]) > tiny {
            out.push(if ccw { [a, b, c] } else { [c, b, a] });
        }
    }
    out
}

#[derive(Debug, Clone, Copy)]
struct Corner {
    pos: Vec2,
    t: f64,
    z: f64,
}

impl Corner {
    fn key(&self) -> (u64, u64, u64) {
        (self.pos.x.to_bits(), self.pos.y.to_bits(), self.t.to_bits())
    }
}

fn cut_point(a: Corner, b: Corner, tau: f64, z: f64) -> Corner {
    // same arithmetic regardless of edge direction
    let (a, b) = if a.key() <= b.key() { (a, b) } else { (b, a) };
    let s = (tau - a.t) / (b.t - a.t);
    Corner { pos: a.pos.lerp(b.pos, s), t: tau, z }
}

/// Splits a convex polygon at time `tau` into the parts before and after.
fn split_at(poly: &[Corner], tau: f64, z: f64) -> (Vec<Corner>, Vec<Corner>) {
    let (mut lo, mut hi) = (Vec::new(), Vec::new());
    for i in 0..poly.len() {
        let (a, b) = (poly[i], poly[(i + 1) % poly.len()]);
        if a.t <= tau {
            lo.push(a);
        }
        if a.t >= tau {
            hi.push(a);
        }
        if (a.t < tau && b.t > tau) || (a.t > tau && b.t < tau) {
            let c = cut_point(a, b, tau, z);
            lo.push(c);
            hi.push(c);
        }
    }
    (lo, hi)
}

pub fn build_roof_mesh(graph: &SkeletonGraph, faces: &[Face], track: &HeightTrack) -> Mesh {
    let mut mesh = Mesh::default();
    let mut index = HashMap::new();
    let kinks: Vec<(f64, f64)> = track.kinks().collect();
    for face in faces {
        let corners: Vec<Corner> = face
            .nodes
            .iter()
            .map(|&n| {
                let node = graph.node(n);
                Corner { pos: node.pos, t: node.t, z: node.z }
            })
            .collect();
        if corners.len() < 3 {
            continue;
        }
        let pts3: Vec<Vec3> = corners.iter().map(|c| c.pos.extend(c.z)).collect();
        let normal = newell(&pts3);
        let len = normal.norm();
        if !(len > 0.0) {
            continue;
        }
        if normal.z.abs() <= 1e-9 * len {
            // vertical wall: work in the wall's own plane
            let Some(h) = Vec2::new(normal.x, normal.y).perp().normalized() else {
                continue;
            };
            let flat: Vec<Vec2> = corners.iter().map(|c| Vec2::new(c.pos.dot(h), c.z)).collect();
            for tri in ear_clip(&flat) {
                let ids = tri.map(|i| mesh.vertex(&mut index, pts3[i]));
                mesh.triangles.push(ids);
                mesh.faces.push(face.face);
            }
            continue;
        }
        let plan: Vec<Vec2> = corners.iter().map(|c| c.pos).collect();
        for tri in ear_clip(&plan) {
            let mut pieces = vec![tri.map(|i| corners[i]).to_vec()];
            for &(tau, z) in &kinks {
                let mut next = Vec::new();
                for poly in pieces {
                    let (lo, hi) = split_at(&poly, tau, z);
                    next.extend([lo, hi].into_iter().filter(|p| p.len() >= 3));
                }
                pieces = next;
            }
            for poly in pieces {
                for k in 1..poly.len() - 1 {
                    let (a, b, c) = (poly[0], poly[k], poly[k + 1]);
                    if (b.pos - a.pos).cross(c.pos - a.pos).abs() == 0.0 {
                        continue;
                    }
                    let ids = [a, b, c].map(|p| mesh.vertex(&mut index, p.pos.extend(p.z)));
                    mesh.triangles.push(ids);
                    mesh.faces.push(face.face);
                }
            }
        }
    }
    mesh
}

fn newell(pts: &[Vec3]) -> Vec3 {
    let mut n = Vec3::ZERO;
    for i in 0..pts.len() {
        let (a, b) = (pts[i], pts[(i + 1) % pts.len()]);
        n.x += (a.y - b.y) * (a.z + b.z);
        n.y += (a.z - b.z) * (a.x + b.x);
        n.z += (a.x - b.x) * (a.y + b.y);
    }
    n
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn area_of(pts: &[Vec2], tris: &[[usize; 3]]) -> f64 {
        tris.iter()
            .map(|t| 0.5 * (pts[t[1]] - pts[t[0]]).cross(pts[t[2]] - pts[t[0]]))
            .sum()
    }

    #[test]
    fn ear_clip_l_shape() {
        let pts = [(0.0, 0.0), (2.0, 0.0), (2.0, 1.0), (1.0, 1.0), (1.0, 2.0), (0.0, 2.0)]
            .map(|(x, y)| Vec2::new(x, y));
        let tris = ear_clip(&pts);
        assert_eq!(tris.len(), 4);
        assert!((area_of(&pts, &tris) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn ear_clip_skips_collinear_points() {
        let pts = [(0.0, 0.0), (1.0, 0.0), (2.0, 0.0), (1.0, 1.0)].map(|(x, y)| Vec2::new(x, y));
        let tris = ear_clip(&pts);
        assert!((area_of(&pts, &tris) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn height_track_kinks() {
        let mut h = HeightTrack::new(1.0);
        h.push(0.25, 0.25, 0.5);
        assert_eq!(h.z_at(0.1), 0.1);
        assert_eq!(h.z_at(0.75), 0.5);
        assert_eq!(h.kinks().collect::<Vec<_>>(), vec![(0.25, 0.25)]);
        // pushing the same rate is a no-op
        h.push(0.5, 0.375, 0.5);
        assert_eq!(h.0.len(), 2);
    }

    #[test]
    fn split_keeps_area() {
        let c = |x: f64, y: f64, t: f64| Corner { pos: Vec2::new(x, y), t, z: t };
        let tri = [c(0.0, 0.0, 0.0), c(1.0, 0.0, 0.0), c(0.5, 0.5, 0.5)];
        let (lo, hi) = split_at(&tri, 0.25, 0.25);
        let a = |p: &[Corner]| signed_area(&p.iter().map(|c| c.pos).collect::<Vec<_>>());
        assert!((a(&lo) + a(&hi) - 0.25).abs() < 1e-15);
        assert!(hi.iter().all(|c| c.t >= 0.25));
    }

    proptest! {
        /// Star-shaped polygons triangulate into n-2 triangles covering the area.
        #[test]
        fn ear_clip_covers_star(radii in proptest::collection::vec(0.3f64..2.0, 3..20)) {
            let n = radii.len();
            let pts: Vec<Vec2> = radii.iter().enumerate().map(|(i, r)| {
                let a = i as f64 / n as f64 * std::f64::consts::TAU;
                Vec2::new(r * a.cos(), r * a.sin())
            }).collect();
            let tris = ear_clip(&pts);
            prop_assert_eq!(tris.len(), n - 2);
            prop_assert!((area_of(&pts, &tris) - signed_area(&pts)).abs() < 1e-9);
            for t in &tris {
                prop_assert!((pts[t[1]] - pts[t[0]]).cross(pts[t[2]] - pts[t[0]]) > 0.0);
            }
        }
    }
}

//! Skeleton JSON, layered SVG and OBJ roof output.

use std::fmt::Write;

use serde::Serialize;

use crate::engine::{Engine, Output, Status};
use crate::geom::Vec2;
use crate::skeleton::NodeKind;

#[derive(Serialize)]
struct NodeOut {
    x: f64,
    y: f64,
    z: f64,
    t: f64,
    kind: NodeKind,
}

#[derive(Serialize)]
struct ArcOut {
    a: u32,
    b: u32,
    left: u32,
    right: u32,
    ridge: bool,
}

#[derive(Serialize)]
struct FaceOut {
    face: u32,
    input_edge: u32,
    nodes: Vec<u32>,
    area: f64,
}

#[derive(Serialize)]
struct SkeletonOut {
    status: Status,
    z: f64,
    nodes: Vec<NodeOut>,
    arcs: Vec<ArcOut>,
    faces: Vec<FaceOut>,
}

pub fn skeleton_json(engine: &Engine, out: &Output) -> String {
    let doc = SkeletonOut {
        status: engine.status(),
        z: engine.z(),
        nodes: out
            .nodes
            .iter()
            .map(|n| NodeOut { x: n.pos.x, y: n.pos.y, z: n.z, t: n.t, kind: n.kind })
            .collect(),
        arcs: out
            .arcs
            .iter()
            .map(|a| ArcOut { a: a.a.0, b: a.b.0, left: a.left, right: a.right, ridge: a.ridge })
            .collect(),
        faces: out
            .faces
            .iter()
            .map(|f| FaceOut {
                face: f.face,
                input_edge: f.input_edge,
                nodes: f.nodes.iter().map(|n| n.0).collect(),
                area: f.area,
            })
            .collect(),
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("skeleton serializes");
    s.push('\n');
    s
}

/// ASCII OBJ with z up; one group per face.
pub fn roof_obj(out: &Output) -> String {
    let mesh = &out.mesh;
    let mut s = String::from("# roof mesh\n");
    for v in &mesh.vertices {
        writeln!(s, "v {} {} {}", v.x, v.y, v.z).unwrap();
    }
    let mut group = None;
    for (t, &face) in mesh.triangles.iter().zip(&mesh.faces) {
        if group != Some(face) {
            writeln!(s, "g face_{face}").unwrap();
            group = Some(face);
        }
        writeln!(s, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1).unwrap();
    }
    s
}

fn kind_colour(k: NodeKind) -> &'static str {
    match k {
        NodeKind::Input => "black",
        NodeKind::Bend => "gray",
        NodeKind::Colinear => "orange",
        NodeKind::Collapse => "blue",
        NodeKind::Split => "green",
        NodeKind::Terminal => "purple",
    }
}

fn path_data(rings: &[Vec<Vec2>], flip: impl Fn(Vec2) -> (f64, f64)) -> String {
    let mut d = String::new();
    for ring in rings.iter().filter(|r| !r.is_empty()) {
        for (i, &p) in ring.iter().enumerate() {
            let (x, y) = flip(p);
            write!(d, "{}{x:.6} {y:.6} ", if i == 0 { "M" } else { "L" }).unwrap();
        }
        d.push_str("Z ");
    }
    d.trim_end().to_string()
}

/// Layers: input (black), offsets (graded grey), arcs (red), event nodes
/// (circles coloured by kind).
pub fn svg(engine: &Engine, out: &Output) -> String {
    let input = engine.input();
    let snaps = engine.snapshots();
    let mut lo = Vec2::new(f64::INFINITY, f64::INFINITY);
    let mut hi = Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    let pts = input
        .iter()
        .flatten()
        .chain(snaps.iter().flat_map(|s| s.loops.iter().flatten()))
        .copied()
        .chain(out.nodes.iter().map(|n| n.pos));
    for p in pts {
        lo = Vec2::new(lo.x.min(p.x), lo.y.min(p.y));
        hi = Vec2::new(hi.x.max(p.x), hi.y.max(p.y));
    }
    let ext = (hi.x - lo.x).max(hi.y - lo.y).max(1e-12);
    let pad = 0.05 * ext;
    let flip = |p: Vec2| (p.x, lo.y + hi.y - p.y);
    let sw = ext / 400.0;
    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="{} {} {} {}">"#,
        lo.x - pad,
        lo.y - pad,
        hi.x - lo.x + 2.0 * pad,
        hi.y - lo.y + 2.0 * pad
    )
    .unwrap();
    writeln!(s, r#"<g id="offsets" fill="none" stroke-width="{sw}">"#).unwrap();
    let k = snaps.len().max(1) as f64;
    for (i, snap) in snaps.iter().enumerate() {
        let grey = (80.0 + 150.0 * i as f64 / k) as u8;
        writeln!(
            s,
            r#"<path stroke="rgb({grey},{grey},{grey})" d="{}"/>"#,
            path_data(&snap.loops, flip)
        )
        .unwrap();
    }
    s.push_str("</g>\n");
    writeln!(s, r#"<g id="input" fill="none" stroke="black" stroke-width="{}">"#, 2.0 * sw).unwrap();
    writeln!(s, r#"<path d="{}"/>"#, path_data(&input, flip)).unwrap();
    s.push_str("</g>\n");
    writeln!(s, r#"<g id="arcs" stroke="red" stroke-width="{}">"#, 1.5 * sw).unwrap();
    for a in &out.arcs {
        let (x1, y1) = flip(out.nodes[a.a.idx()].pos);
        let (x2, y2) = flip(out.nodes[a.b.idx()].pos);
        writeln!(s, r#"<line x1="{x1:.6}" y1="{y1:.6}" x2="{x2:.6}" y2="{y2:.6}"/>"#).unwrap();
    }
    s.push_str("</g>\n<g id=\"nodes\">\n");
    for n in out.nodes.iter().filter(|n| n.kind != NodeKind::Input) {
        let (x, y) = flip(n.pos);
        writeln!(
            s,
            r#"<circle class="{}" cx="{x:.6}" cy="{y:.6}" r="{}" fill="{}"/>"#,
            serde_json::to_value(n.kind).unwrap().as_str().unwrap(),
            4.0 * sw,
            kind_colour(n.kind)
        )
        .unwrap();
    }
    s.push_str("</g>\n</svg>\n");
    s
}

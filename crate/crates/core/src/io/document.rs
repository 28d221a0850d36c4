//! Polygon input documents.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::Vec2;
use crate::velocity::alpha_to_weight;
use crate::wavefront::{EdgeInit, MAX_WEIGHT};

#[derive(Debug, Error, Clone, PartialEq)]
#[error("{path}: {reason}")]
pub struct DocumentError {
    pub path: String,
    pub reason: String,
}

impl DocumentError {
    fn at(path: impl Into<String>, reason: impl Into<String>) -> Self {
        DocumentError { path: path.into(), reason: reason.into() }
    }
}

/// Slope attribute of one edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EdgeSpec {
    /// Roof inclination in radians, in (0, π).
    Alpha(f64),
    /// Inward speed relative to the vertical rate.
    Weight(f64),
    Stationary,
}

impl EdgeSpec {
    pub fn weight(self) -> f64 {
        match self {
            EdgeSpec::Alpha(a) => alpha_to_weight(a),
            EdgeSpec::Weight(w) => w,
            EdgeSpec::Stationary => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleEntry {
    pub z: f64,
    pub vz: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolygonDocument {
    pub loops: Vec<Vec<Vec2>>,
    /// One entry per edge, loop by loop; edge `k` runs from point `k` to
    /// point `k+1`.
    pub edges: Vec<EdgeSpec>,
    pub schedule: Vec<ScheduleEntry>,
    /// Empty, or one start time per edge.
    pub start_times: Vec<f64>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEdge {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    weight: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    stationary: Option<bool>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDocument {
    loops: Vec<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    edges: Vec<RawEdge>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    schedule: Vec<ScheduleEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    start_times: Vec<f64>,
}

fn edge_spec(e: &RawEdge, path: &str) -> Result<EdgeSpec, DocumentError> {
    let set = [e.alpha.is_some(), e.weight.is_some(), e.stationary.is_some()];
    if set.iter().filter(|&&s| s).count() != 1 {
        return Err(DocumentError::at(path, "exactly one of alpha, weight, stationary is required"));
    }
    if let Some(a) = e.alpha {
        if !(a > 0.0 && a < std::f64::consts::PI) {
            return Err(DocumentError::at(path, format!("alpha {a} outside (0, π)")));
        }
        return Ok(EdgeSpec::Alpha(a));
    }
    if let Some(w) = e.weight {
        if !(w.abs() <= MAX_WEIGHT) {
            return Err(DocumentError::at(path, format!("weight {w} outside [-{MAX_WEIGHT}, {MAX_WEIGHT}]")));
        }
        return Ok(EdgeSpec::Weight(w));
    }
    match e.stationary {
        Some(true) => Ok(EdgeSpec::Stationary),
        _ => Err(DocumentError::at(path, "stationary must be true when given")),
    }
}

/// Parses and validates a document. A ring may repeat its first point at
/// the end; the repeat is dropped. Without `edges` every edge gets weight 1.
pub fn parse_document(bytes: &[u8]) -> Result<PolygonDocument, DocumentError> {
    let raw: RawDocument =
        serde_json::from_slice(bytes).map_err(|e| DocumentError::at("$", e.to_string()))?;
    if raw.loops.is_empty() {
        return Err(DocumentError::at("loops", "at least one ring is required"));
    }
    let mut loops = Vec::with_capacity(raw.loops.len());
    for (r, ring) in raw.loops.iter().enumerate() {
        let mut pts: Vec<Vec2> = Vec::with_capacity(ring.len());
        for (i, &[x, y]) in ring.iter().enumerate() {
            let p = Vec2::try_new(x, y)
                .ok_or_else(|| DocumentError::at(format!("loops[{r}][{i}]"), "coordinates must be finite"))?;
            pts.push(p);
        }
        if pts.len() > 1 && pts.first() == pts.last() {
            pts.pop();
        }
        if pts.len() < 3 {
            return Err(DocumentError::at(format!("loops[{r}]"), "ring requires ≥3 points"));
        }
        loops.push(pts);
    }
    let n: usize = loops.iter().map(Vec::len).sum();
    let edges = if raw.edges.is_empty() {
        vec![EdgeSpec::Weight(1.0); n]
    } else {
        if raw.edges.len() != n {
            return Err(DocumentError::at("edges", format!("{} entries for {n} edges", raw.edges.len())));
        }
        raw.edges
            .iter()
            .enumerate()
            .map(|(k, e)| edge_spec(e, &format!("edges[{k}]")))
            .collect::<Result<_, _>>()?
    };
    let mut prev_z = f64::NEG_INFINITY;
    for (i, s) in raw.schedule.iter().enumerate() {
        if !s.z.is_finite() || s.z <= prev_z {
            return Err(DocumentError::at(format!("schedule[{i}].z"), "heights must be finite and increasing"));
        }
        if !(s.vz > 0.0 && s.vz.is_finite()) {
            return Err(DocumentError::at(format!("schedule[{i}].vz"), "rate must be finite and positive"));
        }
        prev_z = s.z;
    }
    if !raw.start_times.is_empty() {
        if raw.start_times.len() != n {
            return Err(DocumentError::at(
                "start_times",
                format!("{} entries for {n} edges", raw.start_times.len()),
            ));
        }
        if let Some(k) = raw.start_times.iter().position(|t| !(*t >= 0.0 && t.is_finite())) {
            return Err(DocumentError::at(format!("start_times[{k}]"), "start time must be finite and ≥ 0"));
        }
    }
    Ok(PolygonDocument { loops, edges, schedule: raw.schedule, start_times: raw.start_times })
}

impl PolygonDocument {
    pub fn to_json(&self) -> String {
        let raw = RawDocument {
            loops: self.loops.iter().map(|r| r.iter().map(|p| [p.x, p.y]).collect()).collect(),
            edges: self
                .edges
                .iter()
                .map(|e| match *e {
                    EdgeSpec::Alpha(a) => RawEdge { alpha: Some(a), ..RawEdge::default() },
                    EdgeSpec::Weight(w) => RawEdge { weight: Some(w), ..RawEdge::default() },
                    EdgeSpec::Stationary => RawEdge { stationary: Some(true), ..RawEdge::default() },
                })
                .collect(),
            schedule: self.schedule.clone(),
            start_times: self.start_times.clone(),
        };
        serde_json::to_string(&raw).expect("document serializes")
    }

    pub fn edge_count(&self) -> usize {
        self.loops.iter().map(Vec::len).sum()
    }

    pub fn edge_inits(&self) -> Vec<EdgeInit> {
        self.edges
            .iter()
            .enumerate()
            .map(|(k, e)| EdgeInit { weight: e.weight(), start_time: self.start_times.get(k).copied().unwrap_or(0.0) })
            .collect()
    }

    pub fn schedule_pairs(&self) -> Vec<(f64, f64)> {
        self.schedule.iter().map(|s| (s.z, s.vz)).collect()
    }

    pub fn has_start_times(&self) -> bool {
        self.start_times.iter().any(|&t| t > 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    const SQUARE: &str = r#"{"loops":[[[0,0],[1,0],[1,1],[0,1]]],"edges":[{"weight":1},{"weight":1},{"weight":1},{"weight":1}]}"#;

    #[test]
    fn square_weights_are_45_degrees() {
        let d = parse_document(SQUARE.as_bytes()).unwrap();
        assert_eq!(d.edge_count(), 4);
        for e in &d.edges {
            let w = e.weight();
            assert_eq!(w, 1.0);
            assert!((crate::velocity::weight_to_alpha(w) - FRAC_PI_4).abs() < 1e-15);
        }
    }

    #[test]
    fn stationary_edge() {
        let d = parse_document(
            br#"{"loops":[[[0,0],[1,0],[1,1],[0,1]]],"edges":[{"stationary":true},{"weight":1},{"weight":1},{"weight":1}]}"#,
        )
        .unwrap();
        assert_eq!(d.edges[0], EdgeSpec::Stationary);
        assert_eq!(d.edges[0].weight(), 0.0);
        assert!((crate::velocity::weight_to_alpha(0.0) - FRAC_PI_2).abs() < 1e-15);
    }

    #[test]
    fn short_ring_is_rejected() {
        let e = parse_document(br#"{"loops":[[[0,0],[1,0]]]}"#).unwrap_err();
        assert_eq!(e.path, "loops[0]");
        assert_eq!(e.reason, "ring requires ≥3 points");
    }

    #[test]
    fn closing_point_is_dropped() {
        let d = parse_document(br#"{"loops":[[[0,0],[1,0],[1,1],[0,0]]]}"#).unwrap();
        assert_eq!(d.loops[0].len(), 3);
        assert_eq!(d.edges.len(), 3);
    }

    #[test]
    fn validation_paths() {
        let bad = [
            (r#"{"loops":[[[0,0],[1,0],[1,1]]],"edges":[{"alpha":4},{"weight":1},{"weight":1}]}"#, "edges[0]"),
            (r#"{"loops":[[[0,0],[1,0],[1,1]]],"edges":[{"weight":1}]}"#, "edges"),
            (r#"{"loops":[[[0,0],[1,0],[1,1]]],"edges":[{"weight":1,"alpha":1},{"weight":1},{"weight":1}]}"#, "edges[0]"),
            (r#"{"loops":[[[0,0],[1,0],[1,1]]],"schedule":[{"z":0,"vz":0}]}"#, "schedule[0].vz"),
            (r#"{"loops":[[[0,0],[1,0],[1,1]]],"start_times":[0,1]}"#, "start_times"),
            (r#"{"loops":[]}"#, "loops"),
            (r#"{"loops":[[[0,0],[1,0],[1,1]]],"extra":1}"#, "$"),
        ];
        for (doc, path) in bad {
            assert_eq!(parse_document(doc.as_bytes()).unwrap_err().path, path, "{doc}");
        }
    }

    fn arb_doc() -> impl Strategy<Value = PolygonDocument> {
        (3usize..8).prop_flat_map(|n| {
            (
                prop::collection::vec((-1e6f64..1e6, -1e6f64..1e6), n),
                prop::collection::vec(
                    prop_oneof![
                        (0.01f64..3.1).prop_map(EdgeSpec::Alpha),
                        (-10.0f64..10.0).prop_map(EdgeSpec::Weight),
                        Just(EdgeSpec::Stationary)
                    ],
                    n,
                ),
                prop::collection::vec((0.0f64..10.0, 0.1f64..5.0), 0..3),
                prop::option::of(prop::collection::vec(0.0f64..2.0, n)),
            )
                .prop_map(|(pts, edges, sched, starts)| {
                    let mut z = -1.0;
                    let schedule = sched
                        .into_iter()
                        .map(|(dz, vz)| {
                            z += dz + 0.5;
                            ScheduleEntry { z, vz }
                        })
                        .collect();
                    PolygonDocument {
                        loops: vec![pts.into_iter().map(|(x, y)| Vec2::new(x, y)).collect()],
                        edges,
                        schedule,
                        start_times: starts.unwrap_or_default(),
                    }
                })
        })
    }

    proptest! {
        #[test]
        fn round_trip(doc in arb_doc()) {
            prop_assume!(doc.loops[0].first() != doc.loops[0].last());
            let back = parse_document(doc.to_json().as_bytes()).unwrap();
            prop_assert_eq!(back, doc);
        }
    }
}

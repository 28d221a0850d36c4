//! Interactive sessions: an engine plus the journal of everything applied to
//! it since creation. Undo rebuilds from the document and replays the
//! journal minus its last entry.

use serde::{Deserialize, Serialize};

use crate::engine::{AdvanceReport, Engine, EngineError, EngineOptions, Status};
use crate::geom::Vec2;
use crate::io::document::{PolygonDocument, ScheduleEntry};
use crate::io::export;
use crate::skeleton::NodeKind;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Edit {
    SetAlpha { #[serde(rename = "loop")] loop_index: usize, edge: usize, alpha: f64 },
    InsertVertex { #[serde(rename = "loop")] loop_index: usize, edge: usize, point: [f64; 2] },
    RemoveVertex { id: u32 },
    SetSchedule(Vec<ScheduleEntry>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JournalEntry {
    Step { dz: f64, pause_at_event: bool },
    Edit(Edit),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExportFormat {
    Json,
    Svg,
    Obj,
}

#[derive(Debug, Clone)]
pub struct Session {
    doc: PolygonDocument,
    opts: EngineOptions,
    engine: Engine,
    journal: Vec<JournalEntry>,
}

#[derive(Debug, Clone, Serialize)]
pub struct VertexOut {
    pub id: u32,
    pub pos: [f64; 2],
    pub vel: [f64; 3],
    pub alpha: f64,
    pub frozen: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct LoopOut {
    pub hole: bool,
    pub vertices: Vec<VertexOut>,
}

#[derive(Debug, Clone, Serialize)]
pub struct NodeOut {
    pub pos: [f64; 2],
    pub z: f64,
    pub kind: NodeKind,
}

/// Trajectory still being traced: from `node` to the vertex's position.
#[derive(Debug, Clone, Serialize)]
pub struct OpenArcOut {
    pub node: u32,
    pub to: [f64; 2],
}

#[derive(Debug, Clone, Serialize)]
pub struct SkeletonSoFar {
    pub nodes: Vec<NodeOut>,
    pub arcs: Vec<[u32; 2]>,
    pub open: Vec<OpenArcOut>,
}

#[derive(Debug, Clone, Serialize)]
pub struct StateView {
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fault: Option<String>,
    pub z: f64,
    pub t: f64,
    pub loops: Vec<LoopOut>,
    pub skeleton: SkeletonSoFar,
    pub journal_len: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct StepResult {
    pub advanced_dz: f64,
    pub increments: usize,
    pub events: usize,
    pub status: Status,
    pub z: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fault: Option<String>,
}

fn xy(p: Vec2) -> [f64; 2] {
    [p.x, p.y]
}

impl Session {
    pub fn new(doc: PolygonDocument, opts: EngineOptions) -> Result<Session, EngineError> {
        let engine = Engine::new(&doc.loops, &doc.edge_inits(), &doc.schedule_pairs(), opts)?;
        Ok(Session { doc, opts, engine, journal: Vec::new() })
    }

    pub fn engine(&self) -> &Engine {
        &self.engine
    }

    pub fn journal(&self) -> &[JournalEntry] {
        &self.journal
    }

    pub fn document(&self) -> &PolygonDocument {
        &self.doc
    }

    /// A step that faults is still journaled: replay reproduces the fault.
    pub fn step(&mut self, dz: f64, pause_at_event: bool) -> Result<StepResult, EngineError> {
        let res = self.engine.advance(dz, pause_at_event);
        let report = match res {
            Ok(r) => r,
            Err(EngineError::Fault(_)) => AdvanceReport {
                advanced_dz: 0.0,
                increments: 0,
                events: 0,
                status: Status::Faulted,
            },
            Err(e) => return Err(e),
        };
        self.journal.push(JournalEntry::Step { dz, pause_at_event });
        Ok(StepResult {
            advanced_dz: report.advanced_dz,
            increments: report.increments,
            events: report.events,
            status: self.engine.status(),
            z: self.engine.z(),
            fault: self.engine.fault().map(str::to_string),
        })
    }

    /// Applies an edit. A failed edit leaves the session unchanged.
    pub fn edit(&mut self, edit: Edit) -> Result<Option<u32>, EngineError> {
        let mut next = self.engine.clone();
        let created = apply_edit(&mut next, &edit)?;
        self.engine = next;
        self.journal.push(JournalEntry::Edit(edit));
        Ok(created)
    }

    /// Drops the last journal entry. Returns false when there is nothing to undo.
    pub fn undo(&mut self) -> Result<bool, EngineError> {
        let Some(_) = self.journal.pop() else { return Ok(false) };
        let rebuilt = Session::replay(self.doc.clone(), self.opts, &self.journal)?;
        *self = rebuilt;
        Ok(true)
    }

    /// Rebuilds a session from a document and a journal.
    pub fn replay(doc: PolygonDocument, opts: EngineOptions, journal: &[JournalEntry]) -> Result<Session, EngineError> {
        let mut s = Session::new(doc, opts)?;
        for entry in journal {
            match entry {
                JournalEntry::Step { dz, pause_at_event } => {
                    s.step(*dz, *pause_at_event)?;
                }
                JournalEntry::Edit(e) => {
                    s.edit(e.clone())?;
                }
            }
        }
        Ok(s)
    }

    pub fn state(&self) -> StateView {
        let e = &self.engine;
        let (nodes, arcs, open) = e.partial_skeleton();
        StateView {
            status: e.status(),
            fault: e.fault().map(str::to_string),
            z: e.z(),
            t: e.t(),
            loops: e
                .loops()
                .into_iter()
                .filter(|l| !l.frozen)
                .map(|l| LoopOut {
                    hole: l.hole,
                    vertices: l
                        .vertices
                        .iter()
                        .map(|v| VertexOut {
                            id: v.id,
                            pos: xy(v.pos),
                            vel: [v.vel.x, v.vel.y, v.vel.z],
                            alpha: v.alpha,
                            frozen: v.frozen,
                        })
                        .collect(),
                })
                .collect(),
            skeleton: SkeletonSoFar {
                nodes: nodes.iter().map(|n| NodeOut { pos: xy(n.pos), z: n.z, kind: n.kind }).collect(),
                arcs: arcs.iter().map(|a| [a.a.0, a.b.0]).collect(),
                open: open.into_iter().map(|(node, p)| OpenArcOut { node, to: xy(p) }).collect(),
            },
            journal_len: self.journal.len(),
        }
    }

    pub fn export(&self, format: ExportFormat) -> Result<String, EngineError> {
        let out = self.engine.output()?;
        Ok(match format {
            ExportFormat::Json => export::skeleton_json(&self.engine, &out),
            ExportFormat::Svg => export::svg(&self.engine, &out),
            ExportFormat::Obj => export::roof_obj(&out),
        })
    }
}

fn apply_edit(e: &mut Engine, edit: &Edit) -> Result<Option<u32>, EngineError> {
    match *edit {
        Edit::SetAlpha { loop_index, edge, alpha } => e.set_alpha(loop_index, edge, alpha).map(|_| None),
        Edit::InsertVertex { loop_index, edge, point } => {
            e.insert_vertex(loop_index, edge, Vec2::new(point[0], point[1])).map(Some)
        }
        Edit::RemoveVertex { id } => e.remove_vertex(id).map(|_| None),
        Edit::SetSchedule(ref s) => {
            let pairs: Vec<(f64, f64)> = s.iter().map(|s| (s.z, s.vz)).collect();
            e.set_schedule(&pairs).map(|_| None)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::document::parse_document;

    fn square() -> Session {
        let doc = parse_document(br#"{"loops":[[[0,0],[1,0],[1,1],[0,1]]]}"#).unwrap();
        Session::new(doc, EngineOptions::default()).unwrap()
    }

    #[test]
    fn step_stops_at_collapse() {
        let mut s = square();
        assert_eq!(s.state().loops[0].vertices.len(), 4);
        assert_eq!(s.step(0.2, false).unwrap().advanced_dz, 0.2);
        let r = s.step(0.4, false).unwrap();
        assert!((r.advanced_dz - 0.3).abs() < 1e-12);
        assert_eq!(r.status, Status::Terminated);
        assert!(matches!(s.step(0.1, false), Err(EngineError::NotRunning(_))));
        assert_eq!(s.journal().len(), 2);
    }

    #[test]
    fn undo_restores_export() {
        let mut s = square();
        s.step(0.1, false).unwrap();
        let before = s.export(ExportFormat::Json).unwrap();
        s.edit(Edit::SetAlpha { loop_index: 0, edge: 1, alpha: std::f64::consts::FRAC_PI_2 }).unwrap();
        assert_ne!(s.export(ExportFormat::Json).unwrap(), before);
        assert!(s.undo().unwrap());
        assert_eq!(s.export(ExportFormat::Json).unwrap(), before);
    }

    #[test]
    fn failed_edit_is_not_journaled() {
        let mut s = square();
        assert!(s.edit(Edit::SetAlpha { loop_index: 0, edge: 9, alpha: 1.0 }).is_err());
        assert!(s.edit(Edit::RemoveVertex { id: 77 }).is_err());
        assert!(s.journal().is_empty());
        assert!(!s.undo().unwrap());
    }

    #[test]
    fn edit_json_shape() {
        let e: Edit = serde_json::from_str(r#"{"set_alpha":{"loop":0,"edge":2,"alpha":1.5}}"#).unwrap();
        assert_eq!(e, Edit::SetAlpha { loop_index: 0, edge: 2, alpha: 1.5 });
        let e: Edit = serde_json::from_str(r#"{"set_schedule":[{"z":0,"vz":2}]}"#).unwrap();
        assert_eq!(e, Edit::SetSchedule(vec![ScheduleEntry { z: 0.0, vz: 2.0 }]));
        let e: Edit = serde_json::from_str(r#"{"insert_vertex":{"loop":0,"edge":0,"point":[0.5,0.0]}}"#).unwrap();
        assert!(matches!(e, Edit::InsertVertex { .. }));
    }
}

use crate::geom::Vec2;

use super::replay::{compare_events, dense_replay, ReplayEvent};

#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub max_position_error: f64,
    pub event_sequence_match: bool,
    pub face_count_match: bool,
    pub notes: String,
}

impl OracleReport {
    pub fn passed(&self) -> bool {
        self.event_sequence_match && self.face_count_match
    }
}

/// Replays the input with step `h` and compares the engine's event sites and
/// face count against it. Positions must agree within `10·h·max(vmax, 1)`.
pub fn cross_check(
    rings: &[Vec<Vec2>],
    weights: &[f64],
    engine_events: &[ReplayEvent],
    engine_faces: usize,
    h: f64,
) -> OracleReport {
    let t_end = engine_events.iter().map(|e| e.t).fold(0.0, f64::max);
    let r = dense_replay(rings, weights, h, t_end + 100.0 * h);
    let tol = 10.0 * h * r.vmax.max(1.0);
    let m = compare_events(engine_events, &r.events, tol);
    let mut notes = vec![format!(
        "{} engine events, {} replay events, {} matched within {tol:e}",
        engine_events.len(),
        r.events.len(),
        m.matched
    )];
    if let Some(why) = &r.inconclusive {
        notes.push(format!("replay inconclusive: {why}"));
    }
    if !m.same_order {
        notes.push("event order differs".into());
    }
    let edges = weights.len();
    let all_positive = weights.iter().all(|&w| w > 0.0);
    let face_count_match = !all_positive || engine_faces == edges;
    if !face_count_match {
        notes.push(format!("{engine_faces} faces for {edges} input edges"));
    }
    OracleReport {
        max_position_error: m.max_position_error,
        event_sequence_match: r.inconclusive.is_none() && m.is_exact(),
        face_count_match,
        notes: notes.join("; "),
    }
}

/// The engine's event log in the replay's terms.
pub fn engine_events(engine: &crate::engine::Engine) -> Vec<ReplayEvent> {
    use crate::kinetics::EventKind;
    use super::replay::ReplayKind;
    engine
        .events()
        .iter()
        .map(|e| ReplayEvent {
            t: e.t,
            at: e.at,
            kind: match e.kind {
                EventKind::EdgeCollapse => ReplayKind::Collapse,
                _ => ReplayKind::Split,
            },
        })
        .collect()
}

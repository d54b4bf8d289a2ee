use std::sync::Arc;

use super::context::make_atom;
use crate::ingest::CameraTopology;
use crate::matcher::Atom;
use crate::spatial::{self, chunks, SpatialConfig, SpatialOp};
use crate::tracker::{Tube, TubeBox, TubeStore};

/// Every atom over finished tubes: all spatial operators on every tube and
/// same-camera pair, plus the labels `actions` reports for each person chunk.
pub fn batch_atoms(
    store: &TubeStore,
    topo: &CameraTopology,
    cfg: &SpatialConfig,
    actions: &mut dyn FnMut(&Tube, i64, &[TubeBox]) -> Vec<String>,
) -> Vec<Arc<Atom>> {
    let mut out = Vec::new();
    let tubes: Vec<&Tube> = store.iter().collect();
    for t in &tubes {
        for iv in spatial::stop(t, cfg) {
            out.push(make_atom(SpatialOp::Stop.name(), t, None, iv, iv.end));
        }
        for iv in spatial::move_(t, cfg) {
            out.push(make_atom(SpatialOp::Move.name(), t, None, iv, iv.end));
        }
        if let Some((iv, _)) = spatial::disappear(t, topo.frame_size(&t.camera_id), cfg) {
            out.push(make_atom(SpatialOp::Disappear.name(), t, None, iv, iv.end));
        }
        if let Some(iv) = spatial::re_identified(t, store) {
            out.push(make_atom(SpatialOp::ReIdentified.name(), t, None, iv, iv.end));
        }
        if t.is_person() {
            for c in chunks(t, cfg.t_chunk) {
                let span = c.span(t);
                for l in actions(t, c.index, c.slice(t)) {
                    out.push(make_atom(&l, t, None, span, span.end));
                }
            }
        }
    }
    for (i, a) in tubes.iter().enumerate() {
        for b in &tubes[i + 1..] {
            if a.camera_id != b.camera_id {
                continue;
            }
            for iv in spatial::near(a, b, cfg) {
                out.push(make_atom(SpatialOp::Near.name(), a, Some(b), iv, iv.end));
            }
            for iv in spatial::approach(a, b, cfg) {
                out.push(make_atom(SpatialOp::Approach.name(), a, Some(b), iv, iv.end));
            }
            if let Some(iv) = spatial::same_camera(a, b) {
                out.push(make_atom(SpatialOp::SameCamera.name(), a, Some(b), iv, iv.end));
            }
        }
    }
    out
}

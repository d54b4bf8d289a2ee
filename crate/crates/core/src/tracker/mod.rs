//! Tube building and identity assignment across cameras.

mod store;
mod tube;

use std::sync::Arc;

pub use store::TubeStore;
pub use tube::{Tube, TubeBox};

use crate::ingest::{CacheMiss, CameraTopology, Crop, DetectionEvent};
use crate::oracle::Oracle;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackerConfig {
    pub iou_threshold: f64,
    pub gap_max: f64,
    /// Occlusion rejoin: max center distance as a multiple of the larger box dimension.
    pub kappa: f64,
    pub gap_occlusion: f64,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        TrackerConfig {
            iou_threshold: 0.3,
            gap_max: 2.0,
            kappa: 1.5,
            gap_occlusion: 20.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IngestOutcome {
    pub tube_id: u64,
    pub created: bool,
    /// Tubes closed as a side effect (an occlusion rejoin retires the old tube).
    pub closed: Vec<u64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TrackerStats {
    pub tubes: u64,
    pub local_matches: u64,
    pub cross_matches: u64,
    pub fresh_identities: u64,
    pub crop_misses: u64,
    pub reid_queries: u64,
}

pub struct Tracker {
    pub config: TrackerConfig,
    pub store: TubeStore,
    pub stats: TrackerStats,
    /// Identities claimed by two open tubes in different cameras at once.
    pub diagnostics: Vec<String>,
    next_identity: u64,
    cameras: Vec<Arc<str>>,
}

impl Tracker {
    pub fn new(config: TrackerConfig) -> Tracker {
        Tracker {
            config,
            store: TubeStore::default(),
            stats: TrackerStats::default(),
            diagnostics: Vec::new(),
            next_identity: 1,
            cameras: Vec::new(),
        }
    }

    fn camera_arc(&mut self, id: &str) -> Arc<str> {
        match self.cameras.iter().find(|c| &***c == id) {
            Some(c) => c.clone(),
            None => {
                let c: Arc<str> = id.into();
                self.cameras.push(c.clone());
                c
            }
        }
    }

    /// Same-label open tube of the box's camera with the best IoU against its last box.
    pub fn associate(&self, ev: &DetectionEvent) -> Option<u64> {
        let mut best: Option<(f64, u64)> = None;
        for t in self.store.open_in(&ev.camera_id) {
            let last = t.last_box();
            if t.label != ev.label
                || last.frame_index >= ev.frame_index
                || ev.timestamp - last.timestamp > self.config.gap_max
            {
                continue;
            }
            let iou = last.bbox.iou(&ev.bbox);
            if iou < self.config.iou_threshold {
                continue;
            }
            // open_in yields ascending ids, so strict > keeps the lower id on ties
            if best.map_or(true, |(b, _)| iou > b) {
                best = Some((iou, t.tube_id));
            }
        }
        best.map(|(_, id)| id)
    }

    /// Adds one detection. New person tubes fetch their first crop through
    /// `fetch` and then try local, then cross-camera re-identification.
    pub fn ingest_box(
        &mut self,
        ev: &DetectionEvent,
        fetch: &mut dyn FnMut(&DetectionEvent) -> Result<Crop, CacheMiss>,
        oracle: &Oracle,
        topo: &CameraTopology,
    ) -> IngestOutcome {
        if let Some(id) = self.associate(ev) {
            self.store.append(id, TubeBox::from_event(ev));
            return IngestOutcome {
                tube_id: id,
                created: false,
                closed: Vec::new(),
            };
        }
        let cam = self.camera_arc(&ev.camera_id);
        let id = self.store.create(cam, &ev.label, TubeBox::from_event(ev));
        self.stats.tubes += 1;
        let mut closed = Vec::new();
        if ev.label != "person" {
            return IngestOutcome {
                tube_id: id,
                created: true,
                closed,
            };
        }
        let crop = match fetch(ev) {
            Ok(c) => c,
            Err(_) => {
                self.stats.crop_misses += 1;
                return IngestOutcome {
                    tube_id: id,
                    created: true,
                    closed,
                };
            }
        };
        self.store.set_ref_crop(id, crop);
        if let Some((identity, old)) = self.reidentify_local(id, oracle) {
            self.stats.local_matches += 1;
            if self.store.close(old) {
                closed.push(old);
            }
            self.store.set_identity(id, identity);
        } else if let Some(identity) = self.reidentify_cross(id, oracle, topo) {
            self.stats.cross_matches += 1;
            if self
                .store
                .with_identity(identity)
                .any(|t| !t.closed && *t.camera_id != *ev.camera_id)
            {
                self.diagnostics.push(format!(
                    "identity {identity} claimed by tube {id} while open elsewhere"
                ));
            }
            self.store.set_identity(id, identity);
        } else {
            let identity = self.next_identity;
            self.next_identity += 1;
            self.stats.fresh_identities += 1;
            self.store.set_identity(id, identity);
        }
        IngestOutcome {
            tube_id: id,
            created: true,
            closed,
        }
    }

    fn identity_open_elsewhere_here(&self, identity: u64, camera: &str, except: u64) -> bool {
        self.store
            .with_identity(identity)
            .any(|t| !t.closed && t.tube_id != except && &*t.camera_id == camera)
    }

    fn ask(&mut self, oracle: &Oracle, a: &Crop, b: &Crop) -> bool {
        self.stats.reid_queries += 1;
        oracle.same_identity(a, b)
    }

    /// Rejoins a tube split by occlusion: an earlier tube of the same camera
    /// that ended shortly before and close by. Returns (identity, old tube).
    pub fn reidentify_local(&mut self, id: u64, oracle: &Oracle) -> Option<(u64, u64)> {
        let tube = self.store.get(id);
        let crop = tube.ref_crop.clone()?;
        let start = tube.start_ts();
        let first = tube.first_box().bbox;
        let camera = tube.camera_id.clone();
        let (fx, fy) = first.center();
        let mut cands: Vec<(f64, u64, u64, Crop)> = self
            .store
            .in_camera(&camera)
            .filter(|t| t.tube_id != id && t.is_person() && t.end_ts() < start)
            .filter(|t| start - t.end_ts() <= self.config.gap_occlusion)
            .filter_map(|t| {
                let last = t.last_box().bbox;
                let (lx, ly) = last.center();
                let reach = self.config.kappa * first.w.max(first.h).max(last.w).max(last.h);
                let near = ((fx - lx).powi(2) + (fy - ly).powi(2)).sqrt() <= reach;
                match (t.identity, &t.ref_crop) {
                    (Some(g), Some(c)) if near => Some((t.end_ts(), t.tube_id, g, c.clone())),
                    _ => None,
                }
            })
            .collect();
        cands.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        for (_, old, identity, c) in cands {
            if self.identity_open_elsewhere_here(identity, &camera, old) {
                continue;
            }
            if self.ask(oracle, &crop, &c) {
                return Some((identity, old));
            }
        }
        None
    }

    /// Matches against tubes of neighbouring cameras that ended within the travel window.
    pub fn reidentify_cross(&mut self, id: u64, oracle: &Oracle, topo: &CameraTopology) -> Option<u64> {
        let tube = self.store.get(id);
        let crop = tube.ref_crop.clone()?;
        let start = tube.start_ts();
        let camera = tube.camera_id.clone();
        let mut cands: Vec<(f64, u64, u64, Crop)> = Vec::new();
        for (nb, lo, hi) in topo.neighbors(&camera) {
            for t in self.store.in_camera(nb) {
                let end = t.end_ts();
                if !t.is_person() || end < start - hi || end > start - lo {
                    continue;
                }
                if let (Some(g), Some(c)) = (t.identity, &t.ref_crop) {
                    cands.push((end, t.tube_id, g, c.clone()));
                }
            }
        }
        cands.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        for (_, _, identity, c) in cands {
            if self.identity_open_elsewhere_here(identity, &camera, id) {
                continue;
            }
            if self.ask(oracle, &crop, &c) {
                return Some(identity);
            }
        }
        None
    }

    /// Closes every open tube idle for longer than `gap_max`.
    pub fn close_stale(&mut self, now: f64) -> Vec<u64> {
        let stale: Vec<u64> = self
            .store
            .open_ids()
            .into_iter()
            .filter(|&id| self.store.get(id).end_ts() < now - self.config.gap_max)
            .collect();
        for &id in &stale {
            self.store.close(id);
        }
        stale
    }

    pub fn close_all(&mut self) -> Vec<u64> {
        let open = self.store.open_ids();
        for &id in &open {
            self.store.close(id);
        }
        open
    }
}

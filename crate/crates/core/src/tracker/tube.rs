use std::sync::Arc;

use crate::ingest::{BoundingBox, Crop, DetectionEvent};

#[derive(Debug, Clone, PartialEq)]
pub struct TubeBox {
    pub timestamp: f64,
    pub frame_index: u64,
    pub box_id: u32,
    pub bbox: BoundingBox,
    pub gt_identity: Option<u64>,
    pub gt_actions: Arc<[String]>,
}

impl TubeBox {
    pub fn from_event(ev: &DetectionEvent) -> TubeBox {
        TubeBox {
            timestamp: ev.timestamp,
            frame_index: ev.frame_index,
            box_id: ev.box_id,
            bbox: ev.bbox,
            gt_identity: ev.gt_identity,
            gt_actions: ev.gt_actions.clone().into(),
        }
    }
}

/// Boxes of one object followed over successive frames of one camera.
#[derive(Debug, Clone, PartialEq)]
pub struct Tube {
    pub tube_id: u64,
    pub camera_id: Arc<str>,
    pub label: String,
    pub boxes: Vec<TubeBox>,
    pub identity: Option<u64>,
    pub closed: bool,
    /// Crop of the first box, fetched when the tube was created.
    pub ref_crop: Option<Crop>,
}

impl Tube {
    pub fn start_ts(&self) -> f64 {
        self.boxes[0].timestamp
    }

    pub fn end_ts(&self) -> f64 {
        self.boxes[self.boxes.len() - 1].timestamp
    }

    pub fn first_box(&self) -> &TubeBox {
        &self.boxes[0]
    }

    pub fn last_box(&self) -> &TubeBox {
        &self.boxes[self.boxes.len() - 1]
    }

    pub fn is_person(&self) -> bool {
        self.label == "person"
    }

    /// Most frequent ground-truth identity over the boxes (ties: smaller id).
    pub fn majority_gt(&self) -> Option<u64> {
        let mut counts: std::collections::BTreeMap<u64, usize> = Default::default();
        for b in &self.boxes {
            if let Some(g) = b.gt_identity {
                *counts.entry(g).or_default() += 1;
            }
        }
        let mut best: Option<(u64, usize)> = None;
        for (g, c) in counts {
            if best.map_or(true, |(_, bc)| c > bc) {
                best = Some((g, c));
            }
        }
        best.map(|(g, _)| g)
    }

    /// Debug listing: a comment header followed by the boxes as trace lines.
    pub fn to_trace_text(&self) -> String {
        let mut out = format!(
            "# tube {} camera {} label {} identity {} span {} {} {}\n",
            self.tube_id,
            self.camera_id,
            self.label,
            self.identity.map_or("-".to_string(), |i| i.to_string()),
            self.start_ts(),
            self.end_ts(),
            if self.closed { "closed" } else { "open" }
        );
        for b in &self.boxes {
            let ev = DetectionEvent {
                camera_id: self.camera_id.to_string(),
                frame_index: b.frame_index,
                box_id: b.box_id,
                timestamp: b.timestamp,
                bbox: b.bbox,
                label: self.label.clone(),
                gt_identity: b.gt_identity,
                gt_actions: b.gt_actions.to_vec(),
            };
            out.push_str(&crate::ingest::format_event(&ev));
            out.push('\n');
        }
        out
    }
}

use std::fmt;

use super::chunk::{chunks, Chunk, Interval};
use super::geometry::{center_distance, edge_distance, proximate};
use crate::tracker::{Tube, TubeBox, TubeStore};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpatialConfig {
    pub delta: f64,
    pub t_chunk: f64,
    pub eps_pos: f64,
    pub d_stop: f64,
    pub w_app: f64,
    pub eps_app: f64,
    /// Border margin for the disappear edge tag, as a fraction of frame width.
    pub m_edge: f64,
}

impl Default for SpatialConfig {
    fn default() -> Self {
        SpatialConfig {
            delta: 0.5,
            t_chunk: 1.0,
            eps_pos: 5.0,
            d_stop: 1.0,
            w_app: 2.0,
            eps_app: 20.0,
            m_edge: 0.05,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SpatialOp {
    Stop,
    Move,
    Disappear,
    ReIdentified,
    Near,
    Approach,
    SameCamera,
}

impl SpatialOp {
    pub const ALL: [SpatialOp; 7] = [
        SpatialOp::Stop,
        SpatialOp::Move,
        SpatialOp::Disappear,
        SpatialOp::ReIdentified,
        SpatialOp::Near,
        SpatialOp::Approach,
        SpatialOp::SameCamera,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SpatialOp::Stop => "stop",
            SpatialOp::Move => "move",
            SpatialOp::Disappear => "disappear",
            SpatialOp::ReIdentified => "re-identified",
            SpatialOp::Near => "near",
            SpatialOp::Approach => "approach",
            SpatialOp::SameCamera => "same-camera",
        }
    }

    pub fn from_name(s: &str) -> Option<SpatialOp> {
        SpatialOp::ALL.into_iter().find(|op| op.name() == s)
    }

    pub fn is_binary(self) -> bool {
        matches!(self, SpatialOp::Near | SpatialOp::Approach | SpatialOp::SameCamera)
    }
}

impl fmt::Display for SpatialOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DisappearKind {
    /// Last box touches the border margin: the object left the view.
    Edge,
    /// Vanished mid-frame, e.g. into a car or a building.
    Interior,
}

/// Majority test for one pair of time-aligned chunks. Returns the overlap of
/// their box spans when more than half of all cross pairs are proximate.
pub fn near_chunk(a: &[TubeBox], b: &[TubeBox], delta: f64) -> Option<Interval> {
    let span_a = Interval::new(a[0].timestamp, a[a.len() - 1].timestamp);
    let span_b = Interval::new(b[0].timestamp, b[b.len() - 1].timestamp);
    let overlap = span_a.intersection(&span_b)?;
    let total = a.len() * b.len();
    let mut hits = 0;
    for x in a {
        for y in b {
            if proximate(&x.bbox, &y.bbox, delta) {
                hits += 1;
            }
        }
    }
    (2 * hits > total).then_some(overlap)
}

/// Per-chunk near matches `(chunk index, interval)` before coalescing.
pub fn near_chunks(a: &Tube, b: &Tube, cfg: &SpatialConfig) -> Vec<(i64, Interval)> {
    if a.camera_id != b.camera_id {
        return Vec::new();
    }
    let ca = chunks(a, cfg.t_chunk);
    let cb = chunks(b, cfg.t_chunk);
    near_aligned(a, &ca, b, &cb, cfg.delta)
}

pub(crate) fn near_aligned(a: &Tube, ca: &[Chunk], b: &Tube, cb: &[Chunk], delta: f64) -> Vec<(i64, Interval)> {
    let mut out = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < ca.len() && j < cb.len() {
        match ca[i].index.cmp(&cb[j].index) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                if let Some(iv) = near_chunk(ca[i].slice(a), cb[j].slice(b), delta) {
                    out.push((ca[i].index, iv));
                }
                i += 1;
                j += 1;
            }
        }
    }
    out
}

/// Merges matches of consecutive chunk indices into one interval each.
pub fn coalesce(per_chunk: &[(i64, Interval)]) -> Vec<(i64, i64, Interval)> {
    let mut out: Vec<(i64, i64, Interval)> = Vec::new();
    for &(k, iv) in per_chunk {
        match out.last_mut() {
            Some((_, last_k, acc)) if *last_k + 1 == k => {
                *last_k = k;
                acc.end = iv.end;
            }
            _ => out.push((k, k, iv)),
        }
    }
    out
}

pub fn near(a: &Tube, b: &Tube, cfg: &SpatialConfig) -> Vec<Interval> {
    coalesce(&near_chunks(a, b, cfg))
        .into_iter()
        .map(|(_, _, iv)| iv)
        .collect()
}

/// Edge distances of same-frame box pairs with timestamps in `[lo, hi)`.
pub fn frame_pair_distances(a: &Tube, b: &Tube, lo: f64, hi: f64) -> Vec<f64> {
    let sel = |t: &Tube| -> Vec<(u64, usize)> {
        let from = t.boxes.partition_point(|x| x.timestamp < lo);
        t.boxes[from..]
            .iter()
            .enumerate()
            .take_while(|(_, x)| x.timestamp < hi)
            .map(|(i, x)| (x.frame_index, from + i))
            .collect()
    };
    let (sa, sb) = (sel(a), sel(b));
    let mut out = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < sa.len() && j < sb.len() {
        match sa[i].0.cmp(&sb[j].0) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push(edge_distance(&a.boxes[sa[i].1].bbox, &b.boxes[sb[j].1].bbox));
                i += 1;
                j += 1;
            }
        }
    }
    out
}

/// The preceding window shows a steady closing-in.
pub fn closing_in(distances: &[f64], eps_app: f64) -> bool {
    distances.len() >= 2
        && distances.windows(2).all(|w| w[1] <= w[0])
        && distances[0] - distances[distances.len() - 1] >= eps_app
}

pub fn approach_ok(a: &Tube, b: &Tube, near_start: f64, cfg: &SpatialConfig) -> bool {
    closing_in(
        &frame_pair_distances(a, b, near_start - cfg.w_app, near_start),
        cfg.eps_app,
    )
}

pub fn approach(a: &Tube, b: &Tube, cfg: &SpatialConfig) -> Vec<Interval> {
    near(a, b, cfg)
        .into_iter()
        .filter(|iv| approach_ok(a, b, iv.start, cfg))
        .collect()
}

/// Whether each box is still (centre moved at most `eps_pos` since the
/// previous box). The first box takes the class of the second.
pub fn still_flags(boxes: &[TubeBox], eps_pos: f64) -> Vec<bool> {
    let mut flags: Vec<bool> = Vec::with_capacity(boxes.len());
    flags.push(true);
    for w in boxes.windows(2) {
        flags.push(center_distance(&w[0].bbox, &w[1].bbox) <= eps_pos);
    }
    if flags.len() > 1 {
        flags[0] = flags[1];
    }
    flags
}

/// Maximal runs of equal motion class: `(still, first box, last box)`.
pub fn motion_runs(boxes: &[TubeBox], eps_pos: f64) -> Vec<(bool, usize, usize)> {
    let flags = still_flags(boxes, eps_pos);
    let mut runs: Vec<(bool, usize, usize)> = Vec::new();
    for (i, &f) in flags.iter().enumerate() {
        match runs.last_mut() {
            Some((c, _, last)) if *c == f => *last = i,
            _ => runs.push((f, i, i)),
        }
    }
    runs
}

fn runs_to_intervals(t: &Tube, still: bool, min_dur: f64, cfg: &SpatialConfig) -> Vec<Interval> {
    motion_runs(&t.boxes, cfg.eps_pos)
        .into_iter()
        .filter(|r| r.0 == still)
        .map(|(_, i, j)| Interval::new(t.boxes[i].timestamp, t.boxes[j].timestamp))
        .filter(|iv| iv.duration() >= min_dur)
        .collect()
}

pub fn stop(t: &Tube, cfg: &SpatialConfig) -> Vec<Interval> {
    runs_to_intervals(t, true, cfg.d_stop, cfg)
}

pub fn move_(t: &Tube, cfg: &SpatialConfig) -> Vec<Interval> {
    if t.boxes.len() < 2 {
        return Vec::new();
    }
    runs_to_intervals(t, false, 0.0, cfg)
}

pub fn disappear(t: &Tube, frame: (f64, f64), cfg: &SpatialConfig) -> Option<(Interval, DisappearKind)> {
    if !t.closed {
        return None;
    }
    let b = t.last_box().bbox;
    let m = cfg.m_edge * frame.0;
    let edge = b.x <= m || b.y <= m || b.x + b.w >= frame.0 - m || b.y + b.h >= frame.1 - m;
    let kind = if edge {
        DisappearKind::Edge
    } else {
        DisappearKind::Interior
    };
    Some((Interval::point(t.end_ts()), kind))
}

pub fn same_camera(a: &Tube, b: &Tube) -> Option<Interval> {
    if a.camera_id != b.camera_id {
        return None;
    }
    Interval::new(a.start_ts(), a.end_ts()).intersection(&Interval::new(b.start_ts(), b.end_ts()))
}

pub fn re_identified(t: &Tube, store: &TubeStore) -> Option<Interval> {
    let g = t.identity?;
    store
        .with_identity(g)
        .any(|u| u.tube_id < t.tube_id && u.camera_id != t.camera_id)
        .then(|| Interval::point(t.start_ts()))
}

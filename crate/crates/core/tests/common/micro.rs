//! Small random scenes: a few tubes in one camera over at most 30 seconds.

use std::sync::Arc;

use rand::Rng;
use xcam::ingest::{BoundingBox, DetectionEvent, Trace};
use xcam::pipeline::{MotionState, PairState};
use xcam::spatial::{Interval, SpatialConfig, SpatialOp};
use xcam::tracker::{Tube, TubeBox};

pub const SIZES: [(f64, f64); 3] = [(60.0, 150.0), (40.0, 40.0), (300.0, 150.0)];
pub const LABELS: [&str; 3] = ["person", "bag", "car"];

/// One random walk: alternating still and moving segments, with dropped
/// frames. Returns `(timestamp, frame, x, y)`.
pub fn walk(rng: &mut impl Rng, fps: f64, t0: f64, t1: f64) -> Vec<(f64, u64, f64, f64)> {
    let mut out = Vec::new();
    let (mut x, mut y) = (rng.gen_range(0.0..500.0f64).round(), rng.gen_range(0.0..300.0f64).round());
    let (mut vx, mut vy) = (0.0, 0.0);
    let mut seg_end = t0;
    let f0 = (t0 * fps).ceil() as u64;
    let f1 = (t1 * fps).floor() as u64;
    let drop = rng.gen_range(0.0..0.3);
    for f in f0..=f1 {
        let t = f as f64 / fps;
        if t >= seg_end {
            seg_end = t + rng.gen_range(0.5..6.0);
            if rng.gen_bool(0.4) {
                // still, maybe with jitter around the motion threshold
                let j = [0.0, 2.0, 4.0, 6.0][rng.gen_range(0..4)];
                vx = j * fps;
                vy = 0.0;
                if rng.gen_bool(0.5) {
                    vx = -vx;
                }
            } else {
                vx = rng.gen_range(-200.0..200.0f64).round();
                vy = rng.gen_range(-60.0..60.0f64).round();
            }
        }
        x = (x + vx / fps).clamp(0.0, 1600.0);
        y = (y + vy / fps).clamp(0.0, 900.0);
        if !out.is_empty() && rng.gen_bool(drop) {
            continue;
        }
        out.push((t, f, x.round(), y.round()));
    }
    out
}

fn tube_from(id: u64, label: &str, size: (f64, f64), pts: &[(f64, u64, f64, f64)], gt: u64, acts: &[(f64, f64, &str)]) -> Tube {
    Tube {
        tube_id: id,
        camera_id: "c".into(),
        label: label.into(),
        boxes: pts
            .iter()
            .map(|&(t, f, x, y)| TubeBox {
                timestamp: t,
                frame_index: f,
                box_id: id as u32,
                bbox: BoundingBox::new(x, y, size.0, size.1),
                gt_identity: Some(gt),
                gt_actions: Arc::from(
                    acts.iter()
                        .filter(|(a, b, _)| *a <= t && t < *b)
                        .map(|(_, _, n)| n.to_string())
                        .collect::<Vec<_>>(),
                ),
            })
            .collect(),
        identity: None,
        closed: true,
        ref_crop: None,
    }
}

/// Up to four closed tubes in camera `c`, each with at least one box.
pub fn random_tubes(rng: &mut impl Rng) -> Vec<Tube> {
    let fps = [5.0, 10.0, 20.0][rng.gen_range(0..3)];
    let n = rng.gen_range(1..=4);
    let mut out = Vec::new();
    for i in 0..n {
        let t0 = (rng.gen_range(0.0..10.0f64) * fps).round() / fps;
        let t1 = (t0 + rng.gen_range(0.0..20.0)).min(30.0);
        let pts = walk(rng, fps, t0, t1);
        if pts.is_empty() {
            continue;
        }
        let k = rng.gen_range(0..3);
        out.push(tube_from(i as u64 + 1, LABELS[k], SIZES[k], &pts, i as u64 + 1, &[]));
    }
    if out.is_empty() {
        out.push(tube_from(1, "person", SIZES[0], &[(0.0, 0, 10.0, 10.0)], 1, &[]));
    }
    out
}

/// Operator outputs of the incremental evaluators when the tubes grow frame
/// by frame and close at the end: `(op, lower tube, higher tube, interval)`.
pub fn grown(tubes: &[Tube], cfg: &SpatialConfig) -> Vec<(SpatialOp, u64, u64, Interval)> {
    let mut times: Vec<f64> = tubes.iter().flat_map(|t| t.boxes.iter().map(|b| b.timestamp)).collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    let mut live: Vec<Tube> = tubes
        .iter()
        .map(|t| Tube {
            boxes: Vec::new(),
            closed: false,
            ..t.clone()
        })
        .collect();
    let mut motion: Vec<MotionState> = vec![MotionState::default(); tubes.len()];
    let mut pairs: Vec<Option<PairState>> = vec![None; tubes.len() * tubes.len()];
    let mut out = Vec::new();
    let n = tubes.len();
    let mut step = |live: &[Tube], now: f64, out: &mut Vec<(SpatialOp, u64, u64, Interval)>| {
        for i in 0..n {
            if live[i].boxes.is_empty() {
                continue;
            }
            let mut o = Vec::new();
            motion[i].update(&live[i], cfg, &mut o);
            out.extend(o.into_iter().map(|(op, iv)| (op, live[i].tube_id, live[i].tube_id, iv)));
            for j in i + 1..n {
                if live[j].boxes.is_empty() {
                    continue;
                }
                let p = pairs[i * n + j].get_or_insert_with(|| PairState::new(&live[i], &live[j], cfg));
                p.update(&live[i], &live[j], now, cfg);
                out.extend(p.out.drain(..).map(|(op, iv)| (op, live[i].tube_id, live[j].tube_id, iv)));
            }
        }
    };
    for &now in &times {
        for (t, l) in tubes.iter().zip(live.iter_mut()) {
            l.boxes.extend(t.boxes.iter().filter(|b| b.timestamp == now).cloned());
        }
        step(&live, now, &mut out);
    }
    for l in live.iter_mut() {
        l.closed = true;
    }
    step(&live, f64::INFINITY, &mut out);
    out
}

/// A one-camera trace with scripted actions, for end-to-end checks.
pub fn random_trace(rng: &mut impl Rng) -> Trace {
    let fps = 10.0;
    let n = rng.gen_range(1..=4);
    let acts = ["talk", "give", "use-phone"];
    let mut events = Vec::new();
    for i in 0..n {
        let t0 = (rng.gen_range(0.0..8.0f64) * fps).round() / fps;
        let t1 = (t0 + rng.gen_range(3.0..20.0)).min(30.0);
        let k = if i == 0 || rng.gen_bool(0.7) { 0 } else { rng.gen_range(1..3) };
        let mut script: Vec<(f64, f64, &str)> = Vec::new();
        if k == 0 {
            for _ in 0..rng.gen_range(0..3) {
                let a = rng.gen_range(t0..t1).floor();
                script.push((a, a + rng.gen_range(1.0..4.0f64).floor(), acts[rng.gen_range(0..3)]));
            }
        }
        let gt = i as u64 + 1;
        for (t, f, x, y) in walk(rng, fps, t0, t1) {
            let (w, h) = SIZES[k];
            events.push(DetectionEvent {
                camera_id: "c".into(),
                frame_index: f,
                box_id: 0,
                timestamp: t,
                bbox: BoundingBox::new(x, y, w, h),
                label: LABELS[k].into(),
                gt_identity: Some(gt),
                gt_actions: script
                    .iter()
                    .filter(|(a, b, _)| *a <= t && t < *b)
                    .map(|(_, _, n)| n.to_string())
                    .collect(),
            });
        }
    }
    Trace::from_events(events)
}

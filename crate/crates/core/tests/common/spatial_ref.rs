//! Brute-force spatial operators written straight from their definitions.
//! Nothing here calls into the crate's spatial module.

use xcam::ingest::BoundingBox;
use xcam::spatial::{Interval, SpatialConfig, SpatialOp};
use xcam::tracker::Tube;

fn gap(a: &BoundingBox, b: &BoundingBox) -> f64 {
    // horizontal and vertical gaps between the outer edges, zero on overlap
    let dx = [b.x - (a.x + a.w), a.x - (b.x + b.w), 0.0].into_iter().fold(f64::MIN, f64::max);
    let dy = [b.y - (a.y + a.h), a.y - (b.y + b.h), 0.0].into_iter().fold(f64::MIN, f64::max);
    dx.hypot(dy)
}

fn close(a: &BoundingBox, b: &BoundingBox, delta: f64) -> bool {
    let scale = a.w.max(a.h).max(b.w).max(b.h);
    gap(a, b) < delta * scale
}

fn cell(ts: f64, t_chunk: f64) -> i64 {
    (ts / t_chunk).floor() as i64
}

/// Per grid cell: the cell's boxes of both tubes, majority of all cross
/// pairs proximate, interval = overlap of the two box spans. Adjacent cells
/// merge into one run.
pub fn near(a: &Tube, b: &Tube, cfg: &SpatialConfig) -> Vec<Interval> {
    if a.camera_id != b.camera_id || a.boxes.is_empty() || b.boxes.is_empty() {
        return Vec::new();
    }
    let first = cell(a.start_ts().min(b.start_ts()), cfg.t_chunk);
    let last = cell(a.end_ts().max(b.end_ts()), cfg.t_chunk);
    let mut runs: Vec<(i64, Interval)> = Vec::new();
    for k in first..=last {
        let sa: Vec<_> = a.boxes.iter().filter(|x| cell(x.timestamp, cfg.t_chunk) == k).collect();
        let sb: Vec<_> = b.boxes.iter().filter(|x| cell(x.timestamp, cfg.t_chunk) == k).collect();
        if sa.is_empty() || sb.is_empty() {
            continue;
        }
        let lo = sa[0].timestamp.max(sb[0].timestamp);
        let hi = sa[sa.len() - 1].timestamp.min(sb[sb.len() - 1].timestamp);
        if lo > hi {
            continue;
        }
        let mut yes = 0usize;
        for x in &sa {
            for y in &sb {
                yes += close(&x.bbox, &y.bbox, cfg.delta) as usize;
            }
        }
        if yes * 2 <= sa.len() * sb.len() {
            continue;
        }
        match runs.last_mut() {
            Some((kk, iv)) if *kk == k - 1 => {
                *kk = k;
                iv.end = hi;
            }
            _ => runs.push((k, Interval { start: lo, end: hi })),
        }
    }
    runs.into_iter().map(|(_, iv)| iv).collect()
}

/// Near runs preceded by a closing-in window: edge distances of same-frame
/// pairs in `[start - w_app, start)` never grow and shrink by `eps_app`.
pub fn approach(a: &Tube, b: &Tube, cfg: &SpatialConfig) -> Vec<Interval> {
    near(a, b, cfg)
        .into_iter()
        .filter(|iv| {
            let lo = iv.start - cfg.w_app;
            let mut d = Vec::new();
            for x in a.boxes.iter().filter(|x| x.timestamp >= lo && x.timestamp < iv.start) {
                if let Some(y) = b.boxes.iter().find(|y| y.frame_index == x.frame_index) {
                    d.push(gap(&x.bbox, &y.bbox));
                }
            }
            d.len() >= 2 && (1..d.len()).all(|i| d[i] <= d[i - 1]) && d[0] - d[d.len() - 1] >= cfg.eps_app
        })
        .collect()
}

fn centre(b: &BoundingBox) -> (f64, f64) {
    (b.x + b.w / 2.0, b.y + b.h / 2.0)
}

/// Still or moving per box, by centre displacement from the previous box.
/// The first box copies the second.
fn motion(t: &Tube, eps: f64) -> Vec<bool> {
    let n = t.boxes.len();
    let mut still = vec![true; n];
    for i in 1..n {
        let (p, q) = (centre(&t.boxes[i - 1].bbox), centre(&t.boxes[i].bbox));
        still[i] = ((p.0 - q.0).powi(2) + (p.1 - q.1).powi(2)).sqrt() <= eps;
    }
    if n > 1 {
        still[0] = still[1];
    }
    still
}

fn runs(t: &Tube, want: bool, eps: f64) -> Vec<Interval> {
    let f = motion(t, eps);
    let mut out = Vec::new();
    let mut i = 0;
    while i < f.len() {
        let mut j = i;
        while j + 1 < f.len() && f[j + 1] == f[i] {
            j += 1;
        }
        if f[i] == want {
            out.push(Interval {
                start: t.boxes[i].timestamp,
                end: t.boxes[j].timestamp,
            });
        }
        i = j + 1;
    }
    out
}

pub fn stop(t: &Tube, cfg: &SpatialConfig) -> Vec<Interval> {
    runs(t, true, cfg.eps_pos)
        .into_iter()
        .filter(|iv| iv.end - iv.start >= cfg.d_stop)
        .collect()
}

pub fn move_(t: &Tube, cfg: &SpatialConfig) -> Vec<Interval> {
    if t.boxes.len() < 2 {
        return Vec::new();
    }
    runs(t, false, cfg.eps_pos)
}

pub fn disappear(t: &Tube) -> Option<Interval> {
    t.closed.then(|| Interval {
        start: t.end_ts(),
        end: t.end_ts(),
    })
}

type Out = Vec<(SpatialOp, u64, u64, Interval)>;

pub fn sorted(mut v: Out) -> Vec<String> {
    let mut s: Vec<String> = v.drain(..).map(|(op, a, b, iv)| format!("{op} {a} {b} {iv}")).collect();
    s.sort();
    s
}

/// Reference outputs for the operators both sides implement.
pub fn reference(tubes: &[Tube], cfg: &SpatialConfig) -> Vec<String> {
    let mut out = Out::new();
    for t in tubes {
        out.extend(stop(t, cfg).into_iter().map(|iv| (SpatialOp::Stop, t.tube_id, t.tube_id, iv)));
        out.extend(move_(t, cfg).into_iter().map(|iv| (SpatialOp::Move, t.tube_id, t.tube_id, iv)));
        out.extend(disappear(t).map(|iv| (SpatialOp::Disappear, t.tube_id, t.tube_id, iv)));
    }
    for (i, a) in tubes.iter().enumerate() {
        for b in &tubes[i + 1..] {
            out.extend(near(a, b, cfg).into_iter().map(|iv| (SpatialOp::Near, a.tube_id, b.tube_id, iv)));
            out.extend(approach(a, b, cfg).into_iter().map(|iv| (SpatialOp::Approach, a.tube_id, b.tube_id, iv)));
        }
    }
    sorted(out)
}

//! Spatial operators evaluated as tubes grow. An interval is released only
//! once later data can no longer change it, so the released set equals the
//! batch operators applied to the finished tubes.

use crate::spatial::{approach_ok, chunk_index, near_chunk, same_camera, Interval, SpatialConfig, SpatialOp};
use crate::tracker::{Tube, TubeBox};

/// Motion classification of one tube, extended box by box.
#[derive(Debug, Default, Clone)]
pub struct MotionState {
    flags: Vec<bool>,
    runs: Vec<(bool, usize, usize)>,
    released: usize,
    disappeared: bool,
}

impl MotionState {
    /// Newly final stop/move intervals, plus disappear once the tube closes.
    pub fn update(&mut self, tube: &Tube, cfg: &SpatialConfig, out: &mut Vec<(SpatialOp, Interval)>) {
        for i in self.flags.len()..tube.boxes.len() {
            let still = if i == 0 {
                true
            } else {
                crate::spatial::center_distance(&tube.boxes[i - 1].bbox, &tube.boxes[i].bbox) <= cfg.eps_pos
            };
            if i == 1 {
                self.flags[0] = still;
                self.runs[0].0 = still;
            }
            self.flags.push(still);
            match self.runs.last_mut() {
                Some((c, _, last)) if *c == still && i > 0 => *last = i,
                _ => self.runs.push((still, i, i)),
            }
        }
        let final_runs = if tube.closed {
            self.runs.len()
        } else {
            self.runs.len().saturating_sub(1)
        };
        for &(still, i, j) in &self.runs[self.released..final_runs] {
            let iv = Interval::new(tube.boxes[i].timestamp, tube.boxes[j].timestamp);
            if still && iv.duration() >= cfg.d_stop {
                out.push((SpatialOp::Stop, iv));
            } else if !still && tube.boxes.len() >= 2 {
                out.push((SpatialOp::Move, iv));
            }
        }
        self.released = self.released.max(final_runs);
        if tube.closed && !self.disappeared {
            self.disappeared = true;
            out.push((SpatialOp::Disappear, Interval::point(tube.end_ts())));
        }
    }
}

fn chunk_slice(tube: &Tube, k: i64, t: f64) -> &[TubeBox] {
    let lo = tube.boxes.partition_point(|b| chunk_index(b.timestamp, t) < k);
    let hi = tube.boxes.partition_point(|b| chunk_index(b.timestamp, t) <= k);
    &tube.boxes[lo..hi]
}

fn chunk_final(tube: &Tube, k: i64, now: f64, t: f64) -> bool {
    tube.closed || (k + 1) as f64 * t <= now
}

/// Binary operators for one pair of tubes in the same camera.
#[derive(Debug, Clone)]
pub struct PairState {
    pub a: u64,
    pub b: u64,
    k_next: i64,
    run: Option<(i64, Interval)>,
    near_done: bool,
    same_done: bool,
    pub out: Vec<(SpatialOp, Interval)>,
}

impl PairState {
    pub fn new(a: &Tube, b: &Tube, cfg: &SpatialConfig) -> PairState {
        let (a, b) = if a.tube_id < b.tube_id { (a, b) } else { (b, a) };
        PairState {
            a: a.tube_id,
            b: b.tube_id,
            k_next: chunk_index(a.start_ts().max(b.start_ts()), cfg.t_chunk),
            run: None,
            near_done: false,
            same_done: false,
            out: Vec::new(),
        }
    }

    pub fn done(&self) -> bool {
        self.near_done && self.same_done
    }

    fn release_run(&mut self, ta: &Tube, tb: &Tube, cfg: &SpatialConfig) {
        if let Some((_, iv)) = self.run.take() {
            self.out.push((SpatialOp::Near, iv));
            if approach_ok(ta, tb, iv.start, cfg) {
                self.out.push((SpatialOp::Approach, iv));
            }
        }
    }

    /// Evaluates every chunk that became final for both tubes.
    pub fn update(&mut self, ta: &Tube, tb: &Tube, now: f64, cfg: &SpatialConfig) {
        let t = cfg.t_chunk;
        if !self.near_done {
            let limit = |x: &Tube| if x.closed { chunk_index(x.end_ts(), t) } else { i64::MAX };
            let last = limit(ta).min(limit(tb));
            while self.k_next <= last
                && chunk_final(ta, self.k_next, now, t)
                && chunk_final(tb, self.k_next, now, t)
            {
                let k = self.k_next;
                let (sa, sb) = (chunk_slice(ta, k, t), chunk_slice(tb, k, t));
                let hit = if sa.is_empty() || sb.is_empty() {
                    None
                } else {
                    near_chunk(sa, sb, cfg.delta)
                };
                match (hit, &mut self.run) {
                    (Some(iv), Some((k_last, acc))) if *k_last + 1 == k => {
                        *k_last = k;
                        acc.end = iv.end;
                    }
                    (Some(iv), _) => {
                        self.release_run(ta, tb, cfg);
                        self.run = Some((k, iv));
                    }
                    (None, _) => self.release_run(ta, tb, cfg),
                }
                self.k_next += 1;
            }
            if self.k_next > last {
                self.release_run(ta, tb, cfg);
                self.near_done = true;
            }
        }
        if !self.same_done {
            let settled = (ta.closed && tb.closed)
                || (ta.closed && ta.end_ts() <= tb.end_ts())
                || (tb.closed && tb.end_ts() <= ta.end_ts());
            if settled {
                if let Some(iv) = same_camera(ta, tb) {
                    self.out.push((SpatialOp::SameCamera, iv));
                }
                self.same_done = true;
            }
        }
    }
}

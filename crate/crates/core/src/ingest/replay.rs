use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::{Duration, Instant};

use super::trace::{DetectionEvent, Trace};

struct Head<'a> {
    ts: f64,
    camera: &'a str,
    stream: usize,
    pos: usize,
}

impl PartialEq for Head<'_> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Head<'_> {}
impl PartialOrd for Head<'_> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Head<'_> {
    // reversed: BinaryHeap is a max-heap
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .ts
            .total_cmp(&self.ts)
            .then_with(|| other.camera.cmp(self.camera))
    }
}

/// Merges per-camera streams into global timestamp order. Cameras with equal
/// timestamps are served in camera-id order; each camera keeps trace order.
pub struct Replay<'a> {
    streams: Vec<&'a [DetectionEvent]>,
    heap: BinaryHeap<Head<'a>>,
    speed: f64,
    started: Option<(Instant, f64)>,
}

impl<'a> Replay<'a> {
    /// `speed` multiplies real time; `f64::INFINITY` delivers without waiting.
    pub fn new(trace: &'a Trace, speed: f64) -> Replay<'a> {
        assert!(speed > 0.0, "replay speed must be positive");
        let streams: Vec<&[DetectionEvent]> = trace.streams.values().map(Vec::as_slice).collect();
        let heap = streams
            .iter()
            .enumerate()
            .filter(|(_, s)| !s.is_empty())
            .map(|(i, s)| Head {
                ts: s[0].timestamp,
                camera: &s[0].camera_id,
                stream: i,
                pos: 0,
            })
            .collect();
        Replay {
            streams,
            heap,
            speed,
            started: None,
        }
    }
}

impl<'a> Iterator for Replay<'a> {
    type Item = &'a DetectionEvent;

    fn next(&mut self) -> Option<&'a DetectionEvent> {
        let head = self.heap.pop()?;
        let stream = self.streams[head.stream];
        let ev = &stream[head.pos];
        if let Some(next) = stream.get(head.pos + 1) {
            self.heap.push(Head {
                ts: next.timestamp,
                camera: &next.camera_id,
                stream: head.stream,
                pos: head.pos + 1,
            });
        }
        if self.speed.is_finite() {
            let (t0, ts0) = *self.started.get_or_insert((Instant::now(), ev.timestamp));
            let due = t0 + Duration::from_secs_f64(((ev.timestamp - ts0) / self.speed).max(0.0));
            let now = Instant::now();
            if due > now {
                std::thread::sleep(due - now);
            }
        }
        Some(ev)
    }
}

/// All events of a trace in replay order.
pub fn ordered(trace: &Trace) -> Vec<&DetectionEvent> {
    Replay::new(trace, f64::INFINITY).collect()
}

use std::fmt;
use std::ops::Range;

use crate::tracker::{Tube, TubeBox};

/// Closed time interval `[start, end]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Interval {
    pub start: f64,
    pub end: f64,
}

impl Interval {
    pub fn new(start: f64, end: f64) -> Interval {
        debug_assert!(start <= end, "interval [{start}, {end}]");
        Interval { start, end }
    }

    pub fn point(t: f64) -> Interval {
        Interval { start: t, end: t }
    }

    pub fn duration(&self) -> f64 {
        self.end - self.start
    }

    /// Closed intervals share at least one instant.
    pub fn overlaps(&self, other: &Interval) -> bool {
        self.start <= other.end && other.start <= self.end
    }

    pub fn intersection(&self, other: &Interval) -> Option<Interval> {
        let s = self.start.max(other.start);
        let e = self.end.min(other.end);
        (s <= e).then(|| Interval::new(s, e))
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{:.3},{:.3}]", self.start, self.end)
    }
}

/// Index of the global chunk grid cell holding `ts`.
pub fn chunk_index(ts: f64, t_chunk: f64) -> i64 {
    (ts / t_chunk).floor() as i64
}

/// The boxes of one tube that fall into one grid cell.
#[derive(Debug, Clone, PartialEq)]
pub struct Chunk {
    pub tube_id: u64,
    pub index: i64,
    /// Positions of the chunk's boxes within the tube.
    pub boxes: Range<usize>,
}

impl Chunk {
    pub fn slice<'a>(&self, tube: &'a Tube) -> &'a [TubeBox] {
        &tube.boxes[self.boxes.clone()]
    }

    /// From the first to the last box timestamp.
    pub fn span(&self, tube: &Tube) -> Interval {
        let b = self.slice(tube);
        Interval::new(b[0].timestamp, b[b.len() - 1].timestamp)
    }

    pub fn grid(&self, t_chunk: f64) -> (f64, f64) {
        (self.index as f64 * t_chunk, (self.index + 1) as f64 * t_chunk)
    }
}

/// Nonempty chunks of a tube in time order.
pub fn chunks(tube: &Tube, t_chunk: f64) -> Vec<Chunk> {
    chunks_from(tube, t_chunk, 0)
}

/// Nonempty chunks whose boxes start at position `from` or later.
pub fn chunks_from(tube: &Tube, t_chunk: f64, from: usize) -> Vec<Chunk> {
    let mut out: Vec<Chunk> = Vec::new();
    for (i, b) in tube.boxes.iter().enumerate().skip(from) {
        let k = chunk_index(b.timestamp, t_chunk);
        match out.last_mut() {
            Some(c) if c.index == k => c.boxes.end = i + 1,
            _ => out.push(Chunk {
                tube_id: tube.tube_id,
                index: k,
                boxes: i..i + 1,
            }),
        }
    }
    out
}

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl BoundingBox {
    pub fn new(x: f64, y: f64, w: f64, h: f64) -> Self {
        BoundingBox { x, y, w, h }
    }

    pub fn center(&self) -> (f64, f64) {
        (self.x + self.w / 2.0, self.y + self.h / 2.0)
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    pub fn iou(&self, other: &BoundingBox) -> f64 {
        let ix = (self.x + self.w).min(other.x + other.w) - self.x.max(other.x);
        let iy = (self.y + self.h).min(other.y + other.h) - self.y.max(other.y);
        if ix <= 0.0 || iy <= 0.0 {
            return 0.0;
        }
        let inter = ix * iy;
        inter / (self.area() + other.area() - inter)
    }

    /// Bytes of a raw RGB crop of this box.
    pub fn crop_bytes(&self) -> u64 {
        (self.w.round() as u64) * (self.h.round() as u64) * 3
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionEvent {
    pub camera_id: String,
    pub frame_index: u64,
    /// Ordinal of this box within its frame.
    pub box_id: u32,
    pub timestamp: f64,
    pub bbox: BoundingBox,
    pub label: String,
    pub gt_identity: Option<u64>,
    pub gt_actions: Vec<String>,
}

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("cannot read trace: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("line {line}: camera `{camera}` goes back in time")]
    NonMonotoneTimestamp { line: usize, camera: String },
}

/// Detections partitioned by camera, each stream in trace order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trace {
    pub streams: BTreeMap<String, Vec<DetectionEvent>>,
}

pub(crate) fn is_camera_id(s: &str) -> bool {
    !s.is_empty()
        && s
            .bytes()
            .all(|b| b.is_ascii_alphanumeric() || b == b'_' || b == b'-' || b == b'.')
}

fn parse_line(line: usize, text: &str) -> Result<DetectionEvent, TraceError> {
    let fail = |message: String| TraceError::Format { line, message };
    let fields: Vec<&str> = text.split_whitespace().collect();
    if !(8..=10).contains(&fields.len()) {
        return Err(fail(format!("expected 8 to 10 fields, found {}", fields.len())));
    }
    if !is_camera_id(fields[0]) {
        return Err(fail(format!("bad camera id `{}`", fields[0])));
    }
    let frame_index: u64 = fields[1]
        .parse()
        .map_err(|_| fail(format!("bad frame index `{}`", fields[1])))?;
    let num = |i: usize, what: &str| -> Result<f64, TraceError> {
        match fields[i].parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(fail(format!("bad {what} `{}`", fields[i]))),
        }
    };
    let timestamp = num(2, "timestamp")?;
    let bbox = BoundingBox::new(num(3, "x")?, num(4, "y")?, num(5, "w")?, num(6, "h")?);
    if bbox.w <= 0.0 || bbox.h <= 0.0 {
        return Err(fail("box width and height must be positive".into()));
    }
    if bbox.x < 0.0 || bbox.y < 0.0 {
        return Err(fail("box origin must be non-negative".into()));
    }
    let label = fields[7];
    if !crate::rules::is_valid_name(label) {
        return Err(fail(format!("bad label `{label}`")));
    }
    let gt_identity = match fields.get(8) {
        None | Some(&"-") => None,
        Some(s) => Some(
            s.parse()
                .map_err(|_| fail(format!("bad ground-truth identity `{s}`")))?,
        ),
    };
    let gt_actions = match fields.get(9) {
        None | Some(&"-") => Vec::new(),
        Some(s) => {
            let acts: Vec<String> = s.split(',').map(String::from).collect();
            if let Some(bad) = acts.iter().find(|a| !crate::rules::is_valid_name(a)) {
                return Err(fail(format!("bad action name `{bad}`")));
            }
            acts
        }
    };
    Ok(DetectionEvent {
        camera_id: fields[0].to_string(),
        frame_index,
        box_id: 0,
        timestamp,
        bbox,
        label: label.to_string(),
        gt_identity,
        gt_actions,
    })
}

impl Trace {
    pub fn parse(text: &str) -> Result<Trace, TraceError> {
        let mut streams: BTreeMap<String, Vec<DetectionEvent>> = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let mut ev = parse_line(line, body)?;
            let stream = streams.entry(ev.camera_id.clone()).or_default();
            if let Some(prev) = stream.last() {
                let same_frame = prev.frame_index == ev.frame_index;
                if ev.timestamp < prev.timestamp
                    || ev.frame_index < prev.frame_index
                    || (same_frame && ev.timestamp != prev.timestamp)
                {
                    return Err(TraceError::NonMonotoneTimestamp {
                        line,
                        camera: ev.camera_id,
                    });
                }
                if same_frame {
                    ev.box_id = prev.box_id + 1;
                }
            }
            stream.push(ev);
        }
        Ok(Trace { streams })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Trace, TraceError> {
        Trace::parse(&std::fs::read_to_string(path)?)
    }

    /// Builds a trace from events in any order, assigning box ids.
    pub fn from_events(mut events: Vec<DetectionEvent>) -> Trace {
        events.sort_by(|a, b| {
            a.camera_id
                .cmp(&b.camera_id)
                .then(a.timestamp.total_cmp(&b.timestamp))
                .then(a.frame_index.cmp(&b.frame_index))
        });
        let mut streams: BTreeMap<String, Vec<DetectionEvent>> = BTreeMap::new();
        for mut ev in events {
            let stream = streams.entry(ev.camera_id.clone()).or_default();
            ev.box_id = match stream.last() {
                Some(p) if p.frame_index == ev.frame_index => p.box_id + 1,
                _ => 0,
            };
            stream.push(ev);
        }
        Trace { streams }
    }

    pub fn len(&self) -> usize {
        self.streams.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn events(&self) -> impl Iterator<Item = &DetectionEvent> {
        self.streams.values().flatten()
    }

    /// Time span covered by the trace, `(0, 0)` when empty.
    pub fn span(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for e in self.events() {
            lo = lo.min(e.timestamp);
            hi = hi.max(e.timestamp);
        }
        if lo.is_finite() {
            (lo, hi)
        } else {
            (0.0, 0.0)
        }
    }

    /// Serializes in global replay order; `Trace::parse` reads it back unchanged.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for ev in super::replay::ordered(self) {
            out.push_str(&format_event(ev));
            out.push('\n');
        }
        out
    }
}

pub fn format_event(ev: &DetectionEvent) -> String {
    let mut s = format!(
        "{} {} {} {} {} {} {} {}",
        ev.camera_id,
        ev.frame_index,
        ev.timestamp,
        ev.bbox.x,
        ev.bbox.y,
        ev.bbox.w,
        ev.bbox.h,
        ev.label
    );
    match ev.gt_identity {
        Some(id) => write!(s, " {id}").unwrap(),
        None => s.push_str(" -"),
    }
    if ev.gt_actions.is_empty() {
        s.push_str(" -");
    } else {
        write!(s, " {}", ev.gt_actions.join(",")).unwrap();
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_has_no_streams() {
        assert!(Trace::parse("").unwrap().streams.is_empty());
        assert!(Trace::parse("# header only\n\n").unwrap().streams.is_empty());
    }

    #[test]
    fn interleaved_cameras_partition() {
        let text = "a 0 0 1 1 10 10 person\nb 0 0 1 1 10 10 car 4\na 1 0.05 1 1 10 10 person 2 talk,sit\nb 1 0.05 2 2 10 10 car\n";
        let t = Trace::parse(text).unwrap();
        assert_eq!(t.streams.len(), 2);
        assert_eq!(t.streams["a"].len(), 2);
        assert_eq!(t.streams["a"][1].gt_actions, vec!["talk", "sit"]);
        assert_eq!(t.streams["b"][0].gt_identity, Some(4));
        // oracle: stable partition of the file lines by first field
        for (cam, evs) in &t.streams {
            let expect: Vec<&str> = text.lines().filter(|l| l.starts_with(cam.as_str())).collect();
            let got: Vec<String> = evs.iter().map(format_event).collect();
            assert_eq!(got.len(), expect.len());
            for (g, e) in got.iter().zip(&expect) {
                assert_eq!(g.split_whitespace().take(8).collect::<Vec<_>>(), e.split_whitespace().take(8).collect::<Vec<_>>());
            }
        }
    }

    #[test]
    fn zero_width_is_rejected_at_line() {
        let err = Trace::parse("a 0 0 1 1 10 10 person\na 1 0.1 1 1 0 10 person\n").unwrap_err();
        assert!(matches!(err, TraceError::Format { line: 2, .. }));
    }

    #[test]
    fn time_going_backwards_is_rejected() {
        let err = Trace::parse("a 0 1 1 1 10 10 person\na 1 0.5 1 1 10 10 person\n").unwrap_err();
        assert!(matches!(err, TraceError::NonMonotoneTimestamp { line: 2, .. }));
    }

    #[test]
    fn boxes_in_one_frame_get_ordinals() {
        let t = Trace::parse("a 3 0.15 1 1 10 10 person\na 3 0.15 50 1 10 10 bag\na 4 0.2 1 1 10 10 person\n").unwrap();
        let ids: Vec<u32> = t.streams["a"].iter().map(|e| e.box_id).collect();
        assert_eq!(ids, vec![0, 1, 0]);
    }

    #[test]
    fn text_round_trip() {
        let text = "a 0 0 1.5 1 10 10 person 7 talk\nb 0 0 1 1 10 10 car - -\na 1 0.05 1 1 10.25 10 person 7 -\n";
        let t = Trace::parse(text).unwrap();
        assert_eq!(Trace::parse(&t.to_text()).unwrap(), t);
    }

    #[test]
    fn iou_basics() {
        let a = BoundingBox::new(0.0, 0.0, 10.0, 10.0);
        assert!((a.iou(&a) - 1.0).abs() < 1e-12);
        assert_eq!(a.iou(&BoundingBox::new(20.0, 0.0, 10.0, 10.0)), 0.0);
        let b = BoundingBox::new(5.0, 0.0, 10.0, 10.0);
        assert!((a.iou(&b) - 50.0 / 150.0).abs() < 1e-12);
        assert_eq!(BoundingBox::new(0.0, 0.0, 100.0, 200.0).crop_bytes(), 60_000);
    }
}

use std::fmt::{self, Write as _};
use std::sync::Arc;

use crate::spatial::Interval;

/// What a rule variable binds: a person's global identity, or a single tube
/// (objects, and persons whose identity could not be established).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Entity {
    Identity(u64),
    Tube(u64),
}

impl fmt::Display for Entity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Entity::Identity(i) => write!(f, "i{i}"),
            Entity::Tube(t) => write!(f, "t{t}"),
        }
    }
}

/// One side of an atom: the tube it came from and what it binds to.
#[derive(Debug, Clone, PartialEq)]
pub struct Operand {
    pub tube_id: u64,
    pub entity: Entity,
    pub label: Arc<str>,
    /// Majority ground-truth identity of the tube, for evaluation only.
    pub gt: Option<u64>,
}

/// An operator that held over an interval: a spatial match or a positive
/// action report.
#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub op: Arc<str>,
    pub subject: Operand,
    pub object: Option<Operand>,
    pub interval: Interval,
    /// Simulated time at which this fact became known.
    pub avail_ts: f64,
}

impl Atom {
    pub fn operands(&self) -> impl Iterator<Item = &Operand> {
        std::iter::once(&self.subject).chain(self.object.as_ref())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActivityEvent {
    pub activity: String,
    pub completion_ts: f64,
    pub detection_ts: f64,
    /// Variables in declaration order; `None` when only absent nodes used it.
    pub bindings: Vec<(String, Option<(Entity, Option<u64>)>)>,
    pub nodes: Vec<(usize, Interval)>,
}

impl ActivityEvent {
    fn write_tail(&self, out: &mut String, with_gt: bool) {
        let vars: Vec<String> = self
            .bindings
            .iter()
            .map(|(v, b)| match b {
                Some((e, Some(g))) if with_gt => format!("{v}={e}/g{g}"),
                Some((e, _)) => format!("{v}={e}"),
                None => format!("{v}=-"),
            })
            .collect();
        let nodes: Vec<String> = self.nodes.iter().map(|(n, iv)| format!("{n}:{iv}")).collect();
        write!(out, " {} {}", vars.join(","), nodes.join(",")).unwrap();
    }

    /// Everything except the detection time and the evaluation annotations;
    /// equal keys mean the same match.
    pub fn key(&self) -> String {
        let mut s = format!("{} {:.3}", self.activity, self.completion_ts);
        self.write_tail(&mut s, false);
        s
    }

    pub fn latency(&self) -> f64 {
        self.detection_ts - self.completion_ts
    }

    pub fn log_line(&self) -> String {
        let mut s = format!(
            "{} {:.3} {:.3}",
            self.activity, self.completion_ts, self.detection_ts
        );
        self.write_tail(&mut s, true);
        s
    }

    pub fn entities(&self) -> Vec<Entity> {
        let mut v: Vec<Entity> = self.bindings.iter().filter_map(|(_, b)| b.map(|(e, _)| e)).collect();
        v.sort();
        v
    }

    pub fn gt_identities(&self) -> Vec<u64> {
        let mut v: Vec<u64> = self.bindings.iter().filter_map(|(_, b)| b.and_then(|(_, g)| g)).collect();
        v.sort();
        v.dedup();
        v
    }
}

impl fmt::Display for ActivityEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.log_line())
    }
}

/// Sorts events into the canonical log order.
pub fn sort_events(events: &mut [ActivityEvent]) {
    events.sort_by(|a, b| {
        a.completion_ts
            .total_cmp(&b.completion_ts)
            .then_with(|| a.key().cmp(&b.key()))
            .then(a.detection_ts.total_cmp(&b.detection_ts))
    });
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedEvent {
    pub activity: String,
    pub completion_ts: f64,
    pub detection_ts: f64,
    pub gt_identities: Vec<u64>,
    pub entities: Vec<String>,
}

/// Reads back the fields of a log line needed for scoring.
pub fn parse_event_line(line: &str) -> Option<ParsedEvent> {
    let f: Vec<&str> = line.split_whitespace().collect();
    if f.len() < 4 {
        return None;
    }
    let mut gt = Vec::new();
    let mut entities = Vec::new();
    for b in f[3].split(',') {
        let (_, val) = b.split_once('=')?;
        if val == "-" {
            continue;
        }
        let (ent, g) = match val.split_once("/g") {
            Some((e, g)) => (e, Some(g.parse::<u64>().ok()?)),
            None => (val, None),
        };
        entities.push(ent.to_string());
        gt.extend(g);
    }
    gt.sort();
    gt.dedup();
    entities.sort();
    Some(ParsedEvent {
        activity: f[0].to_string(),
        completion_ts: f[1].parse().ok()?,
        detection_ts: f[2].parse().ok()?,
        gt_identities: gt,
        entities,
    })
}

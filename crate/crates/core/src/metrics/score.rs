use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::matcher::{parse_event_line, ActivityEvent, ParsedEvent};

pub const DEFAULT_TOLERANCE_S: f64 = 2.0;

/// One annotated complex activity.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthActivity {
    pub activity: String,
    pub identities: Vec<u64>,
    pub completion_ts: f64,
    pub cameras: Vec<String>,
}

impl GroundTruthActivity {
    pub fn to_line(&self) -> String {
        let ids: Vec<String> = self.identities.iter().map(u64::to_string).collect();
        format!(
            "{} {:.3} {} {}",
            self.activity,
            self.completion_ts,
            ids.join(","),
            self.cameras.join(",")
        )
    }
}

#[derive(Debug, Error)]
pub enum GtError {
    #[error("cannot read ground truth: {0}")]
    Io(#[from] std::io::Error),
    #[error("ground truth line {0}: expected `activity completion_ts ids cameras`")]
    Format(usize),
}

pub fn parse_gt(text: &str) -> Result<Vec<GroundTruthActivity>, GtError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 4 {
            return Err(GtError::Format(i + 1));
        }
        let ids: Option<Vec<u64>> = f[2].split(',').map(|s| s.parse().ok()).collect();
        out.push(GroundTruthActivity {
            activity: f[0].to_string(),
            completion_ts: f[1].parse().map_err(|_| GtError::Format(i + 1))?,
            identities: ids.ok_or(GtError::Format(i + 1))?,
            cameras: f[3].split(',').map(String::from).collect(),
        });
    }
    Ok(out)
}

pub fn format_gt(gt: &[GroundTruthActivity]) -> String {
    gt.iter().map(|g| g.to_line() + "\n").collect()
}

/// Reads an event log, skipping blank and `#` lines.
pub fn parse_event_log(text: &str) -> Result<Vec<ParsedEvent>, String> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        out.push(parse_event_line(t).ok_or_else(|| format!("event log line {}: malformed", i + 1))?);
    }
    Ok(out)
}

pub fn parsed(events: &[ActivityEvent]) -> Vec<ParsedEvent> {
    events
        .iter()
        .map(|e| ParsedEvent {
            activity: e.activity.clone(),
            completion_ts: e.completion_ts,
            detection_ts: e.detection_ts,
            gt_identities: e.gt_identities(),
            entities: e.entities().iter().map(ToString::to_string).collect(),
        })
        .collect()
}

/// Collapses reports of one activity by one set of entities whose completion
/// times chain together within `window` seconds, keeping the earliest.
pub fn dedup(events: &[ParsedEvent], window: f64) -> Vec<ParsedEvent> {
    let mut groups: BTreeMap<(&str, &[String]), Vec<&ParsedEvent>> = BTreeMap::new();
    for e in events {
        groups.entry((&e.activity, &e.entities)).or_default().push(e);
    }
    let mut out = Vec::new();
    for (_, mut g) in groups {
        g.sort_by(|a, b| a.completion_ts.total_cmp(&b.completion_ts).then(a.detection_ts.total_cmp(&b.detection_ts)));
        let mut prev = f64::NEG_INFINITY;
        for e in g {
            if e.completion_ts - prev > window {
                out.push(e.clone());
            }
            prev = e.completion_ts;
        }
    }
    canonical_order(&mut out);
    out
}

fn canonical_order(events: &mut [ParsedEvent]) {
    events.sort_by(|a, b| {
        a.completion_ts
            .total_cmp(&b.completion_ts)
            .then_with(|| a.activity.cmp(&b.activity))
            .then_with(|| a.entities.cmp(&b.entities))
            .then_with(|| a.gt_identities.cmp(&b.gt_identities))
            .then(a.detection_ts.total_cmp(&b.detection_ts))
    });
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Counts {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
}

impl Counts {
    /// `None` when nothing was reported.
    pub fn precision(&self) -> Option<f64> {
        (self.tp + self.fp > 0).then(|| self.tp as f64 / (self.tp + self.fp) as f64)
    }

    /// `None` when there was nothing to find.
    pub fn recall(&self) -> Option<f64> {
        (self.tp + self.fn_ > 0).then(|| self.tp as f64 / (self.tp + self.fn_) as f64)
    }

    fn add(&mut self, o: Counts) {
        self.tp += o.tp;
        self.fp += o.fp;
        self.fn_ += o.fn_;
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LatencySummary {
    pub count: usize,
    pub mean: f64,
    pub p50: f64,
    pub p95: f64,
    pub max: f64,
}

impl LatencySummary {
    pub fn of(values: &[f64]) -> LatencySummary {
        if values.is_empty() {
            return LatencySummary::default();
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let q = |p: f64| v[((v.len() - 1) as f64 * p).round() as usize];
        LatencySummary {
            count: v.len(),
            mean: v.iter().sum::<f64>() / v.len() as f64,
            p50: q(0.5),
            p95: q(0.95),
            max: v[v.len() - 1],
        }
    }
}

/// Run-level figures copied into a report when scoring a live run.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RunFigures {
    pub throughput_eps: f64,
    pub uploaded_bytes: u64,
    pub peak_cache_bytes: u64,
    pub invocations: u64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScoreReport {
    pub overall: Counts,
    pub per_activity: BTreeMap<String, Counts>,
    pub latency: LatencySummary,
    pub run: Option<RunFigures>,
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "undefined".to_string(), |x| format!("{x:.6}"))
}

impl ScoreReport {
    pub fn precision(&self) -> Option<f64> {
        self.overall.precision()
    }

    pub fn recall(&self) -> Option<f64> {
        self.overall.recall()
    }

    /// Line-delimited `key=value`, stable for diffing.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let c = self.overall;
        writeln!(s, "tp={}\nfp={}\nfn={}", c.tp, c.fp, c.fn_).unwrap();
        writeln!(s, "precision={}\nrecall={}", opt(c.precision()), opt(c.recall())).unwrap();
        let l = self.latency;
        writeln!(
            s,
            "latency_count={}\nlatency_mean_s={:.3}\nlatency_p50_s={:.3}\nlatency_p95_s={:.3}\nlatency_max_s={:.3}",
            l.count, l.mean, l.p50, l.p95, l.max
        )
        .unwrap();
        if let Some(r) = self.run {
            writeln!(
                s,
                "throughput_eps={:.1}\nuploaded_bytes={}\npeak_cache_bytes={}\ninvocations={}",
                r.throughput_eps, r.uploaded_bytes, r.peak_cache_bytes, r.invocations
            )
            .unwrap();
        }
        for (name, c) in &self.per_activity {
            writeln!(
                s,
                "activity.{name}.tp={}\nactivity.{name}.fp={}\nactivity.{name}.fn={}\nactivity.{name}.precision={}\nactivity.{name}.recall={}",
                c.tp,
                c.fp,
                c.fn_,
                opt(c.precision()),
                opt(c.recall())
            )
            .unwrap();
        }
        s
    }
}

fn overlaps(a: &[u64], b: &[u64]) -> bool {
    a.iter().any(|x| b.contains(x))
}

/// Greedy one-to-one matching. Reports are first collapsed into instances
/// with `dedup` (window = tolerance), then visited in canonical order; each
/// takes the closest-in-time unmatched ground-truth entry with the same name
/// and a shared identity.
pub fn score(events: &[ParsedEvent], gt: &[GroundTruthActivity], tolerance_s: f64) -> ScoreReport {
    let mut evs = dedup(events, tolerance_s);
    canonical_order(&mut evs);
    let mut used = vec![false; gt.len()];
    let mut report = ScoreReport::default();
    let mut bump = |name: &str, c: Counts| {
        report.per_activity.entry(name.to_string()).or_default().add(c);
    };
    let mut latencies = Vec::new();
    for e in &evs {
        let best = gt
            .iter()
            .enumerate()
            .filter(|(i, g)| {
                !used[*i]
                    && g.activity == e.activity
                    && overlaps(&g.identities, &e.gt_identities)
                    && (g.completion_ts - e.completion_ts).abs() <= tolerance_s
            })
            .min_by(|(i, a), (j, b)| {
                let da = (a.completion_ts - e.completion_ts).abs();
                let db = (b.completion_ts - e.completion_ts).abs();
                da.total_cmp(&db).then(i.cmp(j))
            })
            .map(|(i, _)| i);
        match best {
            Some(i) => {
                used[i] = true;
                bump(&e.activity, Counts { tp: 1, fp: 0, fn_: 0 });
            }
            None => bump(&e.activity, Counts { tp: 0, fp: 1, fn_: 0 }),
        }
        latencies.push(e.detection_ts - e.completion_ts);
    }
    for (g, u) in gt.iter().zip(&used) {
        if !u {
            bump(&g.activity, Counts { tp: 0, fp: 0, fn_: 1 });
        }
    }
    report.overall = report.per_activity.values().fold(Counts::default(), |mut acc, c| {
        acc.add(*c);
        acc
    });
    report.latency = LatencySummary::of(&latencies);
    report
}

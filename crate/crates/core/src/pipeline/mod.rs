//! The end-to-end run: replay, tracking, spatial operators, action queries
//! and matching, advanced one chunk boundary at a time.

mod batch;
mod context;
mod incremental;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::sync::Arc;

pub use batch::batch_atoms;
pub use context::{make_atom, operand, ChunkAnswer};
pub use incremental::{MotionState, PairState};

use context::{chunk_bounds, chunk_is_final, query_chunk, Ctx, QueryStats};

use crate::ingest::{CameraNode, CameraTopology, DetectionEvent, Replay, Trace, DEFAULT_CACHE_LIMIT};
use crate::matcher::{sort_events, ActivityEvent, Atom, Engine, EngineConfig, EngineStats, Mode, Plan};
use crate::oracle::{Oracle, OracleConfig};
use crate::rules::ActivityGraph;
use crate::spatial::{self, chunk_index, Interval, SpatialConfig, SpatialOp};
use crate::tracker::{Tracker, TrackerConfig, TrackerStats};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunConfig {
    pub mode: Mode,
    pub spatial: SpatialConfig,
    pub tracker: TrackerConfig,
    pub oracle: OracleConfig,
    pub engine: EngineConfig,
    pub cache_limit_bytes: u64,
    /// Cameras drop crops older than this.
    pub retention_s: f64,
    /// Replay speed; infinity runs as fast as possible.
    pub speed: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            mode: Mode::Lazy,
            spatial: SpatialConfig::default(),
            tracker: TrackerConfig::default(),
            oracle: OracleConfig::default(),
            engine: EngineConfig::default(),
            cache_limit_bytes: DEFAULT_CACHE_LIMIT,
            retention_s: 300.0,
            speed: f64::INFINITY,
        }
    }
}

/// Deterministic run counters. Wall-clock figures are reported separately.
#[derive(Debug, Clone, PartialEq)]
pub struct Accounting {
    pub mode: Mode,
    pub cameras: usize,
    pub detections: u64,
    pub trace_span_s: f64,
    pub tubes: u64,
    pub identities: u64,
    pub uploaded_bytes: u64,
    pub metadata_bytes: u64,
    pub peak_cache_bytes: u64,
    pub crop_requests: u64,
    pub cache_misses: u64,
    pub action_invocations: u64,
    pub action_cost_s: f64,
    pub worker_busy_s: Vec<f64>,
    pub unavailable_chunks: u64,
    pub reid_queries: u64,
    pub events: u64,
    pub latency_mean_s: f64,
    pub latency_max_s: f64,
    pub tracker: TrackerStats,
    pub engine: EngineStats,
}

impl Accounting {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let busy: Vec<String> = self.worker_busy_s.iter().map(|b| format!("{b:.3}")).collect();
        let lines: Vec<(&str, String)> = vec![
            ("mode", self.mode.name().to_string()),
            ("cameras", self.cameras.to_string()),
            ("detections", self.detections.to_string()),
            ("trace_span_s", format!("{:.3}", self.trace_span_s)),
            ("tubes", self.tubes.to_string()),
            ("identities", self.identities.to_string()),
            ("uploaded_bytes", self.uploaded_bytes.to_string()),
            ("metadata_bytes", self.metadata_bytes.to_string()),
            ("total_bytes", (self.uploaded_bytes + self.metadata_bytes).to_string()),
            ("peak_cache_bytes", self.peak_cache_bytes.to_string()),
            ("crop_requests", self.crop_requests.to_string()),
            ("cache_misses", self.cache_misses.to_string()),
            ("action_invocations", self.action_invocations.to_string()),
            ("action_cost_s", format!("{:.3}", self.action_cost_s)),
            ("worker_busy_s", busy.join(",")),
            ("unavailable_chunks", self.unavailable_chunks.to_string()),
            ("reid_queries", self.reid_queries.to_string()),
            ("events", self.events.to_string()),
            ("latency_mean_s", format!("{:.3}", self.latency_mean_s)),
            ("latency_max_s", format!("{:.3}", self.latency_max_s)),
            ("instances_created", self.engine.instances_created.to_string()),
            ("instances_evicted", self.engine.instances_evicted.to_string()),
            ("instances_expired", self.engine.instances_expired.to_string()),
            ("peak_instances", self.engine.peak_instances.to_string()),
            ("checklists", self.engine.checklists_created.to_string()),
        ];
        for (k, v) in lines {
            writeln!(s, "{k}={v}").unwrap();
        }
        s
    }
}

pub struct RunOutput {
    pub events: Vec<ActivityEvent>,
    pub accounting: Accounting,
    pub tracker: Tracker,
}

impl RunOutput {
    pub fn event_log(&self) -> String {
        self.events.iter().map(|e| e.log_line() + "\n").collect()
    }
}

struct Pipeline<'a> {
    cfg: RunConfig,
    topo: &'a CameraTopology,
    cameras: BTreeMap<String, CameraNode>,
    tracker: Tracker,
    oracle: Oracle,
    engine: Engine,
    motion: HashMap<u64, MotionState>,
    pairs: Vec<PairState>,
    /// Person tubes whose chunks still have to go through the action stream.
    action_cursor: BTreeMap<u64, i64>,
    cache: HashMap<(u64, i64), ChunkAnswer>,
    qstats: QueryStats,
    dirty: BTreeSet<u64>,
    pending: Vec<Arc<Atom>>,
    events: Vec<ActivityEvent>,
}

impl<'a> Pipeline<'a> {
    fn new(
        trace: &Trace,
        topo: &'a CameraTopology,
        graphs: &[ActivityGraph],
        actions: impl IntoIterator<Item = String>,
        cfg: RunConfig,
    ) -> Pipeline<'a> {
        let ids: BTreeSet<&String> = trace.streams.keys().chain(topo.cameras.keys()).collect();
        let cameras = ids
            .into_iter()
            .map(|c| (c.clone(), CameraNode::new(c, cfg.cache_limit_bytes)))
            .collect();
        let mut ecfg = cfg.engine;
        ecfg.mode = cfg.mode;
        ecfg.t_chunk = cfg.spatial.t_chunk;
        Pipeline {
            cfg,
            topo,
            cameras,
            tracker: Tracker::new(cfg.tracker),
            oracle: Oracle::new(cfg.oracle, actions),
            engine: Engine::new(graphs.iter().cloned().map(Plan::new).collect(), ecfg),
            motion: HashMap::new(),
            pairs: Vec::new(),
            action_cursor: BTreeMap::new(),
            cache: HashMap::new(),
            qstats: QueryStats::default(),
            dirty: BTreeSet::new(),
            pending: Vec::new(),
            events: Vec::new(),
        }
    }

    fn ingest(&mut self, ev: &DetectionEvent) {
        let cam = &self.cameras[&ev.camera_id];
        match self.cfg.mode {
            Mode::Lazy => cam.observe(ev),
            Mode::Strawman => cam.eager_upload(ev),
        }
        let outcome = self.tracker.ingest_box(
            ev,
            &mut |e| cam.request_crop(e.frame_index, e.box_id),
            &self.oracle,
            self.topo,
        );
        self.dirty.insert(outcome.tube_id);
        self.dirty.extend(outcome.closed);
        if !outcome.created {
            return;
        }
        let store = &self.tracker.store;
        let tube = store.get(outcome.tube_id);
        for other in store.open_in(&ev.camera_id) {
            if other.tube_id != tube.tube_id {
                self.pairs.push(PairState::new(tube, other, &self.cfg.spatial));
            }
        }
        if tube.is_person() {
            self.action_cursor
                .insert(tube.tube_id, chunk_index(tube.start_ts(), self.cfg.spatial.t_chunk));
        }
        if let Some(iv) = spatial::re_identified(tube, store) {
            self.pending
                .push(make_atom(SpatialOp::ReIdentified.name(), tube, None, iv, ev.timestamp));
        }
    }

    fn ctx(&mut self) -> (&mut Engine, Ctx<'_>) {
        (
            &mut self.engine,
            Ctx {
                store: &self.tracker.store,
                oracle: &self.oracle,
                cameras: &self.cameras,
                topo: self.topo,
                spatial: &self.cfg.spatial,
                cache: &mut self.cache,
                stats: &mut self.qstats,
            },
        )
    }

    /// Everything that happens when simulated time reaches boundary `now`.
    fn advance(&mut self, now: f64) {
        let cfg = self.cfg.spatial;
        let store = &self.tracker.store;
        let mut atoms = std::mem::take(&mut self.pending);

        let mut found = Vec::new();
        for &id in &self.dirty {
            let tube = store.get(id);
            found.clear();
            self.motion.entry(id).or_default().update(tube, &cfg, &mut found);
            atoms.extend(found.iter().map(|&(op, iv)| make_atom(op.name(), tube, None, iv, now)));
        }
        self.dirty.clear();

        crate::par::for_each_mut_sized(&mut self.pairs, 64, |p| {
            p.update(store.get(p.a), store.get(p.b), now, &cfg);
        });
        for p in &mut self.pairs {
            for (op, iv) in p.out.drain(..) {
                atoms.push(make_atom(op.name(), store.get(p.a), Some(store.get(p.b)), iv, now));
            }
        }
        self.pairs.retain(|p| !p.done());

        if self.engine.needs_action_stream() {
            let t = cfg.t_chunk;
            let mut finished = Vec::new();
            for (&id, k_next) in self.action_cursor.iter_mut() {
                let tube = store.get(id);
                let last = chunk_index(tube.end_ts(), t);
                while *k_next <= last && chunk_is_final(tube, *k_next, now, t) {
                    if chunk_bounds(tube, *k_next, t).is_some() {
                        let ans = query_chunk(
                            &mut self.cache,
                            &mut self.qstats,
                            tube,
                            *k_next,
                            now,
                            &self.cameras,
                            &self.oracle,
                            t,
                        )
                        .expect("nonempty chunk");
                        for l in &ans.labels {
                            atoms.push(make_atom(l, tube, None, ans.span, ans.finish));
                        }
                    }
                    *k_next += 1;
                }
                if tube.closed && *k_next > last {
                    finished.push(id);
                }
            }
            for id in finished {
                self.action_cursor.remove(&id);
            }
        }

        atoms.sort_by(|x, y| atom_order(x, y));
        for a in atoms {
            self.engine.on_atom(a, now);
        }
        let (engine, mut ctx) = self.ctx();
        let evs = engine.tick(now, &mut ctx);
        self.events.extend(evs);
        let keep_from = now - self.cfg.retention_s;
        for cam in self.cameras.values() {
            cam.release_before(keep_from);
        }
    }

    fn tick(&mut self, now: f64) {
        let closed = self.tracker.close_stale(now);
        self.dirty.extend(closed);
        self.advance(now);
    }

    fn finish(&mut self, now: f64) {
        let closed = self.tracker.close_all();
        self.dirty.extend(closed);
        self.advance(now);
        let (engine, mut ctx) = self.ctx();
        let evs = engine.flush(now, &mut ctx);
        self.events.extend(evs);
    }
}

fn atom_order(x: &Atom, y: &Atom) -> std::cmp::Ordering {
    x.interval
        .end
        .total_cmp(&y.interval.end)
        .then(x.interval.start.total_cmp(&y.interval.start))
        .then_with(|| x.op.cmp(&y.op))
        .then(x.subject.tube_id.cmp(&y.subject.tube_id))
        .then(x.object.as_ref().map(|o| o.tube_id).cmp(&y.object.as_ref().map(|o| o.tube_id)))
}

/// Runs the whole trace through the system.
pub fn run(
    trace: &Trace,
    topo: &CameraTopology,
    graphs: &[ActivityGraph],
    actions: impl IntoIterator<Item = String>,
    cfg: &RunConfig,
) -> RunOutput {
    let t = cfg.spatial.t_chunk;
    let mut p = Pipeline::new(trace, topo, graphs, actions, *cfg);
    let mut boundary: Option<f64> = None;
    let mut detections = 0u64;
    for ev in Replay::new(trace, cfg.speed) {
        let b = boundary.get_or_insert(((ev.timestamp / t).floor() + 1.0) * t);
        while ev.timestamp >= *b {
            let now = *b;
            p.tick(now);
            *b = now + t;
        }
        p.ingest(ev);
        detections += 1;
    }
    let end = boundary.unwrap_or(t);
    p.tick(end);
    p.finish(end);

    let mut events = std::mem::take(&mut p.events);
    sort_events(&mut events);
    let ledger = p.oracle.ledger();
    let mut acc = Accounting {
        mode: cfg.mode,
        cameras: p.cameras.len(),
        detections,
        trace_span_s: {
            let (a, b) = trace.span();
            b - a
        },
        tubes: p.tracker.store.len() as u64,
        identities: p.tracker.stats.fresh_identities,
        uploaded_bytes: 0,
        metadata_bytes: 0,
        peak_cache_bytes: 0,
        crop_requests: 0,
        cache_misses: 0,
        action_invocations: ledger.count,
        action_cost_s: ledger.total_cost_s,
        worker_busy_s: ledger.per_worker_busy_s,
        unavailable_chunks: p.qstats.unavailable_chunks,
        reid_queries: p.tracker.stats.reid_queries,
        events: events.len() as u64,
        latency_mean_s: 0.0,
        latency_max_s: 0.0,
        tracker: p.tracker.stats,
        engine: p.engine.stats,
    };
    for cam in p.cameras.values() {
        let s = cam.stats();
        acc.uploaded_bytes += s.uploaded_bytes;
        acc.metadata_bytes += s.metadata_bytes;
        acc.peak_cache_bytes = acc.peak_cache_bytes.max(s.peak_cache_bytes);
        acc.crop_requests += s.crop_requests;
        acc.cache_misses += s.cache_misses;
    }
    if !events.is_empty() {
        let lat: Vec<f64> = events.iter().map(ActivityEvent::latency).collect();
        acc.latency_mean_s = lat.iter().sum::<f64>() / lat.len() as f64;
        acc.latency_max_s = lat.iter().cloned().fold(0.0, f64::max);
    }
    RunOutput {
        events,
        accounting: acc,
        tracker: std::mem::replace(&mut p.tracker, Tracker::new(cfg.tracker)),
    }
}

/// Interval of an atom, for callers that only need times.
pub fn atom_interval(a: &Atom) -> Interval {
    a.interval
}

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;

use crate::ingest::{CameraNode, CameraTopology};
use crate::matcher::{Atom, Entity, MatchContext, Operand, Plan, Scope};
use crate::oracle::Oracle;
use crate::rules::ClauseKind;
use crate::spatial::{self, chunk_index, Interval, SpatialConfig, SpatialOp};
use crate::tracker::{Tube, TubeStore};

/// Oracle verdict for one chunk of one person tube.
#[derive(Debug, Clone)]
pub struct ChunkAnswer {
    pub labels: Vec<String>,
    pub finish: f64,
    pub span: Interval,
}

#[derive(Debug, Default, Clone, Copy)]
pub struct QueryStats {
    /// Chunks whose crops had all been evicted; the oracle was not asked.
    pub unavailable_chunks: u64,
}

pub fn operand(t: &Tube) -> Operand {
    let entity = match (t.is_person(), t.identity) {
        (true, Some(g)) => Entity::Identity(g),
        _ => Entity::Tube(t.tube_id),
    };
    Operand {
        tube_id: t.tube_id,
        entity,
        label: t.label.as_str().into(),
        gt: t.majority_gt(),
    }
}

pub fn make_atom(op: &str, a: &Tube, b: Option<&Tube>, iv: Interval, avail: f64) -> Arc<Atom> {
    Arc::new(Atom {
        op: op.into(),
        subject: operand(a),
        object: b.map(operand),
        interval: iv,
        avail_ts: avail,
    })
}

pub fn tubes_of(store: &TubeStore, e: Entity) -> Vec<&Tube> {
    match e {
        Entity::Identity(g) => store.with_identity(g).collect(),
        Entity::Tube(t) => store.try_get(t).into_iter().collect(),
    }
}

/// Boxes of chunk `k` of a tube, if it has any.
pub fn chunk_bounds(tube: &Tube, k: i64, t: f64) -> Option<(usize, usize)> {
    let lo = tube.boxes.partition_point(|b| chunk_index(b.timestamp, t) < k);
    let hi = tube.boxes.partition_point(|b| chunk_index(b.timestamp, t) <= k);
    (lo < hi).then_some((lo, hi))
}

pub fn chunk_is_final(tube: &Tube, k: i64, now: f64, t: f64) -> bool {
    tube.closed || (k + 1) as f64 * t <= now
}

/// Runs (or recalls) the action query for one chunk. The crops are fetched
/// from the camera first; only their annotations reach the oracle.
pub fn query_chunk<'c>(
    cache: &'c mut HashMap<(u64, i64), ChunkAnswer>,
    stats: &mut QueryStats,
    tube: &Tube,
    k: i64,
    now: f64,
    cameras: &BTreeMap<String, CameraNode>,
    oracle: &Oracle,
    t_chunk: f64,
) -> Option<&'c ChunkAnswer> {
    let key = (tube.tube_id, k);
    if !cache.contains_key(&key) {
        let (lo, hi) = chunk_bounds(tube, k, t_chunk)?;
        let boxes = &tube.boxes[lo..hi];
        let span = Interval::new(boxes[0].timestamp, boxes[boxes.len() - 1].timestamp);
        let cam = &cameras[&*tube.camera_id];
        let mut gt = BTreeSet::new();
        let mut any = false;
        for b in boxes {
            if let Ok(crop) = cam.request_crop(b.frame_index, b.box_id) {
                any = true;
                gt.extend(crop.gt_actions.iter().cloned());
            }
        }
        let answer = if any {
            let (report, finish) = oracle.detect_actions(tube.tube_id, k, &gt, now);
            ChunkAnswer {
                labels: report.accepted(oracle.config.tau).map(String::from).collect(),
                finish,
                span,
            }
        } else {
            stats.unavailable_chunks += 1;
            ChunkAnswer {
                labels: Vec::new(),
                finish: now,
                span,
            }
        };
        cache.insert(key, answer);
    }
    cache.get(&key)
}

/// The pipeline's view handed to the matcher at each tick.
pub struct Ctx<'a> {
    pub store: &'a TubeStore,
    pub oracle: &'a Oracle,
    pub cameras: &'a BTreeMap<String, CameraNode>,
    pub topo: &'a CameraTopology,
    pub spatial: &'a SpatialConfig,
    pub cache: &'a mut HashMap<(u64, i64), ChunkAnswer>,
    pub stats: &'a mut QueryStats,
}

fn scope_tubes(store: &TubeStore, scope: Scope) -> Vec<&Tube> {
    match scope {
        Scope::Entity(e) => tubes_of(store, e),
        Scope::AnyPerson => store.iter().filter(|t| t.is_person()).collect(),
    }
}

impl Ctx<'_> {
    /// Final chunks of `tube` whose box span passes `keep`, with their answers.
    fn chunk_answers(
        &mut self,
        tube: &Tube,
        lo: f64,
        hi: f64,
        now: f64,
        keep: impl Fn(&Interval) -> bool,
    ) -> Vec<ChunkAnswer> {
        let t = self.spatial.t_chunk;
        let from = lo.max(tube.start_ts());
        let to = hi.min(tube.end_ts());
        if from > to {
            return Vec::new();
        }
        let mut out = Vec::new();
        for k in chunk_index(from, t)..=chunk_index(to, t) {
            if !chunk_is_final(tube, k, now, t) {
                continue;
            }
            let Some((a, b)) = chunk_bounds(tube, k, t) else { continue };
            let span = Interval::new(tube.boxes[a].timestamp, tube.boxes[b - 1].timestamp);
            if !keep(&span) {
                continue;
            }
            if let Some(ans) = query_chunk(self.cache, self.stats, tube, k, now, self.cameras, self.oracle, t) {
                out.push(ans.clone());
            }
        }
        out
    }

    fn spatial_candidates(&self, plan: &Plan, neg: usize, pinned: &[Option<Entity>], lo: f64, hi: f64) -> Vec<Arc<Atom>> {
        let node = &plan.graph.nodes[neg];
        let op = SpatialOp::from_name(&node.operator).expect("spatial operator");
        let elem = |slot: usize| plan.graph.variables[plan.node_vars[neg][slot]].1.as_str();
        let pool = |slot: usize| -> Vec<&Tube> {
            match pinned[slot] {
                Some(e) => tubes_of(self.store, e),
                None => self.store.iter().filter(|t| t.label == elem(slot)).collect(),
            }
        };
        let overlaps = |t: &Tube| t.start_ts() < hi && t.end_ts() > lo - self.spatial.w_app;
        let cfg = self.spatial;
        let mut out = Vec::new();
        if !op.is_binary() {
            for t in pool(0).into_iter().filter(|t| overlaps(t)) {
                let ivs: Vec<Interval> = match op {
                    SpatialOp::Stop => spatial::stop(t, cfg),
                    SpatialOp::Move => spatial::move_(t, cfg),
                    SpatialOp::Disappear => {
                        spatial::disappear(t, self.topo.frame_size(&t.camera_id), cfg)
                            .map(|(iv, _)| iv)
                            .into_iter()
                            .collect()
                    }
                    SpatialOp::ReIdentified => spatial::re_identified(t, self.store).into_iter().collect(),
                    _ => unreachable!(),
                };
                out.extend(ivs.into_iter().map(|iv| make_atom(op.name(), t, None, iv, iv.end)));
            }
            return out;
        }
        let left = pool(0);
        let right = pool(1);
        for a in left.iter().filter(|t| overlaps(t)) {
            for b in right.iter().filter(|t| overlaps(t)) {
                if a.tube_id == b.tube_id || a.camera_id != b.camera_id {
                    continue;
                }
                let ivs: Vec<Interval> = match op {
                    SpatialOp::Near => spatial::near(a, b, cfg),
                    SpatialOp::Approach => spatial::approach(a, b, cfg),
                    SpatialOp::SameCamera => spatial::same_camera(a, b).into_iter().collect(),
                    _ => unreachable!(),
                };
                out.extend(ivs.into_iter().map(|iv| make_atom(op.name(), a, Some(b), iv, iv.end)));
            }
        }
        out
    }
}

impl MatchContext for Ctx<'_> {
    fn action_atoms(&mut self, scope: Scope, action: &str, lo: f64, hi: f64, now: f64) -> Vec<Arc<Atom>> {
        let store = self.store;
        let tubes = scope_tubes(store, scope);
        let mut out = Vec::new();
        for tube in tubes {
            for ans in self.chunk_answers(tube, lo, hi, now, |s| s.start <= hi && s.end >= lo) {
                if ans.labels.iter().any(|l| l == action) {
                    out.push(make_atom(action, tube, None, ans.span, ans.finish));
                }
            }
        }
        out
    }

    fn negation_hit(&mut self, plan: &Plan, neg: usize, pinned: &[Option<Entity>], lo: f64, hi: f64, now: f64) -> bool {
        let node = &plan.graph.nodes[neg];
        if node.kind == ClauseKind::Action {
            let scope = match pinned[0] {
                Some(e) => Scope::Entity(e),
                None => Scope::AnyPerson,
            };
            let store = self.store;
            let tubes = scope_tubes(store, scope);
            for tube in tubes {
                for ans in self.chunk_answers(tube, lo, hi, now, |s| s.start < hi && s.end > lo) {
                    if ans.labels.iter().any(|l| *l == node.operator) {
                        return true;
                    }
                }
            }
            return false;
        }
        self.spatial_candidates(plan, neg, pinned, lo, hi)
            .iter()
            .any(|a| plan.negation_hit(neg, pinned, a, lo, hi))
    }
}

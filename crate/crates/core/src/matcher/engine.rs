//! Streaming matcher.
//!
//! Partial instances are kept for every consistent subset of the atoms seen
//! so far: an atom for node `n` starts a fresh instance and extends every
//! live instance that lacks `n`. In lazy mode, graphs whose action nodes
//! cannot be satisfied without spatial nodes never see action atoms; once an
//! instance's spatial part makes the graph satisfiable, a checklist asks the
//! oracle about the action nodes inside the windows the spatial part allows.

use std::collections::HashSet;
use std::sync::Arc;

use super::event::{ActivityEvent, Atom, Entity};
use super::plan::{Partial, Plan};

pub const DEFAULT_INSTANCE_CAP: usize = 10_000;
pub const DEFAULT_EXPIRE_S: f64 = 300.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Lazy,
    Strawman,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Lazy => "lazy",
            Mode::Strawman => "strawman",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EngineConfig {
    pub mode: Mode,
    pub instance_cap: usize,
    pub t_expire: f64,
    /// How long after a negation window closes before it is checked.
    pub settle_s: f64,
    pub t_chunk: f64,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            mode: Mode::Lazy,
            instance_cap: DEFAULT_INSTANCE_CAP,
            t_expire: DEFAULT_EXPIRE_S,
            settle_s: 4.0,
            t_chunk: 1.0,
        }
    }
}

/// Whose tubes a checklist entry inspects.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scope {
    Entity(Entity),
    AnyPerson,
}

/// Data access the engine needs from the surrounding pipeline.
pub trait MatchContext {
    /// Positive reports for `action` on final chunks in `scope` whose span
    /// meets `[lo, hi]`.
    fn action_atoms(&mut self, scope: Scope, action: &str, lo: f64, hi: f64, now: f64) -> Vec<Arc<Atom>>;

    /// Whether the negated node holds anywhere in the open window `(lo, hi)`.
    fn negation_hit(&mut self, plan: &Plan, neg: usize, pinned: &[Option<Entity>], lo: f64, hi: f64, now: f64) -> bool;
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EngineStats {
    pub instances_created: u64,
    pub instances_evicted: u64,
    pub instances_expired: u64,
    pub peak_instances: u64,
    pub checklists_created: u64,
    pub checklists_retired: u64,
    pub checklists_expired: u64,
    pub negations_rejected: u64,
}

struct Instance {
    p: Partial,
    last_progress: f64,
    seq: u64,
}

struct ActionSlot {
    node: usize,
    lo: f64,
    hi: f64,
    found: Vec<Arc<Atom>>,
    seen: HashSet<(u64, u64)>,
}

struct Checklist {
    plan: usize,
    base: Partial,
    slots: Vec<ActionSlot>,
    last_progress: f64,
}

struct PendingNegation {
    plan: usize,
    p: Partial,
    due: f64,
}

pub struct Engine {
    pub plans: Vec<Plan>,
    pub config: EngineConfig,
    pub stats: EngineStats,
    instances: Vec<Vec<Instance>>,
    checklists: Vec<Checklist>,
    pending: Vec<PendingNegation>,
    out: Vec<ActivityEvent>,
    seq: u64,
}

impl Engine {
    pub fn new(plans: Vec<Plan>, config: EngineConfig) -> Engine {
        let n = plans.len();
        Engine {
            plans,
            config,
            stats: EngineStats::default(),
            instances: (0..n).map(|_| Vec::new()).collect(),
            checklists: Vec::new(),
            pending: Vec::new(),
            out: Vec::new(),
            seq: 0,
        }
    }

    /// Whether action atoms must be produced for every person chunk.
    pub fn needs_action_stream(&self) -> bool {
        self.config.mode == Mode::Strawman
            || self
                .plans
                .iter()
                .any(|p| !p.uses_checklists && p.graph.has_action())
    }

    fn streams_node(&self, plan: &Plan, node: usize) -> bool {
        !(self.config.mode == Mode::Lazy && plan.uses_checklists && plan.is_action(node))
    }

    pub fn live_instances(&self) -> usize {
        self.instances.iter().map(Vec::len).sum()
    }

    pub fn live_checklists(&self) -> usize {
        self.checklists.len()
    }

    /// Feeds one atom; resulting events are collected until the next `tick`.
    pub fn on_atom(&mut self, atom: Arc<Atom>, now: f64) {
        for g in 0..self.plans.len() {
            for node in self.plans[g].positive.clone() {
                if !self.streams_node(&self.plans[g], node) {
                    continue;
                }
                for order in self.plans[g].orientations(node, &atom) {
                    let plan = &self.plans[g];
                    let mut fresh: Vec<Partial> = Vec::new();
                    if let Some(q) = plan.extend(&plan.empty(), node, &atom, order) {
                        fresh.push(q);
                    }
                    for inst in &self.instances[g] {
                        if inst.p.matched[node].is_none() {
                            if let Some(q) = plan.extend(&inst.p, node, &atom, order) {
                                fresh.push(q);
                            }
                        }
                    }
                    for q in fresh {
                        self.admit(g, q, now);
                    }
                }
            }
        }
    }

    fn admit(&mut self, g: usize, q: Partial, now: f64) {
        let plan = &self.plans[g];
        if plan.present(&q) {
            self.candidate(g, q.clone(), now);
        }
        let plan = &self.plans[g];
        if self.config.mode == Mode::Lazy
            && plan.uses_checklists
            && plan.presence_with(&q, &|i| plan.is_action(i))
        {
            self.open_checklist(g, q.clone(), now);
        }
        let plan = &self.plans[g];
        let extensible = plan
            .positive
            .iter()
            .any(|&i| q.matched[i].is_none() && self.streams_node(plan, i));
        if !extensible {
            return;
        }
        self.stats.instances_created += 1;
        self.seq += 1;
        let list = &mut self.instances[g];
        list.push(Instance {
            p: q,
            last_progress: now,
            seq: self.seq,
        });
        if list.len() > self.config.instance_cap {
            let (victim, _) = list
                .iter()
                .enumerate()
                .min_by(|a, b| {
                    a.1.last_progress
                        .total_cmp(&b.1.last_progress)
                        .then(a.1.seq.cmp(&b.1.seq))
                })
                .unwrap();
            list.remove(victim);
            self.stats.instances_evicted += 1;
        }
        let live = self.live_instances() as u64;
        self.stats.peak_instances = self.stats.peak_instances.max(live);
    }

    /// A satisfied assignment: emitted now, or parked until its negation
    /// windows have settled.
    fn candidate(&mut self, g: usize, p: Partial, now: f64) {
        let plan = &self.plans[g];
        if plan.negated.is_empty() {
            let det = now.max(plan.available(&p));
            self.out.push(plan.event(&p, det));
            return;
        }
        let mut due = plan.available(&p).max(now);
        for &neg in &plan.negated {
            match plan.negation_window(&p, neg) {
                Some((_, hi)) => due = due.max(hi + self.config.settle_s),
                None => {
                    self.stats.negations_rejected += 1;
                    return;
                }
            }
        }
        self.pending.push(PendingNegation { plan: g, p, due });
    }

    fn open_checklist(&mut self, g: usize, base: Partial, now: f64) {
        let plan = &self.plans[g];
        let mut slots = Vec::new();
        for &x in plan.positive.iter().filter(|&&i| plan.is_action(i)) {
            let mut lo = f64::NEG_INFINITY;
            let mut hi = f64::INFINITY;
            for (m, a) in base.matched.iter().enumerate() {
                let Some(a) = a else { continue };
                if plan.reach[m][x] {
                    lo = lo.max(a.interval.end);
                }
                if plan.reach[x][m] {
                    hi = hi.min(a.interval.start);
                }
                if plan.and_adj[m][x] {
                    lo = lo.max(a.interval.start);
                    hi = hi.min(a.interval.end);
                }
            }
            slots.push(ActionSlot {
                node: x,
                lo,
                hi,
                found: Vec::new(),
                seen: HashSet::new(),
            });
        }
        self.stats.checklists_created += 1;
        self.checklists.push(Checklist {
            plan: g,
            base,
            slots,
            last_progress: now,
        });
    }

    fn scope_of(plan: &Plan, base: &Partial, node: usize) -> Scope {
        let var = plan.node_vars[node][0];
        match base.bindings[var] {
            Some((e, _)) => Scope::Entity(e),
            None => Scope::AnyPerson,
        }
    }

    /// Resolves checklists, settles negations and expires stale state.
    /// Returns the events produced since the previous call.
    pub fn tick(&mut self, now: f64, ctx: &mut dyn MatchContext) -> Vec<ActivityEvent> {
        self.resolve_checklists(now, ctx, false);
        self.settle(now, ctx, false);
        self.expire(now);
        std::mem::take(&mut self.out)
    }

    /// End of input: every window is final.
    pub fn flush(&mut self, now: f64, ctx: &mut dyn MatchContext) -> Vec<ActivityEvent> {
        self.resolve_checklists(now, ctx, true);
        self.settle(now, ctx, true);
        std::mem::take(&mut self.out)
    }

    fn resolve_checklists(&mut self, now: f64, ctx: &mut dyn MatchContext, last: bool) {
        let t = self.config.t_chunk;
        let mut lists = std::mem::take(&mut self.checklists);
        let mut keep = Vec::with_capacity(lists.len());
        for mut cl in lists.drain(..) {
            let plan = &self.plans[cl.plan];
            let mut combos: Vec<Partial> = Vec::new();
            for s in 0..cl.slots.len() {
                let slot = &cl.slots[s];
                if slot.lo > slot.hi {
                    continue;
                }
                let scope = Self::scope_of(plan, &cl.base, slot.node);
                let op = plan.graph.nodes[slot.node].operator.clone();
                let atoms = ctx.action_atoms(scope, &op, slot.lo, slot.hi, now);
                for atom in atoms {
                    let key = (atom.subject.tube_id, atom.interval.start.to_bits());
                    if !cl.slots[s].seen.insert(key) {
                        continue;
                    }
                    cl.last_progress = now;
                    enumerate(plan, &cl.slots, s, &atom, &cl.base, &mut combos);
                    cl.slots[s].found.push(atom);
                }
            }
            for c in combos {
                self.candidate(cl.plan, c, now);
            }
            let done = last
                || cl
                    .slots
                    .iter()
                    .all(|s| s.lo > s.hi || (s.hi.is_finite() && now >= ((s.hi / t).floor() + 1.0) * t));
            if done {
                self.stats.checklists_retired += 1;
            } else if now - cl.last_progress > self.config.t_expire {
                self.stats.checklists_expired += 1;
            } else {
                keep.push(cl);
            }
        }
        self.checklists = keep;
    }

    fn settle(&mut self, now: f64, ctx: &mut dyn MatchContext, last: bool) {
        let pending = std::mem::take(&mut self.pending);
        for pn in pending {
            if !last && pn.due > now {
                self.pending.push(pn);
                continue;
            }
            let plan = &self.plans[pn.plan];
            let ok = plan.negated.iter().all(|&neg| {
                let (lo, hi) = plan.negation_window(&pn.p, neg).expect("checked on admission");
                hi <= lo || !ctx.negation_hit(plan, neg, &plan.negation_operands(&pn.p, neg), lo, hi, now)
            });
            if ok {
                self.out.push(plan.event(&pn.p, now.max(plan.available(&pn.p))));
            } else {
                self.stats.negations_rejected += 1;
            }
        }
    }

    /// Drops instances without progress for longer than `t_expire`.
    pub fn expire(&mut self, now: f64) {
        let limit = self.config.t_expire;
        for list in &mut self.instances {
            let before = list.len();
            list.retain(|i| now - i.last_progress <= limit);
            self.stats.instances_expired += (before - list.len()) as u64;
        }
    }
}

/// Combinations of checklist positives that include `atom` at slot `s`;
/// other slots take an earlier positive or stay absent.
fn enumerate(plan: &Plan, slots: &[ActionSlot], s: usize, atom: &Arc<Atom>, base: &Partial, out: &mut Vec<Partial>) {
    let mut starts = Vec::new();
    for order in plan.orientations(slots[s].node, atom) {
        if let Some(p) = plan.extend(base, slots[s].node, atom, order) {
            starts.push(p);
        }
    }
    for p in starts {
        fill(plan, slots, s, 0, p, out);
    }
}

fn fill(plan: &Plan, slots: &[ActionSlot], fixed: usize, idx: usize, p: Partial, out: &mut Vec<Partial>) {
    if idx == slots.len() {
        if plan.present(&p) {
            out.push(p);
        }
        return;
    }
    if idx == fixed {
        return fill(plan, slots, fixed, idx + 1, p, out);
    }
    fill(plan, slots, fixed, idx + 1, p.clone(), out);
    let node = slots[idx].node;
    for a in &slots[idx].found {
        for order in plan.orientations(node, a) {
            if let Some(q) = plan.extend(&p, node, a, order) {
                fill(plan, slots, fixed, idx + 1, q, out);
            }
        }
    }
}

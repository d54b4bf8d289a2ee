use std::sync::Arc;

use super::event::{ActivityEvent, Atom, Entity};
use crate::rules::{ActivityGraph, ClauseKind, EdgeKind};
use crate::spatial::Interval;

/// A compiled graph with the lookup tables matching needs.
#[derive(Debug, Clone)]
pub struct Plan {
    pub graph: ActivityGraph,
    /// `reach[a][b]`: a then-path leads from a to b.
    pub reach: Vec<Vec<bool>>,
    pub and_adj: Vec<Vec<bool>>,
    /// Variable index of each operand of each node.
    pub node_vars: Vec<Vec<usize>>,
    pub positive: Vec<usize>,
    pub negated: Vec<usize>,
    /// Lazy mode resolves this graph's action nodes through checklists.
    pub uses_checklists: bool,
}

/// Assignment of atoms to some of a graph's positive nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Partial {
    pub bindings: Vec<Option<(Entity, Option<u64>)>>,
    pub matched: Vec<Option<Arc<Atom>>>,
}

impl Plan {
    pub fn new(graph: ActivityGraph) -> Plan {
        let n = graph.nodes.len();
        let reach = graph.then_reachability();
        let mut and_adj = vec![vec![false; n]; n];
        for e in graph.edges.iter().filter(|e| e.kind == EdgeKind::And) {
            and_adj[e.from][e.to] = true;
            and_adj[e.to][e.from] = true;
        }
        let node_vars = graph
            .nodes
            .iter()
            .map(|nd| {
                nd.operands
                    .iter()
                    .map(|v| graph.var_index(v).expect("validated graph"))
                    .collect()
            })
            .collect();
        let positive: Vec<usize> = (0..n).filter(|&i| !graph.nodes[i].negated).collect();
        let negated: Vec<usize> = (0..n).filter(|&i| graph.nodes[i].negated).collect();
        let has_spatial = positive.iter().any(|&i| graph.nodes[i].kind != ClauseKind::Action);
        let actions_alone = graph
            .presence
            .satisfied(&|i| graph.nodes[i].kind == ClauseKind::Action);
        Plan {
            reach,
            and_adj,
            node_vars,
            positive,
            negated,
            uses_checklists: has_spatial && !actions_alone,
            graph,
        }
    }

    pub fn name(&self) -> &str {
        &self.graph.name
    }

    pub fn is_action(&self, node: usize) -> bool {
        self.graph.nodes[node].kind == ClauseKind::Action
    }

    pub fn empty(&self) -> Partial {
        Partial {
            bindings: vec![None; self.graph.variables.len()],
            matched: vec![None; self.graph.nodes.len()],
        }
    }

    /// Interval constraints between node `a` at `x` and node `b` at `y`.
    /// A then-successor may start at the instant its predecessor ends.
    pub fn compatible(&self, a: usize, x: &Interval, b: usize, y: &Interval) -> bool {
        if self.reach[b][a] && x.start < y.end {
            return false;
        }
        if self.reach[a][b] && y.start < x.end {
            return false;
        }
        if self.and_adj[a][b] && !x.overlaps(y) {
            return false;
        }
        true
    }

    /// Operand orders under which `atom` can sit at `node`: one for unary
    /// operators, both for the symmetric binary ones.
    pub fn orientations(&self, node: usize, atom: &Atom) -> Vec<[usize; 2]> {
        let nd = &self.graph.nodes[node];
        if *nd.operator != *atom.op || nd.operands.len() != atom.operands().count() {
            return Vec::new();
        }
        if atom.object.is_some() {
            vec![[0, 1], [1, 0]]
        } else {
            vec![[0, 0]]
        }
    }

    /// Adds `atom` at `node` under `order` if bindings and interval
    /// constraints allow it.
    pub fn extend(&self, p: &Partial, node: usize, atom: &Arc<Atom>, order: [usize; 2]) -> Option<Partial> {
        debug_assert!(p.matched[node].is_none());
        let ops: Vec<_> = atom.operands().collect();
        let mut bindings = p.bindings.clone();
        for (slot, &var) in self.node_vars[node].iter().enumerate() {
            let operand = ops[order[slot]];
            if *operand.label != *self.graph.variables[var].1 {
                return None;
            }
            match bindings[var] {
                Some((e, _)) if e != operand.entity => return None,
                Some(_) => {}
                None => {
                    if bindings.iter().flatten().any(|(e, _)| *e == operand.entity) {
                        return None;
                    }
                    bindings[var] = Some((operand.entity, operand.gt));
                }
            }
        }
        for (m, other) in p.matched.iter().enumerate() {
            if let Some(o) = other {
                if !self.compatible(node, &atom.interval, m, &o.interval) {
                    return None;
                }
            }
        }
        let mut matched = p.matched.clone();
        matched[node] = Some(atom.clone());
        Some(Partial { bindings, matched })
    }

    pub fn present(&self, p: &Partial) -> bool {
        self.graph.presence.satisfied(&|i| p.matched[i].is_some())
    }

    pub fn presence_with(&self, p: &Partial, extra: &dyn Fn(usize) -> bool) -> bool {
        self.graph
            .presence
            .satisfied(&|i| p.matched[i].is_some() || extra(i))
    }

    pub fn complete(&self, p: &Partial) -> bool {
        self.positive.iter().all(|&i| p.matched[i].is_some())
    }

    /// Open window `(lo, hi)` in which a negated node must not hold.
    /// `None` when a side has no present then-neighbour.
    pub fn negation_window(&self, p: &Partial, neg: usize) -> Option<(f64, f64)> {
        let mut lo = f64::NEG_INFINITY;
        let mut hi = f64::INFINITY;
        for (m, a) in p.matched.iter().enumerate() {
            if let Some(a) = a {
                if self.reach[m][neg] {
                    lo = lo.max(a.interval.end);
                }
                if self.reach[neg][m] {
                    hi = hi.min(a.interval.start);
                }
            }
        }
        (lo.is_finite() && hi.is_finite()).then_some((lo, hi))
    }

    /// Entities the negated node's operands are pinned to (unbound: any).
    pub fn negation_operands(&self, p: &Partial, neg: usize) -> Vec<Option<Entity>> {
        self.node_vars[neg]
            .iter()
            .map(|&v| p.bindings[v].map(|(e, _)| e))
            .collect()
    }

    /// Whether `atom` is an instance of the negated node under the pinned operands.
    pub fn negation_hit(&self, neg: usize, pinned: &[Option<Entity>], atom: &Atom, lo: f64, hi: f64) -> bool {
        if !(atom.interval.start < hi && atom.interval.end > lo) {
            return false;
        }
        let ops: Vec<_> = atom.operands().collect();
        self.orientations(neg, atom).into_iter().any(|order| {
            pinned.iter().enumerate().all(|(slot, want)| {
                let o = ops[order[slot]];
                let var = self.node_vars[neg][slot];
                *o.label == *self.graph.variables[var].1 && want.map_or(true, |w| w == o.entity)
            })
        })
    }

    pub fn completion(&self, p: &Partial) -> f64 {
        p.matched
            .iter()
            .flatten()
            .map(|a| a.interval.end)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn available(&self, p: &Partial) -> f64 {
        p.matched
            .iter()
            .flatten()
            .map(|a| a.avail_ts)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn event(&self, p: &Partial, detection_ts: f64) -> ActivityEvent {
        ActivityEvent {
            activity: self.graph.name.clone(),
            completion_ts: self.completion(p),
            detection_ts,
            bindings: self
                .graph
                .variables
                .iter()
                .zip(&p.bindings)
                .map(|((v, _), b)| (v.clone(), *b))
                .collect(),
            nodes: p
                .matched
                .iter()
                .enumerate()
                .filter_map(|(i, a)| a.as_ref().map(|a| (i, a.interval)))
                .collect(),
        }
    }
}

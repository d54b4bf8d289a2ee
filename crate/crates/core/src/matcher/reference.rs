//! Exhaustive matcher: tries every binding assignment and every interval
//! combination. Slow, simple, and the referee for the streaming engine.

use std::collections::HashMap;
use std::sync::Arc;

use super::event::{sort_events, ActivityEvent, Atom};
use super::plan::{Partial, Plan};

/// Every match of every graph over a complete set of atoms. Detection times
/// equal completion times.
pub fn reference_match(plans: &[Plan], atoms: &[Arc<Atom>]) -> Vec<ActivityEvent> {
    let mut by_op: HashMap<&str, Vec<&Arc<Atom>>> = HashMap::new();
    for a in atoms {
        by_op.entry(&a.op).or_default().push(a);
    }
    let mut out = Vec::new();
    for plan in plans {
        let mut emit = |p: &Partial| {
            if negations_hold(plan, p, &by_op) {
                out.push(plan.event(p, plan.completion(p)));
            }
        };
        search(plan, &by_op, 0, plan.empty(), &mut emit);
    }
    sort_events(&mut out);
    out
}

fn search(
    plan: &Plan,
    by_op: &HashMap<&str, Vec<&Arc<Atom>>>,
    idx: usize,
    p: Partial,
    emit: &mut dyn FnMut(&Partial),
) {
    // prune when even matching every remaining node cannot satisfy presence
    let rest = &plan.positive[idx..];
    if !plan.presence_with(&p, &|i| rest.contains(&i)) {
        return;
    }
    if idx == plan.positive.len() {
        if p.matched.iter().any(Option::is_some) && plan.present(&p) {
            emit(&p);
        }
        return;
    }
    let node = plan.positive[idx];
    search(plan, by_op, idx + 1, p.clone(), emit);
    let op = plan.graph.nodes[node].operator.as_str();
    for atom in by_op.get(op).into_iter().flatten() {
        for order in plan.orientations(node, atom) {
            if let Some(q) = plan.extend(&p, node, atom, order) {
                search(plan, by_op, idx + 1, q, emit);
            }
        }
    }
}

fn negations_hold(plan: &Plan, p: &Partial, by_op: &HashMap<&str, Vec<&Arc<Atom>>>) -> bool {
    plan.negated.iter().all(|&neg| {
        let Some((lo, hi)) = plan.negation_window(p, neg) else {
            return false;
        };
        if hi <= lo {
            return true;
        }
        let pinned = plan.negation_operands(p, neg);
        let op = plan.graph.nodes[neg].operator.as_str();
        !by_op
            .get(op)
            .into_iter()
            .flatten()
            .any(|a| plan.negation_hit(neg, &pinned, a, lo, hi))
    })
}

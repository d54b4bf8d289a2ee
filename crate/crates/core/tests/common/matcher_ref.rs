//! Exhaustive matcher built from the activity graph alone: every node gets
//! every candidate atom (or nothing), and each full assignment is checked
//! against the graph's constraints directly.

use std::collections::BTreeSet;
use std::sync::Arc;

use xcam::matcher::{Atom, Entity, Operand};
use xcam::rules::{ActivityGraph, EdgeKind};

/// `then_closure[a][b]`: a chain of then-edges leads from a to b.
fn then_closure(g: &ActivityGraph) -> Vec<Vec<bool>> {
    let n = g.nodes.len();
    let mut r = vec![vec![false; n]; n];
    for e in g.edges.iter().filter(|e| e.kind == EdgeKind::Then) {
        r[e.from][e.to] = true;
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if r[i][k] && r[k][j] {
                    r[i][j] = true;
                }
            }
        }
    }
    r
}

/// Operand slots an atom fills, in each allowed orientation.
fn placements<'a>(atom: &'a Atom, arity: usize) -> Vec<Vec<&'a Operand>> {
    match (&atom.object, arity) {
        (None, 1) => vec![vec![&atom.subject]],
        (Some(o), 2) => vec![vec![&atom.subject, o], vec![o, &atom.subject]],
        _ => Vec::new(),
    }
}

fn var_of(g: &ActivityGraph, name: &str) -> usize {
    g.variables.iter().position(|(v, _)| v == name).unwrap()
}

/// Canonical keys (`activity completion bindings nodes`) of every match.
pub fn brute_force(graphs: &[ActivityGraph], atoms: &[Arc<Atom>]) -> Vec<String> {
    let mut keys = Vec::new();
    for g in graphs {
        let reach = then_closure(g);
        let positive: Vec<usize> = (0..g.nodes.len()).filter(|&i| !g.nodes[i].negated).collect();
        // candidate (atom, operand order) per positive node
        let cands: Vec<Vec<(usize, Vec<&Operand>)>> = positive
            .iter()
            .map(|&n| {
                let nd = &g.nodes[n];
                atoms
                    .iter()
                    .enumerate()
                    .filter(|(_, a)| *a.op == *nd.operator)
                    .flat_map(|(i, a)| placements(a, nd.operands.len()).into_iter().map(move |p| (i, p)))
                    .collect()
            })
            .collect();
        let mut choice = vec![usize::MAX; positive.len()];
        enumerate(0, &cands, &mut choice, &mut |choice| {
            if let Some(k) = check(g, &reach, &positive, &cands, choice, atoms) {
                keys.push(k);
            }
        });
    }
    keys.sort();
    keys
}

fn enumerate(
    i: usize,
    cands: &[Vec<(usize, Vec<&Operand>)>],
    choice: &mut Vec<usize>,
    f: &mut dyn FnMut(&[usize]),
) {
    if i == cands.len() {
        f(choice);
        return;
    }
    choice[i] = usize::MAX;
    enumerate(i + 1, cands, choice, f);
    for c in 0..cands[i].len() {
        choice[i] = c;
        enumerate(i + 1, cands, choice, f);
    }
}

fn check(
    g: &ActivityGraph,
    reach: &[Vec<bool>],
    positive: &[usize],
    cands: &[Vec<(usize, Vec<&Operand>)>],
    choice: &[usize],
    atoms: &[Arc<Atom>],
) -> Option<String> {
    let n = g.nodes.len();
    let mut matched: Vec<Option<&Atom>> = vec![None; n];
    let mut binding: Vec<Option<&Operand>> = vec![None; g.variables.len()];
    for (slot, &node) in positive.iter().enumerate() {
        if choice[slot] == usize::MAX {
            continue;
        }
        let (ai, ref ops) = cands[slot][choice[slot]];
        matched[node] = Some(&atoms[ai]);
        for (var, op) in g.nodes[node].operands.iter().zip(ops) {
            let v = var_of(g, var);
            if *op.label != *g.variables[v].1 {
                return None;
            }
            match binding[v] {
                Some(b) if b.entity != op.entity => return None,
                _ => binding[v] = Some(op),
            }
        }
    }
    if matched.iter().all(Option::is_none) || !g.presence.satisfied(&|i| matched[i].is_some()) {
        return None;
    }
    // distinct variables, distinct entities
    let bound: Vec<Entity> = binding.iter().flatten().map(|o| o.entity).collect();
    if bound.iter().collect::<BTreeSet<_>>().len() != bound.len() {
        return None;
    }
    for a in 0..n {
        for b in 0..n {
            let (Some(x), Some(y)) = (matched[a], matched[b]) else { continue };
            if reach[a][b] && y.interval.start < x.interval.end {
                return None;
            }
        }
    }
    for e in g.edges.iter().filter(|e| e.kind == EdgeKind::And) {
        if let (Some(x), Some(y)) = (matched[e.from], matched[e.to]) {
            if x.interval.end < y.interval.start || y.interval.end < x.interval.start {
                return None;
            }
        }
    }
    for neg in (0..n).filter(|&i| g.nodes[i].negated) {
        let before: Vec<f64> = (0..n).filter(|&m| reach[m][neg]).filter_map(|m| matched[m]).map(|a| a.interval.end).collect();
        let after: Vec<f64> = (0..n).filter(|&m| reach[neg][m]).filter_map(|m| matched[m]).map(|a| a.interval.start).collect();
        if before.is_empty() || after.is_empty() {
            return None;
        }
        let lo = before.into_iter().fold(f64::MIN, f64::max);
        let hi = after.into_iter().fold(f64::MAX, f64::min);
        let nd = &g.nodes[neg];
        // an empty window cannot be violated
        let hit = hi > lo && atoms.iter().any(|a| {
            *a.op == *nd.operator
                && a.interval.start < hi
                && a.interval.end > lo
                && placements(a, nd.operands.len()).iter().any(|ops| {
                    nd.operands.iter().zip(ops).all(|(var, op)| {
                        let v = var_of(g, var);
                        *op.label == *g.variables[v].1 && binding[v].map_or(true, |b| b.entity == op.entity)
                    })
                })
        });
        if hit {
            return None;
        }
    }
    let completion = matched.iter().flatten().map(|a| a.interval.end).fold(f64::MIN, f64::max);
    let vars: Vec<String> = g
        .variables
        .iter()
        .zip(&binding)
        .map(|((v, _), b)| match b {
            Some(o) => format!("{v}={}", o.entity),
            None => format!("{v}=-"),
        })
        .collect();
    let nodes: Vec<String> = matched
        .iter()
        .enumerate()
        .filter_map(|(i, a)| a.map(|a| format!("{i}:{}", a.interval)))
        .collect();
    Some(format!("{} {:.3} {} {}", g.name, completion, vars.join(","), nodes.join(",")))
}

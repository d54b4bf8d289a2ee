//! Compilation of rule ASTs into activity graphs.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt::{self, Write as _};

use thiserror::Error;

use super::ast::{Clause, Expr, RuleAst};
use super::vocab::{NameClass, Vocabulary};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ClauseKind {
    SpatialUnary,
    SpatialBinary,
    Action,
}

impl ClauseKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ClauseKind::SpatialUnary => "spatial_unary",
            ClauseKind::SpatialBinary => "spatial_binary",
            ClauseKind::Action => "action",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClauseNode {
    pub node_id: usize,
    pub kind: ClauseKind,
    pub operator: String,
    pub operands: Vec<String>,
    pub negated: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EdgeKind {
    Then,
    And,
    Or,
}

impl EdgeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EdgeKind::Then => "then",
            EdgeKind::And => "and",
            EdgeKind::Or => "or",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub kind: EdgeKind,
}

/// Which nodes must be present for a match to count.
/// Negated nodes are checks, not matches, so they are always satisfied here.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Presence {
    Node(usize),
    Always,
    All(Vec<Presence>),
    Any(Vec<Presence>),
}

impl Presence {
    pub fn satisfied(&self, present: &dyn Fn(usize) -> bool) -> bool {
        match self {
            Presence::Node(n) => present(*n),
            Presence::Always => true,
            Presence::All(v) => v.iter().all(|p| p.satisfied(present)),
            Presence::Any(v) => v.iter().any(|p| p.satisfied(present)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActivityGraph {
    pub name: String,
    pub variables: Vec<(String, String)>,
    pub nodes: Vec<ClauseNode>,
    pub edges: Vec<Edge>,
    pub presence: Presence,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CompileError {
    #[error("rule `{rule}`: unknown operator `{operator}`")]
    UnknownOperator { rule: String, operator: String },
    #[error("rule `{rule}`: `{operator}` takes {expected} operand(s), got {got}")]
    Arity {
        rule: String,
        operator: String,
        expected: usize,
        got: usize,
    },
    #[error("rule `{rule}`: action `{operator}` needs a person subject, `{var}` is a {element}")]
    TypeMismatch {
        rule: String,
        operator: String,
        var: String,
        element: String,
    },
    #[error("rule `{rule}`: variable `{var}` has unknown element type `{element}`")]
    UnknownElement {
        rule: String,
        var: String,
        element: String,
    },
    #[error("rule `{rule}`: referenced rule `{target}` itself references other rules")]
    NestedRuleReference { rule: String, target: String },
    #[error("rule `{rule}`: reference to `{target}` cannot be negated")]
    NegatedRuleReference { rule: String, target: String },
    #[error("rule `{rule}`: operand `{var}` does not match the element type of `{target}`")]
    ReferenceTypeMismatch {
        rule: String,
        target: String,
        var: String,
    },
}

/// A violated graph invariant.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Diagnostic {
    CycleDetected,
    UnreachableNode(usize),
    ConcurrencyOnSequence { from: usize, to: usize },
    UnboundedNegation(usize),
    NegationInConcurrency(usize),
    UnknownVariable { node: usize, var: String },
    DanglingEdge { from: usize, to: usize },
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnostic::CycleDetected => f.write_str("cycle over then-edges"),
            Diagnostic::UnreachableNode(n) => write!(f, "node {n} is unreachable"),
            Diagnostic::ConcurrencyOnSequence { from, to } => {
                write!(f, "and/or edge {from}-{to} joins nodes already in sequence")
            }
            Diagnostic::UnboundedNegation(n) => {
                write!(f, "negated node {n} lacks a then-neighbour on both sides")
            }
            Diagnostic::NegationInConcurrency(n) => {
                write!(f, "negated node {n} is joined by and/or")
            }
            Diagnostic::UnknownVariable { node, var } => {
                write!(f, "node {node} uses undeclared variable `{var}`")
            }
            Diagnostic::DanglingEdge { from, to } => write!(f, "edge {from}-{to} has no node"),
        }
    }
}

struct Builder<'a> {
    rule: &'a RuleAst,
    vocab: &'a Vocabulary,
    nodes: Vec<ClauseNode>,
    edges: BTreeSet<Edge>,
}

struct Fragment {
    nodes: Vec<usize>,
    sources: Vec<usize>,
    sinks: Vec<usize>,
    presence: Presence,
}

impl Builder<'_> {
    fn clause(&mut self, c: &Clause) -> Result<Fragment, CompileError> {
        let err_op = || CompileError::UnknownOperator {
            rule: self.rule.name.clone(),
            operator: c.operator.clone(),
        };
        let kind = match self.vocab.classify(&c.operator) {
            Some(NameClass::SpatialUnary) => ClauseKind::SpatialUnary,
            Some(NameClass::SpatialBinary) => ClauseKind::SpatialBinary,
            Some(NameClass::Action) => ClauseKind::Action,
            _ => return Err(err_op()),
        };
        let operands: Vec<String> = c.operands().into_iter().map(String::from).collect();
        let expected = if kind == ClauseKind::SpatialBinary { 2 } else { 1 };
        if operands.len() != expected {
            return Err(CompileError::Arity {
                rule: self.rule.name.clone(),
                operator: c.operator.clone(),
                expected,
                got: operands.len(),
            });
        }
        if kind == ClauseKind::Action {
            let element = self.rule.element_of(&c.subject).unwrap_or_default();
            if element != "person" {
                return Err(CompileError::TypeMismatch {
                    rule: self.rule.name.clone(),
                    operator: c.operator.clone(),
                    var: c.subject.clone(),
                    element: element.to_string(),
                });
            }
        }
        let id = self.nodes.len();
        self.nodes.push(ClauseNode {
            node_id: id,
            kind,
            operator: c.operator.clone(),
            operands,
            negated: c.negated,
        });
        Ok(Fragment {
            nodes: vec![id],
            sources: vec![id],
            sinks: vec![id],
            presence: if c.negated {
                Presence::Always
            } else {
                Presence::Node(id)
            },
        })
    }

    fn expr(&mut self, e: &Expr) -> Result<Fragment, CompileError> {
        match e {
            Expr::Clause(c) => self.clause(c),
            Expr::Then(l, r) => {
                let l = self.expr(l)?;
                let r = self.expr(r)?;
                for &s in &l.sinks {
                    for &t in &r.sources {
                        self.edges.insert(Edge {
                            from: s,
                            to: t,
                            kind: EdgeKind::Then,
                        });
                    }
                }
                Ok(Fragment {
                    nodes: [l.nodes, r.nodes].concat(),
                    sources: l.sources,
                    sinks: r.sinks,
                    presence: Presence::All(vec![l.presence, r.presence]),
                })
            }
            Expr::And(l, r) | Expr::Or(l, r) => {
                let kind = if matches!(e, Expr::And(..)) {
                    EdgeKind::And
                } else {
                    EdgeKind::Or
                };
                let l = self.expr(l)?;
                let r = self.expr(r)?;
                for &a in &l.nodes {
                    for &b in &r.nodes {
                        self.edges.insert(Edge {
                            from: a.min(b),
                            to: a.max(b),
                            kind,
                        });
                    }
                }
                let presence = if kind == EdgeKind::And {
                    Presence::All(vec![l.presence, r.presence])
                } else {
                    Presence::Any(vec![l.presence, r.presence])
                };
                Ok(Fragment {
                    nodes: [l.nodes, r.nodes].concat(),
                    sources: [l.sources, r.sources].concat(),
                    sinks: [l.sinks, r.sinks].concat(),
                    presence,
                })
            }
        }
    }
}

/// Compiles one rule. Node ids follow source order of the clauses.
pub fn compile(ast: &RuleAst, vocab: &Vocabulary) -> Result<ActivityGraph, CompileError> {
    for (var, element) in &ast.vars {
        if vocab.classify(element) != Some(NameClass::Element) {
            return Err(CompileError::UnknownElement {
                rule: ast.name.clone(),
                var: var.clone(),
                element: element.clone(),
            });
        }
    }
    let mut b = Builder {
        rule: ast,
        vocab,
        nodes: Vec::new(),
        edges: BTreeSet::new(),
    };
    let frag = b.expr(&ast.body)?;
    Ok(ActivityGraph {
        name: ast.name.clone(),
        variables: ast.vars.clone(),
        nodes: b.nodes,
        edges: b.edges.into_iter().collect(),
        presence: frag.presence,
    })
}

fn substitute(e: &Expr, map: &BTreeMap<&str, &str>) -> Expr {
    match e {
        Expr::Clause(c) => Expr::Clause(Clause {
            subject: map[c.subject.as_str()].to_string(),
            operator: c.operator.clone(),
            object: c.object.as_ref().map(|o| map[o.as_str()].to_string()),
            negated: c.negated,
        }),
        Expr::Then(l, r) => Expr::Then(Box::new(substitute(l, map)), Box::new(substitute(r, map))),
        Expr::And(l, r) => Expr::And(Box::new(substitute(l, map)), Box::new(substitute(r, map))),
        Expr::Or(l, r) => Expr::Or(Box::new(substitute(l, map)), Box::new(substitute(r, map))),
    }
}

fn is_reference(c: &Clause, vocab: &Vocabulary, rules: &BTreeMap<&str, &RuleAst>) -> bool {
    vocab.classify(&c.operator).is_none() && rules.contains_key(c.operator.as_str())
}

fn inline(
    e: &Expr,
    owner: &RuleAst,
    vocab: &Vocabulary,
    rules: &BTreeMap<&str, &RuleAst>,
) -> Result<Expr, CompileError> {
    match e {
        Expr::Clause(c) if is_reference(c, vocab, rules) => {
            let target = rules[c.operator.as_str()];
            if c.negated {
                return Err(CompileError::NegatedRuleReference {
                    rule: owner.name.clone(),
                    target: target.name.clone(),
                });
            }
            if target
                .body
                .clauses()
                .iter()
                .any(|tc| is_reference(tc, vocab, rules))
            {
                return Err(CompileError::NestedRuleReference {
                    rule: owner.name.clone(),
                    target: target.name.clone(),
                });
            }
            let operands = c.operands();
            if operands.len() != target.vars.len() {
                return Err(CompileError::Arity {
                    rule: owner.name.clone(),
                    operator: target.name.clone(),
                    expected: target.vars.len(),
                    got: operands.len(),
                });
            }
            let mut map = BTreeMap::new();
            for (arg, (param, element)) in operands.iter().zip(&target.vars) {
                if owner.element_of(arg) != Some(element.as_str()) {
                    return Err(CompileError::ReferenceTypeMismatch {
                        rule: owner.name.clone(),
                        target: target.name.clone(),
                        var: arg.to_string(),
                    });
                }
                map.insert(param.as_str(), *arg);
            }
            Ok(substitute(&target.body, &map))
        }
        Expr::Clause(c) => Ok(Expr::Clause(c.clone())),
        Expr::Then(l, r) => Ok(Expr::Then(
            Box::new(inline(l, owner, vocab, rules)?),
            Box::new(inline(r, owner, vocab, rules)?),
        )),
        Expr::And(l, r) => Ok(Expr::And(
            Box::new(inline(l, owner, vocab, rules)?),
            Box::new(inline(r, owner, vocab, rules)?),
        )),
        Expr::Or(l, r) => Ok(Expr::Or(
            Box::new(inline(l, owner, vocab, rules)?),
            Box::new(inline(r, owner, vocab, rules)?),
        )),
    }
}

/// Compiles a whole rule file. A clause whose operator names another rule is
/// replaced by that rule's body (one level deep, operands bound positionally).
pub fn compile_all(asts: &[RuleAst], vocab: &Vocabulary) -> Result<Vec<ActivityGraph>, CompileError> {
    let by_name: BTreeMap<&str, &RuleAst> = asts.iter().map(|r| (r.name.as_str(), r)).collect();
    asts.iter()
        .map(|ast| {
            let body = inline(&ast.body, ast, vocab, &by_name)?;
            compile(
                &RuleAst {
                    name: ast.name.clone(),
                    vars: ast.vars.clone(),
                    body,
                },
                vocab,
            )
        })
        .collect()
}

impl ActivityGraph {
    pub fn node(&self, id: usize) -> &ClauseNode {
        &self.nodes[id]
    }

    pub fn element_of(&self, var: &str) -> Option<&str> {
        self.variables
            .iter()
            .find(|(v, _)| v == var)
            .map(|(_, e)| e.as_str())
    }

    pub fn var_index(&self, var: &str) -> Option<usize> {
        self.variables.iter().position(|(v, _)| v == var)
    }

    pub fn then_successors(&self, id: usize) -> impl Iterator<Item = usize> + '_ {
        self.edges
            .iter()
            .filter(move |e| e.kind == EdgeKind::Then && e.from == id)
            .map(|e| e.to)
    }

    pub fn then_predecessors(&self, id: usize) -> impl Iterator<Item = usize> + '_ {
        self.edges
            .iter()
            .filter(move |e| e.kind == EdgeKind::Then && e.to == id)
            .map(|e| e.from)
    }

    pub fn has_action(&self) -> bool {
        self.nodes.iter().any(|n| n.kind == ClauseKind::Action)
    }

    pub fn has_spatial(&self) -> bool {
        self.nodes.iter().any(|n| n.kind != ClauseKind::Action)
    }

    /// `reach[a][b]` is true when a then-path leads from `a` to `b`.
    pub fn then_reachability(&self) -> Vec<Vec<bool>> {
        let n = self.nodes.len();
        let mut reach = vec![vec![false; n]; n];
        for start in 0..n {
            let mut queue: VecDeque<usize> = self.then_successors(start).collect();
            while let Some(v) = queue.pop_front() {
                if v < n && !reach[start][v] {
                    reach[start][v] = true;
                    queue.extend(self.then_successors(v));
                }
            }
        }
        reach
    }

    /// Stable text form used by the `parse` subcommand and golden tests.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        writeln!(out, "graph {}", self.name).unwrap();
        for (v, e) in &self.variables {
            writeln!(out, "var {v} {e}").unwrap();
        }
        for n in &self.nodes {
            write!(out, "node {} {} {}", n.node_id, n.kind.as_str(), n.operator).unwrap();
            for o in &n.operands {
                write!(out, " {o}").unwrap();
            }
            if n.negated {
                out.push_str(" negated");
            }
            out.push('\n');
        }
        for e in &self.edges {
            let arrow = if e.kind == EdgeKind::Then { "->" } else { "--" };
            writeln!(out, "edge {} {} {} {}", e.from, arrow, e.to, e.kind.as_str()).unwrap();
        }
        out
    }
}

fn has_then_cycle(g: &ActivityGraph) -> bool {
    let n = g.nodes.len();
    let mut indegree = vec![0usize; n];
    for e in g.edges.iter().filter(|e| e.kind == EdgeKind::Then) {
        indegree[e.to] += 1;
    }
    let mut queue: VecDeque<usize> = (0..n).filter(|&i| indegree[i] == 0).collect();
    let mut seen = 0;
    while let Some(v) = queue.pop_front() {
        seen += 1;
        for s in g.then_successors(v) {
            indegree[s] -= 1;
            if indegree[s] == 0 {
                queue.push_back(s);
            }
        }
    }
    seen != n
}

/// Checks the graph invariants; an empty result means the graph is well formed.
pub fn validate(graph: &ActivityGraph) -> Vec<Diagnostic> {
    let n = graph.nodes.len();
    let mut out = Vec::new();
    for e in &graph.edges {
        if e.from >= n || e.to >= n {
            out.push(Diagnostic::DanglingEdge {
                from: e.from,
                to: e.to,
            });
        }
    }
    if !out.is_empty() {
        return out;
    }
    for node in &graph.nodes {
        for var in &node.operands {
            if graph.element_of(var).is_none() {
                out.push(Diagnostic::UnknownVariable {
                    node: node.node_id,
                    var: var.clone(),
                });
            }
        }
    }
    let cyclic = has_then_cycle(graph);
    if cyclic {
        out.push(Diagnostic::CycleDetected);
    }

    // every node must be connected to the first source through some edge
    if n > 0 {
        let mut adj = vec![Vec::new(); n];
        for e in &graph.edges {
            adj[e.from].push(e.to);
            adj[e.to].push(e.from);
        }
        let root = (0..n)
            .find(|&i| graph.then_predecessors(i).next().is_none())
            .unwrap_or(0);
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([root]);
        seen[root] = true;
        while let Some(v) = queue.pop_front() {
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        out.extend((0..n).filter(|&i| !seen[i]).map(Diagnostic::UnreachableNode));
    }

    if !cyclic {
        let reach = graph.then_reachability();
        for e in graph.edges.iter().filter(|e| e.kind != EdgeKind::Then) {
            if reach[e.from][e.to] || reach[e.to][e.from] {
                out.push(Diagnostic::ConcurrencyOnSequence {
                    from: e.from,
                    to: e.to,
                });
            }
        }
    }
    for node in graph.nodes.iter().filter(|n| n.negated) {
        let id = node.node_id;
        if graph
            .edges
            .iter()
            .any(|e| e.kind != EdgeKind::Then && (e.from == id || e.to == id))
        {
            out.push(Diagnostic::NegationInConcurrency(id));
        }
        let positive = |m: usize| !graph.nodes[m].negated;
        if !cyclic {
            let reach = graph.then_reachability();
            let before = (0..n).any(|m| positive(m) && reach[m][id]);
            let after = (0..n).any(|m| positive(m) && reach[id][m]);
            if !(before && after) {
                out.push(Diagnostic::UnboundedNegation(id));
            }
        }
    }
    out.sort();
    out.dedup();
    out
}

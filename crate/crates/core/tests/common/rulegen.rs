//! Random rule ASTs for round-trip and compilation properties.

use proptest::prelude::*;
use xcam::rules::{Clause, Expr, RuleAst};

const KEYWORDS: [&str; 4] = ["then", "and", "or", "not"];

pub fn ident() -> impl Strategy<Value = String> {
    "[a-z][a-z0-9_-]{0,7}".prop_filter("keyword", |s| !KEYWORDS.contains(&s.as_str()))
}

fn clause(vars: Vec<String>) -> impl Strategy<Value = Expr> {
    let n = vars.len();
    (0..n, ident(), prop::option::of(0..n), any::<bool>()).prop_map(move |(s, op, o, neg)| {
        Expr::Clause(Clause {
            subject: vars[s].clone(),
            operator: op,
            object: o.map(|i| vars[i].clone()),
            negated: neg,
        })
    })
}

pub fn expr(vars: Vec<String>) -> impl Strategy<Value = Expr> {
    clause(vars).prop_recursive(4, 24, 2, |inner| {
        (inner.clone(), inner, 0..3u8).prop_map(|(l, r, k)| match k {
            0 => Expr::Then(Box::new(l), Box::new(r)),
            1 => Expr::And(Box::new(l), Box::new(r)),
            _ => Expr::Or(Box::new(l), Box::new(r)),
        })
    })
}

/// Syntactically valid rules over one to three declared variables.
pub fn rule() -> impl Strategy<Value = RuleAst> {
    (ident(), prop::collection::btree_set(ident(), 1..4), prop::collection::vec(ident(), 3))
        .prop_flat_map(|(name, vars, elems)| {
            let vars: Vec<String> = vars.into_iter().collect();
            let decl: Vec<(String, String)> = vars.iter().cloned().zip(elems.into_iter().cycle()).collect();
            expr(vars).prop_map(move |body| RuleAst {
                name: name.clone(),
                vars: decl.clone(),
                body,
            })
        })
}

/// Rules the standard vocabulary accepts: typed variables, known operators,
/// negation only on single clauses inside sequences.
pub fn valid_rule_text() -> impl Strategy<Value = String> {
    let unary = prop::sample::select(vec!["stop", "move", "disappear", "talk", "give", "use-phone"]);
    let binary = prop::sample::select(vec!["near", "approach"]);
    let atom = prop_oneof![
        (0..3usize, unary).prop_map(|(v, op)| format!("(p{v} {op})")),
        (0..3usize, 1..3usize, binary).prop_map(|(v, d, op)| format!("(p{v} {op} p{})", (v + d) % 3)),
    ];
    let term = prop::collection::vec(atom, 1..3).prop_flat_map(|cl| {
        let n = cl.len();
        (Just(cl), prop::collection::vec(prop::sample::select(vec!["and", "or"]), n))
            .prop_map(|(cl, ops)| {
                let mut s = cl[0].clone();
                for (c, op) in cl[1..].iter().zip(ops) {
                    s = format!("{s} {op} {c}");
                }
                s
            })
    });
    prop::collection::vec(term, 1..4).prop_map(|terms| {
        format!("r: p0: person, p1: person, p2: person; {}", terms.join(" then "))
    })
}

use std::fmt::{self, Write as _};

/// One clause: `subject operator [object]`, optionally negated.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Clause {
    pub subject: String,
    pub operator: String,
    pub object: Option<String>,
    pub negated: bool,
}

impl Clause {
    pub fn operands(&self) -> Vec<&str> {
        let mut v = vec![self.subject.as_str()];
        if let Some(o) = &self.object {
            v.push(o);
        }
        v
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    Clause(Clause),
    Then(Box<Expr>, Box<Expr>),
    And(Box<Expr>, Box<Expr>),
    Or(Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn clauses(&self) -> Vec<&Clause> {
        let mut out = Vec::new();
        self.collect(&mut out);
        out
    }

    fn collect<'a>(&'a self, out: &mut Vec<&'a Clause>) {
        match self {
            Expr::Clause(c) => out.push(c),
            Expr::Then(l, r) | Expr::And(l, r) | Expr::Or(l, r) => {
                l.collect(out);
                r.collect(out);
            }
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Clause(_) => 3,
            Expr::And(..) | Expr::Or(..) => 2,
            Expr::Then(..) => 1,
        }
    }

    fn render_into(&self, out: &mut String) {
        match self {
            Expr::Clause(c) => {
                if c.negated {
                    out.push_str("not ");
                }
                match &c.object {
                    Some(o) => write!(out, "({} {} {})", c.subject, c.operator, o).unwrap(),
                    None => write!(out, "({} {})", c.subject, c.operator).unwrap(),
                }
            }
            Expr::Then(l, r) | Expr::And(l, r) | Expr::Or(l, r) => {
                let word = match self {
                    Expr::Then(..) => "then",
                    Expr::And(..) => "and",
                    _ => "or",
                };
                let p = self.precedence();
                // left-associative: the left child only needs parens at lower
                // precedence, the right child at lower or equal precedence
                let wrap_left = l.precedence() < p;
                let wrap_right = r.precedence() <= p;
                render_child(l, wrap_left, out);
                write!(out, " {word} ").unwrap();
                render_child(r, wrap_right, out);
            }
        }
    }
}

fn render_child(e: &Expr, wrap: bool, out: &mut String) {
    if wrap {
        out.push('(');
        e.render_into(out);
        out.push(')');
    } else {
        e.render_into(out);
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleAst {
    pub name: String,
    /// Declared variables in source order: variable -> element name.
    pub vars: Vec<(String, String)>,
    pub body: Expr,
}

impl RuleAst {
    pub fn element_of(&self, var: &str) -> Option<&str> {
        self.vars
            .iter()
            .find(|(v, _)| v == var)
            .map(|(_, e)| e.as_str())
    }

    /// Canonical text form; reparsing it yields an equal AST.
    pub fn render(&self) -> String {
        let mut out = String::new();
        write!(out, "{}: ", self.name).unwrap();
        for (i, (v, e)) in self.vars.iter().enumerate() {
            if i > 0 {
                out.push_str(", ");
            }
            write!(out, "{v}: {e}").unwrap();
        }
        out.push_str("; ");
        self.body.render_into(&mut out);
        out
    }
}

impl fmt::Display for RuleAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

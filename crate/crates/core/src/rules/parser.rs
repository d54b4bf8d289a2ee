//! Recursive-descent parser for activity rules.
//!
//! ```text
//! rule     := IDENT ":" var_decl ("," var_decl)* ";" expr
//! var_decl := IDENT ":" IDENT
//! expr     := term ("then" term)*
//! term     := factor (("and" | "or") factor)*
//! factor   := ["not"] clause | "(" expr ")"
//! clause   := "(" IDENT IDENT IDENT ")" | "(" IDENT IDENT ")" | IDENT IDENT
//! ```
//!
//! `not` binds tightest, then `and`/`or`, then `then`; all binary operators
//! are left-associative.

use thiserror::Error;

use super::ast::{Clause, Expr, RuleAst};
use super::lexer::{tokenize, LexError, Temporal, Token, TokenKind};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("{line}:{col}: expected {}, found {found}", expected.join(" or "))]
    Unexpected {
        expected: Vec<String>,
        found: String,
        line: usize,
        col: usize,
    },
    #[error("{line}:{col}: variable `{var}` is not declared")]
    UndeclaredVariable { var: String, line: usize, col: usize },
    #[error("{line}:{col}: variable `{var}` declared twice")]
    DuplicateVariable { var: String, line: usize, col: usize },
}

#[derive(Debug, Error)]
pub enum RulesError {
    #[error(transparent)]
    Lex(#[from] LexError),
    #[error(transparent)]
    Parse(#[from] ParseError),
}

struct Parser<'a> {
    tokens: &'a [Token],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&'a TokenKind> {
        self.tokens.get(self.pos).map(|t| &t.kind)
    }

    fn peek_at(&self, offset: usize) -> Option<&'a TokenKind> {
        self.tokens.get(self.pos + offset).map(|t| &t.kind)
    }

    fn position(&self) -> (usize, usize) {
        match self.tokens.get(self.pos).or(self.tokens.last()) {
            Some(t) if self.pos < self.tokens.len() => (t.line, t.col),
            Some(t) => (t.line, t.col + 1),
            None => (1, 1),
        }
    }

    fn unexpected(&self, expected: &[&str]) -> ParseError {
        let (line, col) = self.position();
        ParseError::Unexpected {
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: self
                .peek()
                .map(|k| k.to_string())
                .unwrap_or_else(|| "end of input".to_string()),
            line,
            col,
        }
    }

    fn expect(&mut self, kind: &TokenKind, label: &str) -> Result<(), ParseError> {
        if self.peek() == Some(kind) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.unexpected(&[label]))
        }
    }

    fn ident(&mut self) -> Result<(String, usize, usize), ParseError> {
        match self.tokens.get(self.pos) {
            Some(Token {
                kind: TokenKind::Ident(s),
                line,
                col,
            }) => {
                self.pos += 1;
                Ok((s.clone(), *line, *col))
            }
            _ => Err(self.unexpected(&["identifier"])),
        }
    }

    fn rule(&mut self) -> Result<RuleAst, ParseError> {
        let (name, _, _) = self.ident()?;
        self.expect(&TokenKind::Colon, "`:`")?;
        let mut vars: Vec<(String, String)> = Vec::new();
        loop {
            let (var, line, col) = self.ident()?;
            self.expect(&TokenKind::Colon, "`:`")?;
            let (elem, _, _) = self.ident()?;
            if vars.iter().any(|(v, _)| *v == var) {
                return Err(ParseError::DuplicateVariable { var, line, col });
            }
            vars.push((var, elem));
            match self.peek() {
                Some(TokenKind::Comma) => self.pos += 1,
                Some(TokenKind::Semicolon) => {
                    self.pos += 1;
                    break;
                }
                _ => return Err(self.unexpected(&["`,`", "`;`"])),
            }
        }
        let body = self.expr(&vars)?;
        Ok(RuleAst { name, vars, body })
    }

    fn expr(&mut self, vars: &[(String, String)]) -> Result<Expr, ParseError> {
        let mut lhs = self.term(vars)?;
        while self.peek() == Some(&TokenKind::Keyword(Temporal::Then)) {
            self.pos += 1;
            let rhs = self.term(vars)?;
            lhs = Expr::Then(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self, vars: &[(String, String)]) -> Result<Expr, ParseError> {
        let mut lhs = self.factor(vars)?;
        loop {
            match self.peek() {
                Some(TokenKind::Keyword(Temporal::And)) => {
                    self.pos += 1;
                    let rhs = self.factor(vars)?;
                    lhs = Expr::And(Box::new(lhs), Box::new(rhs));
                }
                Some(TokenKind::Keyword(Temporal::Or)) => {
                    self.pos += 1;
                    let rhs = self.factor(vars)?;
                    lhs = Expr::Or(Box::new(lhs), Box::new(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    /// True when the tokens at the cursor form a parenthesised clause.
    fn at_paren_clause(&self) -> bool {
        let is_ident = |k: Option<&TokenKind>| matches!(k, Some(TokenKind::Ident(_)));
        if self.peek() != Some(&TokenKind::LParen) || !is_ident(self.peek_at(1)) || !is_ident(self.peek_at(2)) {
            return false;
        }
        match self.peek_at(3) {
            Some(TokenKind::RParen) => true,
            k if is_ident(k) => self.peek_at(4) == Some(&TokenKind::RParen),
            _ => false,
        }
    }

    fn factor(&mut self, vars: &[(String, String)]) -> Result<Expr, ParseError> {
        let negated = if self.peek() == Some(&TokenKind::Keyword(Temporal::Not)) {
            self.pos += 1;
            true
        } else {
            false
        };
        if negated || self.at_paren_clause() || matches!(self.peek(), Some(TokenKind::Ident(_))) {
            return self.clause(vars, negated).map(Expr::Clause);
        }
        match self.peek() {
            Some(TokenKind::LParen) => {
                self.pos += 1;
                let inner = self.expr(vars)?;
                self.expect(&TokenKind::RParen, "`)`")?;
                Ok(inner)
            }
            _ => Err(self.unexpected(&["`not`", "`(`", "identifier"])),
        }
    }

    fn clause(&mut self, vars: &[(String, String)], negated: bool) -> Result<Clause, ParseError> {
        let parenthesised = if self.at_paren_clause() {
            self.pos += 1;
            true
        } else if matches!(self.peek(), Some(TokenKind::Ident(_))) {
            false
        } else {
            return Err(self.unexpected(&["clause"]));
        };
        let check = |var: &str, line: usize, col: usize| {
            if vars.iter().any(|(v, _)| v == var) {
                Ok(())
            } else {
                Err(ParseError::UndeclaredVariable {
                    var: var.to_string(),
                    line,
                    col,
                })
            }
        };
        let (subject, line, col) = self.ident()?;
        check(&subject, line, col)?;
        let (operator, _, _) = self.ident()?;
        let mut object = None;
        if parenthesised {
            if let Some(TokenKind::Ident(_)) = self.peek() {
                let (o, line, col) = self.ident()?;
                check(&o, line, col)?;
                object = Some(o);
            }
            self.expect(&TokenKind::RParen, "`)`")?;
        }
        Ok(Clause {
            subject,
            operator,
            object,
            negated,
        })
    }
}

/// Parses exactly one rule from a token sequence.
pub fn parse(tokens: &[Token]) -> Result<RuleAst, ParseError> {
    let mut p = Parser { tokens, pos: 0 };
    let rule = p.rule()?;
    if p.pos != tokens.len() {
        return Err(p.unexpected(&["`then`", "`and`", "`or`", "end of input"]));
    }
    Ok(rule)
}

/// Parses a rule file containing any number of rules.
pub fn parse_rules(source: &str) -> Result<Vec<RuleAst>, RulesError> {
    let tokens = tokenize(source)?;
    let mut p = Parser {
        tokens: &tokens,
        pos: 0,
    };
    let mut rules = Vec::new();
    while p.pos < tokens.len() {
        rules.push(p.rule()?);
    }
    Ok(rules)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one(src: &str) -> RuleAst {
        parse(&tokenize(src).unwrap()).unwrap()
    }

    fn clause(s: &str, op: &str, o: Option<&str>) -> Expr {
        Expr::Clause(Clause {
            subject: s.into(),
            operator: op.into(),
            object: o.map(Into::into),
            negated: false,
        })
    }

    #[test]
    fn minimal_rule() {
        let r = one("walk: p1: person; (p1 move)");
        assert_eq!(r.vars, vec![("p1".to_string(), "person".to_string())]);
        assert_eq!(r.body, clause("p1", "move", None));
    }

    #[test]
    fn and_binds_tighter_than_then() {
        let r = one("r: p: person; (p stop) then (p move) and (p disappear)");
        assert_eq!(
            r.body,
            Expr::Then(
                Box::new(clause("p", "stop", None)),
                Box::new(Expr::And(
                    Box::new(clause("p", "move", None)),
                    Box::new(clause("p", "disappear", None))
                ))
            )
        );
    }

    #[test]
    fn left_associative() {
        let r = one("r: p: person; p talk then p sit then p read");
        match r.body {
            Expr::Then(l, _) => assert!(matches!(*l, Expr::Then(..))),
            _ => panic!(),
        }
        let r = one("r: p: person; p talk and p sit or p read");
        match r.body {
            Expr::Or(l, _) => assert!(matches!(*l, Expr::And(..))),
            _ => panic!(),
        }
    }

    #[test]
    fn parentheses_group() {
        let r = one("r: p: person; p talk then ((p sit) then p read)");
        match r.body {
            Expr::Then(_, rhs) => assert!(matches!(*rhs, Expr::Then(..))),
            _ => panic!(),
        }
    }

    #[test]
    fn not_prefix() {
        let r = one("r: p: person; (p stop) then not p talk then (p move)");
        let clauses = r.body.clauses();
        assert!(clauses[1].negated);
        assert!(!clauses[0].negated);
    }

    #[test]
    fn undeclared_variable() {
        let err = parse(&tokenize("r: p: person; (p near q)").unwrap()).unwrap_err();
        assert!(matches!(err, ParseError::UndeclaredVariable { ref var, .. } if var == "q"));
    }

    #[test]
    fn error_carries_expected_set_and_position() {
        let err = parse(&tokenize("r: p: person; (p stop) then").unwrap()).unwrap_err();
        match err {
            ParseError::Unexpected { expected, found, .. } => {
                assert!(expected.iter().any(|e| e.contains("not")));
                assert_eq!(found, "end of input");
            }
            other => panic!("{other:?}"),
        }
        let err = parse(&tokenize("r p: person; (p stop)").unwrap()).unwrap_err();
        assert!(matches!(err, ParseError::Unexpected { line: 1, col: 3, .. }));
    }

    #[test]
    fn multiple_rules_in_a_file() {
        let src = "# two rules\na: p: person; (p move)\nb: p: person, c: car;\n  (p near c) then (c move)\n";
        let rules = parse_rules(src).unwrap();
        assert_eq!(rules.len(), 2);
        assert_eq!(rules[1].name, "b");
    }

    #[test]
    fn render_reparses() {
        for src in [
            "r: p: person, q: person; (p near q) then (p stop) and not (q move) then p talk",
            "r: p: person; p talk then (p sit then p read)",
            "r: p: person; p talk and (p sit or p read)",
        ] {
            let ast = one(src);
            assert_eq!(one(&ast.render()), ast, "{}", ast.render());
        }
    }
}

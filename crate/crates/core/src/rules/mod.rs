//! Activity rule language: lexing, parsing, and compilation to activity graphs.

mod ast;
mod graph;
mod lexer;
mod parser;
mod vocab;

pub use ast::{Clause, Expr, RuleAst};
pub use graph::{
    compile, compile_all, validate, ActivityGraph, ClauseKind, ClauseNode, CompileError,
    Diagnostic, Edge, EdgeKind, Presence,
};
pub use lexer::{tokenize, LexError, Temporal, Token, TokenKind};
pub use parser::{parse, parse_rules, ParseError, RulesError};
pub(crate) use vocab::is_valid_name;
pub use vocab::{NameClass, VocabError, Vocabulary, BUILTIN_BINARY, BUILTIN_UNARY, TEMPORAL};

/// Parses, compiles and validates a rule file in one step.
pub fn load_graphs(source: &str, vocab: &Vocabulary) -> Result<Vec<ActivityGraph>, LoadError> {
    let asts = parse_rules(source)?;
    let graphs = compile_all(&asts, vocab)?;
    for g in &graphs {
        let diags = validate(g);
        if !diags.is_empty() {
            return Err(LoadError::Invalid {
                rule: g.name.clone(),
                diagnostics: diags,
            });
        }
    }
    Ok(graphs)
}

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error(transparent)]
    Syntax(#[from] RulesError),
    #[error(transparent)]
    Compile(#[from] CompileError),
    #[error("rule `{rule}` is invalid: {}", diagnostics.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid {
        rule: String,
        diagnostics: Vec<Diagnostic>,
    },
}

/// Rules for the generated scenarios, one per activity category template.
pub const STANDARD_RULES: &str = include_str!("../../assets/rules/standard.rules");
/// The two worked examples of the rule language.
pub const ACT_DEF_RULES: &str = include_str!("../../assets/rules/act_def.rules");

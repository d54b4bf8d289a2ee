use std::path::Path;

use xcam::rules::{load_graphs, Vocabulary, ACT_DEF_RULES};

fn normalized(text: &str) -> Vec<String> {
    let mut v: Vec<String> = text.lines().map(str::trim).filter(|l| !l.is_empty()).map(String::from).collect();
    v.sort();
    v
}

/// Compiles the two example rules and compares each dump with its golden
/// file, ignoring line order. Returns the names that differ.
pub fn golden_mismatches() -> Vec<String> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden");
    let graphs = load_graphs(ACT_DEF_RULES, &Vocabulary::standard()).expect("example rules compile");
    let mut bad = Vec::new();
    for g in &graphs {
        let want = std::fs::read_to_string(dir.join(format!("{}.dag", g.name))).unwrap_or_default();
        if normalized(&want) != normalized(&g.dump()) {
            bad.push(g.name.clone());
        }
    }
    if graphs.len() != 2 {
        bad.push(format!("expected 2 graphs, got {}", graphs.len()));
    }
    bad
}

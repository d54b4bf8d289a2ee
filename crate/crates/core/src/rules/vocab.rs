use std::collections::BTreeSet;
use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

/// Spatial operators the engine knows how to evaluate.
pub const BUILTIN_UNARY: &[&str] = &["stop", "move", "disappear", "re-identified"];
pub const BUILTIN_BINARY: &[&str] = &["near", "approach", "same-camera"];
pub const TEMPORAL: &[&str] = &["then", "and", "or", "not"];

#[derive(Debug, Error)]
pub enum VocabError {
    #[error("cannot read vocabulary file: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed vocabulary file: {0}")]
    Format(#[from] toml::de::Error),
    #[error("invalid name `{0}` (expected [a-z0-9_-]+)")]
    InvalidName(String),
    #[error("`{name}` appears in both `{first}` and `{second}`")]
    Overlap {
        name: String,
        first: &'static str,
        second: &'static str,
    },
    #[error("spatial operator `{0}` has no evaluator")]
    UnsupportedOperator(String),
    #[error("temporal set must be exactly then/and/or/not")]
    TemporalSet,
}

/// Which vocabulary set a name belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NameClass {
    Element,
    Action,
    SpatialUnary,
    SpatialBinary,
    Temporal,
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
pub struct Vocabulary {
    pub elements: BTreeSet<String>,
    pub actions: BTreeSet<String>,
    pub spatial_unary: BTreeSet<String>,
    pub spatial_binary: BTreeSet<String>,
    pub temporal: BTreeSet<String>,
}

pub(crate) fn is_valid_name(s: &str) -> bool {
    !s.is_empty()
        && s
            .bytes()
            .all(|b| b.is_ascii_lowercase() || b.is_ascii_digit() || b == b'_' || b == b'-')
}

impl Vocabulary {
    pub fn from_toml(text: &str) -> Result<Self, VocabError> {
        let vocab: Vocabulary = toml::from_str(text)?;
        vocab.check()?;
        Ok(vocab)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, VocabError> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    /// The vocabulary shipped with the crate.
    pub fn standard() -> Self {
        Self::from_toml(include_str!("../../assets/vocab.toml")).expect("bundled vocabulary")
    }

    fn sets(&self) -> [(&'static str, &BTreeSet<String>); 5] {
        [
            ("elements", &self.elements),
            ("actions", &self.actions),
            ("spatial_unary", &self.spatial_unary),
            ("spatial_binary", &self.spatial_binary),
            ("temporal", &self.temporal),
        ]
    }

    pub fn check(&self) -> Result<(), VocabError> {
        let sets = self.sets();
        for (_, set) in &sets {
            if let Some(bad) = set.iter().find(|n| !is_valid_name(n)) {
                return Err(VocabError::InvalidName(bad.clone()));
            }
        }
        for i in 0..sets.len() {
            for j in i + 1..sets.len() {
                if let Some(name) = sets[i].1.intersection(sets[j].1).next() {
                    return Err(VocabError::Overlap {
                        name: name.clone(),
                        first: sets[i].0,
                        second: sets[j].0,
                    });
                }
            }
        }
        for op in &self.spatial_unary {
            if !BUILTIN_UNARY.contains(&op.as_str()) {
                return Err(VocabError::UnsupportedOperator(op.clone()));
            }
        }
        for op in &self.spatial_binary {
            if !BUILTIN_BINARY.contains(&op.as_str()) {
                return Err(VocabError::UnsupportedOperator(op.clone()));
            }
        }
        let temporal: BTreeSet<String> = TEMPORAL.iter().map(|s| s.to_string()).collect();
        if self.temporal != temporal {
            return Err(VocabError::TemporalSet);
        }
        Ok(())
    }

    pub fn classify(&self, name: &str) -> Option<NameClass> {
        if self.elements.contains(name) {
            Some(NameClass::Element)
        } else if self.actions.contains(name) {
            Some(NameClass::Action)
        } else if self.spatial_unary.contains(name) {
            Some(NameClass::SpatialUnary)
        } else if self.spatial_binary.contains(name) {
            Some(NameClass::SpatialBinary)
        } else if self.temporal.contains(name) {
            Some(NameClass::Temporal)
        } else {
            None
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_vocabulary_is_consistent() {
        let v = Vocabulary::standard();
        assert!(v.elements.contains("person"));
        assert_eq!(v.classify("near"), Some(NameClass::SpatialBinary));
        assert_eq!(v.classify("use-phone"), Some(NameClass::Action));
        assert_eq!(v.classify("unicorn"), None);
    }

    #[test]
    fn overlapping_sets_rejected() {
        let text = r#"
elements = ["person", "stop"]
actions = ["talk"]
spatial_unary = ["stop"]
spatial_binary = ["near"]
temporal = ["then", "and", "or", "not"]
"#;
        assert!(matches!(
            Vocabulary::from_toml(text),
            Err(VocabError::Overlap { .. })
        ));
    }

    #[test]
    fn bad_names_rejected() {
        let text = r#"
elements = ["Person"]
actions = []
spatial_unary = []
spatial_binary = []
temporal = ["then", "and", "or", "not"]
"#;
        assert!(matches!(
            Vocabulary::from_toml(text),
            Err(VocabError::InvalidName(_))
        ));
    }

    #[test]
    fn extending_actions_needs_no_code() {
        let text = r#"
elements = ["person", "dog"]
actions = ["walk-dog"]
spatial_unary = ["stop"]
spatial_binary = ["near"]
temporal = ["then", "and", "or", "not"]
"#;
        let v = Vocabulary::from_toml(text).unwrap();
        assert_eq!(v.classify("walk-dog"), Some(NameClass::Action));
    }
}

use std::fmt;

use serde::{Deserialize, Serialize};

/// A gene symbol. Case-sensitive, non-empty, no whitespace.
///
/// Ordering is lexicographic on the name; every iteration order in this
/// crate that could affect results is derived from it.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GeneId(String);

impl GeneId {
    pub fn new(name: impl Into<String>) -> Result<Self, InvalidGeneName> {
        let name = name.into();
        if name.is_empty() {
            return Err(InvalidGeneName::Empty);
        }
        if name.chars().any(char::is_whitespace) {
            return Err(InvalidGeneName::Whitespace(name));
        }
        Ok(GeneId(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for GeneId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for GeneId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GeneId({})", self.0)
    }
}

#[derive(Debug, Clone, thiserror::Error, PartialEq, Eq)]
pub enum InvalidGeneName {
    #[error("gene name must be non-empty")]
    Empty,
    #[error("gene name `{0}` contains whitespace")]
    Whitespace(String),
}

/// Edge polarity of a regulatory interaction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum InteractionSign {
    Activator,
    Inhibitor,
}

impl InteractionSign {
    pub fn token(self) -> &'static str {
        match self {
            InteractionSign::Activator => "+",
            InteractionSign::Inhibitor => "-",
        }
    }
}

impl fmt::Display for InteractionSign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

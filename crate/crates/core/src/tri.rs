use std::fmt;

use serde::{Deserialize, Serialize};

/// Tri-state gene activity: inactive, active, or not (yet) assigned.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TriState {
    Zero,
    One,
    #[serde(rename = "NA")]
    Na,
}

impl TriState {
    pub fn is_defined(self) -> bool {
        !matches!(self, TriState::Na)
    }

    /// Boolean value of a defined state. Panics on `Na`; callers must
    /// check `is_defined` first (NA arguments are contract violations
    /// in the consistency and scoring rules).
    pub fn as_bool(self) -> bool {
        match self {
            TriState::Zero => false,
            TriState::One => true,
            TriState::Na => panic!("TriState::Na has no Boolean value"),
        }
    }

    pub fn from_bool(b: bool) -> Self {
        if b {
            TriState::One
        } else {
            TriState::Zero
        }
    }

    pub fn negate(self) -> Self {
        match self {
            TriState::Zero => TriState::One,
            TriState::One => TriState::Zero,
            TriState::Na => TriState::Na,
        }
    }
}

impl fmt::Display for TriState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TriState::Zero => "0",
            TriState::One => "1",
            TriState::Na => "NA",
        })
    }
}

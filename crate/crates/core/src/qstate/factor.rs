use std::fmt;

use serde::{Deserialize, Serialize};

/// Physical role of a tensor factor.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FactorKind {
    Pseudospin,
    Mode,
}

/// A labeled tensor factor: `(party, kind)` identifies it, `dim` sizes it.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Factor {
    pub party: String,
    pub kind: FactorKind,
    pub dim: usize,
}

impl Factor {
    pub fn pseudospin(party: impl Into<String>) -> Self {
        Self {
            party: party.into(),
            kind: FactorKind::Pseudospin,
            dim: 2,
        }
    }

    pub fn mode(party: impl Into<String>, m: usize) -> Self {
        Self {
            party: party.into(),
            kind: FactorKind::Mode,
            dim: m,
        }
    }

    /// Same `(party, kind)` label, regardless of dimension.
    pub fn same_label(&self, other: &Factor) -> bool {
        self.party == other.party && self.kind == other.kind
    }

    pub fn with_party(&self, party: impl Into<String>) -> Self {
        Self {
            party: party.into(),
            kind: self.kind,
            dim: self.dim,
        }
    }
}

impl fmt::Display for Factor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let k = match self.kind {
            FactorKind::Pseudospin => "sigma",
            FactorKind::Mode => "x",
        };
        write!(f, "{k}_{}[{}]", self.party, self.dim)
    }
}

/// `(σ_p, x_p)` for one photon.
pub fn single_photon_factors(party: &str, m: usize) -> Vec<Factor> {
    vec![Factor::pseudospin(party), Factor::mode(party, m)]
}

/// `(σ_a, x_a, σ_b, x_b)` for a photon pair.
pub fn two_photon_factors(a: &str, b: &str, m: usize) -> Vec<Factor> {
    vec![
        Factor::pseudospin(a),
        Factor::mode(a, m),
        Factor::pseudospin(b),
        Factor::mode(b, m),
    ]
}

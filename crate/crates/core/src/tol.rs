//! Numerical thresholds shared across checks.

use serde::{Deserialize, Serialize};

/// Minimum determinant accepted for a metric.
pub const EPS_DET: f64 = 1e-12;
/// Regularity floor for u and |∇f|.
pub const EPS_REG: f64 = 1e-8;
/// Sign tolerance for sampled energy-condition verdicts.
pub const EPS_EC: f64 = 1e-9;

/// Tolerance tier by derivative depth of an identity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tier {
    /// Purely algebraic identities.
    Alg,
    /// One derivative.
    D1,
    /// Three or more stacked derivatives.
    D3,
}

impl Tier {
    pub fn tol(self) -> f64 {
        match self {
            Tier::Alg => 1e-10,
            Tier::D1 => 1e-7,
            Tier::D3 => 1e-5,
        }
    }

    pub fn parse(s: &str) -> Option<Tier> {
        match s {
            "alg" => Some(Tier::Alg),
            "d1" => Some(Tier::D1),
            "d3" => Some(Tier::D3),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Tier::Alg => "alg",
            Tier::D1 => "d1",
            Tier::D3 => "d3",
        }
    }
}

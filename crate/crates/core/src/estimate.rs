use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::Result;
use crate::witness::{make_witness_pair, CoefficientMatrix, MirroredWitnessPair};

/// NE values must exceed `1 + ENTANGLED_MARGIN` to count as a detection.
pub const ENTANGLED_MARGIN: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SignBranch {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

impl SignBranch {
    pub fn sign(self) -> f64 {
        match self {
            Self::Plus => 1.0,
            Self::Minus => -1.0,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Self::Plus => "+",
            Self::Minus => "-",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Entangled,
    Undetected,
}

impl Verdict {
    pub fn from_ne(value: f64) -> Self {
        if value > 1.0 + ENTANGLED_MARGIN {
            Self::Entangled
        } else {
            Self::Undetected
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Entangled => "entangled",
            Self::Undetected => "undetected",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ClosedForm,
    InteriorPoint,
    CoordinateAscent,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NeDiagnostics {
    /// Newton steps summed over both sign branches.
    pub iterations: usize,
    pub duality_gap: f64,
    /// `|√((d_A−1)(d_B−1))·‖C‖_∞ − 1|` at the returned coefficients.
    pub constraint_residual: f64,
}

/// Optimal normalized estimation for one measured support.
#[derive(Clone, Debug, PartialEq)]
pub struct NeResult {
    pub value: f64,
    /// Optimizer on the boundary, with `value = sign · Σ c_ij g_ij`.
    pub coefficients: CoefficientMatrix,
    pub sign_branch: SignBranch,
    pub verdict: Verdict,
    pub method: Method,
    pub diagnostics: NeDiagnostics,
}

impl NeResult {
    pub fn witness(&self) -> Result<MirroredWitnessPair> {
        make_witness_pair(&self.coefficients)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "ne": self.value,
            "coefficients": self.coefficients.to_json(),
            "sign_branch": self.sign_branch.symbol(),
            "verdict": self.verdict.as_str(),
            "method": self.method,
            "diagnostics": self.diagnostics,
        })
    }
}

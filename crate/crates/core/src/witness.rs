//! Separable bounds and mirrored witness pairs.
//!
//! For `S = Σ c_ij G_i ⊗ G_j` every separable state satisfies
//! `|Tr[Sσ]| ≤ √((d_A−1)(d_B−1))·‖C‖_∞`, so both `W± = bound·𝟙 ± S` are
//! entanglement witnesses. Pairs are stored symbolically; dense operators
//! are built only on request.

use std::collections::BTreeMap;

use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::grid::{basis_size, CorrelatorGrid, MeasurementSet, Pair};
use crate::quantum::{correlator, gell_mann_basis, DensityMatrix};
use crate::smallmat::{operator_norm, CMatrix, HermitianMatrix, RealMatrix};

/// Witness values below `−WITNESS_MARGIN` detect entanglement.
pub const WITNESS_MARGIN: f64 = 1e-9;

/// Real coefficients `c_ij` on a set of generator pairs.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientMatrix {
    dims: (usize, usize),
    coeffs: BTreeMap<Pair, f64>,
}

impl CoefficientMatrix {
    pub fn new(dims: (usize, usize), entries: impl IntoIterator<Item = (Pair, f64)>) -> Result<Self> {
        if dims.0 < 2 || dims.1 < 2 {
            return Err(Error::Input(format!("dimensions must be at least 2, got {dims:?}")));
        }
        let (na, nb) = basis_size(dims);
        let mut coeffs = BTreeMap::new();
        for (p, c) in entries {
            if p.row >= na || p.col >= nb {
                return Err(Error::UnknownLabel(p.label(dims)));
            }
            if !c.is_finite() {
                return Err(Error::NonFinite { row: p.row, col: p.col });
            }
            if coeffs.insert(p, c).is_some() {
                return Err(Error::DuplicateKey(p.label(dims)));
            }
        }
        Ok(Self { dims, coeffs })
    }

    /// All-zero coefficients on `support`.
    pub fn zeros(dims: (usize, usize), support: &MeasurementSet) -> Result<Self> {
        Self::new(dims, support.pairs().iter().map(|&p| (p, 0.0)))
    }

    /// Label/value form, e.g. `[("XY", -1.0), ("ZZ", 1.0)]`.
    pub fn from_labels(dims: (usize, usize), entries: &[(&str, f64)]) -> Result<Self> {
        let parsed = entries
            .iter()
            .map(|(l, v)| Ok((Pair::parse(l, dims)?, *v)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(dims, parsed)
    }

    pub fn dims(&self) -> (usize, usize) {
        self.dims
    }

    pub fn get(&self, p: Pair) -> f64 {
        self.coeffs.get(&p).copied().unwrap_or(0.0)
    }

    pub fn entries(&self) -> impl Iterator<Item = (Pair, f64)> + '_ {
        self.coeffs.iter().map(|(p, c)| (*p, *c))
    }

    pub fn support(&self) -> Vec<Pair> {
        self.coeffs.keys().copied().collect()
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn dense(&self) -> RealMatrix {
        let (na, nb) = basis_size(self.dims);
        let mut m = RealMatrix::zeros(na, nb);
        for (p, c) in self.entries() {
            m[(p.row, p.col)] = c;
        }
        m
    }

    pub fn operator_norm(&self) -> f64 {
        operator_norm(&self.dense()).expect("coefficients are finite")
    }

    pub fn scaled(&self, t: f64) -> Self {
        Self {
            dims: self.dims,
            coeffs: self.coeffs.iter().map(|(p, c)| (*p, c * t)).collect(),
        }
    }

    /// `Σ c_ij g_ij`; every support entry must be measured.
    pub fn dot(&self, g: &CorrelatorGrid) -> Result<f64> {
        if g.dims() != self.dims {
            return Err(Error::DimensionMismatch {
                expected: self.dims.0 * self.dims.1,
                got: g.dims().0 * g.dims().1,
            });
        }
        self.entries().map(|(p, c)| Ok(c * g.require(p)?)).sum()
    }

    /// Dense `S = Σ c_ij G_i ⊗ G_j`.
    pub fn observable(&self) -> HermitianMatrix {
        let ba = gell_mann_basis(self.dims.0).expect("d >= 2");
        let bb = gell_mann_basis(self.dims.1).expect("d >= 2");
        let n = self.dims.0 * self.dims.1;
        let mut s = CMatrix::zeros(n, n);
        for (p, c) in self.entries() {
            s.add_scaled(&ba.generator(p.row).kron(bb.generator(p.col)), c);
        }
        HermitianMatrix::symmetrized(&s).expect("square")
    }

    /// `{label: value}` in `(row, col)` order.
    pub fn to_json(&self) -> Value {
        let mut m = Map::new();
        for (p, c) in self.entries() {
            m.insert(p.label(self.dims), json!(c));
        }
        Value::Object(m)
    }
}

/// `√((d_A−1)(d_B−1))·‖C‖_∞`.
pub fn separable_bound(c: &CoefficientMatrix) -> f64 {
    let (da, db) = c.dims();
    (((da - 1) * (db - 1)) as f64).sqrt() * c.operator_norm()
}

/// `W± = bound·𝟙 ± S`.
#[derive(Clone, Debug, PartialEq)]
pub struct MirroredWitnessPair {
    pub bound: f64,
    pub expansion: CoefficientMatrix,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WitnessEvaluation {
    pub tr_plus: f64,
    pub tr_minus: f64,
    pub entangled: bool,
}

impl WitnessEvaluation {
    fn from_value(bound: f64, s: f64) -> Self {
        let tr_plus = bound + s;
        let tr_minus = bound - s;
        Self {
            tr_plus,
            tr_minus,
            entangled: tr_plus.min(tr_minus) < -WITNESS_MARGIN,
        }
    }

    pub fn verdict(&self) -> &'static str {
        if self.entangled {
            "entangled"
        } else {
            "undetected"
        }
    }
}

pub fn make_witness_pair(c: &CoefficientMatrix) -> Result<MirroredWitnessPair> {
    let bound = separable_bound(c);
    if bound == 0.0 {
        return Err(Error::ZeroCoefficients);
    }
    Ok(MirroredWitnessPair {
        bound,
        expansion: c.clone(),
    })
}

impl MirroredWitnessPair {
    /// Values of `Tr[W± ρ]` computed from measured correlators.
    pub fn evaluate(&self, g: &CorrelatorGrid) -> Result<WitnessEvaluation> {
        Ok(WitnessEvaluation::from_value(self.bound, self.expansion.dot(g)?))
    }

    /// Values of `Tr[W± ρ]` from exact correlators of a state.
    pub fn evaluate_state(&self, rho: &DensityMatrix) -> Result<WitnessEvaluation> {
        let dims = self.expansion.dims();
        if rho.dims() != dims {
            return Err(Error::DimensionMismatch {
                expected: dims.0 * dims.1,
                got: rho.dim(),
            });
        }
        let ba = gell_mann_basis(dims.0)?;
        let bb = gell_mann_basis(dims.1)?;
        let mut s = 0.0;
        for (p, c) in self.expansion.entries() {
            s += c * correlator(rho, ba.generator(p.row), bb.generator(p.col))?;
        }
        Ok(WitnessEvaluation::from_value(self.bound, s))
    }

    fn dense(&self, sign: f64) -> HermitianMatrix {
        let s = self.expansion.observable();
        let n = s.dim();
        let mut w = CMatrix::identity(n).scale(self.bound);
        w.add_scaled(s.matrix(), sign);
        HermitianMatrix::symmetrized(&w).expect("square")
    }

    pub fn w_plus(&self) -> HermitianMatrix {
        self.dense(1.0)
    }

    pub fn w_minus(&self) -> HermitianMatrix {
        self.dense(-1.0)
    }

    /// `{"bound", "coefficients", "tr_plus", "tr_minus", "verdict"}`.
    pub fn report(&self, eval: &WitnessEvaluation) -> Value {
        json!({
            "bound": self.bound,
            "coefficients": self.expansion.to_json(),
            "tr_plus": eval.tr_plus,
            "tr_minus": eval.tr_minus,
            "verdict": eval.verdict(),
        })
    }
}

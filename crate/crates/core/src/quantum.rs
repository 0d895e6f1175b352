//! Operators, states and correlator simulation.
//!
//! Conventions: `Y = [[0, −i], [i, 0]]`, `|Φ⁺⟩ = (|00⟩ + |11⟩)/√2` and
//! `R_Y(θ) = exp(−iθY/2)`. Every ideal value in the tests is computed with
//! these phases.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{CorrelatorGrid, Pair};
use crate::smallmat::{hermitian_eig, min_eigenvalue, CMatrix, HermitianMatrix};

const STATE_TOL: f64 = 1e-10;
const STATE_PSD_TOL: f64 = 1e-9;

fn cx(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// A non-identity Pauli axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Pauli {
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 3] = [Pauli::X, Pauli::Y, Pauli::Z];

    /// Position among the non-identity generators (X = 0, Y = 1, Z = 2).
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Pauli> {
        Self::ALL.get(i).copied()
    }

    pub fn from_char(c: char) -> Option<Pauli> {
        match c {
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }

    pub fn as_char(self) -> char {
        ['X', 'Y', 'Z'][self.index()]
    }

    pub fn matrix(self) -> CMatrix {
        let (o, z) = (cx(1.0, 0.0), cx(0.0, 0.0));
        let data = match self {
            Pauli::X => vec![z, o, o, z],
            Pauli::Y => vec![z, cx(0.0, -1.0), cx(0.0, 1.0), z],
            Pauli::Z => vec![o, z, z, -o],
        };
        CMatrix::new(2, 2, data).expect("2x2")
    }

    /// Eigenvectors for eigenvalues `+1` and `−1`.
    pub fn eigenbasis(self) -> [[Complex64; 2]; 2] {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        match self {
            Pauli::X => [[cx(h, 0.0), cx(h, 0.0)], [cx(h, 0.0), cx(-h, 0.0)]],
            Pauli::Y => [[cx(h, 0.0), cx(0.0, h)], [cx(h, 0.0), cx(0.0, -h)]],
            Pauli::Z => [[cx(1.0, 0.0), cx(0.0, 0.0)], [cx(0.0, 0.0), cx(1.0, 0.0)]],
        }
    }
}

impl fmt::Display for Pauli {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_char())
    }
}

/// `d²` Hermitian operators with `Tr(G_k† G_l) = d δ_kl`; index 0 is the
/// identity.
#[derive(Clone, Debug)]
pub struct OperatorBasis {
    dim: usize,
    operators: Vec<CMatrix>,
}

impl OperatorBasis {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// All `d²` operators including the identity.
    pub fn operators(&self) -> &[CMatrix] {
        &self.operators
    }

    /// The traceless generator `G_{i+1}` (0-based among non-identity ones).
    pub fn generator(&self, i: usize) -> &CMatrix {
        &self.operators[i + 1]
    }

    pub fn generator_count(&self) -> usize {
        self.operators.len() - 1
    }
}

/// Generalized Gell-Mann matrices scaled by `√(d/2)`. For each pair `j < k`
/// the symmetric generator precedes the antisymmetric one; diagonal
/// generators come last. At `d = 2` this is `{𝟙, X, Y, Z}`.
pub fn gell_mann_basis(d: usize) -> Result<OperatorBasis> {
    if d < 2 {
        return Err(Error::Input(format!("operator basis needs d >= 2, got {d}")));
    }
    let scale = (d as f64 / 2.0).sqrt();
    let mut ops = vec![CMatrix::identity(d)];
    for j in 0..d {
        for k in (j + 1)..d {
            let mut s = CMatrix::zeros(d, d);
            s[(j, k)] = cx(scale, 0.0);
            s[(k, j)] = cx(scale, 0.0);
            ops.push(s);
            let mut a = CMatrix::zeros(d, d);
            a[(j, k)] = cx(0.0, -scale);
            a[(k, j)] = cx(0.0, scale);
            ops.push(a);
        }
    }
    for l in 1..d {
        let norm = (2.0 / (l * (l + 1)) as f64).sqrt() * scale;
        let mut g = CMatrix::zeros(d, d);
        for m in 0..l {
            g[(m, m)] = cx(norm, 0.0);
        }
        g[(l, l)] = cx(-(l as f64) * norm, 0.0);
        ops.push(g);
    }
    Ok(OperatorBasis { dim: d, operators: ops })
}

/// A bipartite density matrix on `C^{d_A} ⊗ C^{d_B}`.
#[derive(Clone, Debug)]
pub struct DensityMatrix {
    dims: (usize, usize),
    matrix: CMatrix,
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and positivity.
    pub fn new(matrix: CMatrix, dims: (usize, usize)) -> Result<Self> {
        let n = dims.0 * dims.1;
        if matrix.rows() != n || matrix.cols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: matrix.rows(),
            });
        }
        let defect = matrix.hermiticity_defect();
        if defect > STATE_TOL {
            return Err(Error::NotHermitian(defect));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > STATE_TOL || tr.im.abs() > STATE_TOL {
            return Err(Error::Input(format!("density matrix trace {} != 1", tr.re)));
        }
        let h = HermitianMatrix::symmetrized(&matrix)?;
        let lo = min_eigenvalue(&h);
        if lo < -STATE_PSD_TOL {
            return Err(Error::Input(format!(
                "density matrix has negative eigenvalue {lo:.3e}"
            )));
        }
        Ok(Self {
            dims,
            matrix: h.into_matrix(),
        })
    }

    /// `|ψ⟩⟨ψ|` after normalizing `ψ`.
    pub fn from_pure(psi: &[Complex64], dims: (usize, usize)) -> Result<Self> {
        if psi.len() != dims.0 * dims.1 {
            return Err(Error::DimensionMismatch {
                expected: dims.0 * dims.1,
                got: psi.len(),
            });
        }
        let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::Input("state vector has zero or non-finite norm".into()));
        }
        let v: Vec<Complex64> = psi.iter().map(|z| z / norm).collect();
        Ok(Self {
            dims,
            matrix: CMatrix::outer(&v),
        })
    }

    pub fn maximally_mixed(dims: (usize, usize)) -> Self {
        let n = dims.0 * dims.1;
        Self {
            dims,
            matrix: CMatrix::identity(n).scale(1.0 / n as f64),
        }
    }

    /// Convex mixture `Σ w_k ρ_k`; weights are renormalized.
    pub fn mixture(weights: &[f64], states: &[DensityMatrix]) -> Result<Self> {
        let first = states
            .first()
            .ok_or_else(|| Error::Input("empty mixture".into()))?;
        if weights.len() != states.len() {
            return Err(Error::DimensionMismatch {
                expected: states.len(),
                got: weights.len(),
            });
        }
        let total: f64 = weights.iter().sum();
        if weights.iter().any(|w| *w < 0.0 || !w.is_finite()) || !(total > 0.0) {
            return Err(Error::Input("mixture weights must be non-negative".into()));
        }
        let n = first.matrix.rows();
        let mut m = CMatrix::zeros(n, n);
        for (w, s) in weights.iter().zip(states) {
            if s.dims != first.dims {
                return Err(Error::DimensionMismatch {
                    expected: first.dims.0 * first.dims.1,
                    got: s.dims.0 * s.dims.1,
                });
            }
            m.add_scaled(&s.matrix, w / total);
        }
        Ok(Self {
            dims: first.dims,
            matrix: m,
        })
    }

    pub fn dims(&self) -> (usize, usize) {
        self.dims
    }

    pub fn dim(&self) -> usize {
        self.dims.0 * self.dims.1
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn purity(&self) -> f64 {
        self.matrix.trace_product(&self.matrix).re
    }

    /// `Re Tr[O ρ]`.
    pub fn expectation(&self, op: &CMatrix) -> f64 {
        op.trace_product(&self.matrix).re
    }

    /// `⟨ψ|ρ|ψ⟩` for a normalized `ψ`.
    pub fn fidelity_pure(&self, psi: &[Complex64]) -> f64 {
        self.matrix.expectation(psi).re
    }

    /// `(1 − p)ρ + p 𝟙/D`.
    pub fn depolarize(&self, p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Input(format!("noise p = {p} outside [0, 1]")));
        }
        let n = self.dim();
        let mut m = self.matrix.scale(1.0 - p);
        m.add_scaled(&CMatrix::identity(n), p / n as f64);
        Ok(Self {
            dims: self.dims,
            matrix: m,
        })
    }

    /// Transpose on the second factor.
    pub fn partial_transpose(&self) -> HermitianMatrix {
        let (da, db) = self.dims;
        let m = CMatrix::from_fn(da * db, da * db, |r, c| {
            let (i, k) = (r / db, r % db);
            let (j, l) = (c / db, c % db);
            self.matrix[(i * db + l, j * db + k)]
        });
        HermitianMatrix::symmetrized(&m).expect("square")
    }

    /// Smallest eigenvalue of the partial transpose is at least `−tol`.
    pub fn is_ppt(&self, tol: f64) -> bool {
        min_eigenvalue(&self.partial_transpose()) >= -tol
    }
}

/// The state families used throughout the tests and the CLI.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateFamily {
    /// `(𝟙 ⊗ R_Y(θ))|Φ⁺⟩`.
    Chi1,
    /// `(𝟙 ⊗ V)|Φ⁺⟩` with `V = (𝟙 + i(cos θ X + sin θ Z))/√2`.
    Chi3,
    /// `cos θ|00⟩ + sin θ|11⟩`.
    PsiTheta,
    /// `|Φ⁺⟩`, independent of θ.
    Bell,
}

impl FromStr for StateFamily {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "chi1" => Ok(Self::Chi1),
            "chi3" => Ok(Self::Chi3),
            "psi_theta" => Ok(Self::PsiTheta),
            "bell" => Ok(Self::Bell),
            other => Err(Error::Input(format!("unknown state family {other:?}"))),
        }
    }
}

impl fmt::Display for StateFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Chi1 => "chi1",
            Self::Chi3 => "chi3",
            Self::PsiTheta => "psi_theta",
            Self::Bell => "bell",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateFamilyParams {
    pub family: StateFamily,
    pub theta: f64,
}

fn phi_plus() -> Vec<Complex64> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    vec![cx(h, 0.0), cx(0.0, 0.0), cx(0.0, 0.0), cx(h, 0.0)]
}

/// `exp(−iθY/2)`.
pub fn r_y(theta: f64) -> CMatrix {
    let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    CMatrix::new(2, 2, vec![cx(c, 0.0), cx(-s, 0.0), cx(s, 0.0), cx(c, 0.0)]).expect("2x2")
}

fn chi3_unitary(theta: f64) -> CMatrix {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut v = CMatrix::identity(2);
    v.add_scaled(&Pauli::X.matrix().scale_complex(cx(0.0, theta.cos())), 1.0);
    v.add_scaled(&Pauli::Z.matrix().scale_complex(cx(0.0, theta.sin())), 1.0);
    v.scale(h)
}

/// Pure state vector of a family.
pub fn state_vector(params: StateFamilyParams) -> Result<Vec<Complex64>> {
    let theta = params.theta;
    if !theta.is_finite() {
        return Err(Error::Input("theta must be finite".into()));
    }
    let local = |u: CMatrix| CMatrix::identity(2).kron(&u).matvec(&phi_plus());
    Ok(match params.family {
        StateFamily::Bell => phi_plus(),
        StateFamily::PsiTheta => vec![
            cx(theta.cos(), 0.0),
            cx(0.0, 0.0),
            cx(0.0, 0.0),
            cx(theta.sin(), 0.0),
        ],
        StateFamily::Chi1 => local(r_y(theta)),
        StateFamily::Chi3 => local(chi3_unitary(theta)),
    })
}

pub fn make_state(params: StateFamilyParams) -> Result<DensityMatrix> {
    DensityMatrix::from_pure(&state_vector(params)?, (2, 2))
}

/// `Tr[(A ⊗ B) ρ]` for a two-qubit state.
pub fn ideal_correlator(rho: &DensityMatrix, a: Pauli, b: Pauli) -> Result<f64> {
    if rho.dims() != (2, 2) {
        return Err(Error::DimensionMismatch {
            expected: 4,
            got: rho.dim(),
        });
    }
    Ok(rho.expectation(&a.matrix().kron(&b.matrix())))
}

/// `Tr[(A ⊗ B) ρ]` for arbitrary local operators.
pub fn correlator(rho: &DensityMatrix, a: &CMatrix, b: &CMatrix) -> Result<f64> {
    if a.rows() != rho.dims().0 || b.rows() != rho.dims().1 {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            got: a.rows() * b.rows(),
        });
    }
    Ok(rho.expectation(&a.kron(b)))
}

/// All `(d_A² − 1)(d_B² − 1)` generator correlators of `ρ` as a measured grid.
pub fn full_grid(rho: &DensityMatrix) -> Result<CorrelatorGrid> {
    let (da, db) = rho.dims();
    let ba = gell_mann_basis(da)?;
    let bb = gell_mann_basis(db)?;
    let mut entries = Vec::new();
    for i in 0..ba.generator_count() {
        for j in 0..bb.generator_count() {
            let v = correlator(rho, ba.generator(i), bb.generator(j))?;
            entries.push((Pair::new(i, j), v));
        }
    }
    CorrelatorGrid::new((da, db), entries)
}

/// Seeded generator for all simulation-side randomness.
pub struct Sampler {
    rng: ChaCha8Rng,
}

impl Sampler {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    /// Haar-random unit vector via normalized complex Gaussians.
    pub fn haar_vector(&mut self, d: usize) -> Vec<Complex64> {
        loop {
            let v: Vec<Complex64> = (0..d)
                .map(|_| {
                    cx(
                        StandardNormal.sample(&mut self.rng),
                        StandardNormal.sample(&mut self.rng),
                    )
                })
                .collect();
            let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if n > 1e-300 {
                return v.into_iter().map(|z| z / n).collect();
            }
        }
    }

    /// Uniform weights on the simplex (flat Dirichlet).
    pub fn simplex_weights(&mut self, k: usize) -> Vec<f64> {
        let e: Vec<f64> = (0..k).map(|_| Exp1.sample(&mut self.rng)).collect();
        let s: f64 = e.iter().sum();
        e.into_iter().map(|x| x / s).collect()
    }

    /// A random two-qubit state: pure with probability 1/2, otherwise a
    /// mixture of up to four Haar-random pure states.
    pub fn random_state(&mut self, dims: (usize, usize)) -> DensityMatrix {
        let n = dims.0 * dims.1;
        if self.rng.random_bool(0.5) {
            return DensityMatrix::from_pure(&self.haar_vector(n), dims).expect("unit vector");
        }
        let k = self.rng.random_range(2..=4);
        let w = self.simplex_weights(k);
        let states: Vec<DensityMatrix> = (0..k)
            .map(|_| DensityMatrix::from_pure(&self.haar_vector(n), dims).expect("unit vector"))
            .collect();
        DensityMatrix::mixture(&w, &states).expect("valid mixture")
    }
}

/// Mixture of `terms` Haar-random pure product states with flat Dirichlet
/// weights.
pub fn sample_separable(dims: (usize, usize), terms: usize, seed: u64) -> Result<DensityMatrix> {
    if terms == 0 {
        return Err(Error::Input("separable mixture needs at least one term".into()));
    }
    let mut s = Sampler::new(seed);
    let weights = s.simplex_weights(terms);
    let mut m = CMatrix::zeros(dims.0 * dims.1, dims.0 * dims.1);
    for w in weights {
        let a = s.haar_vector(dims.0);
        let b = s.haar_vector(dims.1);
        m.add_scaled(&CMatrix::outer(&kron_vec(&a, &b)), w);
    }
    Ok(DensityMatrix { dims, matrix: m })
}

pub fn kron_vec(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    a.iter().flat_map(|x| b.iter().map(move |y| x * y)).collect()
}

/// Empirical `⟨A ⊗ B⟩` from `shots` draws of the joint four-outcome
/// distribution in the product eigenbasis.
pub fn sample_correlator(
    rho: &DensityMatrix,
    a: Pauli,
    b: Pauli,
    shots: u64,
    seed: u64,
) -> Result<f64> {
    let mut s = Sampler::new(seed);
    sample_correlator_with(rho, a, b, shots, &mut s)
}

pub fn sample_correlator_with(
    rho: &DensityMatrix,
    a: Pauli,
    b: Pauli,
    shots: u64,
    sampler: &mut Sampler,
) -> Result<f64> {
    if shots == 0 {
        return Err(Error::Input("shots must be at least 1".into()));
    }
    if rho.dims() != (2, 2) {
        return Err(Error::DimensionMismatch {
            expected: 4,
            got: rho.dim(),
        });
    }
    let ea = a.eigenbasis();
    let eb = b.eigenbasis();
    let mut probs = [0.0f64; 4];
    let mut signs = [0.0f64; 4];
    for (s, va) in ea.iter().enumerate() {
        for (t, vb) in eb.iter().enumerate() {
            let v = kron_vec(va, vb);
            probs[2 * s + t] = rho.fidelity_pure(&v).max(0.0);
            signs[2 * s + t] = if s == t { 1.0 } else { -1.0 };
        }
    }
    let total: f64 = probs.iter().sum();
    let mut remaining = shots;
    let mut mass = 1.0;
    let mut acc = 0.0;
    for k in 0..4 {
        let p = probs[k] / total;
        let n = if k == 3 || remaining == 0 {
            remaining
        } else {
            let q = (p / mass).clamp(0.0, 1.0);
            Binomial::new(remaining, q)
                .map_err(|e| Error::Input(e.to_string()))?
                .sample(sampler.rng())
        };
        acc += signs[k] * n as f64;
        remaining -= n;
        mass -= p;
    }
    Ok(acc / shots as f64)
}

/// Nine-entry grid of finite-shot estimates, one independent run per pair.
pub fn sample_grid(rho: &DensityMatrix, shots: u64, seed: u64) -> Result<CorrelatorGrid> {
    let mut s = Sampler::new(seed);
    let mut entries = Vec::with_capacity(9);
    for a in Pauli::ALL {
        for b in Pauli::ALL {
            let v = sample_correlator_with(rho, a, b, shots, &mut s)?;
            entries.push((Pair::new(a.index(), b.index()), v));
        }
    }
    CorrelatorGrid::new((2, 2), entries)
}

/// Largest eigenvalue magnitude of a Hermitian operator.
pub fn spectral_radius(op: &CMatrix) -> Result<f64> {
    let e = hermitian_eig(&HermitianMatrix::symmetrized(op)?);
    Ok(e.values.iter().fold(0.0f64, |m, v| m.max(v.abs())))
}

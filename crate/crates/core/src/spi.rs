//! Separability power iteration (SPI) and multipartite NE.
//!
//! `λ_max(O) = max ⟨ψ_1 ⊗ ⋯ ⊗ ψ_n| O |ψ_1 ⊗ ⋯ ⊗ ψ_n⟩` is approached by
//! cyclic single-site updates: with every other site fixed, the objective is
//! a Rayleigh quotient of an effective local operator, maximized by its top
//! eigenvector. Each update can only increase the objective, so a sweep is
//! monotone; global optimality is not guaranteed and is pursued by
//! multistart.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::estimate::Verdict;
use crate::quantum::{gell_mann_basis, Pauli};
use crate::smallmat::{hermitian_eig, CMatrix, HermitianMatrix, HERMITIAN_TOL};

/// `Σ_t c_t o_t^{[1]} ⊗ ⋯ ⊗ o_t^{[n]}` with Hermitian local factors.
#[derive(Clone, Debug)]
pub struct ObservableSum {
    dims: Vec<usize>,
    terms: Vec<(f64, Vec<CMatrix>)>,
}

impl ObservableSum {
    pub fn new(terms: Vec<(f64, Vec<CMatrix>)>) -> Result<Self> {
        let first = terms
            .first()
            .ok_or_else(|| Error::Input("observable needs at least one term".into()))?;
        let dims: Vec<usize> = first.1.iter().map(|m| m.rows()).collect();
        if dims.len() < 2 {
            return Err(Error::Input("observable needs at least two parties".into()));
        }
        for (c, factors) in &terms {
            if !c.is_finite() {
                return Err(Error::Input("non-finite coefficient".into()));
            }
            if factors.len() != dims.len() {
                return Err(Error::DimensionMismatch {
                    expected: dims.len(),
                    got: factors.len(),
                });
            }
            for (f, &d) in factors.iter().zip(&dims) {
                if f.rows() != d || f.cols() != d {
                    return Err(Error::DimensionMismatch { expected: d, got: f.rows() });
                }
                let defect = f.hermiticity_defect();
                if defect > HERMITIAN_TOL {
                    return Err(Error::NotHermitian(defect));
                }
            }
        }
        Ok(Self { dims, terms })
    }

    /// Terms from Pauli strings such as `"XZI"`; `I` is the identity.
    pub fn from_pauli_strings(terms: &[(f64, &str)]) -> Result<Self> {
        let built = terms
            .iter()
            .map(|(c, s)| Ok((*c, pauli_factors(s)?)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(built)
    }

    pub fn parties(&self) -> usize {
        self.dims.len()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn terms(&self) -> &[(f64, Vec<CMatrix>)] {
        &self.terms
    }

    pub fn scaled(&self, t: f64) -> Self {
        Self {
            dims: self.dims.clone(),
            terms: self.terms.iter().map(|(c, f)| (c * t, f.clone())).collect(),
        }
    }

    /// `O + s·𝟙`.
    pub fn shifted(&self, s: f64) -> Self {
        let mut terms = self.terms.clone();
        terms.push((s, self.dims.iter().map(|&d| CMatrix::identity(d)).collect()));
        Self {
            dims: self.dims.clone(),
            terms,
        }
    }

    /// Dense operator on the full tensor product.
    pub fn dense(&self) -> HermitianMatrix {
        let n: usize = self.dims.iter().product();
        let mut m = CMatrix::zeros(n, n);
        for (c, factors) in &self.terms {
            let mut k = factors[0].clone();
            for f in &factors[1..] {
                k = k.kron(f);
            }
            m.add_scaled(&k, *c);
        }
        HermitianMatrix::symmetrized(&m).expect("square")
    }

    /// `⟨ψ|O|ψ⟩` for one vector per party.
    pub fn expectation(&self, state: &ProductState) -> f64 {
        self.terms
            .iter()
            .map(|(c, factors)| {
                c * factors
                    .iter()
                    .zip(&state.factors)
                    .map(|(f, v)| f.expectation(v).re)
                    .product::<f64>()
            })
            .sum()
    }
}

/// Local operators of a Pauli string (`I`, `X`, `Y`, `Z`).
pub fn pauli_factors(s: &str) -> Result<Vec<CMatrix>> {
    s.chars()
        .map(|ch| match ch {
            'I' => Ok(CMatrix::identity(2)),
            _ => Pauli::from_char(ch)
                .map(Pauli::matrix)
                .ok_or_else(|| Error::UnknownLabel(s.to_string())),
        })
        .collect()
}

/// One unit vector per site.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductState {
    pub factors: Vec<Vec<Complex64>>,
}

impl ProductState {
    pub fn new(factors: Vec<Vec<Complex64>>) -> Result<Self> {
        for f in &factors {
            let n = f.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if (n - 1.0).abs() > 1e-12 {
                return Err(Error::Input(format!("product-state factor has norm {n}")));
            }
        }
        Ok(Self { factors })
    }

    /// The full state vector `ψ_1 ⊗ ⋯ ⊗ ψ_n`.
    pub fn vector(&self) -> Vec<Complex64> {
        let mut v = vec![Complex64::new(1.0, 0.0)];
        for f in &self.factors {
            v = crate::quantum::kron_vec(&v, f);
        }
        v
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpiOptions {
    /// Stop once a sweep improves the objective by less than this.
    pub tol: f64,
    pub max_sweeps: usize,
    pub random_starts: usize,
    /// Cap on basis-eigenvector start combinations; above it that many are
    /// drawn at random from the combinations.
    pub max_basis_starts: usize,
    pub seed: u64,
}

impl Default for SpiOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_sweeps: 500,
            random_starts: 8,
            max_basis_starts: 256,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpiResult {
    pub lambda_max: f64,
    /// One vector per block of `partition`.
    pub optimizer: ProductState,
    pub partition: Vec<Vec<usize>>,
    pub restarts_used: usize,
    pub converged: bool,
    /// No single-site update in any restart lowered the objective by more
    /// than `1e-12`.
    pub monotone: bool,
    /// Objective after each sweep of the winning restart.
    pub sweep_values: Vec<f64>,
}

impl SpiResult {
    pub fn to_json(&self) -> Value {
        let vecs: Vec<Vec<[f64; 2]>> = self
            .optimizer
            .factors
            .iter()
            .map(|f| f.iter().map(|z| [z.re, z.im]).collect())
            .collect();
        json!({
            "lambda_max": self.lambda_max,
            "optimizer": vecs,
            "partition": self.partition,
            "restarts_used": self.restarts_used,
            "converged": self.converged,
            "sweeps": self.sweep_values.len(),
        })
    }
}

const MONOTONE_SLACK: f64 = 1e-12;
const DEGENERACY_TOL: f64 = 1e-10;

/// Observable regrouped into block sites.
struct Sites {
    dims: Vec<usize>,
    coeffs: Vec<f64>,
    /// `ops[t][k]`: factor of term `t` on site `k`.
    ops: Vec<Vec<CMatrix>>,
}

impl Sites {
    fn new(obs: &ObservableSum, partition: &[Vec<usize>]) -> Self {
        let dims = partition
            .iter()
            .map(|b| b.iter().map(|&p| obs.dims[p]).product())
            .collect();
        let ops = obs
            .terms
            .iter()
            .map(|(_, factors)| {
                partition
                    .iter()
                    .map(|block| {
                        let mut m = factors[block[0]].clone();
                        for &p in &block[1..] {
                            m = m.kron(&factors[p]);
                        }
                        m
                    })
                    .collect()
            })
            .collect();
        Self {
            dims,
            coeffs: obs.terms.iter().map(|(c, _)| *c).collect(),
            ops,
        }
    }

    fn local_expectations(&self, state: &[Vec<Complex64>]) -> Vec<Vec<f64>> {
        self.ops
            .iter()
            .map(|row| row.iter().zip(state).map(|(o, v)| o.expectation(v).re).collect())
            .collect()
    }

    fn objective(&self, e: &[Vec<f64>]) -> f64 {
        self.coeffs
            .iter()
            .zip(e)
            .map(|(c, row)| c * row.iter().product::<f64>())
            .sum()
    }

    fn effective(&self, e: &[Vec<f64>], k: usize) -> CMatrix {
        let d = self.dims[k];
        let mut h = CMatrix::zeros(d, d);
        for (t, c) in self.coeffs.iter().enumerate() {
            let w: f64 = c * e[t]
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != k)
                .map(|(_, v)| v)
                .product::<f64>();
            if w != 0.0 {
                h.add_scaled(&self.ops[t][k], w);
            }
        }
        h
    }

    /// One restart. Returns `(value, state, converged, monotone, sweeps)`.
    fn run(&self, mut state: Vec<Vec<Complex64>>, opts: &SpiOptions) -> (f64, Vec<Vec<Complex64>>, bool, bool, Vec<f64>) {
        let mut e = self.local_expectations(&state);
        let mut value = self.objective(&e);
        let mut monotone = true;
        let mut sweeps = Vec::new();
        let mut converged = false;
        for _ in 0..opts.max_sweeps {
            let before = value;
            for k in 0..self.dims.len() {
                let h = HermitianMatrix::symmetrized(&self.effective(&e, k)).expect("square");
                state[k] = top_eigenvector(&h, &state[k]);
                for (t, row) in e.iter_mut().enumerate() {
                    row[k] = self.ops[t][k].expectation(&state[k]).re;
                }
                let next = self.objective(&e);
                if next < value - MONOTONE_SLACK * value.abs().max(1.0) {
                    monotone = false;
                }
                value = next;
            }
            sweeps.push(value);
            if value - before < opts.tol {
                converged = true;
                break;
            }
        }
        (value, state, converged, monotone, sweeps)
    }
}

/// Top eigenvector; within a degenerate top eigenspace, the normalized
/// projection of `current`.
fn top_eigenvector(h: &HermitianMatrix, current: &[Complex64]) -> Vec<Complex64> {
    let eig = hermitian_eig(h);
    let d = h.dim();
    let top = eig.values[0];
    let scale = eig.values.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let deg = eig
        .values
        .iter()
        .take_while(|v| top - **v <= DEGENERACY_TOL * scale)
        .count();
    if deg > 1 {
        let mut proj = vec![Complex64::new(0.0, 0.0); d];
        for j in 0..deg {
            let vj = eig.vectors.column(j);
            let ov: Complex64 = vj.iter().zip(current).map(|(a, b)| a.conj() * b).sum();
            for (p, a) in proj.iter_mut().zip(&vj) {
                *p += a * ov;
            }
        }
        let n = proj.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if n > 1e-8 {
            return proj.into_iter().map(|z| z / n).collect();
        }
    }
    eig.vectors.column(0)
}

fn haar(d: usize, rng: &mut ChaCha8Rng) -> Vec<Complex64> {
    loop {
        let v: Vec<Complex64> = (0..d)
            .map(|_| Complex64::new(StandardNormal.sample(rng), StandardNormal.sample(rng)))
            .collect();
        let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if n > 1e-300 {
            return v.into_iter().map(|z| z / n).collect();
        }
    }
}

/// Eigenvectors of every non-identity generator of dimension `d`.
fn basis_vectors(d: usize) -> Vec<Vec<Complex64>> {
    let basis = gell_mann_basis(d).expect("d >= 2");
    let mut out = Vec::new();
    for i in 0..basis.generator_count() {
        let eig = hermitian_eig(&HermitianMatrix::symmetrized(basis.generator(i)).expect("square"));
        for j in 0..d {
            out.push(eig.vectors.column(j));
        }
    }
    out
}

fn validate_partition(n: usize, partition: &[Vec<usize>]) -> Result<()> {
    let mut seen = vec![false; n];
    for block in partition {
        if block.is_empty() {
            return Err(Error::InvalidPartition("empty block".into()));
        }
        for &p in block {
            if p >= n {
                return Err(Error::InvalidPartition(format!("party {} out of range", p + 1)));
            }
            if seen[p] {
                return Err(Error::InvalidPartition(format!("party {} appears twice", p + 1)));
            }
            seen[p] = true;
        }
    }
    if let Some(p) = seen.iter().position(|s| !s) {
        return Err(Error::InvalidPartition(format!("party {} not covered", p + 1)));
    }
    Ok(())
}

/// `λ_max` over states that are product across the blocks of `partition`
/// (0-based party indices).
pub fn k_separable_lambda_max(
    obs: &ObservableSum,
    partition: &[Vec<usize>],
    opts: &SpiOptions,
) -> Result<SpiResult> {
    validate_partition(obs.parties(), partition)?;
    let sites = Sites::new(obs, partition);
    let ns = sites.dims.len();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);

    // Site 0 is overwritten by the first update, so starts only vary 1..n.
    let cands: Vec<Vec<Vec<Complex64>>> = sites.dims.iter().map(|&d| basis_vectors(d)).collect();
    let combos: usize = cands[1..]
        .iter()
        .try_fold(1usize, |acc, c| acc.checked_mul(c.len()))
        .unwrap_or(usize::MAX);
    let mut starts: Vec<Vec<Vec<Complex64>>> = Vec::new();
    let first = |rng: &mut ChaCha8Rng| haar(sites.dims[0], rng);
    if combos <= opts.max_basis_starts {
        for mut idx in 0..combos {
            let mut s = vec![first(&mut rng)];
            for c in &cands[1..] {
                s.push(c[idx % c.len()].clone());
                idx /= c.len();
            }
            starts.push(s);
        }
    } else {
        for _ in 0..opts.max_basis_starts {
            let mut s = vec![first(&mut rng)];
            for c in &cands[1..] {
                s.push(c[rng.random_range(0..c.len())].clone());
            }
            starts.push(s);
        }
    }
    for _ in 0..opts.random_starts {
        starts.push(sites.dims.iter().map(|&d| haar(d, &mut rng)).collect());
    }

    let mut best: Option<(f64, Vec<Vec<Complex64>>, bool, Vec<f64>)> = None;
    let mut monotone = true;
    let restarts = starts.len();
    for s in starts {
        let (v, state, conv, mono, sweeps) = sites.run(s, opts);
        monotone &= mono;
        if best.as_ref().is_none_or(|(b, ..)| v > *b) {
            best = Some((v, state, conv, sweeps));
        }
    }
    let (lambda_max, state, converged, sweep_values) = best.expect("at least one start");
    debug_assert_eq!(state.len(), ns);
    Ok(SpiResult {
        lambda_max,
        optimizer: ProductState { factors: state },
        partition: partition.to_vec(),
        restarts_used: restarts,
        converged,
        monotone,
        sweep_values,
    })
}

/// `λ_max` over fully product states.
pub fn spi_lambda_max(obs: &ObservableSum, opts: &SpiOptions) -> Result<SpiResult> {
    let singletons: Vec<Vec<usize>> = (0..obs.parties()).map(|p| vec![p]).collect();
    k_separable_lambda_max(obs, &singletons, opts)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultipartiteOptions {
    /// Random unit-sphere coefficient starts in addition to `e/‖e‖`.
    pub starts: usize,
    /// Coordinate step below which ascent stops.
    pub step_tol: f64,
    pub max_evaluations: usize,
    pub seed: u64,
    pub spi: SpiOptions,
}

impl Default for MultipartiteOptions {
    fn default() -> Self {
        Self {
            starts: 16,
            step_tol: 1e-4,
            max_evaluations: 20_000,
            seed: 0,
            spi: SpiOptions::default(),
        }
    }
}

/// Best value found by the multipartite heuristic; not a certified global
/// optimum.
#[derive(Clone, Debug, PartialEq)]
pub struct MultipartiteNe {
    pub value: f64,
    pub labels: Vec<String>,
    /// Unit-norm coefficients of the best combination.
    pub coefficients: Vec<f64>,
    pub lambda_max: f64,
    pub verdict: Verdict,
    pub starts_used: usize,
    pub evaluations: usize,
    pub spi_converged: bool,
}

impl MultipartiteNe {
    pub fn to_json(&self) -> Value {
        json!({
            "ne": self.value,
            "labels": self.labels,
            "coefficients": self.coefficients,
            "lambda_max": self.lambda_max,
            "verdict": self.verdict.as_str(),
            "starts_used": self.starts_used,
            "evaluations": self.evaluations,
            "spi_converged": self.spi_converged,
            "global_optimum": false,
        })
    }
}

struct RatioEval<'a> {
    factors: &'a [Vec<CMatrix>],
    estimates: &'a [f64],
    spi: SpiOptions,
    evaluations: usize,
    all_converged: bool,
}

impl RatioEval<'_> {
    /// `c·e / λ_max(Σ c_i O_i)`, or `0` when either side is non-positive.
    fn eval(&mut self, c: &[f64]) -> Result<(f64, f64)> {
        self.evaluations += 1;
        let num: f64 = c.iter().zip(self.estimates).map(|(a, b)| a * b).sum();
        if num <= 0.0 {
            return Ok((0.0, 0.0));
        }
        let obs = ObservableSum::new(
            c.iter()
                .zip(self.factors)
                .map(|(ci, f)| (*ci, f.clone()))
                .collect(),
        )?;
        let r = spi_lambda_max(&obs, &self.spi)?;
        self.all_converged &= r.converged;
        if r.lambda_max <= 0.0 {
            return Ok((0.0, r.lambda_max));
        }
        Ok((num / r.lambda_max, r.lambda_max))
    }
}

/// Multipartite NE for Pauli-string observables (`"XXZ"`, `"ZZI"`, ...).
///
/// Maximizes `Σ c_i e_i / λ_max(Σ c_i O_i)` by coordinate ascent with step
/// halving from `e/‖e‖` and `opts.starts` random unit vectors. Separable
/// states satisfy `⟨Σ c_i O_i⟩ ≤ λ_max`, so a value above one rules out full
/// separability.
pub fn ne_multipartite(labels: &[&str], estimates: &[f64], opts: &MultipartiteOptions) -> Result<MultipartiteNe> {
    if labels.len() != estimates.len() {
        return Err(Error::DimensionMismatch {
            expected: labels.len(),
            got: estimates.len(),
        });
    }
    if labels.is_empty() {
        return Err(Error::NoMeasuredEntries);
    }
    let n = labels[0].chars().count();
    if n < 2 || labels.iter().any(|l| l.chars().count() != n) {
        return Err(Error::Input("Pauli strings must share a length of at least 2".into()));
    }
    if estimates.iter().any(|e| !e.is_finite()) {
        return Err(Error::Input("non-finite estimate".into()));
    }
    let factors = labels.iter().map(|l| pauli_factors(l)).collect::<Result<Vec<_>>>()?;
    let mut ev = RatioEval {
        factors: &factors,
        estimates,
        spi: opts.spi,
        evaluations: 0,
        all_converged: true,
    };

    let m = labels.len();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut starts = Vec::new();
    let enorm = estimates.iter().map(|e| e * e).sum::<f64>().sqrt();
    if enorm > 0.0 {
        starts.push(estimates.iter().map(|e| e / enorm).collect::<Vec<f64>>());
    }
    for _ in 0..opts.starts {
        let v: Vec<f64> = (0..m).map(|_| StandardNormal.sample(&mut rng)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-300);
        starts.push(v.into_iter().map(|x| x / n).collect());
    }

    let mut best = (0.0, vec![0.0; m], 0.0);
    let starts_used = starts.len();
    for mut c in starts {
        let (mut f, mut lam) = ev.eval(&c)?;
        let mut h = 0.5;
        while h >= opts.step_tol && ev.evaluations < opts.max_evaluations {
            let mut improved = false;
            for i in 0..m {
                for dir in [1.0, -1.0] {
                    let mut trial = c.clone();
                    trial[i] += dir * h;
                    let (ft, lt) = ev.eval(&trial)?;
                    if ft > f + 1e-14 {
                        c = trial;
                        f = ft;
                        lam = lt;
                        improved = true;
                        break;
                    }
                }
            }
            if !improved {
                h /= 2.0;
            }
        }
        let norm = c.iter().map(|x| x * x).sum::<f64>().sqrt();
        if f > best.0 && norm > 0.0 {
            best = (f, c.iter().map(|x| x / norm).collect(), lam / norm);
        }
    }
    Ok(MultipartiteNe {
        value: best.0,
        labels: labels.iter().map(|s| s.to_string()).collect(),
        coefficients: best.1,
        lambda_max: best.2,
        verdict: Verdict::from_ne(best.0),
        starts_used,
        evaluations: ev.evaluations,
        spi_converged: ev.all_converged,
    })
}

//! General NE solver.
//!
//! Maximizes `±Σ c_k g_k` over coefficients on the measured support subject
//! to `[[t𝟙, C], [Cᵀ, t𝟙]] ⪰ 0`, `t = 1/√((d_A−1)(d_B−1))`, with a primal
//! log-barrier path-following method. Only rows and columns touched by the
//! support enter the block, so a qubit problem is at most 6×6.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::{Method, NeDiagnostics, NeResult, SignBranch, Verdict};
use crate::grid::{CorrelatorGrid, MeasurementSet, Pair};
use crate::smallmat::{operator_norm, Cholesky, RealMatrix};
use crate::witness::CoefficientMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Target duality gap.
    pub tol: f64,
    /// Newton-step budget per sign branch.
    pub max_iter: usize,
    /// Barrier weight `1/τ` shrinks by this factor between centerings.
    pub mu_factor: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 200,
            mu_factor: 0.2,
        }
    }
}

const ARMIJO_C: f64 = 0.01;
const CENTERING_TOL: f64 = 1e-10;
const MIN_STEP: f64 = 1e-14;

/// `1/√((d_A−1)(d_B−1))`.
pub fn norm_scale(dims: (usize, usize)) -> f64 {
    1.0 / (((dims.0 - 1) * (dims.1 - 1)) as f64).sqrt()
}

struct Problem {
    m: usize,
    n: usize,
    /// Block row of each variable.
    p: Vec<usize>,
    /// Block column (offset by `m`) of each variable.
    q: Vec<usize>,
    t: f64,
}

impl Problem {
    fn new(pairs: &[Pair], t: f64) -> Self {
        let mut rows: Vec<usize> = pairs.iter().map(|p| p.row).collect();
        let mut cols: Vec<usize> = pairs.iter().map(|p| p.col).collect();
        rows.sort_unstable();
        rows.dedup();
        cols.sort_unstable();
        cols.dedup();
        let m = rows.len();
        let n = cols.len();
        let p = pairs
            .iter()
            .map(|x| rows.binary_search(&x.row).unwrap())
            .collect();
        let q = pairs
            .iter()
            .map(|x| m + cols.binary_search(&x.col).unwrap())
            .collect();
        Self { m, n, p, q, t }
    }

    fn nu(&self) -> f64 {
        (self.m + self.n) as f64
    }

    fn block(&self, x: &[f64]) -> RealMatrix {
        let size = self.m + self.n;
        let mut b = RealMatrix::zeros(size, size);
        for i in 0..size {
            b[(i, i)] = self.t;
        }
        for (k, &v) in x.iter().enumerate() {
            b[(self.p[k], self.q[k])] += v;
            b[(self.q[k], self.p[k])] += v;
        }
        b
    }

    fn compact(&self, x: &[f64]) -> RealMatrix {
        let mut c = RealMatrix::zeros(self.m, self.n);
        for (k, &v) in x.iter().enumerate() {
            c[(self.p[k], self.q[k] - self.m)] += v;
        }
        c
    }

    /// `F(x) = −τ·objᵀx − log det M(x)`, or `None` outside the PD cone.
    fn value(&self, x: &[f64], obj: &[f64], tau: f64) -> Option<f64> {
        let chol = Cholesky::factor(&self.block(x))?;
        let lin: f64 = obj.iter().zip(x).map(|(g, v)| g * v).sum();
        Some(-tau * lin - chol.log_det())
    }

    fn solve_branch(&self, obj: &[f64], opts: &SolverOptions) -> Result<(Vec<f64>, usize, f64)> {
        let k = obj.len();
        let mut x = vec![0.0; k];
        let l1: f64 = obj.iter().map(|v| v.abs()).sum();
        let mut tau = self.nu() / (self.t * l1);
        let mut iterations = 0usize;
        loop {
            loop {
                let chol = Cholesky::factor(&self.block(&x)).ok_or(Error::NonConvergence {
                    iterations,
                    gap: self.nu() / tau,
                })?;
                let w = chol.inverse();
                let grad: Vec<f64> = (0..k)
                    .map(|a| -tau * obj[a] - 2.0 * w[(self.p[a], self.q[a])])
                    .collect();
                let mut h = RealMatrix::zeros(k, k);
                for a in 0..k {
                    let (pa, qa) = (self.p[a], self.q[a]);
                    for b in a..k {
                        let (pb, qb) = (self.p[b], self.q[b]);
                        let v = 2.0 * (w[(pa, qb)] * w[(qa, pb)] + w[(pa, pb)] * w[(qa, qb)]);
                        h[(a, b)] = v;
                        h[(b, a)] = v;
                    }
                }
                let hchol = match Cholesky::factor(&h) {
                    Some(c) => c,
                    None => {
                        let shift = 1e-12 * (0..k).map(|i| h[(i, i)]).fold(0.0, f64::max);
                        for i in 0..k {
                            h[(i, i)] += shift;
                        }
                        Cholesky::factor(&h).ok_or(Error::NonConvergence {
                            iterations,
                            gap: self.nu() / tau,
                        })?
                    }
                };
                let neg_grad: Vec<f64> = grad.iter().map(|g| -g).collect();
                let dx = hchol.solve(&neg_grad);
                let slope: f64 = grad.iter().zip(&dx).map(|(g, d)| g * d).sum();
                if -slope / 2.0 <= CENTERING_TOL {
                    break;
                }
                iterations += 1;
                if iterations > opts.max_iter {
                    return Err(Error::NonConvergence {
                        iterations: iterations - 1,
                        gap: self.nu() / tau,
                    });
                }
                let f0 = self.value(&x, obj, tau).expect("current iterate is feasible");
                let slack = 1e-13 * f0.abs().max(1.0);
                let mut alpha = 1.0;
                let mut moved = false;
                while alpha >= MIN_STEP {
                    let trial: Vec<f64> = x.iter().zip(&dx).map(|(a, d)| a + alpha * d).collect();
                    if let Some(f1) = self.value(&trial, obj, tau) {
                        if f1 <= f0 + ARMIJO_C * alpha * slope + slack {
                            x = trial;
                            moved = true;
                            break;
                        }
                    }
                    alpha *= 0.5;
                }
                if !moved {
                    break;
                }
            }
            let gap = self.nu() / tau;
            if gap <= opts.tol {
                return Ok((x, iterations, gap));
            }
            tau /= opts.mu_factor;
        }
    }
}

fn validate(opts: &SolverOptions) -> Result<()> {
    if !(opts.tol > 0.0) || !(opts.mu_factor > 0.0 && opts.mu_factor < 1.0) || opts.max_iter == 0 {
        return Err(Error::Input(format!("invalid solver options {opts:?}")));
    }
    Ok(())
}

/// NE over `set` (or the full measured support when `None`).
pub fn ne_solve(g: &CorrelatorGrid, set: Option<&MeasurementSet>, opts: &SolverOptions) -> Result<NeResult> {
    validate(opts)?;
    let support = match set {
        Some(s) => s.clone(),
        None => g.support(),
    };
    if support.is_empty() {
        return Err(Error::NoMeasuredEntries);
    }
    let pairs = support.pairs();
    let values = pairs
        .iter()
        .map(|&p| g.require(p))
        .collect::<Result<Vec<_>>>()?;
    let dims = g.dims();
    let t = norm_scale(dims);
    let problem = Problem::new(pairs, t);

    if values.iter().all(|v| *v == 0.0) {
        let coeffs = CoefficientMatrix::new(
            dims,
            pairs
                .iter()
                .enumerate()
                .map(|(k, &p)| (p, if k == 0 { t } else { 0.0 })),
        )?;
        return Ok(NeResult {
            value: 0.0,
            coefficients: coeffs,
            sign_branch: SignBranch::Plus,
            verdict: Verdict::Undetected,
            method: Method::InteriorPoint,
            diagnostics: NeDiagnostics::default(),
        });
    }

    let mut best: Option<(f64, SignBranch, Vec<f64>)> = None;
    let mut total_iter = 0;
    let mut last_gap = 0.0f64;
    for branch in [SignBranch::Plus, SignBranch::Minus] {
        let obj: Vec<f64> = values.iter().map(|v| branch.sign() * v).collect();
        let (x, iters, gap) = problem.solve_branch(&obj, opts)?;
        total_iter += iters;
        last_gap = last_gap.max(gap);
        let norm = operator_norm(&problem.compact(&x))?;
        let x: Vec<f64> = if norm > 0.0 {
            x.iter().map(|v| v * t / norm).collect()
        } else {
            x
        };
        let val: f64 = obj.iter().zip(&x).map(|(a, b)| a * b).sum();
        // Exact ties keep the '+' branch.
        if best.as_ref().is_none_or(|(b, _, _)| val > *b + opts.tol) {
            best = Some((val, branch, x));
        }
    }
    let (value, sign_branch, x) = best.expect("two branches solved");
    let coeffs = CoefficientMatrix::new(dims, pairs.iter().copied().zip(x.iter().copied()))?;
    let residual = (coeffs.operator_norm() / t - 1.0).abs();
    Ok(NeResult {
        value,
        coefficients: coeffs,
        sign_branch,
        verdict: Verdict::from_ne(value),
        method: Method::InteriorPoint,
        diagnostics: NeDiagnostics {
            iterations: total_iter,
            duality_gap: last_gap,
            constraint_residual: residual,
        },
    })
}

/// NE along a chain of nested supports. Each optimizer stays feasible for
/// the next support, so a later value below an earlier one (solver noise) is
/// replaced by the earlier optimizer padded with zeros.
pub fn ne_monotone_report(
    g: &CorrelatorGrid,
    chain: &[MeasurementSet],
    opts: &SolverOptions,
) -> Result<Vec<NeResult>> {
    for (k, w) in chain.windows(2).enumerate() {
        if !w[0].is_subset_of(&w[1]) {
            return Err(Error::NotNested(format!(
                "set {} ({}) is not contained in set {} ({})",
                k,
                w[0].display(g.dims()),
                k + 1,
                w[1].display(g.dims())
            )));
        }
    }
    let mut out: Vec<NeResult> = Vec::with_capacity(chain.len());
    for set in chain {
        let mut r = ne_solve(g, Some(set), opts)?;
        if let Some(prev) = out.last() {
            if prev.value > r.value {
                let sign = prev.sign_branch.sign();
                let padded = CoefficientMatrix::new(
                    g.dims(),
                    set.pairs()
                        .iter()
                        .map(|&p| (p, sign * prev.coefficients.get(p))),
                )?;
                r = NeResult {
                    value: prev.value,
                    coefficients: padded,
                    sign_branch: SignBranch::Plus,
                    verdict: prev.verdict,
                    method: prev.method,
                    diagnostics: r.diagnostics,
                };
            }
        }
        out.push(r);
    }
    Ok(out)
}

//! Qubit measurement patterns and their closed-form NE.
//!
//! Two sets are equivalent when one is obtained from the other by relabeling
//! the Pauli axes of each party independently, i.e. under the `S₃ × S₃`
//! action. Every set of one, two or three correlators falls into one of the
//! classes below, each with an exact NE formula.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::estimate::{Method, NeDiagnostics, NeResult, SignBranch, Verdict};
use crate::grid::{CorrelatorGrid, MeasurementSet, Pair};
use crate::witness::CoefficientMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PatternTag {
    Single,
    LineRow,
    LineCol,
    TwoGeneric,
    ThreeLine,
    ThreeDiagonal,
    LShape,
    TwoPlusIsolated,
    General,
}

impl PatternTag {
    /// Whether the class can ever certify entanglement; `None` when unknown.
    pub fn can_detect(self) -> Option<bool> {
        match self {
            Self::Single | Self::LineRow | Self::LineCol | Self::ThreeLine => Some(false),
            Self::TwoGeneric | Self::ThreeDiagonal | Self::LShape | Self::TwoPlusIsolated => {
                Some(true)
            }
            Self::General => None,
        }
    }

    pub fn is_line(self) -> bool {
        matches!(self, Self::LineRow | Self::LineCol | Self::ThreeLine)
    }
}

impl fmt::Display for PatternTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// A permutation of the labels `X, Y, Z` (as indices 0, 1, 2).
pub type Perm = [usize; 3];

/// The six permutations in lexicographic order.
pub const PERMS: [Perm; 6] = [
    [0, 1, 2],
    [0, 2, 1],
    [1, 0, 2],
    [1, 2, 0],
    [2, 0, 1],
    [2, 1, 0],
];

struct Canonical {
    tag: PatternTag,
    variant: &'static str,
    /// Ordered roles; closed forms read values in this order.
    pairs: &'static [(usize, usize)],
}

const X: usize = 0;
const Y: usize = 1;
const Z: usize = 2;

const CANONICAL: &[Canonical] = &[
    Canonical { tag: PatternTag::Single, variant: "single", pairs: &[(X, X)] },
    Canonical { tag: PatternTag::LineRow, variant: "row", pairs: &[(X, X), (X, Y)] },
    Canonical { tag: PatternTag::LineCol, variant: "col", pairs: &[(X, X), (Y, X)] },
    Canonical { tag: PatternTag::TwoGeneric, variant: "diagonal", pairs: &[(X, X), (Z, Z)] },
    Canonical { tag: PatternTag::ThreeLine, variant: "row", pairs: &[(X, X), (X, Y), (X, Z)] },
    Canonical { tag: PatternTag::ThreeLine, variant: "col", pairs: &[(X, X), (Y, X), (Z, X)] },
    Canonical { tag: PatternTag::ThreeDiagonal, variant: "diagonal", pairs: &[(X, X), (Y, Y), (Z, Z)] },
    Canonical { tag: PatternTag::LShape, variant: "corner", pairs: &[(X, X), (X, Z), (Z, X)] },
    Canonical {
        tag: PatternTag::TwoPlusIsolated,
        variant: "row",
        pairs: &[(X, X), (X, Y), (Z, Z)],
    },
    Canonical {
        tag: PatternTag::TwoPlusIsolated,
        variant: "col",
        pairs: &[(X, X), (Y, X), (Z, Z)],
    },
];

/// Class of a measurement set together with the permutation pair that maps
/// the canonical representative onto it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PatternClass {
    pub tag: PatternTag,
    /// `row` / `col` orientation for line and pair patterns.
    pub variant: &'static str,
    pub representative: MeasurementSet,
    pub perm_a: Perm,
    pub perm_b: Perm,
    /// The input pairs in the canonical role order (`π(rep[k])`).
    pub roles: Vec<Pair>,
}

impl PatternClass {
    pub fn to_json(&self) -> Value {
        let name = |p: &Perm| p.iter().map(|&i| ['X', 'Y', 'Z'][i]).collect::<String>();
        json!({
            "class": self.tag,
            "variant": self.variant,
            "representative": self.representative.labels((2, 2)),
            "perm_a": name(&self.perm_a),
            "perm_b": name(&self.perm_b),
            "can_detect": self.tag.can_detect(),
        })
    }
}

pub fn permute_pair(p: Pair, pa: &Perm, pb: &Perm) -> Pair {
    Pair::new(pa[p.row], pb[p.col])
}

pub fn permute_set(set: &MeasurementSet, pa: &Perm, pb: &Perm) -> MeasurementSet {
    MeasurementSet::new(set.pairs().iter().map(|&p| permute_pair(p, pa, pb)).collect())
        .expect("permutation preserves distinctness")
}

pub fn permute_grid(g: &CorrelatorGrid, pa: &Perm, pb: &Perm) -> Result<CorrelatorGrid> {
    CorrelatorGrid::new(g.dims(), g.entries().map(|(p, v)| (permute_pair(p, pa, pb), v)))
}

fn key(pairs: impl IntoIterator<Item = Pair>) -> BTreeSet<Pair> {
    pairs.into_iter().collect()
}

fn check_qubit_set(set: &MeasurementSet) -> Result<()> {
    if set.pairs().iter().any(|p| p.row > 2 || p.col > 2) {
        return Err(Error::Input("pattern classification needs qubit labels".into()));
    }
    Ok(())
}

/// Class of a qubit measurement set. Sets with more than three pairs are
/// `General`.
pub fn classify(set: &MeasurementSet) -> Result<PatternClass> {
    check_qubit_set(set)?;
    let target = key(set.pairs().iter().copied());
    for canon in CANONICAL.iter().filter(|c| c.pairs.len() == set.len()) {
        for pa in &PERMS {
            for pb in &PERMS {
                let roles: Vec<Pair> = canon
                    .pairs
                    .iter()
                    .map(|&(r, c)| permute_pair(Pair::new(r, c), pa, pb))
                    .collect();
                if key(roles.iter().copied()) == target {
                    return Ok(PatternClass {
                        tag: canon.tag,
                        variant: canon.variant,
                        representative: canonical_set(canon),
                        perm_a: *pa,
                        perm_b: *pb,
                        roles,
                    });
                }
            }
        }
    }
    Ok(PatternClass {
        tag: PatternTag::General,
        variant: "general",
        representative: set.sorted(),
        perm_a: PERMS[0],
        perm_b: PERMS[0],
        roles: set.pairs().to_vec(),
    })
}

fn canonical_set(c: &Canonical) -> MeasurementSet {
    MeasurementSet::new(c.pairs.iter().map(|&(r, col)| Pair::new(r, col)).collect())
        .expect("canonical sets are distinct")
}

fn sgn(v: f64) -> f64 {
    if v < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// `v/‖v‖` (or the first unit vector when `v = 0`) and `‖v‖`.
fn normalized(v: &[f64]) -> (Vec<f64>, f64) {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n == 0.0 {
        let mut e = vec![0.0; v.len()];
        e[0] = 1.0;
        (e, 0.0)
    } else {
        (v.iter().map(|x| x / n).collect(), n)
    }
}

/// Quantities for `C = [[α, β], [γ, 0]]`: `T = α² + β² + γ²` and
/// `λ₊ = (T + √(T² − 4β²γ²))/2 = ‖C‖²_∞`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LShapeNorm {
    pub t: f64,
    pub lambda_plus: f64,
}

impl LShapeNorm {
    pub fn new(alpha: f64, beta: f64, gamma: f64) -> Self {
        let t = alpha * alpha + beta * beta + gamma * gamma;
        let disc = (t * t - 4.0 * beta * beta * gamma * gamma).max(0.0);
        Self {
            t,
            lambda_plus: (t + disc.sqrt()) / 2.0,
        }
    }

    pub fn operator_norm(&self) -> f64 {
        self.lambda_plus.sqrt()
    }
}

const GOLDEN_TOL: f64 = 1e-10;
const LSHAPE_GRID: usize = 720;

/// Maximizes `aα + bβ + cγ` over `‖[[α, β], [γ, 0]]‖_∞ ≤ 1`.
///
/// The boundary is `α = cos u cos v`, `β = sin u`, `γ = sin v`; for fixed `u`
/// the optimum over `v` is `√(a²cos²u + c²)`, leaving a 1-D search in `u`.
/// Returns `(value, α, β, γ)`.
pub fn lshape_optimum(a: f64, b: f64, c: f64) -> (f64, f64, f64, f64) {
    let half_pi = std::f64::consts::FRAC_PI_2;
    let f = |u: f64| b * u.sin() + (a * a * u.cos().powi(2) + c * c).sqrt();
    let h = 2.0 * half_pi / LSHAPE_GRID as f64;
    let mut best_k = 0;
    let mut best = f64::NEG_INFINITY;
    for k in 0..=LSHAPE_GRID {
        let v = f(-half_pi + k as f64 * h);
        if v > best {
            best = v;
            best_k = k;
        }
    }
    let mut lo = (-half_pi + (best_k as f64 - 1.0) * h).max(-half_pi);
    let mut hi = (-half_pi + (best_k as f64 + 1.0) * h).min(half_pi);
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > GOLDEN_TOL {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = f(x1);
        }
    }
    let mut u = 0.5 * (lo + hi);
    for cand in [-half_pi + best_k as f64 * h, -half_pi, half_pi] {
        if f(cand) > f(u) {
            u = cand;
        }
    }
    let v = c.atan2(a * u.cos());
    let (alpha, beta, gamma) = (u.cos() * v.cos(), u.sin(), v.sin());
    (a * alpha + b * beta + c * gamma, alpha, beta, gamma)
}

/// Exact NE for a qubit set of at most three correlators.
pub fn ne_closed_form(set: &MeasurementSet, g: &CorrelatorGrid) -> Result<NeResult> {
    if !g.is_qubit() {
        return Err(Error::Input("closed forms are defined for qubit grids only".into()));
    }
    let class = classify(set)?;
    let vals = class
        .roles
        .iter()
        .map(|&p| g.require(p))
        .collect::<Result<Vec<_>>>()?;
    let coeffs: Vec<f64> = match class.tag {
        PatternTag::General => return Err(Error::NoClosedForm),
        PatternTag::Single | PatternTag::TwoGeneric | PatternTag::ThreeDiagonal => {
            vals.iter().map(|&v| sgn(v)).collect()
        }
        PatternTag::LineRow | PatternTag::LineCol | PatternTag::ThreeLine => normalized(&vals).0,
        PatternTag::TwoPlusIsolated => {
            let (pair, _) = normalized(&vals[..2]);
            vec![pair[0], pair[1], sgn(vals[2])]
        }
        PatternTag::LShape => {
            let (_, alpha, beta, gamma) = lshape_optimum(vals[0], vals[1], vals[2]);
            vec![alpha, beta, gamma]
        }
    };
    let value: f64 = coeffs.iter().zip(&vals).map(|(c, v)| c * v).sum();
    let cm = CoefficientMatrix::new((2, 2), class.roles.iter().copied().zip(coeffs))?;
    let residual = (cm.operator_norm() - 1.0).abs();
    Ok(NeResult {
        value,
        coefficients: cm,
        sign_branch: SignBranch::Plus,
        verdict: Verdict::from_ne(value),
        method: Method::ClosedForm,
        diagnostics: NeDiagnostics {
            iterations: 0,
            duality_gap: 0.0,
            constraint_residual: residual,
        },
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Orbit {
    pub class: PatternClass,
    /// Members as sorted sets, in lexicographic order.
    pub members: Vec<MeasurementSet>,
}

/// All `C(9, k)` qubit sets of size `k`, partitioned into `S₃ × S₃` orbits.
/// Orbits are listed in canonical-class order.
pub fn enumerate_orbits(k: usize) -> Result<Vec<Orbit>> {
    if !(1..=9).contains(&k) {
        return Err(Error::Input(format!("orbit size k must be in 1..=9, got {k}")));
    }
    let all: Vec<Pair> = (0..3).flat_map(|r| (0..3).map(move |c| Pair::new(r, c))).collect();
    let mut subsets = Vec::new();
    combinations(&all, k, 0, &mut Vec::new(), &mut subsets);

    let mut seen: BTreeSet<Vec<Pair>> = BTreeSet::new();
    let mut orbits = Vec::new();
    for s in subsets {
        if seen.contains(&s) {
            continue;
        }
        let mut members: BTreeSet<Vec<Pair>> = BTreeSet::new();
        for pa in &PERMS {
            for pb in &PERMS {
                let mut img: Vec<Pair> = s.iter().map(|&p| permute_pair(p, pa, pb)).collect();
                img.sort();
                members.insert(img);
            }
        }
        seen.extend(members.iter().cloned());
        let first = MeasurementSet::new(s.clone()).expect("distinct pairs");
        let class = classify(&first)?;
        orbits.push(Orbit {
            class,
            members: members
                .into_iter()
                .map(|m| MeasurementSet::new(m).expect("distinct pairs"))
                .collect(),
        });
    }
    let rank = |o: &Orbit| {
        CANONICAL
            .iter()
            .position(|c| c.tag == o.class.tag && c.variant == o.class.variant)
            .unwrap_or(CANONICAL.len())
    };
    orbits.sort_by(|a, b| rank(a).cmp(&rank(b)).then_with(|| a.members[0].pairs().cmp(b.members[0].pairs())));
    Ok(orbits)
}

fn combinations(items: &[Pair], k: usize, start: usize, cur: &mut Vec<Pair>, out: &mut Vec<Vec<Pair>>) {
    if cur.len() == k {
        out.push(cur.clone());
        return;
    }
    for i in start..items.len() {
        cur.push(items[i]);
        combinations(items, k, i + 1, cur, out);
        cur.pop();
    }
}

//! Entanglement certification from tomographically incomplete correlator data.
//!
//! Given estimates of a handful of local correlators `<A_i ⊗ B_j>`, the crate
//! maximizes the *normalized estimation* (NE)
//!
//! ```text
//! NE = max |Σ c_ij <A_i ⊗ B_j>|   subject to  sqrt((d_A-1)(d_B-1)) ‖C‖_∞ = 1
//! ```
//!
//! over real coefficient matrices supported on the measured entries. A value
//! above one certifies entanglement, and the optimizing `C` yields a pair of
//! mirrored witnesses `W± = bound·𝟙 ± S` that detect the state.
//!
//! Module map:
//!
//! - [`smallmat`]: dense Jacobi eigensolvers, SVD, operator norm, Cholesky.
//! - [`quantum`]: Pauli / Gell-Mann operators, density matrices, state
//!   families and finite-shot correlator simulation.
//! - [`grid`]: the correlator grid with its measured-support mask and the
//!   canonical JSON / CSV file formats.
//! - [`witness`]: separable bounds and mirrored witness pairs.
//! - [`closed`]: local-Clifford pattern classes and closed-form NE for one,
//!   two and three qubit correlators.
//! - [`sdp`]: the general NE solver (log-barrier interior point).
//! - [`spi`]: separability power iteration and multipartite NE.

pub mod closed;
pub mod error;
pub mod estimate;
pub mod grid;
pub mod quantum;
pub mod sdp;
pub mod smallmat;
pub mod spi;
pub mod witness;

pub use closed::{classify, enumerate_orbits, ne_closed_form, Orbit, PatternClass, PatternTag};
pub use error::{Error, Result};
pub use estimate::{Method, NeDiagnostics, NeResult, SignBranch, Verdict};
pub use grid::{emit_grid, parse_grid, CorrelatorGrid, GridFormat, MeasurementSet, Pair};
pub use quantum::{DensityMatrix, OperatorBasis, Pauli, StateFamily, StateFamilyParams};
pub use sdp::{ne_monotone_report, ne_solve, SolverOptions};
pub use smallmat::{CMatrix, HermitianMatrix, RealMatrix};
pub use spi::{
    k_separable_lambda_max, ne_multipartite, spi_lambda_max, MultipartiteNe, MultipartiteOptions,
    ObservableSum, ProductState, SpiOptions, SpiResult,
};
pub use witness::{
    make_witness_pair, separable_bound, CoefficientMatrix, MirroredWitnessPair, WitnessEvaluation,
};

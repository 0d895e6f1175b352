use std::f64::consts::{FRAC_1_SQRT_2, PI};

use ewit_core::quantum::{
    full_grid, gell_mann_basis, ideal_correlator, make_state, sample_correlator, sample_grid, sample_separable,
    state_vector, Sampler,
};
use ewit_core::{CMatrix, DensityMatrix, Pair, Pauli, StateFamily, StateFamilyParams};
use num_complex::Complex64;
use proptest::prelude::*;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// `Tr ρ² = (1 + Σ⟨G_i⊗𝟙⟩² + Σ⟨𝟙⊗G_j⟩² + Σ⟨G_i⊗G_j⟩²) / (d_A d_B)` for a
/// generator basis with `Tr G_i G_j = d δ_ij`.
fn purity_from_correlators(rho: &DensityMatrix) -> f64 {
    let (da, db) = rho.dims();
    let ba = gell_mann_basis(da).unwrap();
    let bb = gell_mann_basis(db).unwrap();
    let (ia, ib) = (CMatrix::identity(da), CMatrix::identity(db));
    let mut s = 1.0;
    for i in 0..ba.generator_count() {
        s += rho.expectation(&ba.generator(i).kron(&ib)).powi(2);
    }
    for j in 0..bb.generator_count() {
        s += rho.expectation(&ia.kron(bb.generator(j))).powi(2);
    }
    let grid = full_grid(rho).unwrap();
    s += grid.entries().map(|(_, v)| v * v).sum::<f64>();
    s / (da * db) as f64
}

#[test]
fn purity_matches_bloch_decomposition() {
    let mut sampler = Sampler::new(41);
    for dims in [(2, 2), (2, 3), (3, 3)] {
        for _ in 0..20 {
            let rho = sampler.random_state(dims);
            assert!((rho.purity() - purity_from_correlators(&rho)).abs() < 1e-10, "{dims:?}");
        }
    }
}

#[test]
fn maximally_entangled_correlators_have_full_weight() {
    let bell = make_state(StateFamilyParams { family: StateFamily::Bell, theta: 0.0 }).unwrap();
    let g = full_grid(&bell).unwrap();
    let sq: f64 = g.entries().map(|(_, v)| v * v).sum();
    assert!((sq - 3.0).abs() < 1e-12);
    assert!((g.get(Pair::new(0, 0)).unwrap() - 1.0).abs() < 1e-12);
    assert!((g.get(Pair::new(1, 1)).unwrap() + 1.0).abs() < 1e-12);
    assert!((g.get(Pair::new(2, 2)).unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn chi1_matches_hand_built_vector() {
    for k in -9..=9 {
        let theta = k as f64 * PI / 9.0;
        let (co, si) = ((theta / 2.0).cos(), (theta / 2.0).sin());
        let expect = [c(co * FRAC_1_SQRT_2), c(si * FRAC_1_SQRT_2), c(-si * FRAC_1_SQRT_2), c(co * FRAC_1_SQRT_2)];
        let rho = make_state(StateFamilyParams { family: StateFamily::Chi1, theta }).unwrap();
        assert!((rho.fidelity_pure(&expect) - 1.0).abs() < 1e-12, "θ = {theta}");
        let xx = ideal_correlator(&rho, Pauli::X, Pauli::X).unwrap();
        let zz = ideal_correlator(&rho, Pauli::Z, Pauli::Z).unwrap();
        let yy = ideal_correlator(&rho, Pauli::Y, Pauli::Y).unwrap();
        assert!((xx - theta.cos()).abs() < 1e-12);
        assert!((zz - theta.cos()).abs() < 1e-12);
        assert!((yy + 1.0).abs() < 1e-12);
    }
}

#[test]
fn chi3_vector_is_normalized_and_entangled() {
    for k in -9..=9 {
        let theta = k as f64 * PI / 9.0;
        let v = state_vector(StateFamilyParams { family: StateFamily::Chi3, theta }).unwrap();
        let n: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        assert!((n - 1.0).abs() < 1e-12);
        let rho = DensityMatrix::from_pure(&v, (2, 2)).unwrap();
        assert!(!rho.is_ppt(1e-9));
    }
}

#[test]
fn separable_mixtures_are_ppt_and_valid() {
    for seed in 0..200 {
        let dims = [(2, 2), (2, 3), (3, 2)][seed as usize % 3];
        let rho = sample_separable(dims, 1 + seed as usize % 5, seed).unwrap();
        assert!(rho.is_ppt(1e-10));
        let again = DensityMatrix::new(rho.matrix().clone(), dims).unwrap();
        assert!((again.purity() - rho.purity()).abs() < 1e-12);
    }
}

#[test]
fn full_depolarization_erases_correlations() {
    let rho = make_state(StateFamilyParams { family: StateFamily::Chi3, theta: 7.0 * PI / 9.0 })
        .unwrap()
        .depolarize(1.0)
        .unwrap();
    for (_, v) in full_grid(&rho).unwrap().entries() {
        assert!(v.abs() < 1e-15);
    }
}

#[test]
fn depolarization_shrinks_correlators_linearly() {
    let rho = make_state(StateFamilyParams { family: StateFamily::PsiTheta, theta: 0.3 }).unwrap();
    let g0 = full_grid(&rho).unwrap();
    let g = full_grid(&rho.depolarize(0.25).unwrap()).unwrap();
    for (p, v) in g.entries() {
        assert!((v - 0.75 * g0.get(p).unwrap()).abs() < 1e-12);
    }
}

#[test]
fn sampled_correlators_concentrate() {
    let rho = make_state(StateFamilyParams { family: StateFamily::Chi1, theta: 0.7 }).unwrap();
    let shots = 20_000u64;
    let g = sample_grid(&rho, shots, 5).unwrap();
    let ideal = full_grid(&rho).unwrap();
    let sigma = 1.0 / (shots as f64).sqrt();
    for (p, v) in g.entries() {
        assert!((v - ideal.get(p).unwrap()).abs() < 5.0 * sigma, "{p:?}");
    }
    assert_eq!(g, sample_grid(&rho, shots, 5).unwrap());
    assert_ne!(g, sample_grid(&rho, shots, 6).unwrap());
}

#[test]
fn sampling_a_deterministic_outcome_is_exact() {
    let bell = make_state(StateFamilyParams { family: StateFamily::Bell, theta: 0.0 }).unwrap();
    assert_eq!(sample_correlator(&bell, Pauli::Z, Pauli::Z, 777, 1).unwrap(), 1.0);
    assert_eq!(sample_correlator(&bell, Pauli::Y, Pauli::Y, 777, 1).unwrap(), -1.0);
    assert!(sample_correlator(&bell, Pauli::Z, Pauli::Z, 0, 1).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn correlators_are_linear_in_the_state(w in 0.0f64..1.0, s1 in 0u64..500, s2 in 0u64..500) {
        let mut sampler = Sampler::new(s1 * 1000 + s2);
        let a = sampler.random_state((2, 2));
        let b = sampler.random_state((2, 2));
        let mix = DensityMatrix::mixture(&[w, 1.0 - w], &[a.clone(), b.clone()]).unwrap();
        let (ga, gb, gm) = (full_grid(&a).unwrap(), full_grid(&b).unwrap(), full_grid(&mix).unwrap());
        for (p, v) in gm.entries() {
            let expect = w * ga.get(p).unwrap() + (1.0 - w) * gb.get(p).unwrap();
            prop_assert!((v - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn psi_theta_correlators(theta in -PI..PI) {
        let rho = make_state(StateFamilyParams { family: StateFamily::PsiTheta, theta }).unwrap();
        let s2 = (2.0 * theta).sin();
        prop_assert!((ideal_correlator(&rho, Pauli::Z, Pauli::Z).unwrap() - 1.0).abs() < 1e-12);
        prop_assert!((ideal_correlator(&rho, Pauli::X, Pauli::X).unwrap() - s2).abs() < 1e-12);
        prop_assert!((ideal_correlator(&rho, Pauli::Y, Pauli::Y).unwrap() + s2).abs() < 1e-12);
    }
}

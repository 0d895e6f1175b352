mod common;

use common::product_search;
use ewit_core::spi::pauli_factors;
use ewit_core::{
    k_separable_lambda_max, ne_multipartite, ne_solve, spi_lambda_max, CMatrix, CorrelatorGrid, Error,
    MultipartiteOptions, ObservableSum, SolverOptions, SpiOptions, Verdict,
};
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn obs(terms: &[(f64, &str)]) -> ObservableSum {
    ObservableSum::from_pauli_strings(terms).unwrap()
}

fn random_pauli_obs(n: usize, terms: usize, rng: &mut ChaCha8Rng) -> ObservableSum {
    let labels: Vec<(f64, String)> = (0..terms)
        .map(|_| {
            let s: String = (0..n).map(|_| ['I', 'X', 'Y', 'Z'][rng.random_range(0..4)]).collect();
            (rng.random_range(-1.0..1.0), s)
        })
        .collect();
    let refs: Vec<(f64, &str)> = labels.iter().map(|(c, s)| (*c, s.as_str())).collect();
    obs(&refs)
}

#[test]
fn trivial_products() {
    let r = spi_lambda_max(&obs(&[(1.0, "ZZZ")]), &SpiOptions::default()).unwrap();
    assert!((r.lambda_max - 1.0).abs() < 1e-10);
    assert!(r.converged && r.monotone);
    let r = spi_lambda_max(&obs(&[(1.0, "XX")]), &SpiOptions::default()).unwrap();
    assert!((r.lambda_max - 1.0).abs() < 1e-10);
}

#[test]
fn two_term_observable_matches_product_search() {
    let o = obs(&[(1.0, "XXX"), (1.0, "ZZI")]);
    let r = spi_lambda_max(&o, &SpiOptions::default()).unwrap();
    let s = product_search(&o, 200_000, 20, 1);
    assert!(r.lambda_max >= s - 1e-9, "{} < {}", r.lambda_max, s);
    assert!(r.lambda_max - s < 1e-3);
    assert!((o.expectation(&r.optimizer) - r.lambda_max).abs() < 1e-8);
}

#[test]
fn random_observables_match_product_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(97);
    for i in 0..8 {
        let o = random_pauli_obs(3, 4, &mut rng);
        let r = spi_lambda_max(&o, &SpiOptions::default()).unwrap();
        let s = product_search(&o, 100_000, 20, i);
        assert!(r.lambda_max >= s - 1e-9 && r.lambda_max - s < 1e-3, "{} vs {}", r.lambda_max, s);
        assert!(r.monotone);
        assert!(r.sweep_values.windows(2).all(|w| w[1] >= w[0] - 1e-12));
        assert!((o.expectation(&r.optimizer) - r.lambda_max).abs() < 1e-8);
    }
}

#[test]
fn singleton_partition_is_full_product() {
    let o = obs(&[(1.0, "XXX"), (1.0, "ZZI")]);
    let parts = vec![vec![0], vec![1], vec![2]];
    let a = k_separable_lambda_max(&o, &parts, &SpiOptions::default()).unwrap();
    let b = spi_lambda_max(&o, &SpiOptions::default()).unwrap();
    assert_eq!(a.lambda_max, b.lambda_max);
}

/// `max_b λ_max(⟨b|O|b⟩_3)` over qubit-3 Bloch angles, with the reduced
/// 4×4 operator diagonalized through its real embedding.
fn block_oracle(terms: &[(f64, &str)]) -> f64 {
    let eval = |th: f64, ph: f64| {
        let b = [Complex64::new((th / 2.0).cos(), 0.0), Complex64::from_polar((th / 2.0).sin(), ph)];
        let mut red = CMatrix::zeros(4, 4);
        for (c, s) in terms {
            let f = pauli_factors(s).unwrap();
            let w = f[2].expectation(&b).re;
            red.add_scaled(&f[0].kron(&f[1]), c * w);
        }
        let emb = DMatrix::from_fn(8, 8, |i, j| {
            let z = red[(i % 4, j % 4)];
            match (i < 4, j < 4) {
                (true, true) | (false, false) => z.re,
                (true, false) => -z.im,
                (false, true) => z.im,
            }
        });
        emb.symmetric_eigenvalues().max()
    };
    let (mut best, mut bt, mut bp) = (f64::NEG_INFINITY, 0.0, 0.0);
    for i in 0..=90 {
        for j in 0..180 {
            let (th, ph) = (std::f64::consts::PI * i as f64 / 90.0, std::f64::consts::TAU * j as f64 / 180.0);
            let v = eval(th, ph);
            if v > best {
                (best, bt, bp) = (v, th, ph);
            }
        }
    }
    let mut h = 0.05;
    while h > 1e-10 {
        let mut moved = false;
        for (dt, dp) in [(h, 0.0), (-h, 0.0), (0.0, h), (0.0, -h)] {
            let v = eval(bt + dt, bp + dp);
            if v > best {
                (best, bt, bp) = (v, bt + dt, bp + dp);
                moved = true;
            }
        }
        if !moved {
            h *= 0.5;
        }
    }
    best
}

#[test]
fn block_partition_matches_reduced_oracle() {
    let cases: Vec<Vec<(f64, &str)>> = vec![
        vec![(1.0, "XXX"), (1.0, "ZZI")],
        vec![(0.7, "XYZ"), (-0.4, "ZZX"), (0.9, "YYI"), (0.3, "IXZ")],
        vec![(1.0, "XXZ"), (1.0, "YYZ"), (-0.5, "ZIX")],
    ];
    for terms in cases {
        let o = obs(&terms);
        let block = k_separable_lambda_max(&o, &[vec![0, 1], vec![2]], &SpiOptions::default()).unwrap();
        let full = spi_lambda_max(&o, &SpiOptions::default()).unwrap();
        let oracle = block_oracle(&terms);
        assert!(block.lambda_max >= full.lambda_max - 1e-9);
        assert!((block.lambda_max - oracle).abs() < 1e-3, "{} vs {}", block.lambda_max, oracle);
        assert_eq!(block.optimizer.factors[0].len(), 4);
    }
}

#[test]
fn invalid_partitions_are_rejected() {
    let o = obs(&[(1.0, "XXX")]);
    for p in [vec![vec![0, 1]], vec![vec![0, 1], vec![1, 2]], vec![vec![0], vec![1], vec![3]]] {
        assert!(matches!(
            k_separable_lambda_max(&o, &p, &SpiOptions::default()),
            Err(Error::InvalidPartition(_))
        ));
    }
}

#[test]
fn ghz_correlations_exceed_the_product_bound() {
    let r = ne_multipartite(&["XXX", "ZZI", "ZIZ", "IZZ"], &[1.0; 4], &MultipartiteOptions::default()).unwrap();
    assert!(r.value > 1.0, "{}", r.value);
    assert_eq!(r.verdict, Verdict::Entangled);
    let refs: Vec<(f64, &str)> = r.coefficients.iter().zip(&r.labels).map(|(c, l)| (*c, l.as_str())).collect();
    let combo = obs(&refs);
    let searched = product_search(&combo, 100_000, 20, 3);
    assert!((r.lambda_max - searched).abs() < 1e-3);
    assert!(r.to_json()["global_optimum"] == false);
}

#[test]
fn single_term_is_not_a_detection() {
    let r = ne_multipartite(&["ZZZ"], &[1.0], &MultipartiteOptions::default()).unwrap();
    assert!((r.value - 1.0).abs() < 1e-9);
    assert_eq!(r.verdict, Verdict::Undetected);
    assert!(ne_multipartite(&["ZZ", "XX"], &[1.0], &MultipartiteOptions::default()).is_err());
}

#[test]
fn bipartite_input_agrees_with_interior_point() {
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    let cases = [["XX", "ZZ"].as_slice(), &["XX", "XY", "ZX"], &["XX", "YY", "ZZ"], &["XY", "YZ", "ZX", "ZZ"]];
    for labels in cases {
        let est: Vec<f64> = labels.iter().map(|_| rng.random_range(-1.0..1.0)).collect();
        let g = CorrelatorGrid::from_labels((2, 2), &labels.iter().copied().zip(est.iter().copied()).collect::<Vec<_>>())
            .unwrap();
        let a = ne_solve(&g, None, &SolverOptions::default()).unwrap();
        let b = ne_multipartite(labels, &est, &MultipartiteOptions::default()).unwrap();
        assert!((a.value - b.value).abs() < 2e-3, "{labels:?}: {} vs {}", a.value, b.value);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn scale_and_shift_covariance(seed in 0u64..10_000, t in 0.1f64..4.0, s in -2.0f64..2.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let o = random_pauli_obs(3, 3, &mut rng);
        let base = spi_lambda_max(&o, &SpiOptions::default()).unwrap().lambda_max;
        let scaled = spi_lambda_max(&o.scaled(t), &SpiOptions::default()).unwrap().lambda_max;
        let shifted = spi_lambda_max(&o.shifted(s), &SpiOptions::default()).unwrap().lambda_max;
        prop_assert!((scaled - t * base).abs() < 1e-8 * t.max(1.0));
        prop_assert!((shifted - base - s).abs() < 1e-8);
    }
}

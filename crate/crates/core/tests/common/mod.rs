//! Independent product-state search used as an oracle for SPI.

#![allow(dead_code)]

use ewit_core::{ObservableSum, ProductState};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Qubit on the Bloch sphere at polar angle `th`, azimuth `ph`.
fn bloch(th: f64, ph: f64) -> Vec<Complex64> {
    vec![
        Complex64::new((th / 2.0).cos(), 0.0),
        Complex64::from_polar((th / 2.0).sin(), ph),
    ]
}

fn eval(obs: &ObservableSum, angles: &[f64]) -> f64 {
    let factors = angles.chunks(2).map(|a| bloch(a[0], a[1])).collect();
    obs.expectation(&ProductState { factors })
}

fn hill_climb(obs: &ObservableSum, mut x: Vec<f64>, mut f: f64) -> f64 {
    let mut h = 0.2;
    while h > 1e-9 {
        let mut improved = false;
        for i in 0..x.len() {
            for d in [h, -h] {
                x[i] += d;
                let g = eval(obs, &x);
                if g > f {
                    f = g;
                    improved = true;
                } else {
                    x[i] -= d;
                }
            }
        }
        if !improved {
            h *= 0.5;
        }
    }
    f
}

/// Best of `samples` uniform product states of qubits, then coordinate
/// hill-climbing from the `polish` best samples.
pub fn product_search(obs: &ObservableSum, samples: usize, polish: usize, seed: u64) -> f64 {
    let n = obs.parties();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut top: Vec<(f64, Vec<f64>)> = Vec::with_capacity(polish + 1);
    for _ in 0..samples {
        let x: Vec<f64> = (0..n)
            .flat_map(|_| {
                let th = rng.random_range(-1.0f64..1.0).acos();
                [th, rng.random_range(0.0..std::f64::consts::TAU)]
            })
            .collect();
        let f = eval(obs, &x);
        if top.len() < polish || f > top[top.len() - 1].0 {
            let pos = top.partition_point(|(g, _)| *g >= f);
            top.insert(pos, (f, x));
            top.truncate(polish);
        }
    }
    top.into_iter()
        .map(|(f, x)| hill_climb(obs, x, f))
        .fold(f64::NEG_INFINITY, f64::max)
}

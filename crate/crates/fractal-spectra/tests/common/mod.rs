#![allow(dead_code)]

use fractal_spectra::linalg::{c, CMat, RMat, SymMatrix, C64};
use fractal_spectra::network::ElectricalNetwork;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_complex(rng: &mut ChaCha8Rng) -> C64 {
    c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

pub fn random_sym(k: usize, rng: &mut ChaCha8Rng) -> SymMatrix {
    let m = CMat::from_fn(k, k, |_, _| random_complex(rng));
    SymMatrix::from_upper(&m)
}

pub fn random_real_sym(k: usize, rng: &mut ChaCha8Rng) -> RMat {
    let m = RMat::from_fn(k, k, |_, _| rng.gen_range(-1.0..1.0));
    (&m + m.transpose()) * 0.5
}

/// Real part arbitrary, imaginary part `A A^t + 0.05 I`.
pub fn random_siegel(k: usize, rng: &mut ChaCha8Rng) -> SymMatrix {
    let re = random_real_sym(k, rng);
    let a = RMat::from_fn(k, k, |_, _| rng.gen_range(-1.0..1.0));
    let im = &a * a.transpose() + RMat::identity(k, k) * 0.05;
    SymMatrix::from_fn(k, |i, j| c(re[(i, j)], im[(i, j)]))
}

/// Complete graph with conductances in `[0.1, 2]`, so always irreducible.
pub fn random_network(k: usize, rng: &mut ChaCha8Rng) -> ElectricalNetwork {
    let mut net = ElectricalNetwork::new(k);
    for i in 0..k {
        for j in i + 1..k {
            net.add_edge(i, j, rng.gen_range(0.1..2.0));
        }
    }
    net
}

/// Random nonempty proper subset, sorted.
pub fn random_boundary(k: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    loop {
        let b: Vec<usize> = (0..k).filter(|_| rng.gen_bool(0.5)).collect();
        if !b.is_empty() && b.len() < k {
            return b;
        }
    }
}

pub fn rel_err(a: &CMat, b: &CMat) -> f64 {
    (a - b).norm() / b.norm().max(1e-300)
}

pub fn real_vec(k: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..k).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

//! Seeded random instances for tests, benches and the acceptance suite.
//!
//! Valid observables are generated from their canonical form: a canonical
//! `K_c` (symplectic pairs, then q-axes) and a minimal-uncertainty `alpha_c`
//! plus positive noise, transported by a random symplectic map on the
//! quantum side and a random invertible map on the outcome side.

use nalgebra::DMatrix;
use rand::{Rng as _, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::linalg::{block_diag, RMat};
use crate::observable::GaussianObservable;
use crate::symplectic::standard_matrix;

/// Deterministic RNG wrapper.
pub struct Rng(ChaCha8Rng);

impl Rng {
    pub fn seed(seed: u64) -> Self {
        Rng(ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.0)
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        self.0.random_range(lo..hi)
    }

    /// Integer in `lo..=hi`.
    pub fn int(&mut self, lo: usize, hi: usize) -> usize {
        self.0.random_range(lo..=hi)
    }
}

pub fn random_matrix(rng: &mut Rng, rows: usize, cols: usize) -> RMat {
    DMatrix::from_fn(rows, cols, |_, _| rng.normal())
}

pub fn random_skew(rng: &mut Rng, m: usize) -> RMat {
    let a = random_matrix(rng, m, m);
    &a - a.transpose()
}

pub fn random_symmetric(rng: &mut Rng, m: usize) -> RMat {
    let a = random_matrix(rng, m, m);
    (&a + a.transpose()) * 0.5
}

/// Random symplectic matrix on `s` modes: Cayley transform of `eps * Delta H`.
pub fn random_symplectic(rng: &mut Rng, s: usize, eps: f64) -> RMat {
    let n = 2 * s;
    let x = standard_matrix(s) * random_symmetric(rng, n) * eps;
    let id = RMat::identity(n, n);
    let left = (&id - &x * 0.5)
        .try_inverse()
        .expect("Cayley denominator is invertible for small eps");
    left * (&id + &x * 0.5)
}

/// Raw parts of a generated valid observable with its intended block sizes.
#[derive(Debug, Clone)]
pub struct ValidParts {
    pub s: usize,
    pub k: RMat,
    pub alpha: RMat,
    /// `(s1, s2, s3)` built into the instance.
    pub blocks: (usize, usize, usize),
}

impl ValidParts {
    pub fn delta_k(&self) -> RMat {
        self.observable().delta_k()
    }

    pub fn observable(&self) -> GaussianObservable {
        GaussianObservable::new(self.s, self.k.clone(), self.alpha.clone())
            .expect("generated instances have full column rank")
    }
}

/// Random valid instance with `s <= max_s` modes and at least `min_s1`
/// symplectic pairs in the measured quadratures.
pub fn random_valid_parts(rng: &mut Rng, max_s: usize, min_s1: usize) -> ValidParts {
    let s = rng.int(min_s1.max(1), max_s);
    let s1 = rng.int(min_s1, s);
    let s2 = rng.int(0, s - s1);
    let s3 = rng.int(0, s - s1 - s2);
    let (s2, s3) = if 2 * s1 + s2 + s3 == 0 {
        (1, 0)
    } else {
        (s2, s3)
    };
    let m = 2 * s1 + s2 + s3;

    let mut kc = RMat::zeros(2 * s, m);
    for j in 0..(2 * s1) {
        kc[(j, j)] = 1.0;
    }
    for i in 0..(s2 + s3) {
        kc[(2 * (s1 + i), 2 * s1 + i)] = 1.0;
    }

    let noisy = 2 * s1 + s2;
    let rank_noise = if noisy == 0 { 0 } else { rng.int(s2, noisy) };
    let b = random_matrix(rng, noisy, rank_noise) * 0.5;
    let noise = &b * b.transpose();
    let mut alpha_c = block_diag(&[
        &(RMat::identity(2 * s1, 2 * s1) * 0.5),
        &RMat::zeros(s2 + s3, s2 + s3),
    ]);
    {
        let mut top = alpha_c.view_mut((0, 0), (noisy, noisy));
        top += &noise;
    }

    let g = loop {
        let g = RMat::identity(m, m) + random_matrix(rng, m, m) * 0.3;
        if g.determinant().abs() > 0.2 {
            break g;
        }
    };
    let sym = random_symplectic(rng, s, 0.5);
    let k = sym * kc * &g;
    let alpha = g.transpose() * alpha_c * &g;
    let alpha = (&alpha + alpha.transpose()) * 0.5;
    ValidParts {
        s,
        k,
        alpha,
        blocks: (s1, s2, s3),
    }
}

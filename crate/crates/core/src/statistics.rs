//! Gaussian states and the outcome law of a Gaussian observable.
//!
//! The outcome characteristic function is `Tr rho phi_M(w)`; for a state
//! with mean `mu` and covariance `gamma` it equals
//! `exp(i (K^t mu + l)^t w - w^t (K^t gamma K + alpha) w / 2)`.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{self, eigh, max_abs, RMat, RVec};
use crate::observable::{GaussianObservable, SYMMETRY_TOL};
use crate::symplectic::standard_matrix;

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState {
    s: usize,
    mean: RVec,
    gamma: RMat,
}

impl GaussianState {
    /// Checks shapes, symmetry and `gamma + (i/2) Delta >= -tol`.
    pub fn new(mean: RVec, gamma: RMat, tol: f64) -> Result<Self> {
        let n = mean.len();
        if n == 0 || n % 2 == 1 {
            return Err(Error::Shape {
                what: "state mean",
                expected: "2s with s >= 1".into(),
                found: n.to_string(),
            });
        }
        if gamma.shape() != (n, n) {
            return Err(Error::Shape {
                what: "gamma",
                expected: format!("{n}x{n}"),
                found: format!("{}x{}", gamma.nrows(), gamma.ncols()),
            });
        }
        let asym = linalg::asymmetry(&gamma);
        if asym > SYMMETRY_TOL * max_abs(&gamma).max(1.0) {
            return Err(Error::NotSymmetric {
                what: "gamma",
                asymmetry: asym,
            });
        }
        let gamma = linalg::symmetrize(&gamma);
        let min_eigenvalue = linalg::min_eig_uncertainty(&gamma, &standard_matrix(n / 2));
        if min_eigenvalue < -tol {
            return Err(Error::InvalidState { min_eigenvalue });
        }
        Ok(GaussianState {
            s: n / 2,
            mean,
            gamma,
        })
    }

    pub fn vacuum(s: usize) -> Self {
        GaussianState {
            s,
            mean: RVec::zeros(2 * s),
            gamma: RMat::identity(2 * s, 2 * s) * 0.5,
        }
    }

    /// Thermal state with mean photon number `nbar` in every mode.
    pub fn thermal(s: usize, nbar: f64) -> Result<Self> {
        GaussianState::new(
            RVec::zeros(2 * s),
            RMat::identity(2 * s, 2 * s) * (nbar + 0.5),
            0.0,
        )
    }

    pub fn modes(&self) -> usize {
        self.s
    }

    pub fn mean(&self) -> &RVec {
        &self.mean
    }

    pub fn gamma(&self) -> &RMat {
        &self.gamma
    }

    pub fn translated(&self, v: &RVec) -> Self {
        GaussianState {
            s: self.s,
            mean: &self.mean + v,
            gamma: self.gamma.clone(),
        }
    }
}

/// `exp(i mean^t z - z^t gamma z / 2)`.
pub fn state_characteristic_value(state: &GaussianState, z: &RVec) -> Complex64 {
    let quad = z.dot(&(&state.gamma * z));
    Complex64::new(-0.5 * quad, state.mean.dot(z)).exp()
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeDistribution {
    pub mean: RVec,
    pub covariance: RMat,
}

impl OutcomeDistribution {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn characteristic_value(&self, w: &RVec) -> Complex64 {
        let quad = w.dot(&(&self.covariance * w));
        Complex64::new(-0.5 * quad, self.mean.dot(w)).exp()
    }
}

pub fn outcome_distribution(
    obs: &GaussianObservable,
    state: &GaussianState,
) -> Result<OutcomeDistribution> {
    if obs.modes() != state.s {
        return Err(Error::Shape {
            what: "state modes",
            expected: obs.modes().to_string(),
            found: state.s.to_string(),
        });
    }
    let k = obs.k();
    let mean = k.transpose() * &state.mean + obs.offset();
    let covariance = linalg::symmetrize(&(k.transpose() * &state.gamma * k + obs.alpha()));
    Ok(OutcomeDistribution { mean, covariance })
}

/// `n` draws, one per row. Negative eigenvalues of the covariance above
/// `-tol` are treated as zero; below, `NotPsd`.
pub fn sample(dist: &OutcomeDistribution, n: usize, seed: u64, tol: f64) -> Result<RMat> {
    let m = dist.dim();
    let (vals, vecs) = eigh(&dist.covariance);
    let scale = vals.iter().fold(1.0_f64, |a, v| a.max(v.abs()));
    if let Some(&lo) = vals.first() {
        if lo < -tol * scale {
            return Err(Error::NotPsd { min_eigenvalue: lo });
        }
    }
    let root = RMat::from_fn(m, m, |r, c| vecs[(r, c)] * vals[c].max(0.0).sqrt());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = RMat::zeros(n, m);
    let mut xi = RVec::zeros(m);
    for i in 0..n {
        for x in xi.iter_mut() {
            *x = StandardNormal.sample(&mut rng);
        }
        let y = &dist.mean + &root * &xi;
        out.row_mut(i).copy_from(&y.transpose());
    }
    Ok(out)
}

/// Empirical mean and (unbiased) covariance of row samples.
pub fn sample_moments(samples: &RMat) -> (RVec, RMat) {
    let n = samples.nrows();
    let m = samples.ncols();
    let mean = RVec::from_fn(m, |j, _| samples.column(j).sum() / n as f64);
    let mut centered = samples.clone();
    for mut row in centered.row_iter_mut() {
        row -= mean.transpose();
    }
    let cov = centered.transpose() * &centered / (n.max(2) - 1) as f64;
    (mean, cov)
}

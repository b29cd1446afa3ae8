//! Gaussian observables `phi_M(w) = W(Kw) exp(i l^t w - w^t alpha w / 2)`.
//!
//! An observable measures the commuting-or-not quadrature combinations
//! `R_K = R K` with classical Gaussian noise `alpha`. Every valid observable
//! splits, after a change of outcome coordinates, into three kinds of blocks:
//! heterodyne-like (symplectic pairs, type 1), noisy homodyne (type 2) and
//! sharp homodyne (type 3). Only the last one makes the POVM density
//! unbounded.

use std::f64::consts::PI;
use std::fmt;

use crate::error::{Error, Result};
use crate::linalg::{self, max_abs, RMat, RVec};
use crate::symplectic::{extended_williamson, standard_matrix, CanonicalDecomposition};

/// Default rank and PSD tolerance.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Relative symmetry tolerance applied when an observable is constructed.
pub const SYMMETRY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianObservable {
    s: usize,
    k: RMat,
    alpha: RMat,
    l: RVec,
}

impl GaussianObservable {
    /// `K` is `2s x m`, `alpha` is `m x m` symmetric; `K` must have full
    /// column rank (see [`reduce_columns`] otherwise).
    ///
    /// The uncertainty condition is not enforced here; see [`validate`].
    pub fn new(s: usize, k: RMat, alpha: RMat) -> Result<Self> {
        if s == 0 {
            return Err(Error::EmptySystem);
        }
        let m = k.ncols();
        if k.nrows() != 2 * s || m == 0 {
            return Err(Error::Shape {
                what: "K",
                expected: format!("{}xm with m >= 1", 2 * s),
                found: format!("{}x{}", k.nrows(), k.ncols()),
            });
        }
        if alpha.shape() != (m, m) {
            return Err(Error::Shape {
                what: "alpha",
                expected: format!("{m}x{m}"),
                found: format!("{}x{}", alpha.nrows(), alpha.ncols()),
            });
        }
        let asym = linalg::asymmetry(&alpha);
        if asym > SYMMETRY_TOL * max_abs(&alpha).max(1.0) {
            return Err(Error::NotSymmetric {
                what: "alpha",
                asymmetry: asym,
            });
        }
        let sv = linalg::singular_values(&k);
        let relative = sv.last().copied().unwrap_or(0.0) / sv[0].max(f64::MIN_POSITIVE);
        if m > 2 * s || relative <= DEFAULT_TOL {
            return Err(Error::RankDeficientK {
                relative_sv: relative,
            });
        }
        Ok(GaussianObservable {
            s,
            k,
            alpha: linalg::symmetrize(&alpha),
            l: RVec::zeros(m),
        })
    }

    pub fn with_offset(mut self, l: RVec) -> Result<Self> {
        if l.len() != self.m() {
            return Err(Error::Shape {
                what: "l",
                expected: self.m().to_string(),
                found: l.len().to_string(),
            });
        }
        self.l = l;
        Ok(self)
    }

    pub fn modes(&self) -> usize {
        self.s
    }

    /// Outcome dimension.
    pub fn m(&self) -> usize {
        self.k.ncols()
    }

    pub fn k(&self) -> &RMat {
        &self.k
    }

    pub fn alpha(&self) -> &RMat {
        &self.alpha
    }

    pub fn offset(&self) -> &RVec {
        &self.l
    }

    /// Commutator matrix `K^t Delta K` of the measured combinations.
    ///
    /// Entries at the level of the rounding error of the product are set to
    /// zero, so commuting quadratures give an exactly vanishing matrix.
    pub fn delta_k(&self) -> RMat {
        let d = self.k.transpose() * standard_matrix(self.s) * &self.k;
        let k_max = max_abs(&self.k);
        let floor = 8.0 * (2 * self.s) as f64 * f64::EPSILON * k_max * k_max;
        d.map(|x| if x.abs() <= floor { 0.0 } else { x })
    }
}

/// Reduce a column-dependent `K` to a column-independent observable.
///
/// Writes `K = K_r C` with `C` of full row rank and picks `G` with
/// `C G^t = I`. The statistic `y = G z` is then distributed according to
/// the observable `(K_r, G alpha G^t)`. Returns that observable and `G`.
pub fn reduce_columns(
    s: usize,
    k: &RMat,
    alpha: &RMat,
    tol: f64,
) -> Result<(GaussianObservable, RMat)> {
    if k.nrows() != 2 * s || alpha.shape() != (k.ncols(), k.ncols()) {
        return Err(Error::Shape {
            what: "(K, alpha)",
            expected: format!("{}xm and mxm", 2 * s),
            found: format!("{:?} and {:?}", k.shape(), alpha.shape()),
        });
    }
    let r = linalg::rank(k, tol);
    let svd = k.clone().svd(true, true);
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let v_t = svd.v_t.expect("requested");
    let g = RMat::from_fn(r, k.ncols(), |i, j| v_t[(order[i], j)]);
    let reduced = GaussianObservable::new(s, k * g.transpose(), &g * alpha * g.transpose())?;
    Ok((reduced, g))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidityReport {
    pub valid: bool,
    /// Smallest eigenvalue of the Hermitian matrix `alpha + (i/2) Delta_K`.
    pub min_eigenvalue: f64,
    pub message: String,
}

/// Check the uncertainty condition `alpha >= +-(i/2) K^t Delta K`.
pub fn validate(obs: &GaussianObservable, tol: f64) -> ValidityReport {
    let min_eigenvalue = linalg::min_eig_uncertainty(&obs.alpha, &obs.delta_k());
    let valid = min_eigenvalue >= -tol;
    let message = if valid {
        format!("valid: min eigenvalue {min_eigenvalue:.6e} >= -{tol:e}")
    } else {
        format!("invalid: min eigenvalue {min_eigenvalue:.6e} violates alpha >= (i/2) Delta_K")
    };
    ValidityReport {
        valid,
        min_eigenvalue,
        message,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Type1Subtype {
    /// `alpha + (i/2) Delta_K` nondegenerate on the block (thermal-like noise).
    A,
    /// Maximally degenerate: pure state, vacuum-limited heterodyne.
    B,
    /// Some but not all Williamson values equal to 1/2.
    Intermediate,
}

impl fmt::Display for Type1Subtype {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Type1Subtype::A => write!(f, "1a"),
            Type1Subtype::B => write!(f, "1b"),
            Type1Subtype::Intermediate => write!(f, "1a/1b"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Type1Block {
    /// Number of modes `s1`.
    pub modes: usize,
    pub subtype: Type1Subtype,
    pub a: Vec<f64>,
    /// Covariance of the block state in the canonical basis of the block.
    pub beta: RMat,
    /// `|det T| (2 pi)^{s1 - m}`; the block contributes `prefactor * rho_beta`.
    pub prefactor: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Type2Block {
    pub dim: usize,
    /// Noise matrix of the block in canonical coordinates (`I/2`).
    pub alpha_block: RMat,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Type3Block {
    pub dim: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Classification {
    pub decomposition: CanonicalDecomposition,
    pub type1: Option<Type1Block>,
    pub type2: Option<Type2Block>,
    pub type3: Option<Type3Block>,
    pub bounded: bool,
}

impl Classification {
    /// Human-readable label, e.g. `Type 1b`, `Type 1a + Type 3`.
    pub fn label(&self) -> String {
        let mut parts = Vec::new();
        if let Some(t1) = &self.type1 {
            parts.push(format!("Type {}", t1.subtype));
        }
        if self.type2.is_some() {
            parts.push("Type 2".to_string());
        }
        if self.type3.is_some() {
            parts.push("Type 3".to_string());
        }
        parts.join(" + ")
    }

    pub fn is_pure(&self) -> bool {
        [
            self.type1.is_some(),
            self.type2.is_some(),
            self.type3.is_some(),
        ]
        .iter()
        .filter(|&&x| x)
        .count()
            == 1
    }
}

/// Split a valid observable into its type 1 / 2 / 3 blocks.
pub fn classify(obs: &GaussianObservable, tol: f64) -> Result<Classification> {
    let dec = extended_williamson(&obs.alpha, &obs.delta_k(), tol)?;
    let m = obs.m() as i32;
    let type1 = (dec.s1 > 0).then(|| {
        let top = dec.a[0] + 0.5;
        let degenerate = dec.a.iter().filter(|&&a| a - 0.5 <= tol * top).count();
        let subtype = match degenerate {
            0 => Type1Subtype::A,
            d if d == dec.s1 => Type1Subtype::B,
            _ => Type1Subtype::Intermediate,
        };
        let beta = dec
            .alpha_form()
            .view((0, 0), (dec.r_delta, dec.r_delta))
            .into_owned();
        Type1Block {
            modes: dec.s1,
            subtype,
            a: dec.a.clone(),
            beta,
            prefactor: dec.t.determinant().abs() * (2.0 * PI).powi(dec.s1 as i32 - m),
        }
    });
    let type2 = (dec.s2 > 0).then(|| Type2Block {
        dim: dec.s2,
        alpha_block: RMat::identity(dec.s2, dec.s2) * 0.5,
    });
    let type3 = (dec.s3 > 0).then_some(Type3Block { dim: dec.s3 });
    let bounded = dec.s3 == 0;
    Ok(Classification {
        decomposition: dec,
        type1,
        type2,
        type3,
        bounded,
    })
}

/// Whether the POVM has a bounded operator-valued density: `det alpha != 0`
/// under the rank tolerance.
pub fn is_bounded_density(obs: &GaussianObservable, tol: f64) -> bool {
    linalg::rank(&obs.alpha, tol) == obs.m()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DensityNorm {
    Finite(f64),
    Unbounded,
}

impl DensityNorm {
    pub fn value(&self) -> Option<f64> {
        match self {
            DensityNorm::Finite(x) => Some(*x),
            DensityNorm::Unbounded => None,
        }
    }
}

/// Operator norm of the covariant core `m(0)`.
///
/// In canonical coordinates `m(0) = |det T| (2 pi)^{-m}` times a product of
/// commuting factors: `(2 pi)^{s1} rho_a` for the symplectic block (norm
/// `prod 1/(a_j + 1/2)`), `(4 pi)^{s2/2} exp(-|X|^2)` for the noisy block
/// (norm `(4 pi)^{s2/2}`), and a delta form for the sharp block.
pub fn density_norm(obs: &GaussianObservable, tol: f64) -> Result<DensityNorm> {
    let c = classify(obs, tol)?;
    Ok(norm_from_classification(&c, obs.m()))
}

pub fn norm_from_classification(c: &Classification, m: usize) -> DensityNorm {
    let dec = &c.decomposition;
    if dec.s3 > 0 {
        return DensityNorm::Unbounded;
    }
    let det_t = dec.t.determinant().abs();
    let gaussian_peak = dec.a.iter().map(|a| 1.0 / (a + 0.5)).product::<f64>();
    let norm = det_t
        * (2.0 * PI).powi(dec.s1 as i32 - m as i32)
        * (4.0 * PI).powf(dec.s2 as f64 / 2.0)
        * gaussian_peak;
    DensityNorm::Finite(norm)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Type1Core {
    /// `|det K_1| / (2 pi)^s`.
    pub prefactor: f64,
    /// `(K^{-1})^t alpha K^{-1}`.
    pub beta: RMat,
}

/// `m(0) = prefactor * rho_beta` for an observable of pure type 1
/// (`m = 2s`, `Delta_K` nondegenerate).
pub fn core_type1(obs: &GaussianObservable, tol: f64) -> Result<Type1Core> {
    let m = obs.m();
    if m != 2 * obs.s || linalg::rank(&obs.delta_k(), tol) != m {
        return Err(Error::WrongType {
            expected: "pure type 1 (m = 2s, Delta_K nondegenerate)",
            found: format!(
                "m = {m}, s = {}, rank Delta_K = {}",
                obs.s,
                linalg::rank(&obs.delta_k(), tol)
            ),
        });
    }
    let k_inv = obs
        .k
        .clone()
        .try_inverse()
        .ok_or(Error::RankDeficientK { relative_sv: 0.0 })?;
    let beta = linalg::symmetrize(&(k_inv.transpose() * &obs.alpha * &k_inv));
    let k1 = k1_matrix(obs);
    let prefactor = k1.determinant().abs() / (2.0 * PI).powi(obs.s as i32);
    Ok(Type1Core { prefactor, beta })
}

/// `K_1 = Delta^{-1} K (K^t K)^{-1}`.
pub fn k1_matrix(obs: &GaussianObservable) -> RMat {
    let delta_inv = -standard_matrix(obs.s);
    let gram_inv = (obs.k.transpose() * &obs.k)
        .try_inverse()
        .expect("K has full column rank");
    delta_inv * &obs.k * gram_inv
}

/// Displacement `K_1 z` carrying `m(0)` to `m(z) = W(K_1 z) m(0) W(K_1 z)^*`.
pub fn covariant_core_shift(obs: &GaussianObservable, z: &RVec) -> Result<RVec> {
    if z.len() != obs.m() {
        return Err(Error::Shape {
            what: "outcome point",
            expected: obs.m().to_string(),
            found: z.len().to_string(),
        });
    }
    Ok(k1_matrix(obs) * z)
}

fn homodyne_k(s: usize) -> RMat {
    let mut k = RMat::zeros(2 * s, s);
    for j in 0..s {
        k[(2 * j, j)] = 1.0;
    }
    k
}

/// Noiseless position measurement of all `s` modes.
pub fn sharp_homodyne(s: usize) -> Result<GaussianObservable> {
    GaussianObservable::new(s, homodyne_k(s), RMat::zeros(s, s))
}

/// Position measurement of all modes with Gaussian noise covariance `noise`.
pub fn noisy_homodyne(s: usize, noise: RMat) -> Result<GaussianObservable> {
    let obs = GaussianObservable::new(s, homodyne_k(s), noise)?;
    let (vals, _) = linalg::eigh(&obs.alpha);
    if let Some(&min) = vals.first() {
        if min < -DEFAULT_TOL {
            return Err(Error::Invalid {
                min_eigenvalue: min,
            });
        }
    }
    Ok(obs)
}

/// Joint `(q_j, p_j)` measurement with vacuum noise.
pub fn heterodyne_vacuum(s: usize) -> Result<GaussianObservable> {
    GaussianObservable::new(
        s,
        RMat::identity(2 * s, 2 * s),
        RMat::identity(2 * s, 2 * s) * 0.5,
    )
}

/// Joint `(q_j, p_j)` measurement with thermal noise of occupation `n_j`.
pub fn heterodyne_thermal(s: usize, occupations: &[f64]) -> Result<GaussianObservable> {
    if occupations.len() != s {
        return Err(Error::Shape {
            what: "occupation numbers",
            expected: s.to_string(),
            found: occupations.len().to_string(),
        });
    }
    if let Some(&n) = occupations.iter().find(|&&n| n.is_nan() || n < 0.0) {
        return Err(Error::Invalid { min_eigenvalue: n });
    }
    let diag = RVec::from_iterator(2 * s, occupations.iter().flat_map(|&n| [n + 0.5, n + 0.5]));
    GaussianObservable::new(s, RMat::identity(2 * s, 2 * s), RMat::from_diagonal(&diag))
}

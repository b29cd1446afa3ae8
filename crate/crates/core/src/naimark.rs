//! Minimal Naimark extension of a Gaussian observable.
//!
//! The ancilla lives on `Z_C = Z_1hat + Z_2hat`, a symplectic subspace of
//! the system phase space spanned by the images `K T e_j` of the first two
//! canonical blocks and the isotropic partners of the noisy block. It has
//! `s_C = r_alpha - r_delta/2` modes. With the involution `Lambda`
//! (`e -> e`, `h -> -h`) and the projection `P` onto `K(Z_1) + K(Z_2)`, the
//! components of `X = R_A K (x) I + I (x) R_C Lambda P K` commute and the
//! ancilla state with covariance `alpha_C` reproduces the noise `alpha`.
//!
//! The projection-valued measure of `X` is never built; the construction is
//! certified through matrix identities and characteristic functions.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, max_abs, RMat, RVec};
use crate::observable::GaussianObservable;
use crate::symplectic::{
    concat_columns, extended_williamson, isotropic_partner, standard_matrix, symplectic_complement,
    CanonicalDecomposition, SubspaceBasis, SymplecticForm,
};

#[derive(Debug, Clone, PartialEq)]
pub struct NaimarkExtension {
    /// Ancilla mode count `s_C`.
    pub s_c: usize,
    /// Canonical basis `(e_1, h_1, ..., e_sC, h_sC)` of `Z_C`, as columns in `R^{2s}`.
    pub zc_basis: RMat,
    /// Restriction of the system form to `Z_C` in that basis.
    pub delta_c: RMat,
    /// Ancilla covariance `diag(a_1, a_1, ..., 1/2, 1/2)`.
    pub alpha_c: RMat,
    /// `diag(1, -1, ..., 1, -1)`.
    pub lambda: RMat,
    /// `2 s_C x 2s`: projection of `Z_A` onto `K(Z_1) + K(Z_2)`, in `Z_C` coordinates.
    pub p: RMat,
    /// Partners of the noisy block, `[K(Z_2)]'`.
    pub partner_z2: RMat,
    /// Canonical basis of `Z_3hat = K(Z_3) + [K(Z_3)]'`.
    pub z3_basis: RMat,
    /// Basis of the remaining symplectic complement `Z_4hat`.
    pub z4_basis: RMat,
    pub hybrid_quantum_modes: usize,
    pub hybrid_classical_dims: usize,
    pub decomposition: CanonicalDecomposition,
}

impl NaimarkExtension {
    /// `Lambda P K`, the map from outcome-space frequencies to ancilla phase space.
    pub fn ancilla_map(&self, obs: &GaussianObservable) -> RMat {
        &self.lambda * &self.p * obs.k()
    }
}

/// Build the minimal extension.
pub fn extend(obs: &GaussianObservable, tol: f64) -> Result<NaimarkExtension> {
    let s = obs.modes();
    let delta = SymplecticForm::standard(s)?;
    let dec = extended_williamson(obs.alpha(), &obs.delta_k(), tol)?;
    let (s1, s2, s3) = (dec.s1, dec.s2, dec.s3);
    let s_c = s1 + s2;
    let kt = obs.k() * &dec.t;

    let block1 = kt.columns(0, 2 * s1).into_owned();
    let e2 = kt.columns(2 * s1, s2).into_owned();
    let f3 = kt.columns(dec.r_alpha, s3).into_owned();

    let z1 = SubspaceBasis::new(block1.clone(), tol)?;
    let isotropic = SubspaceBasis::new(concat_columns(&[&e2, &f3]), tol)?;
    let partners = isotropic_partner(&isotropic, &z1, &delta, tol)?;
    let h2 = partners.matrix().columns(0, s2).into_owned();
    let g3 = partners.matrix().columns(s2, s3).into_owned();

    let mut zc = RMat::zeros(2 * s, 2 * s_c);
    zc.columns_mut(0, 2 * s1).copy_from(&block1);
    for i in 0..s2 {
        zc.set_column(2 * (s1 + i), &e2.column(i));
        zc.set_column(2 * (s1 + i) + 1, &h2.column(i));
    }
    let mut z3 = RMat::zeros(2 * s, 2 * s3);
    for k in 0..s3 {
        z3.set_column(2 * k, &f3.column(k));
        z3.set_column(2 * k + 1, &g3.column(k));
    }
    let occupied = SubspaceBasis::new(concat_columns(&[&zc, &z3]), tol)?;
    let z4 = symplectic_complement(&occupied, &delta, tol)?
        .matrix()
        .clone();

    // P = E F^{-1}: F is a basis of Z_A adapted to the decomposition, E keeps
    // the coordinates of every e and of the block-1 h.
    let full = concat_columns(&[&zc, &z3, &z4]);
    let full_inv = full.clone().try_inverse().ok_or(Error::Residual {
        what: "adapted basis of Z_A",
        residual: f64::INFINITY,
        tol,
    })?;
    let mut keep = RMat::zeros(2 * s_c, 2 * s);
    for c in 0..(2 * s_c) {
        let dropped = c >= 2 * s1 && c % 2 == 1;
        if !dropped {
            keep[(c, c)] = 1.0;
        }
    }
    let p = keep * full_inv;

    let delta_c = zc.transpose() * delta.matrix() * &zc;
    let mut lambda = RMat::zeros(2 * s_c, 2 * s_c);
    let mut alpha_c = RMat::zeros(2 * s_c, 2 * s_c);
    for j in 0..s_c {
        lambda[(2 * j, 2 * j)] = 1.0;
        lambda[(2 * j + 1, 2 * j + 1)] = -1.0;
        let a = if j < s1 { dec.a[j] } else { 0.5 };
        alpha_c[(2 * j, 2 * j)] = a;
        alpha_c[(2 * j + 1, 2 * j + 1)] = a;
    }

    Ok(NaimarkExtension {
        s_c,
        zc_basis: zc,
        delta_c,
        alpha_c,
        lambda,
        p,
        partner_z2: h2,
        z3_basis: z3,
        z4_basis: z4,
        hybrid_quantum_modes: s1,
        hybrid_classical_dims: s2,
        decomposition: dec,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Residuals {
    /// `|K^t P^t Lambda alpha_C Lambda P K - alpha|`.
    pub proj_residual: f64,
    /// `|K^t P^t Lambda Delta_C Lambda P K + Delta_K|`.
    pub com_residual: f64,
    /// `max(|Lambda^2 - I|, |Lambda Delta_C Lambda + Delta_C|)`.
    pub involution_residual: f64,
    /// Smallest eigenvalue of `alpha_C + (i/2) Delta_C`.
    pub state_validity_min_eig: f64,
    /// Commutator matrix of the components of `X`, from the system form and
    /// the standard ancilla form.
    pub commuting_x_residual: f64,
    /// `|Delta_C - standard form|`: the `Z_C` basis is canonical.
    pub zc_symplectic_residual: f64,
    /// `P` is the identity on kept vectors and vanishes on
    /// `[K(Z_2)]' + Z_3hat + Z_4hat`.
    pub projection_residual: f64,
}

impl Residuals {
    pub fn max_matrix_residual(&self) -> f64 {
        [
            self.proj_residual,
            self.com_residual,
            self.involution_residual,
            self.commuting_x_residual,
            self.zc_symplectic_residual,
            self.projection_residual,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

pub fn verify(ext: &NaimarkExtension, obs: &GaussianObservable) -> Residuals {
    let n = 2 * ext.s_c;
    let lpk = ext.ancilla_map(obs);
    let proj = lpk.transpose() * &ext.alpha_c * &lpk;
    let proj_residual = max_abs(&(proj - obs.alpha()));
    let com = lpk.transpose() * &ext.delta_c * &lpk;
    let delta_k = obs.delta_k();
    let com_residual = max_abs(&(&com + &delta_k));
    let id = RMat::identity(n, n);
    let involution_residual = max_abs(&(&ext.lambda * &ext.lambda - &id)).max(max_abs(
        &(&ext.lambda * &ext.delta_c * &ext.lambda + &ext.delta_c),
    ));
    let state_validity_min_eig = linalg::min_eig_uncertainty(&ext.alpha_c, &ext.delta_c);

    let s = obs.modes();
    let system = obs.k().transpose() * standard_matrix(s) * obs.k();
    let ancilla = lpk.transpose() * standard_matrix(ext.s_c) * &lpk;
    let commuting_x_residual = max_abs(&(system + ancilla));
    let zc_symplectic_residual = max_abs(&(&ext.delta_c - standard_matrix(ext.s_c)));

    let s1 = ext.decomposition.s1;
    let mut kept_image = RMat::zeros(n, n);
    for c in 0..n {
        if !(c >= 2 * s1 && c % 2 == 1) {
            kept_image[(c, c)] = 1.0;
        }
    }
    let on_zc = max_abs(&(&ext.p * &ext.zc_basis - kept_image));
    let kernel = concat_columns(&[&ext.partner_z2, &ext.z3_basis, &ext.z4_basis]);
    let on_kernel = if kernel.ncols() > 0 && n > 0 {
        max_abs(&(&ext.p * kernel))
    } else {
        0.0
    };
    Residuals {
        proj_residual,
        com_residual,
        involution_residual,
        state_validity_min_eig,
        commuting_x_residual,
        zc_symplectic_residual,
        projection_residual: on_zc.max(on_kernel),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CharacteristicPair {
    /// Ancilla trace of the dilated characteristic function (scalar part).
    pub lhs: Complex64,
    /// Scalar part of the observable's characteristic function.
    pub rhs: Complex64,
}

impl CharacteristicPair {
    pub fn residual(&self) -> f64 {
        (self.lhs - self.rhs).norm()
    }
}

/// Compare `Tr_C (I (x) rho_C) W_A(Kw) W_C(Lambda P K w)` with `phi_M(w)`.
///
/// Both sides carry the same operator factor `W_A(Kw)`; what is compared is
/// the scalar left after tracing out the ancilla,
/// `exp(i l^t w - |Lambda P K w|^2_{alpha_C} / 2)`, against
/// `exp(i l^t w - w^t alpha w / 2)`.
pub fn characteristic_check(
    ext: &NaimarkExtension,
    obs: &GaussianObservable,
    w: &RVec,
) -> Result<CharacteristicPair> {
    if w.len() != obs.m() {
        return Err(Error::Shape {
            what: "frequency w",
            expected: obs.m().to_string(),
            found: w.len().to_string(),
        });
    }
    let phase = Complex64::new(0.0, obs.offset().dot(w)).exp();
    let anc = ext.ancilla_map(obs) * w;
    let lhs_q = anc.dot(&(&ext.alpha_c * &anc));
    let rhs_q = w.dot(&(obs.alpha() * w));
    Ok(CharacteristicPair {
        lhs: phase * (-0.5 * lhs_q).exp(),
        rhs: phase * (-0.5 * rhs_q).exp(),
    })
}

/// Ancilla size when a hybrid quantum-classical ancilla is allowed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HybridDims {
    /// `r_delta / 2`.
    pub quantum_modes: usize,
    /// `r_alpha - r_delta / 2`, the count stated alongside the hybrid construction.
    pub classical_dims_stated: usize,
    /// `s2 = r_alpha - r_delta`, the dimension of `K(Z_2)`.
    pub classical_dims_block: usize,
}

impl HybridDims {
    pub fn counts_differ(&self) -> bool {
        self.classical_dims_stated != self.classical_dims_block
    }
}

pub fn hybrid_ancilla_dims(obs: &GaussianObservable, tol: f64) -> Result<HybridDims> {
    let dec = extended_williamson(obs.alpha(), &obs.delta_k(), tol)?;
    Ok(HybridDims {
        quantum_modes: dec.s1,
        classical_dims_stated: dec.r_alpha - dec.s1,
        classical_dims_block: dec.s2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::observable::{heterodyne_vacuum, noisy_homodyne, sharp_homodyne, DEFAULT_TOL};
    use crate::testkit::{random_valid_parts, Rng};

    #[test]
    fn heterodyne_vacuum_dilation() {
        let obs = heterodyne_vacuum(1).unwrap();
        let ext = extend(&obs, DEFAULT_TOL).unwrap();
        assert_eq!(ext.s_c, 1);
        assert!(max_abs(&(&ext.alpha_c - RMat::identity(2, 2) * 0.5)) < 1e-14);
        assert_eq!(
            ext.lambda,
            RMat::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0])
        );
        assert!(max_abs(&(&ext.p - RMat::identity(2, 2))) < 1e-12);
        let r = verify(&ext, &obs);
        assert!(r.proj_residual < 1e-12 && r.com_residual < 1e-12);
        assert!(r.state_validity_min_eig.abs() < 1e-12);
    }

    #[test]
    fn sharp_homodyne_needs_no_ancilla() {
        let obs = sharp_homodyne(1).unwrap();
        let ext = extend(&obs, DEFAULT_TOL).unwrap();
        assert_eq!(ext.s_c, 0);
        let r = verify(&ext, &obs);
        assert_eq!(r.max_matrix_residual(), 0.0);
        assert_eq!(r.state_validity_min_eig, 0.0);
    }

    #[test]
    fn noisy_homodyne_vacuum_ancilla() {
        let obs = noisy_homodyne(1, RMat::from_element(1, 1, 0.5)).unwrap();
        let ext = extend(&obs, DEFAULT_TOL).unwrap();
        assert_eq!(ext.s_c, 1);
        let lpk = ext.ancilla_map(&obs);
        let proj = lpk.transpose() * &ext.alpha_c * &lpk;
        assert!((proj[(0, 0)] - 0.5).abs() < 1e-12);
        let r = verify(&ext, &obs);
        assert!(r.max_matrix_residual() < 1e-12);
    }

    #[test]
    fn flipped_lambda_breaks_commutation() {
        let obs = heterodyne_vacuum(1).unwrap();
        let mut ext = extend(&obs, DEFAULT_TOL).unwrap();
        ext.lambda[(0, 0)] = -1.0;
        assert!(verify(&ext, &obs).com_residual > 0.1);
    }

    #[test]
    fn random_extensions_verify() {
        let mut rng = Rng::seed(77);
        for _ in 0..60 {
            let parts = random_valid_parts(&mut rng, 4, 0);
            let obs = parts.observable();
            let ext = extend(&obs, DEFAULT_TOL).unwrap();
            let dec = &ext.decomposition;
            assert_eq!(ext.s_c, dec.r_alpha - dec.r_delta / 2);
            let r = verify(&ext, &obs);
            assert!(r.max_matrix_residual() < 1e-9, "{r:?}");
            assert!(r.state_validity_min_eig >= -1e-10);
            for _ in 0..5 {
                let w = RVec::from_fn(obs.m(), |_, _| rng.normal());
                assert!(characteristic_check(&ext, &obs, &w).unwrap().residual() < 1e-10);
            }
        }
    }

    #[test]
    fn characteristic_examples() {
        let obs = heterodyne_vacuum(1).unwrap();
        let ext = extend(&obs, DEFAULT_TOL).unwrap();
        let at0 = characteristic_check(&ext, &obs, &RVec::zeros(2)).unwrap();
        assert_eq!(at0.lhs, Complex64::new(1.0, 0.0));
        assert_eq!(at0.rhs, Complex64::new(1.0, 0.0));
        let w = RVec::from_column_slice(&[1.0, 0.0]);
        let pair = characteristic_check(&ext, &obs, &w).unwrap();
        let expected = (-0.25f64).exp();
        assert!((pair.lhs.re - expected).abs() < 1e-14);
        assert!((pair.rhs.re - expected).abs() < 1e-14);
    }

    #[test]
    fn hybrid_examples() {
        let h = hybrid_ancilla_dims(&heterodyne_vacuum(1).unwrap(), DEFAULT_TOL).unwrap();
        assert_eq!(
            (
                h.quantum_modes,
                h.classical_dims_stated,
                h.classical_dims_block
            ),
            (1, 1, 0)
        );
        assert!(h.counts_differ());
        let h = hybrid_ancilla_dims(
            &noisy_homodyne(1, RMat::from_element(1, 1, 0.5)).unwrap(),
            DEFAULT_TOL,
        )
        .unwrap();
        assert_eq!(
            (
                h.quantum_modes,
                h.classical_dims_stated,
                h.classical_dims_block
            ),
            (0, 1, 1)
        );
        let h = hybrid_ancilla_dims(&sharp_homodyne(1).unwrap(), DEFAULT_TOL).unwrap();
        assert_eq!(
            (
                h.quantum_modes,
                h.classical_dims_stated,
                h.classical_dims_block
            ),
            (0, 0, 0)
        );
    }
}

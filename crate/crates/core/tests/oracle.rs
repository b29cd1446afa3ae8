use std::f64::consts::PI;

use gaussobs::fock::{
    density_matrix_at, gaussian_state_matrix, observable_cf_matrix, trace_product, weyl_matrix,
    FockOperator, Grid,
};
use gaussobs::linalg::eigh_c;
use gaussobs::observable::{
    density_norm, heterodyne_thermal, heterodyne_vacuum, k1_matrix, noisy_homodyne, DEFAULT_TOL,
};
use gaussobs::statistics::{outcome_distribution, GaussianState};
use gaussobs::testkit::{random_symplectic, Rng};
use gaussobs::{CMat, GaussianObservable, RMat, RVec};
use num_complex::Complex64;

fn oracle_norm(obs: &GaussianObservable, cutoff: usize) -> f64 {
    density_matrix_at(obs, &RVec::zeros(obs.m()), cutoff, Grid::Auto)
        .unwrap()
        .op
        .largest_eigenvalue()
}

#[test]
fn type2_norms_match_oracle() {
    for sigma2 in [0.25, 0.5, 1.3] {
        let obs = noisy_homodyne(1, RMat::from_element(1, 1, sigma2)).unwrap();
        let analytic = density_norm(&obs, DEFAULT_TOL).unwrap().value().unwrap();
        assert!((analytic - 1.0 / (2.0 * PI * sigma2).sqrt()).abs() < 1e-12);
        let oracle = oracle_norm(&obs, 30);
        assert!(
            (oracle - analytic).abs() < 1e-3 * analytic,
            "{sigma2}: {oracle} vs {analytic}"
        );
    }
}

#[test]
fn type1_norms_match_oracle() {
    for n in [0.0, 0.4, 1.5] {
        let obs = heterodyne_thermal(1, &[n]).unwrap();
        let analytic = density_norm(&obs, DEFAULT_TOL).unwrap().value().unwrap();
        assert!((analytic - 1.0 / (2.0 * PI * (n + 1.0))).abs() < 1e-12);
        let oracle = oracle_norm(&obs, 30);
        assert!(
            (oracle - analytic).abs() < 1e-3 * analytic,
            "{n}: {oracle} vs {analytic}"
        );
    }
}

#[test]
fn transported_heterodyne_norm_matches_oracle() {
    let mut rng = Rng::seed(11);
    for _ in 0..2 {
        let sym = random_symplectic(&mut rng, 1, 0.4);
        let scale = 1.3;
        let obs = GaussianObservable::new(
            1,
            &sym * scale,
            sym.transpose() * &sym * (0.5 * scale * scale),
        )
        .unwrap();
        let analytic = density_norm(&obs, DEFAULT_TOL).unwrap().value().unwrap();
        let expected = 1.0 / (2.0 * PI * obs.k().determinant().abs());
        assert!((analytic - expected).abs() < 1e-10 * expected);
        let oracle = oracle_norm(&obs, 30);
        assert!(
            (oracle - analytic).abs() < 2e-3 * analytic,
            "{oracle} vs {analytic}"
        );
    }
}

fn low_block_diff(a: &CMat, b: &CMat, k: usize, cutoff: usize) -> f64 {
    FockOperator {
        modes: 1,
        cutoff,
        matrix: a - b,
        warnings: vec![],
    }
    .lower_block_max(k)
}

#[test]
fn covariance_property_on_low_block() {
    for cutoff in [30, 40] {
        for obs in [
            heterodyne_thermal(1, &[0.3]).unwrap(),
            noisy_homodyne(1, RMat::from_element(1, 1, 0.5)).unwrap(),
        ] {
            let m0 = density_matrix_at(&obs, &RVec::zeros(obs.m()), cutoff, Grid::Auto)
                .unwrap()
                .op;
            let k1 = k1_matrix(&obs);
            let z = RVec::from_fn(obs.m(), |i, _| 0.6 - 0.5 * i as f64);
            let mz = density_matrix_at(&obs, &z, cutoff, Grid::Auto).unwrap().op;
            let w = weyl_matrix(&(&k1 * &z), cutoff).unwrap().matrix;
            let moved = &w * &m0.matrix * w.adjoint();
            let diff = low_block_diff(&mz.matrix, &moved, cutoff / 2, cutoff);
            assert!(diff < 1e-3);
        }
    }
}

#[test]
fn outcome_characteristic_function_matches_trace() {
    let state = GaussianState::new(
        RVec::from_column_slice(&[0.4, -0.2]),
        RMat::from_row_slice(2, 2, &[0.8, 0.1, 0.1, 0.5]),
        1e-10,
    )
    .unwrap();
    let rho = gaussian_state_matrix(&state, 40).unwrap();
    let obs = heterodyne_thermal(1, &[0.2])
        .unwrap()
        .with_offset(RVec::from_column_slice(&[0.3, 0.0]))
        .unwrap();
    let dist = outcome_distribution(&obs, &state).unwrap();
    for w in [[0.0, 0.0], [0.5, -0.7], [-1.0, 0.3], [1.1, 1.0]] {
        let w = RVec::from_column_slice(&w);
        let phi = observable_cf_matrix(&obs, &w, 40).unwrap();
        let lhs = trace_product(&rho, &phi);
        assert!((lhs - dist.characteristic_value(&w)).norm() < 1e-6);
    }
}

#[test]
fn characteristic_function_is_positive_definite() {
    let mut rng = Rng::seed(21);
    let obs = heterodyne_vacuum(1).unwrap();
    let ws: Vec<RVec> = (0..6)
        .map(|_| RVec::from_fn(2, |_, _| rng.normal()))
        .collect();
    let d = 31;
    let psis: Vec<CMat> = (0..3)
        .map(|_| {
            let v = CMat::from_fn(d, 1, |r, _| {
                let damp = (-(r as f64) / 4.0).exp();
                Complex64::new(rng.normal() * damp, rng.normal() * damp)
            });
            let n = v.norm();
            v / Complex64::new(n, 0.0)
        })
        .collect();
    let n = ws.len() * psis.len();
    let mut gram = CMat::zeros(n, n);
    for (a, wa) in ws.iter().enumerate() {
        for (b, wb) in ws.iter().enumerate() {
            let phi = observable_cf_matrix(&obs, &(wa - wb), 30).unwrap().matrix;
            for (i, pi) in psis.iter().enumerate() {
                for (j, pj) in psis.iter().enumerate() {
                    gram[(a * psis.len() + i, b * psis.len() + j)] =
                        (pi.adjoint() * &phi * pj)[(0, 0)];
                }
            }
        }
    }
    let (vals, _) = eigh_c(&gram);
    assert!(vals[0] > -1e-8, "{}", vals[0]);
}

//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test -p gaussobs-cli --test acceptance`.

use std::f64::consts::PI;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use gaussobs::fock::{
    density_matrix_at, gaussian_state_matrix, observable_cf_matrix, trace_product, weyl_matrix,
    Grid,
};
use gaussobs::linalg::{max_abs, rank, singular_values};
use gaussobs::naimark::{characteristic_check, extend, verify};
use gaussobs::observable::{
    density_norm, heterodyne_thermal, heterodyne_vacuum, k1_matrix, noisy_homodyne, sharp_homodyne,
    validate, GaussianObservable, DEFAULT_TOL,
};
use gaussobs::statistics::{outcome_distribution, sample, sample_moments, GaussianState};
use gaussobs::symplectic::extended_williamson;
use gaussobs::testkit::{random_symplectic, random_valid_parts, Rng, ValidParts};
use gaussobs::{CMat, RMat, RVec};

const SUITE_SIZE: usize = 200;
const SUITE_SEED: u64 = 20240611;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn suite(min_s1: usize, seed: u64) -> Vec<ValidParts> {
    let mut rng = Rng::seed(seed);
    (0..SUITE_SIZE)
        .map(|_| random_valid_parts(&mut rng, 4, min_s1))
        .collect()
}

/// Rank of `Delta_K` measured against the scale of `K^t K`, independent of
/// the decomposition code.
fn rank_delta(obs: &GaussianObservable) -> usize {
    let d = obs.delta_k();
    let k_scale = singular_values(obs.k())[0].powi(2);
    singular_values(&d)
        .iter()
        .filter(|&&s| s > 1e-9 * k_scale)
        .count()
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let parts = suite(1, SUITE_SEED);
    let mut valid_ok = 0;
    let mut invalid_ok = 0;
    for p in &parts {
        let obs = p.observable();
        if validate(&obs, DEFAULT_TOL).valid {
            valid_ok += 1;
        }
        let dec =
            extended_williamson(obs.alpha(), &obs.delta_k(), DEFAULT_TOL).expect("valid instance");
        let amax = dec.a.iter().cloned().fold(0.0, f64::max);
        let scaled = GaussianObservable::new(
            obs.modes(),
            obs.k().clone(),
            obs.alpha() * (0.49 / (2.0 * amax)),
        )
        .expect("same K");
        if !validate(&scaled, DEFAULT_TOL).valid {
            invalid_ok += 1;
        }
    }
    let elapsed = start.elapsed();
    let max_m = parts.iter().map(|p| p.k.ncols()).max().unwrap_or(0);
    let pass = valid_ok == SUITE_SIZE
        && invalid_ok == SUITE_SIZE
        && elapsed < Duration::from_secs(5)
        && max_m <= 8;
    outcome(
        pass,
        format!(
            "{valid_ok}/{SUITE_SIZE} valid accepted, {invalid_ok}/{SUITE_SIZE} scaled rejected, max m {max_m}, {:.2}s",
            elapsed.as_secs_f64()
        ),
    )
}

fn criterion_2() -> Outcome {
    let mut worst = 0.0_f64;
    let mut min_a = f64::INFINITY;
    let mut dims_ok = 0;
    let mut scale_ok = 0;
    let parts = suite(0, SUITE_SEED + 1);
    for p in &parts {
        let obs = p.observable();
        let dk = obs.delta_k();
        let dec = extended_williamson(obs.alpha(), &dk, DEFAULT_TOL).expect("valid instance");
        let (ra, rd) = dec.residuals(obs.alpha(), &dk);
        worst = worst.max(ra).max(rd);
        min_a = dec.a.iter().cloned().fold(min_a, f64::min);
        if 2 * dec.s1 + dec.s2 + dec.s3 == obs.m()
            && 2 * dec.s1 == rank_delta(&obs)
            && (dec.s1, dec.s2, dec.s3) == p.blocks
        {
            dims_ok += 1;
        }
        let same = [0.1, 10.0].iter().all(|&c| {
            let d = extended_williamson(&(obs.alpha() * c), &(&dk * c), DEFAULT_TOL)
                .expect("scaled pair is valid");
            (d.s1, d.s2, d.s3) == (dec.s1, dec.s2, dec.s3)
        });
        if same {
            scale_ok += 1;
        }
    }
    let pass =
        worst < 1e-9 && min_a >= 0.5 - 1e-10 && dims_ok == SUITE_SIZE && scale_ok == SUITE_SIZE;
    outcome(
        pass,
        format!(
            "max residual {worst:.2e}, min a_j {min_a:.12}, dims {dims_ok}/{SUITE_SIZE}, scale-invariant {scale_ok}/{SUITE_SIZE}"
        ),
    )
}

fn criterion_3() -> Outcome {
    let mut rng = Rng::seed(SUITE_SEED + 2);
    let parts = suite(0, SUITE_SEED + 3);
    let mut count_ok = 0;
    let mut worst = 0.0_f64;
    let mut min_eig = f64::INFINITY;
    let mut cf_worst = 0.0_f64;
    for p in &parts {
        let obs = p.observable();
        let ext = extend(&obs, DEFAULT_TOL).expect("valid instance");
        let r_alpha = rank(obs.alpha(), 1e-9);
        if ext.s_c == r_alpha - rank_delta(&obs) / 2 {
            count_ok += 1;
        }
        let r = verify(&ext, &obs);
        worst = worst
            .max(r.proj_residual)
            .max(r.com_residual)
            .max(r.involution_residual);
        min_eig = min_eig.min(r.state_validity_min_eig);
        for _ in 0..25 {
            let w = RVec::from_fn(obs.m(), |_, _| rng.normal());
            cf_worst = cf_worst.max(
                characteristic_check(&ext, &obs, &w)
                    .expect("shape")
                    .residual(),
            );
        }
    }
    let het = heterodyne_vacuum(1).unwrap();
    let ext = extend(&het, DEFAULT_TOL).unwrap();
    let known = ext.s_c == 1
        && max_abs(&(&ext.alpha_c - RMat::identity(2, 2) * 0.5)) < 1e-12
        && ext.lambda == RMat::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
    let pass =
        count_ok == SUITE_SIZE && worst < 1e-9 && min_eig >= -1e-10 && cf_worst < 1e-10 && known;
    outcome(
        pass,
        format!(
            "s_C count {count_ok}/{SUITE_SIZE}, max residual {worst:.2e}, min ancilla eig {min_eig:.2e}, max cf residual {cf_worst:.2e}, heterodyne dilation {known}"
        ),
    )
}

fn top_eig(obs: &GaussianObservable, cutoff: usize) -> f64 {
    density_matrix_at(obs, &RVec::zeros(obs.m()), cutoff, Grid::Auto)
        .expect("oracle runs")
        .op
        .largest_eigenvalue()
}

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let noisy = noisy_homodyne(1, RMat::from_element(1, 1, 0.5)).unwrap();
    let (a20, a40) = (top_eig(&noisy, 20), top_eig(&noisy, 40));
    let change = (a40 - a20).abs() / a20;
    let target = 1.0 / PI.sqrt();
    let bounded_ok = change < 1e-3 && (a40 - target).abs() < 1e-3;
    let sharp = sharp_homodyne(1).unwrap();
    let (p10, p20, p40) = (
        top_eig(&sharp, 10),
        top_eig(&sharp, 20),
        top_eig(&sharp, 40),
    );
    let growth = p40 / p10;
    let elapsed = start.elapsed();
    let pass =
        bounded_ok && growth > 1.5 && p10 < p20 && p20 < p40 && elapsed < Duration::from_secs(60);
    outcome(
        pass,
        format!(
            "noisy homodyne {a20:.6} (N=20) {a40:.6} (N=40) vs 1/sqrt(pi) {target:.6}, sharp probe {p10:.3} -> {p20:.3} -> {p40:.3} (x{growth:.2}), {:.1}s",
            elapsed.as_secs_f64()
        ),
    )
}

fn criterion_5() -> Outcome {
    let het = heterodyne_vacuum(1).unwrap();
    let closed = density_norm(&het, DEFAULT_TOL).unwrap().value().unwrap();
    let exact = 1.0 / (2.0 * PI);
    let het_oracle = top_eig(&het, 40);
    let het_ok = (closed - exact).abs() < 1e-12 && (het_oracle - exact).abs() < 1e-3 * exact;

    let sigma2 = 0.5;
    let noisy = noisy_homodyne(1, RMat::from_element(1, 1, sigma2)).unwrap();
    let oracle = top_eig(&noisy, 40);
    let (m, s) = (1.0_f64, 1.0_f64);
    let derived = (2.0 * PI).powf(-m / 2.0) / sigma2.sqrt();
    let alternative = 1.0 / ((2.0 * PI).powf(s) * sigma2.sqrt());
    let analytic = density_norm(&noisy, DEFAULT_TOL).unwrap().value().unwrap();
    let derived_ok =
        (oracle - derived).abs() < 1e-3 * derived && (analytic - derived).abs() < 1e-12;
    let alternative_rejected = (oracle - alternative).abs() > 1e-3 * alternative;
    outcome(
        het_ok && derived_ok && alternative_rejected,
        format!(
            "heterodyne closed {closed:.12} oracle {het_oracle:.6}; type 2 oracle {oracle:.6}, (2pi)^(-m/2) det^(-1/2) = {derived:.6} accepted, (2pi)^(-s) det^(-1/2) = {alternative:.6} rejected"
        ),
    )
}

fn lower_block_norm(diff: &CMat, k: usize) -> f64 {
    let block = diff.view((0, 0), (k, k)).into_owned();
    block.singular_values().max()
}

fn criterion_6() -> Outcome {
    let cutoff = 40;
    let mut rng = Rng::seed(SUITE_SEED + 6);
    let sym = random_symplectic(&mut rng, 1, 0.4);
    let transported =
        GaussianObservable::new(1, sym.clone(), sym.transpose() * &sym * 0.7).unwrap();
    let instances = [
        ("heterodyne vacuum", heterodyne_vacuum(1).unwrap()),
        ("heterodyne thermal", heterodyne_thermal(1, &[0.5]).unwrap()),
        (
            "noisy homodyne",
            noisy_homodyne(1, RMat::from_element(1, 1, 0.5)).unwrap(),
        ),
        ("transported type 1a", transported),
    ];
    let mut worst = 0.0_f64;
    let mut worst_full = 0.0_f64;
    for (_, obs) in &instances {
        let m0 = density_matrix_at(obs, &RVec::zeros(obs.m()), cutoff, Grid::Auto)
            .unwrap()
            .op;
        let k1 = k1_matrix(obs);
        for t in [-1.0, -0.5, 0.0, 0.5, 1.0] {
            let z = RVec::from_fn(obs.m(), |i, _| if i == 0 { t } else { -0.6 * t });
            let mz = density_matrix_at(obs, &z, cutoff, Grid::Auto).unwrap().op;
            let w = weyl_matrix(&(&k1 * &z), cutoff).unwrap().matrix;
            let diff = &mz.matrix - &w * &m0.matrix * w.adjoint();
            worst = worst.max(lower_block_norm(&diff, cutoff / 2));
            worst_full = worst_full.max(lower_block_norm(&diff, cutoff + 1));
        }
    }
    outcome(
        worst < 1e-3,
        format!(
            "max operator-norm defect {worst:.2e} on photon numbers < {} at N={cutoff} (full truncated space {worst_full:.2e}), 4 instances x 5 points",
            cutoff / 2
        ),
    )
}

fn criterion_7() -> Outcome {
    let vac = GaussianState::vacuum(1);
    let het = heterodyne_vacuum(1).unwrap();
    let d = outcome_distribution(&het, &vac).unwrap();
    let standard = d.mean.amax() == 0.0 && max_abs(&(&d.covariance - RMat::identity(2, 2))) < 1e-15;

    let state = GaussianState::new(
        RVec::from_column_slice(&[0.3, -0.4]),
        RMat::from_row_slice(2, 2, &[0.7, 0.15, 0.15, 0.45]),
        1e-10,
    )
    .unwrap();
    let rho_vac = gaussian_state_matrix(&vac, 40).unwrap();
    let rho = gaussian_state_matrix(&state, 40).unwrap();
    let mut cf_worst = 0.0_f64;
    for obs in [
        heterodyne_vacuum(1).unwrap(),
        noisy_homodyne(1, RMat::from_element(1, 1, 0.5)).unwrap(),
        sharp_homodyne(1).unwrap(),
    ] {
        for (st, r) in [(&vac, &rho_vac), (&state, &rho)] {
            let dist = outcome_distribution(&obs, st).unwrap();
            for i in 0..5 {
                for j in 0..5 {
                    let w = if obs.m() == 2 {
                        RVec::from_column_slice(&[-1.0 + 0.5 * i as f64, -1.0 + 0.5 * j as f64])
                    } else {
                        RVec::from_element(1, -1.5 + 0.125 * (5 * i + j) as f64)
                    };
                    let phi = observable_cf_matrix(&obs, &w, 40).unwrap();
                    cf_worst = cf_worst
                        .max((trace_product(r, &phi) - dist.characteristic_value(&w)).norm());
                }
            }
        }
    }

    let n = 100_000;
    let x = sample(&d, n, SUITE_SEED, 1e-10).unwrap();
    let (mean, cov) = sample_moments(&x);
    let nf = n as f64;
    let mut worst_se = 0.0_f64;
    for i in 0..2 {
        let se = (d.covariance[(i, i)] / nf).sqrt();
        worst_se = worst_se.max((mean[i] - d.mean[i]).abs() / se);
        for j in 0..2 {
            let c = &d.covariance;
            let se = ((c[(i, i)] * c[(j, j)] + c[(i, j)].powi(2)) / nf).sqrt();
            worst_se = worst_se.max((cov[(i, j)] - c[(i, j)]).abs() / se);
        }
    }
    outcome(
        standard && cf_worst < 1e-5 && worst_se < 3.0,
        format!(
            "N(0, I) {standard}, max cf difference {cf_worst:.2e} over 3 observables x 2 states x 25 points, sample moments within {worst_se:.2} standard errors"
        ),
    )
}

fn criterion_8() -> Outcome {
    let dir: PathBuf = [env!("CARGO_MANIFEST_DIR"), "fixtures"].iter().collect();
    let bin = env!("CARGO_BIN_EXE_gaussobs");
    let mut stable = 0;
    let mut total = 0;
    let mut failures = Vec::new();
    for name in [
        "heterodyne_vacuum",
        "heterodyne_thermal",
        "noisy_homodyne",
        "sharp_homodyne",
    ] {
        let file = dir.join(format!("{name}.json"));
        let file = file.to_str().unwrap();
        for cmd in [
            "validate",
            "classify",
            "naimark",
            "distribution",
            "sample",
            "oracle-check",
        ] {
            total += 1;
            let go = || {
                std::process::Command::new(bin)
                    .args([
                        cmd, file, "--json", "--cutoff", "10", "--n", "20", "--seed", "7",
                    ])
                    .output()
                    .expect("binary runs")
            };
            let (a, b) = (go(), go());
            let ok = a.status.code() == Some(0)
                && a.status == b.status
                && a.stdout == b.stdout
                && serde_json::from_slice::<serde_json::Value>(&a.stdout).is_ok();
            if ok {
                stable += 1;
            } else {
                failures.push(format!("{cmd} {name}"));
            }
        }
    }
    outcome(
        stable == total,
        format!(
            "{stable}/{total} byte-stable --json runs{}",
            if failures.is_empty() {
                String::new()
            } else {
                format!(" (failed: {})", failures.join(", "))
            }
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("validity gate", criterion_1),
        ("extended Williamson", criterion_2),
        ("Naimark extension", criterion_3),
        ("boundedness", criterion_4),
        ("norm formulas", criterion_5),
        ("covariance property", criterion_6),
        ("outcome statistics", criterion_7),
        ("CLI", criterion_8),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let o = f();
        let tag = if o.pass { "PASS" } else { "FAIL" };
        if !o.pass {
            failed += 1;
        }
        println!("{tag} criterion {} ({name}): {}", i + 1, o.detail);
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}

//! Command implementations.

use std::path::Path;

use gaussobs::fock::{
    density_matrix_at, gaussian_state_matrix, observable_cf_matrix, trace_product, Grid, MAX_CUTOFF,
};
use gaussobs::naimark::{characteristic_check, extend, hybrid_ancilla_dims, verify};
use gaussobs::observable::{
    classify, heterodyne_thermal, heterodyne_vacuum, noisy_homodyne, norm_from_classification,
    sharp_homodyne, validate, DensityNorm,
};
use gaussobs::statistics::{outcome_distribution, sample, sample_moments, GaussianState};
use gaussobs::testkit::Rng;
use gaussobs::{Error, GaussianObservable, RMat, RVec};
use serde_json::{json, Value};

use crate::format::{read_text, FormatError, ObservableFile, StateFile};
use crate::{Cli, Command, Report, EXIT_INVALID, EXIT_OK, EXIT_USAGE};

/// Naimark residuals above this are reported as failures.
pub const NAIMARK_TOL: f64 = 1e-9;
/// Relative change between cutoffs `N` and `2N` accepted by the oracle.
pub const ORACLE_CONVERGENCE_TOL: f64 = 1e-3;
/// Growth of the largest eigenvalue from `N` to `2N` taken as divergence.
pub const DIVERGENCE_RATIO: f64 = 1.25;
/// Agreement of analytic and oracle characteristic functions.
pub const ORACLE_CF_TOL: f64 = 1e-5;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl From<FormatError> for Failure {
    fn from(e: FormatError) -> Self {
        Failure {
            code: EXIT_USAGE,
            message: e.to_string(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Invalid { .. } | Error::InvalidState { .. } => EXIT_INVALID,
            _ => EXIT_USAGE,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

type CmdResult = Result<Report, Failure>;

/// Shortest decimal that reads back within 1e-10 relative, for human output.
pub fn num(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let a = x.abs();
    if !(1e-4..1e6).contains(&a) {
        return format!("{x:.6e}");
    }
    let s = format!("{x:.10}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

fn row_major(m: &RMat) -> Vec<f64> {
    m.transpose().iter().copied().collect()
}

fn vec_of(v: &RVec) -> Vec<f64> {
    v.iter().copied().collect()
}

fn fmt_vec(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|&x| num(x)).collect();
    format!("[{}]", parts.join(", "))
}

struct Loaded {
    obs: GaussianObservable,
    input: Value,
}

fn load_observable(path: &Path) -> Result<Loaded, Failure> {
    let (text, digest) = read_text(path)?;
    let file = ObservableFile::parse(&text, &path.display().to_string())?;
    let obs = file.to_observable()?;
    Ok(Loaded {
        obs,
        input: json!({
            "path": path.display().to_string(),
            "sha256": digest,
            "label": file.label,
            "s": file.s,
            "m": file.m,
        }),
    })
}

fn load_state(cli: &Cli, s: usize) -> Result<(GaussianState, Value), Failure> {
    match &cli.state {
        None => Ok((GaussianState::vacuum(s), json!("vacuum"))),
        Some(path) => {
            let (text, digest) = read_text(path)?;
            let file = StateFile::parse(&text, &path.display().to_string())?;
            if file.s != s {
                return Err(Failure {
                    code: EXIT_USAGE,
                    message: format!(
                        "schema error in field `s`: state has {} modes, observable has {s}",
                        file.s
                    ),
                });
            }
            let state = file.to_state(cli.tol)?;
            Ok((
                state,
                json!({ "path": path.display().to_string(), "sha256": digest, "label": file.label }),
            ))
        }
    }
}

fn report(input: Value, result: Value, lines: Vec<String>, code: u8) -> Report {
    Report {
        result,
        lines,
        code,
        input,
        extra_tolerances: json!({}),
    }
}

/// Validity report, or an early exit-2 report when invalid.
fn gate(loaded: &Loaded, tol: f64) -> Result<Value, Report> {
    let v = validate(&loaded.obs, tol);
    let value = json!({ "valid": v.valid, "min_eigenvalue": v.min_eigenvalue });
    if v.valid {
        Ok(value)
    } else {
        Err(report(
            loaded.input.clone(),
            json!({ "validity": value }),
            vec![format!(
                "invalid: min eigenvalue {} (alpha + (i/2) Delta_K must be positive semidefinite)",
                num(v.min_eigenvalue)
            )],
            EXIT_INVALID,
        ))
    }
}

pub fn dispatch(cli: &Cli) -> CmdResult {
    match &cli.command {
        Command::Validate { file } => cmd_validate(cli, file),
        Command::Classify { file } => cmd_classify(cli, file),
        Command::Naimark { file } => cmd_naimark(cli, file),
        Command::Distribution { file } => cmd_distribution(cli, file),
        Command::Sample { file } => cmd_sample(cli, file),
        Command::OracleCheck { file } => cmd_oracle(cli, file),
        Command::Prototypes { dir } => cmd_prototypes(dir.as_deref()),
    }
}

fn cmd_validate(cli: &Cli, path: &Path) -> CmdResult {
    let loaded = load_observable(path)?;
    let v = validate(&loaded.obs, cli.tol);
    let line = if v.valid {
        format!("valid: min eigenvalue {}", num(v.min_eigenvalue))
    } else {
        format!(
            "invalid: min eigenvalue {} (alpha + (i/2) Delta_K must be positive semidefinite)",
            num(v.min_eigenvalue)
        )
    };
    Ok(report(
        loaded.input,
        json!({ "validity": { "valid": v.valid, "min_eigenvalue": v.min_eigenvalue } }),
        vec![line],
        if v.valid { EXIT_OK } else { EXIT_INVALID },
    ))
}

fn norm_value(n: DensityNorm) -> Value {
    match n {
        DensityNorm::Finite(x) => json!(x),
        DensityNorm::Unbounded => json!("unbounded"),
    }
}

fn cmd_classify(cli: &Cli, path: &Path) -> CmdResult {
    let loaded = load_observable(path)?;
    let validity = match gate(&loaded, cli.tol) {
        Ok(v) => v,
        Err(r) => return Ok(r),
    };
    let c = classify(&loaded.obs, cli.tol)?;
    let dec = &c.decomposition;
    let norm = norm_from_classification(&c, loaded.obs.m());
    let type1 = c.type1.as_ref().map(|t| {
        json!({
            "modes": t.modes,
            "subtype": t.subtype.to_string(),
            "williamson_values": t.a,
            "prefactor": t.prefactor,
        })
    });
    let result = json!({
        "validity": validity,
        "label": c.label(),
        "blocks": { "s1": dec.s1, "s2": dec.s2, "s3": dec.s3 },
        "rank_alpha": dec.r_alpha,
        "rank_delta_k": dec.r_delta,
        "type1": type1,
        "type2_dim": c.type2.as_ref().map(|t| t.dim),
        "type3_dim": c.type3.as_ref().map(|t| t.dim),
        "bounded": c.bounded,
        "density_norm": norm_value(norm),
        "warnings": dec.warnings,
    });
    let norm_text = match norm {
        DensityNorm::Finite(x) => num(x),
        DensityNorm::Unbounded => "unbounded".into(),
    };
    let mut lines = vec![format!(
        "{}, s1={}, s2={}, s3={}, bounded={}, norm={}",
        c.label(),
        dec.s1,
        dec.s2,
        dec.s3,
        c.bounded,
        norm_text
    )];
    if !dec.a.is_empty() {
        lines.push(format!("williamson values: {}", fmt_vec(&dec.a)));
    }
    for w in &dec.warnings {
        lines.push(format!("warning: {w}"));
    }
    Ok(report(loaded.input, result, lines, EXIT_OK))
}

fn cmd_naimark(cli: &Cli, path: &Path) -> CmdResult {
    let loaded = load_observable(path)?;
    let validity = match gate(&loaded, cli.tol) {
        Ok(v) => v,
        Err(r) => return Ok(r),
    };
    let obs = &loaded.obs;
    let ext = extend(obs, cli.tol)?;
    let r = verify(&ext, obs);
    let hybrid = hybrid_ancilla_dims(obs, cli.tol)?;
    let mut rng = Rng::seed(cli.seed);
    let mut cf_max = 0.0_f64;
    for _ in 0..25 {
        let w = RVec::from_fn(obs.m(), |_, _| rng.normal());
        cf_max = cf_max.max(characteristic_check(&ext, obs, &w)?.residual());
    }
    let passed = r.max_matrix_residual() < NAIMARK_TOL && r.state_validity_min_eig >= -cli.tol;
    let diag = |m: &RMat| -> Vec<f64> { m.diagonal().iter().copied().collect() };
    let result = json!({
        "validity": validity,
        "s_c": ext.s_c,
        "alpha_c_diagonal": diag(&ext.alpha_c),
        "lambda_diagonal": diag(&ext.lambda),
        "residuals": {
            "proj_residual": r.proj_residual,
            "com_residual": r.com_residual,
            "involution_residual": r.involution_residual,
            "commuting_x_residual": r.commuting_x_residual,
            "zc_symplectic_residual": r.zc_symplectic_residual,
            "projection_residual": r.projection_residual,
            "state_validity_min_eig": r.state_validity_min_eig,
            "characteristic_max_residual": cf_max,
        },
        "hybrid": {
            "quantum_modes": hybrid.quantum_modes,
            "classical_dims_stated": hybrid.classical_dims_stated,
            "classical_dims_block": hybrid.classical_dims_block,
            "counts_differ": hybrid.counts_differ(),
        },
        "verified": passed,
    });
    let lines = vec![
        format!("s_C = {} (quantum ancilla modes)", ext.s_c),
        format!("alpha_C diagonal: {}", fmt_vec(&diag(&ext.alpha_c))),
        format!(
            "proj_residual = {}, com_residual = {}, involution_residual = {}",
            num(r.proj_residual),
            num(r.com_residual),
            num(r.involution_residual)
        ),
        format!(
            "ancilla state min eigenvalue = {}, characteristic-function residual = {}",
            num(r.state_validity_min_eig),
            num(cf_max)
        ),
        format!(
            "hybrid ancilla: {} quantum modes, {} classical dimensions ({} from the noisy block)",
            hybrid.quantum_modes, hybrid.classical_dims_stated, hybrid.classical_dims_block
        ),
        format!("verified: {passed}"),
    ];
    let mut rep = report(
        loaded.input,
        result,
        lines,
        if passed { EXIT_OK } else { EXIT_USAGE },
    );
    rep.extra_tolerances = json!({ "naimark_residual": NAIMARK_TOL });
    Ok(rep)
}

fn cmd_distribution(cli: &Cli, path: &Path) -> CmdResult {
    let loaded = load_observable(path)?;
    let validity = match gate(&loaded, cli.tol) {
        Ok(v) => v,
        Err(r) => return Ok(r),
    };
    let (state, state_info) = load_state(cli, loaded.obs.modes())?;
    let d = outcome_distribution(&loaded.obs, &state)?;
    let result = json!({
        "validity": validity,
        "state": state_info,
        "mean": vec_of(&d.mean),
        "covariance": row_major(&d.covariance),
    });
    let mut lines = vec![format!("mean: {}", fmt_vec(&vec_of(&d.mean)))];
    lines.push("covariance:".into());
    for row in d.covariance.row_iter() {
        let v: Vec<f64> = row.iter().copied().collect();
        lines.push(format!("  {}", fmt_vec(&v)));
    }
    Ok(report(loaded.input, result, lines, EXIT_OK))
}

fn cmd_sample(cli: &Cli, path: &Path) -> CmdResult {
    let loaded = load_observable(path)?;
    let validity = match gate(&loaded, cli.tol) {
        Ok(v) => v,
        Err(r) => return Ok(r),
    };
    let (state, state_info) = load_state(cli, loaded.obs.modes())?;
    let d = outcome_distribution(&loaded.obs, &state)?;
    let x = sample(&d, cli.n, cli.seed, cli.tol)?;
    let rows: Vec<Vec<f64>> = x.row_iter().map(|r| r.iter().copied().collect()).collect();
    let (mean, cov) = if cli.n >= 2 {
        let (m, c) = sample_moments(&x);
        (json!(vec_of(&m)), json!(row_major(&c)))
    } else {
        (Value::Null, Value::Null)
    };
    let result = json!({
        "validity": validity,
        "state": state_info,
        "n": cli.n,
        "seed": cli.seed,
        "samples": rows,
        "empirical_mean": mean,
        "empirical_covariance": cov,
    });
    let lines = rows.iter().map(|r| fmt_vec(r)).collect();
    Ok(report(loaded.input, result, lines, EXIT_OK))
}

fn cmd_oracle(cli: &Cli, path: &Path) -> CmdResult {
    let loaded = load_observable(path)?;
    let validity = match gate(&loaded, cli.tol) {
        Ok(v) => v,
        Err(r) => return Ok(r),
    };
    let obs = &loaded.obs;
    if obs.modes() != 1 || obs.m() > 2 {
        return Err(Failure {
            code: EXIT_USAGE,
            message: format!(
                "oracle-check supports s = 1 and m <= 2, got s = {}, m = {}",
                obs.modes(),
                obs.m()
            ),
        });
    }
    let n = cli.cutoff;
    if n < 2 || 2 * n > MAX_CUTOFF {
        return Err(Failure {
            code: EXIT_USAGE,
            message: format!(
                "--cutoff must be in 2..={} (the check also runs at twice the cutoff)",
                MAX_CUTOFF / 2
            ),
        });
    }
    let c = classify(obs, cli.tol)?;
    let norm = norm_from_classification(&c, obs.m());
    let z0 = RVec::zeros(obs.m());
    let at = |cut: usize| -> Result<f64, Failure> {
        Ok(density_matrix_at(obs, &z0, cut, Grid::Auto)?
            .op
            .largest_eigenvalue())
    };
    let (lo, hi) = (at(n)?, at(2 * n)?);
    let (norm_json, ok_norm, norm_line) = match norm {
        DensityNorm::Finite(x) => {
            let change = (hi - lo).abs() / lo.abs();
            let agreement = (hi - x).abs() / x;
            let ok = change < ORACLE_CONVERGENCE_TOL && agreement < ORACLE_CONVERGENCE_TOL;
            (
                json!({
                    "analytic": x,
                    "oracle_at_cutoff": lo,
                    "oracle_at_double_cutoff": hi,
                    "relative_change": change,
                    "relative_error": agreement,
                    "accepted": ok,
                }),
                ok,
                format!(
                    "density norm: analytic {} oracle {} (N={n}) {} (N={}), accepted={ok}",
                    num(x),
                    num(lo),
                    num(hi),
                    2 * n
                ),
            )
        }
        DensityNorm::Unbounded => {
            let ratio = hi / lo;
            let ok = ratio > DIVERGENCE_RATIO;
            (
                json!({
                    "analytic": "unbounded",
                    "probe_at_cutoff": lo,
                    "probe_at_double_cutoff": hi,
                    "growth_ratio": ratio,
                    "divergence_signature": ok,
                }),
                ok,
                format!(
                    "density unbounded: probe {} (N={n}) {} (N={}), growth ratio {}",
                    num(lo),
                    num(hi),
                    2 * n,
                    num(ratio)
                ),
            )
        }
    };

    let (state, state_info) = load_state(cli, 1)?;
    let rho = gaussian_state_matrix(&state, 2 * n)?;
    let d = outcome_distribution(obs, &state)?;
    let mut cf_max = 0.0_f64;
    let grid: Vec<f64> = (0..5).map(|i| -1.0 + 0.5 * i as f64).collect();
    let points: Vec<RVec> = if obs.m() == 1 {
        (0..25)
            .map(|i| RVec::from_element(1, -1.5 + 0.125 * i as f64))
            .collect()
    } else {
        grid.iter()
            .flat_map(|&a| grid.iter().map(move |&b| RVec::from_column_slice(&[a, b])))
            .collect()
    };
    for w in &points {
        let phi = observable_cf_matrix(obs, w, 2 * n)?;
        let diff = (trace_product(&rho, &phi) - d.characteristic_value(w)).norm();
        cf_max = cf_max.max(diff);
    }
    let ok_cf = cf_max < ORACLE_CF_TOL;
    let passed = ok_norm && ok_cf;
    let result = json!({
        "validity": validity,
        "classification": c.label(),
        "density": norm_json,
        "characteristic_function": {
            "state": state_info,
            "points": points.len(),
            "max_abs_difference": cf_max,
            "accepted": ok_cf,
        },
        "passed": passed,
    });
    let lines = vec![
        format!("{} (cutoffs {n}, {})", c.label(), 2 * n),
        norm_line,
        format!(
            "characteristic function: max difference {} over {} points, accepted={ok_cf}",
            num(cf_max),
            points.len()
        ),
        format!("passed: {passed}"),
    ];
    let mut rep = report(
        loaded.input,
        result,
        lines,
        if passed { EXIT_OK } else { EXIT_USAGE },
    );
    rep.extra_tolerances = json!({
        "cutoffs": [n, 2 * n],
        "convergence_relative": ORACLE_CONVERGENCE_TOL,
        "divergence_ratio": DIVERGENCE_RATIO,
        "characteristic_function_abs": ORACLE_CF_TOL,
    });
    Ok(rep)
}

/// The four shipped prototype observables.
pub fn prototype_files() -> Vec<(&'static str, ObservableFile)> {
    let files = [
        (
            "heterodyne_vacuum",
            heterodyne_vacuum(1),
            "heterodyne, vacuum noise (type 1b)",
        ),
        (
            "heterodyne_thermal",
            heterodyne_thermal(1, &[1.0]),
            "heterodyne, thermal noise n = 1 (type 1a)",
        ),
        (
            "noisy_homodyne",
            noisy_homodyne(1, RMat::from_element(1, 1, 0.5)),
            "position with Gaussian noise sigma^2 = 1/2 (type 2)",
        ),
        (
            "sharp_homodyne",
            sharp_homodyne(1),
            "noiseless position (type 3)",
        ),
    ];
    files
        .into_iter()
        .map(|(name, obs, label)| {
            (
                name,
                ObservableFile::from_observable(&obs.expect("prototype is well formed"), label),
            )
        })
        .collect()
}

fn cmd_prototypes(dir: Option<&Path>) -> CmdResult {
    let files = prototype_files();
    let mut result = serde_json::Map::new();
    let mut lines = Vec::new();
    for (name, file) in &files {
        let fname = format!("{name}.json");
        if let Some(dir) = dir {
            let path = dir.join(&fname);
            std::fs::write(&path, file.to_json() + "\n").map_err(|e| Failure {
                code: EXIT_USAGE,
                message: format!("cannot write {}: {e}", path.display()),
            })?;
            lines.push(format!("wrote {}", path.display()));
        } else {
            lines.push(format!("{fname}: {}", file.label));
        }
        result.insert(
            name.to_string(),
            serde_json::to_value(file).expect("plain data"),
        );
    }
    let input = json!({ "dir": dir.map(|d| d.display().to_string()) });
    Ok(report(input, Value::Object(result), lines, EXIT_OK))
}

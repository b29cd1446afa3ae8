//! Truncated Fock-space oracle for one and two modes.
//!
//! A cutoff `N` keeps photon numbers `0..=N`, so a single mode has dimension
//! `N + 1`. Two Weyl operator constructions are offered:
//!
//! * [`Truncation::Generator`]: `exp(i R_N z)` with the truncated quadratures,
//!   evaluated by functional calculus. Unitary, exact Weyl relations on the
//!   low block, and exact Gaussian spectral identities for `m(0)`.
//! * [`Truncation::Compressed`]: the exact matrix elements `<m|W(z)|n>`
//!   (closed-form Laguerre expressions), i.e. the compression of the true
//!   operator. Used for weak-sense integrals that do not converge in norm.
//!
//! The POVM density `m(z) = (2 pi)^{-m} int exp(-i z^t w) phi_M(w) d^m w` is
//! computed by tensor-product Gauss-Legendre quadrature on `[-L, L]^m`.

use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{eigh, eigh_c, kron_c, max_abs_c, CMat, RMat, RVec};
use crate::observable::GaussianObservable;
use crate::statistics::GaussianState;
use crate::symplectic::standard_matrix;

const C0: Complex64 = Complex64::new(0.0, 0.0);
const C1: Complex64 = Complex64::new(1.0, 0.0);

/// Largest supported cutoff.
pub const MAX_CUTOFF: usize = 80;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Truncation {
    Generator,
    Compressed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FockOperator {
    pub modes: usize,
    pub cutoff: usize,
    pub matrix: CMat,
    pub warnings: Vec<String>,
}

impl FockOperator {
    fn new(modes: usize, cutoff: usize, matrix: CMat) -> Self {
        FockOperator {
            modes,
            cutoff,
            matrix,
            warnings: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> Complex64 {
        self.matrix.trace()
    }

    /// Largest eigenvalue of the Hermitian part.
    pub fn largest_eigenvalue(&self) -> f64 {
        let (vals, _) = eigh_c(&self.matrix);
        vals.last().copied().unwrap_or(0.0)
    }

    pub fn smallest_eigenvalue(&self) -> f64 {
        let (vals, _) = eigh_c(&self.matrix);
        vals.first().copied().unwrap_or(0.0)
    }

    /// `|A - A^*|` (max entry).
    pub fn hermiticity_defect(&self) -> f64 {
        max_abs_c(&(&self.matrix - self.matrix.adjoint()))
    }

    /// Max entry of the leading `k x k` block (single mode) or of the block
    /// of states with every photon number below `k` (two modes).
    pub fn lower_block_max(&self, k: usize) -> f64 {
        let idx = self.low_indices(k);
        let mut out = 0.0_f64;
        for &i in &idx {
            for &j in &idx {
                out = out.max(self.matrix[(i, j)].norm());
            }
        }
        out
    }

    fn low_indices(&self, k: usize) -> Vec<usize> {
        let d = self.cutoff + 1;
        (0..self.dim())
            .filter(|&i| {
                let mut rest = i;
                (0..self.modes).all(|_| {
                    let n = rest % d;
                    rest /= d;
                    n < k
                })
            })
            .collect()
    }
}

fn check_cutoff(cutoff: usize) -> Result<()> {
    if !(2..=MAX_CUTOFF).contains(&cutoff) {
        return Err(Error::Oracle(format!(
            "cutoff must be in 2..={MAX_CUTOFF}, got {cutoff}"
        )));
    }
    Ok(())
}

fn check_modes(modes: usize) -> Result<()> {
    if !(1..=2).contains(&modes) {
        return Err(Error::Oracle(format!(
            "oracle supports 1 or 2 modes, got {modes}"
        )));
    }
    Ok(())
}

fn annihilation(d: usize) -> RMat {
    RMat::from_fn(
        d,
        d,
        |r, c| if c == r + 1 { (c as f64).sqrt() } else { 0.0 },
    )
}

fn single_quadratures(d: usize) -> (CMat, CMat) {
    let a = annihilation(d);
    let q = (&a + a.transpose()) / SQRT_2;
    let p_im = (&a - a.transpose()) / SQRT_2;
    let q = q.map(|x| Complex64::new(x, 0.0));
    // p = (a - a^dag) / (i sqrt 2)
    let p = p_im.map(|x| Complex64::new(0.0, -x));
    (q, p)
}

/// `(q_1, p_1, ..., q_s, p_s)` on the truncated space.
pub fn quadratures(modes: usize, cutoff: usize) -> Result<Vec<FockOperator>> {
    check_modes(modes)?;
    check_cutoff(cutoff)?;
    let d = cutoff + 1;
    let (q, p) = single_quadratures(d);
    let id = CMat::identity(d, d);
    let mut out = Vec::new();
    for j in 0..modes {
        for op in [&q, &p] {
            let full = if modes == 1 {
                op.clone()
            } else if j == 0 {
                kron_c(op, &id)
            } else {
                kron_c(&id, op)
            };
            out.push(FockOperator::new(modes, cutoff, full));
        }
    }
    Ok(out)
}

/// Spectral data of the truncated `q` for one mode: `q_N = U diag(x) U^t`.
#[derive(Debug, Clone)]
struct QSpectrum {
    x: Vec<f64>,
    u: RMat,
}

impl QSpectrum {
    fn new(d: usize) -> Self {
        let a = annihilation(d);
        let q = (&a + a.transpose()) / SQRT_2;
        let (x, u) = eigh(&q);
        QSpectrum { x, u }
    }

    /// `exp(i (z_q q + z_p p))` by functional calculus on the truncated generator.
    fn weyl(&self, zq: f64, zp: f64) -> CMat {
        let d = self.x.len();
        let r = zq.hypot(zp);
        let theta = zp.atan2(zq);
        let phases: Vec<Complex64> = self
            .x
            .iter()
            .map(|&x| Complex64::new(0.0, r * x).exp())
            .collect();
        CMat::from_fn(d, d, |m, n| {
            let mut acc = C0;
            for k in 0..d {
                acc += phases[k] * (self.u[(m, k)] * self.u[(n, k)]);
            }
            acc * Complex64::new(0.0, theta * (m as f64 - n as f64)).exp()
        })
    }
}

fn ln_factorial(n: usize) -> f64 {
    (1..=n).map(|k| (k as f64).ln()).sum()
}

/// Exact `<m|W(z)|n>` for `m, n <= cutoff`, with
/// `W(z) = D(beta)`, `beta = (-z_p + i z_q) / sqrt 2`.
fn weyl_compressed_single(zq: f64, zp: f64, d: usize) -> CMat {
    let beta = Complex64::new(-zp, zq) / SQRT_2;
    let x = beta.norm_sqr();
    let phi = beta.arg();
    let mut out = CMat::zeros(d, d);
    for k in 0..d {
        // g_n = sqrt(n!/(n+k)!) x^{k/2} e^{-x/2} L_n^{(k)}(x), n = 0..d-k-1
        let len = d - k;
        let mut g = vec![0.0; len];
        g[0] = if x == 0.0 {
            if k == 0 {
                1.0
            } else {
                0.0
            }
        } else {
            (0.5 * k as f64 * x.ln() - 0.5 * x - 0.5 * ln_factorial(k)).exp()
        };
        if len > 1 {
            g[1] = (1.0 + k as f64 - x) / ((1 + k) as f64).sqrt() * g[0];
        }
        for n in 2..len {
            let nf = n as f64;
            let kf = k as f64;
            let a = (2.0 * nf - 1.0 + kf - x) / nf * (nf / (nf + kf)).sqrt();
            let b = (nf - 1.0 + kf) / nf
                * (nf / (nf + kf)).sqrt()
                * ((nf - 1.0) / (nf - 1.0 + kf)).sqrt();
            g[n] = a * g[n - 1] - b * g[n - 2];
        }
        let up = Complex64::new(0.0, k as f64 * phi).exp();
        let down = if k % 2 == 0 { up.conj() } else { -up.conj() };
        for (n, &gn) in g.iter().enumerate() {
            out[(n + k, n)] = up * gn;
            if k > 0 {
                out[(n, n + k)] = down * gn;
            }
        }
    }
    out
}

fn weyl_single(zq: f64, zp: f64, d: usize, truncation: Truncation) -> CMat {
    match truncation {
        Truncation::Generator => QSpectrum::new(d).weyl(zq, zp),
        Truncation::Compressed => weyl_compressed_single(zq, zp, d),
    }
}

/// Validated region: `|z| <= 3` at `N = 40`, scaled as `sqrt(N)`.
fn validated_radius(cutoff: usize) -> f64 {
    3.0 * (cutoff as f64 / 40.0).sqrt()
}

/// `W(z) = exp(i R z)` on `s = z.len() / 2` modes, by functional calculus.
pub fn weyl_matrix(z: &RVec, cutoff: usize) -> Result<FockOperator> {
    weyl_matrix_with(z, cutoff, Truncation::Generator)
}

pub fn weyl_matrix_with(z: &RVec, cutoff: usize, truncation: Truncation) -> Result<FockOperator> {
    if z.len() % 2 == 1 {
        return Err(Error::Shape {
            what: "phase-space vector",
            expected: "even length".into(),
            found: z.len().to_string(),
        });
    }
    let modes = z.len() / 2;
    check_modes(modes)?;
    check_cutoff(cutoff)?;
    let d = cutoff + 1;
    let mut m = weyl_single(z[0], z[1], d, truncation);
    if modes == 2 {
        m = kron_c(&m, &weyl_single(z[2], z[3], d, truncation));
    }
    let mut op = FockOperator::new(modes, cutoff, m);
    if z.norm() > validated_radius(cutoff) {
        op.warnings.push(format!(
            "|z| = {:.3} outside the validated region |z| <= {:.3} for cutoff {cutoff}",
            z.norm(),
            validated_radius(cutoff)
        ));
    }
    Ok(op)
}

/// `phi_M(w) = W(K w) exp(i l^t w - w^t alpha w / 2)`.
pub fn observable_cf_matrix(
    obs: &GaussianObservable,
    w: &RVec,
    cutoff: usize,
) -> Result<FockOperator> {
    if w.len() != obs.m() {
        return Err(Error::Shape {
            what: "frequency w",
            expected: obs.m().to_string(),
            found: w.len().to_string(),
        });
    }
    let mut op = weyl_matrix(&(obs.k() * w), cutoff)?;
    let factor = Complex64::new(-0.5 * w.dot(&(obs.alpha() * w)), obs.offset().dot(w)).exp();
    op.matrix *= factor;
    Ok(op)
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Tensor-product Gauss-Legendre rule on `[-L, L]^m`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureRule {
    pub points: usize,
    pub half_width: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Grid {
    /// Window from the Gaussian decay of `alpha` (or the cutoff for the
    /// divergence probe), point count from the oscillation frequency.
    Auto,
    Fixed(QuadratureRule),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    pub op: FockOperator,
    /// `alpha` singular: a weak-sense matrix-element integral without
    /// PSD or norm-convergence guarantees.
    pub divergence_probe: bool,
    pub rule: QuadratureRule,
}

/// `e^{-w^t alpha w / 2}` drops below this at the window edge.
const GAUSSIAN_EDGE: f64 = 1e-12;

fn auto_rule(obs: &GaussianObservable, z: &RVec, cutoff: usize, probe: bool) -> QuadratureRule {
    let m = obs.m();
    let xmax = (2.0 * (cutoff + 1) as f64).sqrt();
    let k_norm = crate::linalg::singular_values(obs.k())[0];
    if probe {
        // the Fourier transform of psi_m psi_n lives in |v| <= sqrt(4N + 2)
        let v = SQRT_2 * ((4.0 * cutoff as f64 + 2.0).sqrt() + 7.0);
        let half_width = v / k_norm;
        let points = ((2.0 * v * (4.0 * cutoff as f64 + 2.0).sqrt()).ceil() as usize).max(200);
        return QuadratureRule { points, half_width };
    }
    let (vals, _) = eigh(obs.alpha());
    let lam = vals[0].max(f64::MIN_POSITIVE);
    let half_width = (-2.0 * GAUSSIAN_EDGE.ln() / lam).sqrt();
    let freq = k_norm * xmax + z.amax() + obs.offset().amax();
    let want = (0.8 * half_width * freq).ceil() as usize + 40;
    let points = if m == 1 {
        want.clamp(64, 800)
    } else {
        want.clamp(64, 160)
    };
    QuadratureRule { points, half_width }
}

/// POVM density `m(z)` for a single-mode observable with `m <= 2`.
pub fn density_matrix_at(
    obs: &GaussianObservable,
    z: &RVec,
    cutoff: usize,
    grid: Grid,
) -> Result<DensityMatrix> {
    density_matrix_with(obs, z, cutoff, grid, Truncation::Generator)
}

/// As [`density_matrix_at`] with an explicit Weyl construction for the
/// bounded case. The divergence probe always uses exact matrix elements.
pub fn density_matrix_with(
    obs: &GaussianObservable,
    z: &RVec,
    cutoff: usize,
    grid: Grid,
    truncation: Truncation,
) -> Result<DensityMatrix> {
    check_cutoff(cutoff)?;
    if obs.modes() != 1 {
        return Err(Error::Oracle("density_matrix_at supports one mode".into()));
    }
    let m = obs.m();
    if z.len() != m {
        return Err(Error::Shape {
            what: "outcome z",
            expected: m.to_string(),
            found: z.len().to_string(),
        });
    }
    let (vals, _) = eigh(obs.alpha());
    let scale = vals.last().copied().unwrap_or(0.0).abs().max(1.0);
    let probe = vals[0] <= 1e-12 * scale;
    if probe && m != 1 {
        return Err(Error::Oracle(
            "singular alpha with m = 2 is not a valid one-mode observable".into(),
        ));
    }
    let rule = match grid {
        Grid::Auto => auto_rule(obs, z, cutoff, probe),
        Grid::Fixed(r) => r,
    };
    let truncation = if probe {
        Truncation::Compressed
    } else {
        truncation
    };
    let (nodes, weights) = gauss_legendre(rule.points);
    let l = rule.half_width;
    let nodes: Vec<f64> = nodes.iter().map(|x| x * l).collect();
    let weights: Vec<f64> = weights.iter().map(|w| w * l).collect();

    // grid points w_p with coefficients c_p
    let norm = (2.0 * PI).powi(m as i32);
    let mut points: Vec<(RVec, Complex64)> = Vec::new();
    let mut idx = vec![0usize; m];
    loop {
        let w = RVec::from_fn(m, |i, _| nodes[idx[i]]);
        let wt: f64 = idx.iter().map(|&i| weights[i]).product();
        let expo = Complex64::new(
            -0.5 * w.dot(&(obs.alpha() * &w)),
            obs.offset().dot(&w) - z.dot(&w),
        );
        let c = expo.exp() * (wt / norm);
        if c.norm() > 1e-300 {
            points.push((w, c));
        }
        let mut j = 0;
        loop {
            if j == m {
                break;
            }
            idx[j] += 1;
            if idx[j] < rule.points {
                break;
            }
            idx[j] = 0;
            j += 1;
        }
        if j == m {
            break;
        }
    }

    let d = cutoff + 1;
    let matrix = match truncation {
        Truncation::Generator => {
            let spectrum = QSpectrum::new(d);
            // m_{mn} = sum_k U_mk U_nk F(m - n, k),
            // F(D, k) = sum_p c_p exp(i theta_p D + i r_p x_k)
            let width = 2 * d - 1;
            let mut f = vec![C0; width * d];
            let mut rot = vec![C0; width];
            for (w, c) in &points {
                let v = obs.k() * w;
                let r = v[0].hypot(v[1]);
                let theta = v[1].atan2(v[0]);
                let step = Complex64::new(0.0, theta).exp();
                rot[d - 1] = C1;
                for j in 1..d {
                    rot[d - 1 + j] = rot[d - 2 + j] * step;
                    rot[d - 1 - j] = rot[d - j] * step.conj();
                }
                for k in 0..d {
                    let ck = c * Complex64::new(0.0, r * spectrum.x[k]).exp();
                    for (dd, rv) in rot.iter().enumerate() {
                        f[dd * d + k] += ck * rv;
                    }
                }
            }
            CMat::from_fn(d, d, |a, b| {
                let dd = a + d - 1 - b;
                let mut acc = C0;
                for k in 0..d {
                    acc += f[dd * d + k] * (spectrum.u[(a, k)] * spectrum.u[(b, k)]);
                }
                acc
            })
        }
        Truncation::Compressed => {
            let mut acc = CMat::zeros(d, d);
            for (w, c) in &points {
                let v = obs.k() * w;
                acc += weyl_compressed_single(v[0], v[1], d) * *c;
            }
            acc
        }
    };
    let mut op = FockOperator::new(1, cutoff, matrix);
    if probe {
        op.warnings.push(format!(
            "divergence probe: alpha is singular; weak-sense window |w| <= {:.3}, no PSD guarantee",
            rule.half_width
        ));
    }
    Ok(DensityMatrix {
        op,
        divergence_probe: probe,
        rule,
    })
}

/// Density matrix of a one-mode Gaussian state, truncated to `0..=cutoff`.
///
/// Built in a padded space as `W(Delta^{-1} mu) V rho_th V^* W(Delta^{-1} mu)^*`
/// with `V = exp(-i R^t M R / 2)`, `M = Delta log sqrt(gamma / nu)`, then cut
/// to the requested block.
pub fn gaussian_state_matrix(state: &GaussianState, cutoff: usize) -> Result<FockOperator> {
    check_cutoff(cutoff)?;
    if state.modes() != 1 {
        return Err(Error::Oracle(
            "gaussian_state_matrix supports one mode".into(),
        ));
    }
    let gamma = state.gamma();
    let mu = state.mean();
    let nu = gamma.determinant().max(0.0).sqrt();
    if nu < 0.5 - 1e-12 {
        return Err(Error::InvalidState {
            min_eigenvalue: nu - 0.5,
        });
    }
    let energy = 0.5 * (gamma.trace() - 1.0) + 0.5 * mu.norm_squared();
    let pad = 60 + (8.0 * energy).ceil() as usize;
    let dp = cutoff + 1 + pad;

    let nbar = (nu - 0.5).max(0.0);
    let ratio = if nbar > 0.0 { nbar / (nbar + 1.0) } else { 0.0 };
    let thermal = CMat::from_fn(dp, dp, |r, c| {
        if r == c {
            Complex64::new(ratio.powi(r as i32) / (nbar + 1.0), 0.0)
        } else {
            C0
        }
    });

    // log of the symmetric symplectic matrix sqrt(gamma / nu)
    let (ev, evec) = eigh(&(gamma / nu));
    let log_s = &evec
        * RMat::from_diagonal(&RVec::from_iterator(2, ev.iter().map(|e| 0.5 * e.ln())))
        * evec.transpose();
    let mmat = standard_matrix(1) * log_s;
    let (q, p) = single_quadratures(dp);
    let r = [&q, &p];
    let mut h = CMat::zeros(dp, dp);
    for a in 0..2 {
        for b in 0..2 {
            h += (r[a] * r[b]) * Complex64::new(0.5 * mmat[(a, b)], 0.0);
        }
    }
    let (hv, hu) = eigh_c(&h);
    let phases = CMat::from_diagonal(&nalgebra::DVector::from_iterator(
        dp,
        hv.iter().map(|&e| Complex64::new(0.0, -e).exp()),
    ));
    let v = &hu * phases * hu.adjoint();
    let mut rho = &v * thermal * v.adjoint();

    if mu.norm() > 0.0 {
        let zeta = standard_matrix(1)
            .try_inverse()
            .expect("standard form is invertible")
            * mu;
        let w = QSpectrum::new(dp).weyl(zeta[0], zeta[1]);
        rho = &w * rho * w.adjoint();
    }
    let block = rho.view((0, 0), (cutoff + 1, cutoff + 1)).into_owned();
    let mut op = FockOperator::new(1, cutoff, block);
    let tr = op.trace().re;
    if (tr - 1.0).abs() > 1e-8 {
        op.warnings.push(format!(
            "cutoff {cutoff} too small for the state energy: trace {tr:.3e}"
        ));
    }
    Ok(op)
}

/// `Tr[rho A]` for operators of equal shape.
pub fn trace_product(rho: &FockOperator, a: &FockOperator) -> Complex64 {
    let mut acc = C0;
    for i in 0..rho.dim() {
        for j in 0..rho.dim() {
            acc += rho.matrix[(i, j)] * a.matrix[(j, i)];
        }
    }
    acc
}

/// An oracle value at cutoffs `N` and `2N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceCheck {
    pub cutoff: usize,
    pub value: f64,
    pub value_doubled: f64,
    pub relative_change: f64,
    pub accepted: bool,
}

pub const CONVERGENCE_TOL: f64 = 1e-3;

pub fn check_convergence<F>(cutoff: usize, mut f: F) -> Result<ConvergenceCheck>
where
    F: FnMut(usize) -> Result<f64>,
{
    let value = f(cutoff)?;
    let value_doubled = f(2 * cutoff)?;
    let relative_change = (value_doubled - value).abs() / value.abs().max(f64::MIN_POSITIVE);
    Ok(ConvergenceCheck {
        cutoff,
        value,
        value_doubled,
        relative_change,
        accepted: relative_change < CONVERGENCE_TOL,
    })
}

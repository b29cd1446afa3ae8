//! Linear algebra on symplectic vector spaces.
//!
//! Coordinates are interleaved, `z = (x_1, y_1, ..., x_s, y_s)`, and the
//! standard form is `Delta = diag([[0, -1], [1, 0]], ..., [[0, -1], [1, 0]])`.
//! A basis `(e_1, h_1, ..., e_k, h_k)` is called canonical when its pairing
//! matrix `B^t Delta B` is the standard form, i.e. `e_j^t Delta h_k = -delta_jk`.

use crate::error::{Error, Result};
use crate::linalg::{
    self, block_diag, eigh, max_abs, rank, rank_is_ambiguous, skew_asymmetry, skew_pairs,
    symmetrize, RMat, RVec,
};

/// The standard symplectic form on `R^{2s}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticForm {
    s: usize,
    matrix: RMat,
}

impl SymplecticForm {
    pub fn standard(s: usize) -> Result<Self> {
        if s == 0 {
            return Err(Error::EmptySystem);
        }
        Ok(SymplecticForm {
            s,
            matrix: standard_matrix(s),
        })
    }

    pub fn modes(&self) -> usize {
        self.s
    }

    pub fn dim(&self) -> usize {
        2 * self.s
    }

    pub fn matrix(&self) -> &RMat {
        &self.matrix
    }

    /// `z^t Delta z'`.
    pub fn pairing(&self, z: &RVec, zp: &RVec) -> f64 {
        (z.transpose() * &self.matrix * zp)[(0, 0)]
    }
}

/// `diag([[0,-1],[1,0]])` with `k` blocks; the 0x0 matrix for `k = 0`.
pub fn standard_matrix(k: usize) -> RMat {
    let mut d = RMat::zeros(2 * k, 2 * k);
    for j in 0..k {
        d[(2 * j, 2 * j + 1)] = -1.0;
        d[(2 * j + 1, 2 * j)] = 1.0;
    }
    d
}

/// Shorthand for [`SymplecticForm::standard`].
pub fn standard_form(s: usize) -> Result<SymplecticForm> {
    SymplecticForm::standard(s)
}

/// An ordered list of linearly independent vectors, stored as columns.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceBasis {
    ambient_dim: usize,
    vectors: RMat,
}

impl SubspaceBasis {
    pub fn new(vectors: RMat, tol: f64) -> Result<Self> {
        let k = vectors.ncols();
        if k > 0 {
            let sv = linalg::singular_values(&vectors);
            if rank(&vectors, tol) < k {
                return Err(Error::DependentVectors {
                    smallest_sv: sv.last().copied().unwrap_or(0.0),
                });
            }
        }
        Ok(SubspaceBasis {
            ambient_dim: vectors.nrows(),
            vectors,
        })
    }

    pub fn empty(ambient_dim: usize) -> Self {
        SubspaceBasis {
            ambient_dim,
            vectors: RMat::zeros(ambient_dim, 0),
        }
    }

    pub fn from_columns(cols: &[RVec], ambient_dim: usize, tol: f64) -> Result<Self> {
        if cols.is_empty() {
            return Ok(Self::empty(ambient_dim));
        }
        Self::new(RMat::from_columns(cols), tol)
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn dim(&self) -> usize {
        self.vectors.ncols()
    }

    pub fn matrix(&self) -> &RMat {
        &self.vectors
    }

    pub fn is_empty(&self) -> bool {
        self.dim() == 0
    }

    /// Whether both bases span the same subspace.
    pub fn same_span(&self, other: &SubspaceBasis, tol: f64) -> bool {
        if self.dim() != other.dim() || self.ambient_dim != other.ambient_dim {
            return false;
        }
        if self.is_empty() {
            return true;
        }
        let joined = concat_columns(&[&self.vectors, &other.vectors]);
        rank(&joined, tol) == self.dim()
    }
}

pub(crate) fn concat_columns(parts: &[&RMat]) -> RMat {
    let rows = parts.iter().map(|p| p.nrows()).max().unwrap_or(0);
    let cols: usize = parts.iter().map(|p| p.ncols()).sum();
    let mut out = RMat::zeros(rows, cols);
    let mut off = 0;
    for p in parts {
        if p.ncols() > 0 {
            out.view_mut((0, off), (rows, p.ncols())).copy_from(*p);
        }
        off += p.ncols();
    }
    out
}

/// Canonical congruence of a skew-symmetric matrix.
///
/// Returns `(S, r)` with `S^t D S = diag(Delta_{r/2}, 0)`. The rank `r`
/// counts singular values above `tol * sigma_max`.
pub fn skew_canonical(d: &RMat, tol: f64) -> Result<(RMat, usize)> {
    skew_canonical_with_scale(d, tol, 0.0)
}

/// As [`skew_canonical`], with the rank cutoff `tol * max(sigma_max, reference)`.
fn skew_canonical_with_scale(d: &RMat, tol: f64, reference: f64) -> Result<(RMat, usize)> {
    let m = d.nrows();
    if d.ncols() != m {
        return Err(Error::Shape {
            what: "skew matrix",
            expected: format!("{m}x{m}"),
            found: format!("{}x{}", d.nrows(), d.ncols()),
        });
    }
    let scale = max_abs(d).max(1.0);
    let asym = skew_asymmetry(d);
    if asym > tol * scale {
        return Err(Error::NotSkew {
            what: "D",
            asymmetry: asym,
        });
    }
    let d = (d - d.transpose()) * 0.5;
    let sigma_max = linalg::singular_values(&d).first().copied().unwrap_or(0.0);
    let pairs = if sigma_max > 0.0 {
        skew_pairs(&d, tol * sigma_max.max(reference))
    } else {
        Vec::new()
    };
    let r = 2 * pairs.len();

    let mut s = RMat::zeros(m, m);
    // largest pairs first
    for (j, p) in pairs.iter().rev().enumerate() {
        let k = p.c.sqrt();
        s.set_column(2 * j, &(&p.u / k));
        s.set_column(2 * j + 1, &(&p.v / k));
    }
    let (_, gram_vecs) = eigh(&(d.transpose() * &d));
    for j in 0..(m - r) {
        let mut v = gram_vecs.column(j).into_owned();
        normalize_sign(&mut v);
        s.set_column(r + j, &v);
    }
    Ok((s, r))
}

fn normalize_sign(v: &mut RVec) {
    let top = v.iter().fold(0.0_f64, |a, x| a.max(x.abs()));
    if let Some(x) = v.iter().find(|x| x.abs() >= top * (1.0 - 1e-9)) {
        if *x < 0.0 {
            v.neg_mut();
        }
    }
}

/// Result of the extended Williamson reduction of a pair `(alpha, Delta_K)`.
///
/// `T^t alpha T = diag(a, I/2, 0)` and `T^t Delta_K T = diag(Delta, 0, 0)`
/// with blocks of sizes `r_delta = 2 s1`, `s2 = r_alpha - r_delta` and
/// `s3 = m - r_alpha`. Within the first block `a = diag(a_j, a_j)` and
/// `Delta` is the standard form on `s1` modes.
#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalDecomposition {
    pub t: RMat,
    pub t_inv: RMat,
    pub r_delta: usize,
    pub r_alpha: usize,
    pub s1: usize,
    pub s2: usize,
    pub s3: usize,
    /// Williamson values, descending, each `>= 1/2`.
    pub a: Vec<f64>,
    /// Conditioning remarks (rank decisions close to the cutoff and the like).
    pub warnings: Vec<String>,
}

impl CanonicalDecomposition {
    pub fn m(&self) -> usize {
        self.t.nrows()
    }

    /// `diag(a_1, a_1, ..., a_s1, a_s1, 1/2 (s2 times), 0 (s3 times))`.
    pub fn alpha_form(&self) -> RMat {
        let mut d = RVec::zeros(self.m());
        for (j, &aj) in self.a.iter().enumerate() {
            d[2 * j] = aj;
            d[2 * j + 1] = aj;
        }
        for i in 0..self.s2 {
            d[self.r_delta + i] = 0.5;
        }
        RMat::from_diagonal(&d)
    }

    /// `diag(Delta_{s1}, 0)`.
    pub fn delta_form(&self) -> RMat {
        let mut d = RMat::zeros(self.m(), self.m());
        d.view_mut((0, 0), (self.r_delta, self.r_delta))
            .copy_from(&standard_matrix(self.s1));
        d
    }

    /// Max-norm residuals of both block forms against the input pair.
    pub fn residuals(&self, alpha: &RMat, delta_k: &RMat) -> (f64, f64) {
        let ra = max_abs(&(self.t.transpose() * alpha * &self.t - self.alpha_form()));
        let rd = max_abs(&(self.t.transpose() * delta_k * &self.t - self.delta_form()));
        (ra, rd)
    }

    /// Columns of `T` belonging to block `k` (1, 2 or 3).
    pub fn block_columns(&self, block: usize) -> RMat {
        let (start, len) = match block {
            1 => (0, self.r_delta),
            2 => (self.r_delta, self.s2),
            3 => (self.r_alpha, self.s3),
            _ => panic!("block index must be 1, 2 or 3"),
        };
        self.t.columns(start, len).into_owned()
    }
}

/// Simultaneous canonical form of a symmetric `alpha` and a skew `Delta_K`
/// satisfying `alpha - (i/2) Delta_K >= 0`.
///
/// Steps: bring `Delta_K` to canonical form; diagonalize `alpha` on the
/// kernel of `Delta_K` and rescale to `I/2` or `0`; shear the symplectic
/// columns along the kernel to remove the coupling (the Schur complement);
/// finally run Williamson's reduction on the decoupled symplectic block.
pub fn extended_williamson(
    alpha: &RMat,
    delta_k: &RMat,
    tol: f64,
) -> Result<CanonicalDecomposition> {
    let m = alpha.nrows();
    if alpha.ncols() != m || delta_k.shape() != (m, m) {
        return Err(Error::Shape {
            what: "(alpha, Delta_K)",
            expected: format!("{m}x{m} pair"),
            found: format!("{:?} and {:?}", alpha.shape(), delta_k.shape()),
        });
    }
    let scale = max_abs(alpha).max(1.0);
    let asym = linalg::asymmetry(alpha);
    if asym > tol * scale {
        return Err(Error::NotSymmetric {
            what: "alpha",
            asymmetry: asym,
        });
    }
    let min_eig = linalg::min_eig_uncertainty(alpha, delta_k);
    if min_eig < -tol {
        return Err(Error::Invalid {
            min_eigenvalue: min_eig,
        });
    }
    let alpha = symmetrize(alpha);
    let mut warnings = Vec::new();

    // Delta_K is ranked against the joint scale; for commuting quadratures
    // it is pure roundoff
    let alpha_norm = linalg::singular_values(&alpha)
        .first()
        .copied()
        .unwrap_or(0.0);
    let (s, r) = skew_canonical_with_scale(delta_k, tol, alpha_norm)?;
    let s1 = r / 2;
    let nb = m - r;

    // kernel block: diagonalize and rescale
    let alpha1 = symmetrize(&(s.transpose() * &alpha * &s));
    let alpha_scale = linalg::singular_values(&alpha1)
        .first()
        .copied()
        .unwrap_or(0.0);
    let bb = alpha1.view((r, r), (nb, nb)).into_owned();
    let (mut lam, mut vb) = eigh(&bb);
    lam.reverse();
    vb = RMat::from_fn(nb, nb, |i, j| vb[(i, nb - 1 - j)]);
    let cut = tol * alpha_scale;
    let s2 = lam.iter().filter(|&&l| l > cut).count();
    if lam
        .iter()
        .any(|&l| l > cut / 10.0 && l < cut * 10.0 && cut > 0.0)
    {
        warnings
            .push("kernel-block eigenvalue of alpha within a factor 10 of the rank cutoff".into());
    }
    let mut wb = vb;
    for (j, &l) in lam.iter().enumerate().take(s2) {
        let f = 1.0 / (2.0 * l).sqrt();
        wb.column_mut(j).scale_mut(f);
    }
    for j in s2..nb {
        let mut c = wb.column(j).into_owned();
        normalize_sign(&mut c);
        wb.set_column(j, &c);
    }
    let step2 = block_diag(&[&RMat::identity(r, r), &wb]);
    let alpha2 = symmetrize(&(step2.transpose() * &alpha1 * &step2));

    // shear: new symplectic columns = old + kernel columns * X
    let mut shear = RMat::identity(m, m);
    for i in 0..s2 {
        for j in 0..r {
            shear[(r + i, j)] = -2.0 * alpha2[(r + i, j)];
        }
    }
    let alpha3 = symmetrize(&(shear.transpose() * &alpha2 * &shear));

    // Williamson on the decoupled symplectic block
    let (sw, a) = if r > 0 {
        let block = alpha3.view((0, 0), (r, r)).into_owned();
        williamson(&block)?
    } else {
        (RMat::zeros(0, 0), Vec::new())
    };
    let step4 = block_diag(&[&sw, &RMat::identity(nb, nb)]);

    let t = &s * &step2 * &shear * &step4;
    let t_inv = t.clone().try_inverse().ok_or(Error::Residual {
        what: "invertibility of T",
        residual: f64::INFINITY,
        tol,
    })?;

    let r_alpha = r + s2;
    let direct_rank = rank(&alpha, tol);
    if direct_rank != r_alpha {
        warnings.push(format!(
            "direct rank of alpha ({direct_rank}) differs from canonical rank ({r_alpha})"
        ));
    }
    if rank_is_ambiguous(&alpha, tol) {
        warnings.push("a singular value of alpha is within a factor 10 of the rank cutoff".into());
    }
    if linalg::singular_values(delta_k)
        .first()
        .copied()
        .unwrap_or(0.0)
        > tol * alpha_norm
        && rank_is_ambiguous(delta_k, tol)
    {
        warnings
            .push("a singular value of Delta_K is within a factor 10 of the rank cutoff".into());
    }

    let dec = CanonicalDecomposition {
        t,
        t_inv,
        r_delta: r,
        r_alpha,
        s1,
        s2,
        s3: m - r_alpha,
        a,
        warnings,
    };

    // the shear only removes the coupling to the I/2 block; coupling to the
    // zero block must already vanish, which this check enforces
    let (ra, rd) = dec.residuals(&alpha, delta_k);
    let t_scale = max_abs(&dec.t).max(1.0);
    let bound = 1e-6 * scale * t_scale * t_scale;
    if ra > bound || rd > bound {
        return Err(Error::Residual {
            what: "block form of T^t alpha T / T^t Delta_K T",
            residual: ra.max(rd),
            tol: bound,
        });
    }
    Ok(dec)
}

/// Williamson reduction of a positive definite `2k x 2k` matrix against the
/// standard form: returns symplectic `S` and values `a` (descending) with
/// `S^t M S = diag(a_1, a_1, ..., a_k, a_k)`.
pub fn williamson(mat: &RMat) -> Result<(RMat, Vec<f64>)> {
    let n = mat.nrows();
    let k = n / 2;
    let (mu, q) = eigh(mat);
    if mu.first().copied().unwrap_or(1.0) <= 0.0 {
        return Err(Error::NotPsd {
            min_eigenvalue: mu[0],
        });
    }
    let inv_sqrt = &q
        * RMat::from_diagonal(&RVec::from_iterator(n, mu.iter().map(|x| 1.0 / x.sqrt())))
        * q.transpose();
    let skew = &inv_sqrt * standard_matrix(k) * &inv_sqrt;
    let skew = (&skew - skew.transpose()) * 0.5;
    let pairs = skew_pairs(&skew, 0.0);
    if pairs.len() != k {
        return Err(Error::Residual {
            what: "Williamson pair count",
            residual: pairs.len() as f64,
            tol: k as f64,
        });
    }
    let mut o = RMat::zeros(n, n);
    let mut a = Vec::with_capacity(k);
    let mut scal = RVec::zeros(n);
    // c ascending, so a = 1/c comes out descending
    for (j, p) in pairs.iter().enumerate() {
        o.set_column(2 * j, &p.u);
        o.set_column(2 * j + 1, &p.v);
        let aj = 1.0 / p.c;
        a.push(aj);
        scal[2 * j] = aj.sqrt();
        scal[2 * j + 1] = aj.sqrt();
    }
    let s = inv_sqrt * o * RMat::from_diagonal(&scal);
    Ok((s, a))
}

/// Basis of `{z : z^t Delta z' = 0 for all z' in L}`.
pub fn symplectic_complement(
    l: &SubspaceBasis,
    delta: &SymplecticForm,
    tol: f64,
) -> Result<SubspaceBasis> {
    check_ambient(l, delta)?;
    if l.is_empty() {
        return SubspaceBasis::new(RMat::identity(delta.dim(), delta.dim()), tol);
    }
    let constraints = l.matrix().transpose() * delta.matrix();
    SubspaceBasis::new(linalg::null_space(&constraints, tol), tol)
}

fn check_ambient(l: &SubspaceBasis, delta: &SymplecticForm) -> Result<()> {
    if l.ambient_dim() != delta.dim() {
        return Err(Error::Shape {
            what: "subspace ambient dimension",
            expected: delta.dim().to_string(),
            found: l.ambient_dim().to_string(),
        });
    }
    Ok(())
}

/// Isotropic partner `L'` of an isotropic subspace `L`.
///
/// The returned vectors `h_k` satisfy `e_j^t Delta h_k = -delta_jk` against
/// the basis `e_j` of `L`, are mutually Delta-orthogonal and Delta-orthogonal
/// to `avoid`, so `(e_1, h_1, ...)` is a canonical basis of the symplectic
/// subspace `L + L'` and `L'` is disjoint from `span(L, avoid)`. Each `h_k`
/// starts as the minimum-norm solution of its pairing constraints and is then
/// corrected along `L` to make the partners isotropic.
pub fn isotropic_partner(
    l: &SubspaceBasis,
    avoid: &SubspaceBasis,
    delta: &SymplecticForm,
    tol: f64,
) -> Result<SubspaceBasis> {
    check_ambient(l, delta)?;
    check_ambient(avoid, delta)?;
    let k = l.dim();
    let two_s = delta.dim();
    if 2 * k + avoid.dim() > two_s {
        return Err(Error::InfeasibleComplement(format!(
            "2 dim L + dim avoid = {} exceeds 2s = {two_s}",
            2 * k + avoid.dim()
        )));
    }
    if k == 0 {
        return Ok(SubspaceBasis::empty(two_s));
    }
    let dm = delta.matrix();
    let lm = l.matrix();
    let scale = max_abs(lm).max(1.0).powi(2);
    let iso = max_abs(&(lm.transpose() * dm * lm));
    if iso > 1e3 * tol * scale {
        return Err(Error::InfeasibleComplement(format!(
            "L is not isotropic (max pairing {iso:e})"
        )));
    }

    let a = avoid.dim();
    let cons = concat_columns(&[lm, avoid.matrix()]).transpose() * dm;
    let mut target = RMat::zeros(k + a, k);
    for j in 0..k {
        target[(j, j)] = -1.0;
    }
    let mut h = linalg::pinv(&cons, tol) * &target;
    let gram = h.transpose() * dm * &h;
    h -= lm * &gram * 0.5;

    let check_tol = 1e3 * tol * scale.max(max_abs(&h).powi(2));
    let pair_res = max_abs(&(lm.transpose() * dm * &h + RMat::identity(k, k)));
    let iso_res = max_abs(&(h.transpose() * dm * &h));
    let avoid_res = if a > 0 {
        max_abs(&(avoid.matrix().transpose() * dm * &h))
    } else {
        0.0
    };
    if pair_res > check_tol || iso_res > check_tol || avoid_res > check_tol {
        return Err(Error::InfeasibleComplement(format!(
            "constraints not satisfiable (pairing {pair_res:e}, isotropy {iso_res:e}, avoid {avoid_res:e})"
        )));
    }
    let all = concat_columns(&[lm, avoid.matrix(), &h]);
    if rank(&all, tol) != 2 * k + a {
        return Err(Error::InfeasibleComplement(
            "partner intersects span(L, avoid)".into(),
        ));
    }
    SubspaceBasis::new(h, tol)
}

//! Small dense helpers shared by the symplectic and observable code.
//!
//! Everything here works on `nalgebra` dynamic matrices; dimensions stay in
//! the low dozens so no attempt is made at blocking or reuse of workspaces.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

pub type RMat = DMatrix<f64>;
pub type CMat = DMatrix<Complex64>;
pub type RVec = DVector<f64>;

/// Largest absolute entry. Zero for empty matrices.
pub fn max_abs(m: &RMat) -> f64 {
    m.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

pub fn max_abs_c(m: &CMat) -> f64 {
    m.iter().fold(0.0_f64, |acc, x| acc.max(x.norm()))
}

pub fn asymmetry(m: &RMat) -> f64 {
    max_abs(&(m - m.transpose()))
}

pub fn skew_asymmetry(m: &RMat) -> f64 {
    max_abs(&(m + m.transpose()))
}

pub fn symmetrize(m: &RMat) -> RMat {
    (m + m.transpose()) * 0.5
}

/// Eigen-decomposition of a real symmetric matrix, eigenvalues ascending.
pub fn eigh(m: &RMat) -> (Vec<f64>, RMat) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), RMat::zeros(0, 0));
    }
    let eig = SymmetricEigen::new(symmetrize(m));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = RMat::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// Eigen-decomposition of a complex Hermitian matrix, eigenvalues ascending.
pub fn eigh_c(m: &CMat) -> (Vec<f64>, CMat) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), CMat::zeros(0, 0));
    }
    let herm = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(herm);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMat::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

pub fn to_complex(m: &RMat) -> CMat {
    m.map(|x| Complex64::new(x, 0.0))
}

/// `sym + i * scale * skew` as a complex Hermitian matrix.
pub fn hermitian_pair(sym: &RMat, skew: &RMat, scale: f64) -> CMat {
    CMat::from_fn(sym.nrows(), sym.ncols(), |r, c| {
        Complex64::new(sym[(r, c)], scale * skew[(r, c)])
    })
}

/// Minimum eigenvalue of the Hermitian matrix `sym + (i/2) skew`.
///
/// The `-` sign gives the complex conjugate matrix, which has the same
/// spectrum, so one sign suffices.
pub fn min_eig_uncertainty(sym: &RMat, skew: &RMat) -> f64 {
    if sym.nrows() == 0 {
        return 0.0;
    }
    let (vals, _) = eigh_c(&hermitian_pair(sym, skew, 0.5));
    vals[0]
}

/// Singular values in descending order.
pub fn singular_values(m: &RMat) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut sv: Vec<f64> = m
        .clone()
        .svd(false, false)
        .singular_values
        .iter()
        .copied()
        .collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// Numerical rank: singular values above `tol * sigma_max`.
pub fn rank(m: &RMat, tol: f64) -> usize {
    let sv = singular_values(m);
    match sv.first() {
        Some(&top) if top > 0.0 => sv.iter().filter(|&&s| s > tol * top).count(),
        _ => 0,
    }
}

/// True when some singular value sits within a factor 10 of the rank cutoff.
pub fn rank_is_ambiguous(m: &RMat, tol: f64) -> bool {
    let sv = singular_values(m);
    match sv.first() {
        Some(&top) if top > 0.0 => {
            let cut = tol * top;
            sv.iter().any(|&s| s > cut / 10.0 && s < cut * 10.0)
        }
        _ => false,
    }
}

/// Orthonormal basis (columns) of the null space of `m`, using the same
/// relative cutoff as [`rank`].
pub fn null_space(m: &RMat, tol: f64) -> RMat {
    let n = m.ncols();
    if m.nrows() == 0 || n == 0 {
        return RMat::identity(n, n);
    }
    // Pad with zero rows so the SVD returns a full right basis.
    let rows = m.nrows().max(n);
    let mut padded = RMat::zeros(rows, n);
    padded.rows_mut(0, m.nrows()).copy_from(m);
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("requested");
    let top = svd.singular_values.max();
    let cols: Vec<RVec> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|&(_, &s)| top == 0.0 || s <= tol * top)
        .map(|(i, _)| v_t.row(i).transpose())
        .collect();
    if cols.is_empty() {
        return RMat::zeros(n, 0);
    }
    RMat::from_columns(&cols)
}

/// Moore-Penrose pseudo-inverse with a relative singular-value cutoff.
pub fn pinv(m: &RMat, tol: f64) -> RMat {
    let (r, c) = m.shape();
    if r == 0 || c == 0 {
        return RMat::zeros(c, r);
    }
    let svd = m.clone().svd(true, true);
    let top = svd.singular_values.max();
    let cut = tol * top;
    let u = svd.u.unwrap();
    let v_t = svd.v_t.unwrap();
    let mut out = RMat::zeros(c, r);
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if s > cut && s > 0.0 {
            out += (v_t.row(i).transpose() * u.column(i).transpose()) / s;
        }
    }
    out
}

/// Block-diagonal assembly of square blocks.
pub fn block_diag(blocks: &[&RMat]) -> RMat {
    let n: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = RMat::zeros(n, n);
    let mut off = 0;
    for b in blocks {
        let k = b.nrows();
        out.view_mut((off, off), (k, k)).copy_from(*b);
        off += k;
    }
    out
}

/// Kronecker product of complex matrices.
pub fn kron_c(a: &CMat, b: &CMat) -> CMat {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    CMat::from_fn(ar * br, ac * bc, |r, c| {
        a[(r / br, c / bc)] * b[(r % br, c % bc)]
    })
}

/// A pair of real vectors `(u, v)` spanning a 2-plane on which the skew
/// matrix acts as `u^t N v = -c`, `N u = c v`, `N v = -c u` (orthonormal).
#[derive(Debug, Clone)]
pub struct SkewPair {
    pub c: f64,
    pub u: RVec,
    pub v: RVec,
}

/// Real canonical pairs of a skew-symmetric matrix, from the Hermitian
/// eigenproblem of `i N`: its positive eigenvalues `c` come with
/// eigenvectors `x = (u + i v)/sqrt(2)`. Pairs are returned with `c`
/// ascending and only for `c > cutoff`.
///
/// Each eigenvector's global phase is fixed so that its largest entry
/// (first one on ties) is real and positive.
pub fn skew_pairs(n: &RMat, cutoff: f64) -> Vec<SkewPair> {
    let dim = n.nrows();
    if dim == 0 {
        return Vec::new();
    }
    let i_n = n.map(|x| Complex64::new(0.0, x));
    let (vals, vecs) = eigh_c(&i_n);
    let mut out = Vec::new();
    for (k, &c) in vals.iter().enumerate() {
        if c <= cutoff {
            continue;
        }
        let mut x = vecs.column(k).into_owned();
        let top = x.iter().fold(0.0_f64, |a, z| a.max(z.norm()));
        let pivot = x
            .iter()
            .position(|z| z.norm() >= top * (1.0 - 1e-9))
            .unwrap_or(0);
        let phase = x[pivot].conj() / x[pivot].norm();
        x *= phase;
        let s2 = std::f64::consts::SQRT_2;
        let u = RVec::from_fn(dim, |r, _| x[r].re * s2);
        let v = RVec::from_fn(dim, |r, _| x[r].im * s2);
        out.push(SkewPair { c, u, v });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigh_sorted_ascending() {
        let m = RMat::from_row_slice(3, 3, &[3.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 2.0]);
        let (vals, vecs) = eigh(&m);
        assert_eq!(vals, vec![-1.0, 2.0, 3.0]);
        let recon = &vecs * RMat::from_diagonal(&RVec::from_vec(vals)) * vecs.transpose();
        assert!(max_abs(&(recon - m)) < 1e-12);
    }

    #[test]
    fn rank_and_null_space() {
        let m = RMat::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 2.0, 4.0, 6.0]);
        assert_eq!(rank(&m, 1e-10), 1);
        let ns = null_space(&m, 1e-10);
        assert_eq!(ns.ncols(), 2);
        assert!(max_abs(&(&m * &ns)) < 1e-12);
    }

    #[test]
    fn pinv_of_full_column_rank() {
        let m = RMat::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 2.0, 1.0, 1.0]);
        let p = pinv(&m, 1e-12);
        assert!(max_abs(&(&p * &m - RMat::identity(2, 2))) < 1e-12);
    }

    #[test]
    fn skew_pairs_of_standard_block() {
        let n = RMat::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        let pairs = skew_pairs(&n, 1e-12);
        assert_eq!(pairs.len(), 1);
        let p = &pairs[0];
        assert!((p.c - 1.0).abs() < 1e-12);
        assert!(((&n * &p.u) - &p.v * p.c).norm() < 1e-12);
        assert!(((&n * &p.v) + &p.u * p.c).norm() < 1e-12);
    }

    #[test]
    fn uncertainty_eigenvalues_of_vacuum_heterodyne() {
        let half = RMat::identity(2, 2) * 0.5;
        let d = RMat::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        assert!(min_eig_uncertainty(&half, &d).abs() < 1e-14);
        let quarter = RMat::identity(2, 2) * 0.25;
        assert!((min_eig_uncertainty(&quarter, &d) + 0.25).abs() < 1e-14);
    }
}

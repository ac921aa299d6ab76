//! Dense complex matrix kernel.
//!
//! Everything downstream works with `d x d` complex matrices and their
//! `d^2 x d^2` superoperators in the column-stacking convention
//! `vec(A B C) = (C^T ⊗ A) vec(B)`, so left multiplication, right
//! multiplication and two-sided sandwiches are single Kronecker products.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Double-precision complex scalar used throughout.
pub type C64 = Complex64;
/// Dense complex matrix.
pub type CMat = DMatrix<C64>;
/// Dense complex column vector.
pub type CVec = DVector<C64>;

const EIG_MAX_ITER: usize = 10_000;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn cr(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// The imaginary unit.
pub const I: C64 = C64::new(0.0, 1.0);

/// Build a matrix from row-major entries, rejecting NaN/Inf.
pub fn cmat_from_rows(rows: usize, cols: usize, entries: &[C64]) -> Result<CMat> {
    if entries.len() != rows * cols {
        return Err(Error::ShapeMismatch(format!(
            "{} entries for a {}x{} matrix",
            entries.len(),
            rows,
            cols
        )));
    }
    if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite);
    }
    Ok(CMat::from_row_slice(rows, cols, entries))
}

pub fn eye(d: usize) -> CMat {
    CMat::identity(d, d)
}

/// Matrix unit `|e_i><e_j|`.
pub fn matrix_unit(d: usize, i: usize, j: usize) -> CMat {
    let mut m = CMat::zeros(d, d);
    m[(i, j)] = cr(1.0);
    m
}

/// A validated Hermitian matrix.
///
/// Construction enforces `||M - M'||_F <= tol (1 + ||M||_F)` and stores the
/// symmetrized matrix `(M + M')/2`.
#[derive(Debug, Clone)]
pub struct HermMat {
    mat: CMat,
}

impl HermMat {
    pub fn new(mat: CMat, herm_tol: f64) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(Error::ShapeMismatch(format!(
                "Hermitian matrix must be square, got {}x{}",
                mat.nrows(),
                mat.ncols()
            )));
        }
        if mat.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        let dev = (&mat - mat.adjoint()).norm();
        if dev > herm_tol * (1.0 + mat.norm()) {
            return Err(Error::NotHermitian {
                dev: dev / (1.0 + mat.norm()),
            });
        }
        Ok(HermMat {
            mat: (&mat + mat.adjoint()).scale(0.5),
        })
    }

    /// Symmetrize without a deviation check. For matrices that are Hermitian
    /// by construction up to roundoff.
    pub fn symmetrized(mat: CMat) -> Self {
        let adj = mat.adjoint();
        HermMat {
            mat: (mat + adj).scale(0.5),
        }
    }

    pub fn zeros(d: usize) -> Self {
        HermMat {
            mat: CMat::zeros(d, d),
        }
    }

    pub fn mat(&self) -> &CMat {
        &self.mat
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn into_mat(self) -> CMat {
        self.mat
    }
}

impl std::ops::Deref for HermMat {
    type Target = CMat;
    fn deref(&self) -> &CMat {
        &self.mat
    }
}

/// Hermitian eigendecomposition `M = U diag(w) U'` with `w` ascending.
pub fn herm_eig(m: &HermMat) -> Result<(Vec<f64>, CMat)> {
    let d = m.dim();
    if d == 0 {
        return Ok((Vec::new(), CMat::zeros(0, 0)));
    }
    let se = nalgebra::linalg::SymmetricEigen::try_new(m.mat().clone(), f64::EPSILON, EIG_MAX_ITER)
        .ok_or(Error::EigenFailed {
            iterations: EIG_MAX_ITER,
        })?;
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| se.eigenvalues[a].total_cmp(&se.eigenvalues[b]));
    let vals: Vec<f64> = order.iter().map(|&k| se.eigenvalues[k]).collect();
    let mut vecs = CMat::zeros(d, d);
    for (col, &k) in order.iter().enumerate() {
        vecs.set_column(col, &se.eigenvectors.column(k));
    }
    Ok((vals, vecs))
}

/// Column-stacking vectorization: `vec(A)[j d + i] = A[i, j]`.
pub fn vectorize(a: &CMat) -> CVec {
    CVec::from_column_slice(a.as_slice())
}

/// Inverse of [`vectorize`] for square matrices.
pub fn devectorize(v: &CVec) -> Result<CMat> {
    let n = v.len();
    let d = (n as f64).sqrt().round() as usize;
    if d * d != n {
        return Err(Error::ShapeMismatch(format!(
            "vector of length {n} is not a vectorized square matrix"
        )));
    }
    Ok(CMat::from_column_slice(d, d, v.as_slice()))
}

/// Hilbert-Schmidt inner product `<a, b> = tr(a' b)`, conjugate-linear in
/// the first argument.
pub fn hs_inner(a: &CMat, b: &CMat) -> Result<C64> {
    if a.shape() != b.shape() {
        return Err(Error::ShapeMismatch(format!(
            "hs_inner between {:?} and {:?}",
            a.shape(),
            b.shape()
        )));
    }
    Ok(a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum())
}

/// Matrix exponential `exp(t M)` by scaling and squaring with a truncated
/// series on the scaled matrix.
pub fn expm(m: &CMat, t: f64) -> Result<CMat> {
    let d = m.nrows();
    if d != m.ncols() {
        return Err(Error::ShapeMismatch(format!(
            "expm of a {}x{} matrix",
            m.nrows(),
            m.ncols()
        )));
    }
    let scaled_norm = m.norm() * t.abs();
    let squarings = if scaled_norm > 0.5 {
        (scaled_norm / 0.5).log2().ceil().max(0.0) as u32
    } else {
        0
    };
    let x = m.map(|z| z * cr(t / f64::powi(2.0, squarings as i32)));
    let mut sum = eye(d);
    let mut term = eye(d);
    for k in 1..=40 {
        term = (&term * &x).map(|z| z / cr(k as f64));
        sum += &term;
        if term.norm() < 1e-18 * (1.0 + sum.norm()) {
            break;
        }
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    Ok(sum)
}

/// Least squares `min ||A x - b||_2` via Householder QR, with a
/// pseudo-inverse fallback (through the Hermitian eigendecomposition of the
/// Gram matrix) for rank-deficient systems.
///
/// With `allow_rank_deficient = false`, a column-rank drop is an error.
pub fn lstsq(a: &CMat, b: &CVec, allow_rank_deficient: bool) -> Result<(CVec, f64)> {
    if a.nrows() != b.len() {
        return Err(Error::ShapeMismatch(format!(
            "lstsq: {} rows vs rhs length {}",
            a.nrows(),
            b.len()
        )));
    }
    let cols = a.ncols();
    if cols == 0 {
        return Ok((CVec::zeros(0), b.norm()));
    }
    if a.nrows() < cols {
        if !allow_rank_deficient {
            return Err(Error::RankDeficient {
                rank: a.nrows(),
                cols,
            });
        }
        return gram_pseudo_solve(a, b);
    }
    let qr = a.clone().qr();
    let r = qr.r();
    let diag_max = (0..cols).map(|i| r[(i, i)].norm()).fold(0.0, f64::max);
    let rank = (0..cols)
        .filter(|&i| r[(i, i)].norm() > 1e-13 * diag_max)
        .count();
    if rank < cols {
        if !allow_rank_deficient {
            return Err(Error::RankDeficient { rank, cols });
        }
        return gram_pseudo_solve(a, b);
    }
    let qtb = qr.q().adjoint() * b;
    let x = r
        .solve_upper_triangular(&qtb)
        .ok_or_else(|| Error::Internal("triangular solve failed".into()))?;
    let x = CVec::from_column_slice(x.as_slice());
    let residual = (a * &x - b).norm();
    Ok((x, residual))
}

/// Minimum-norm solution through the spectral pseudo-inverse of `A' A`.
fn gram_pseudo_solve(a: &CMat, b: &CVec) -> Result<(CVec, f64)> {
    let cols = a.ncols();
    let gram = HermMat::symmetrized(a.adjoint() * a);
    let (w, v) = herm_eig(&gram)?;
    let wmax = w.iter().cloned().fold(0.0, f64::max);
    let atb = a.adjoint() * b;
    let mut x = CVec::zeros(cols);
    if wmax > 0.0 {
        for (i, &wi) in w.iter().enumerate() {
            if wi > wmax * 1e-20 {
                let vi = v.column(i);
                let coeff = (vi.adjoint() * &atb)[(0, 0)] / cr(wi);
                x += vi * coeff;
            }
        }
    }
    let residual = (a * &x - b).norm();
    Ok((x, residual))
}

/// Kronecker product.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// Superoperator of `x -> A x` as a `d^2 x d^2` matrix.
pub fn left_mul_superop(a: &CMat) -> CMat {
    kron(&eye(a.nrows()), a)
}

/// Superoperator of `x -> x B`.
pub fn right_mul_superop(b: &CMat) -> CMat {
    kron(&b.transpose(), &eye(b.nrows()))
}

/// Superoperator of `x -> A x B`.
pub fn sandwich_superop(a: &CMat, b: &CMat) -> CMat {
    kron(&b.transpose(), a)
}

/// Superoperator of `x -> [K, x]`.
pub fn commutator_superop(k: &CMat) -> CMat {
    left_mul_superop(k) - right_mul_superop(k)
}

/// Permutation `P` with `P vec(X) = vec(X^T)`.
pub fn transpose_permutation(d: usize) -> CMat {
    let mut p = CMat::zeros(d * d, d * d);
    for i in 0..d {
        for j in 0..d {
            p[(i * d + j, j * d + i)] = cr(1.0);
        }
    }
    p
}

/// Relative deviation of `u` from unitarity, `||u u' - 1||_F`.
pub fn unitarity_residual(u: &CMat) -> f64 {
    (u * u.adjoint() - eye(u.nrows())).norm()
}

/// Real embedding `[[Re M, -Im M], [Im M, Re M]]`; `E [a; b] = [Re(Mz);
/// Im(Mz)]` for `z = a + ib`, so kernels correspond.
pub fn real_embedding(m: &CMat) -> nalgebra::DMatrix<f64> {
    let (r, c) = m.shape();
    let mut e = nalgebra::DMatrix::<f64>::zeros(2 * r, 2 * c);
    for i in 0..r {
        for j in 0..c {
            let z = m[(i, j)];
            e[(i, j)] = z.re;
            e[(i, j + c)] = -z.im;
            e[(i + r, j)] = z.im;
            e[(i + r, j + c)] = z.re;
        }
    }
    e
}

/// Orthonormal basis of the (complex) kernel of `m`: directions with
/// singular value below `rel_cutoff * sigma_max`, computed through the real
/// embedding. Returns the basis and `sigma_max`.
pub fn kernel_basis(m: &CMat, rel_cutoff: f64) -> (Vec<CVec>, f64) {
    let n = m.ncols();
    let e = real_embedding(m);
    let svd = e.svd(false, true);
    let v_t = svd.v_t.as_ref().expect("svd with v requested");
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let mut basis: Vec<CVec> = Vec::new();
    for (i, &sv) in svd.singular_values.iter().enumerate() {
        if smax == 0.0 || sv < rel_cutoff * smax {
            let row = v_t.row(i);
            let z = CVec::from_fn(n, |k, _| c(row[k], row[k + n]));
            // complex Gram-Schmidt; the embedding doubles each direction
            let mut w = z;
            for b in &basis {
                let ip = b.dotc(&w);
                w -= b * ip;
            }
            let nrm = w.norm();
            if nrm > 1e-8 {
                basis.push(w / cr(nrm));
            }
        }
    }
    if smax == 0.0 {
        // zero matrix: the full space (already collected above)
        return (basis, 0.0);
    }
    (basis, smax)
}

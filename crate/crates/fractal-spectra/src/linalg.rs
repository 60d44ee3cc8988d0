//! Dense complex and real linear algebra used by every other module.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;
pub type RMat = DMatrix<f64>;

/// Default relative threshold for numerical rank and kernels.
pub const RANK_TOL: f64 = 1e-9;
/// Relative threshold below which an interior block counts as singular.
pub const SINGULAR_TOL: f64 = 1e-10;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Dense complex symmetric matrix. Only the upper triangle of the input is
/// read, so symmetry holds exactly.
#[derive(Clone, Debug, PartialEq)]
pub struct SymMatrix {
    m: CMat,
}

impl SymMatrix {
    pub fn from_upper(m: &CMat) -> Self {
        assert_eq!(m.nrows(), m.ncols(), "square matrix required");
        let k = m.nrows();
        assert!(k >= 1, "dimension must be positive");
        Self {
            m: CMat::from_fn(k, k, |i, j| if i <= j { m[(i, j)] } else { m[(j, i)] }),
        }
    }

    pub fn from_fn(k: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let upper = CMat::from_fn(k, k, |i, j| if i <= j { f(i, j) } else { C64::default() });
        Self::from_upper(&upper)
    }

    /// Accepts a matrix whose asymmetry is at most `tol` times its largest entry.
    pub fn try_from_matrix(m: CMat, tol: f64) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return Err(Error::DimensionMismatch(format!(
                "expected a nonempty square matrix, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let scale = max_abs(&m).max(1.0);
        let asym = max_abs(&(&m - m.transpose()));
        if asym > tol * scale {
            return Err(Error::NotSymmetric(asym));
        }
        Ok(Self::from_upper(&m))
    }

    pub fn from_real(m: &RMat) -> Self {
        Self::from_upper(&m.map(|x| c(x, 0.0)))
    }

    pub fn zeros(k: usize) -> Self {
        Self::from_upper(&CMat::zeros(k, k))
    }

    pub fn identity(k: usize) -> Self {
        Self::from_upper(&CMat::identity(k, k))
    }

    pub fn diag(d: &[C64]) -> Self {
        Self::from_upper(&CMat::from_diagonal(&CVec::from_column_slice(d)))
    }

    pub fn real_diag(d: &[f64]) -> Self {
        Self::diag(&d.iter().map(|&x| c(x, 0.0)).collect::<Vec<_>>())
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.m[(i, j)]
    }

    pub fn as_matrix(&self) -> &CMat {
        &self.m
    }

    pub fn into_matrix(self) -> CMat {
        self.m
    }

    pub fn is_real(&self, tol: f64) -> bool {
        self.m.iter().all(|z| z.im.abs() <= tol)
    }

    pub fn re(&self) -> RMat {
        self.m.map(|z| z.re)
    }

    pub fn im(&self) -> RMat {
        self.m.map(|z| z.im)
    }

    pub fn scale(&self, a: C64) -> Self {
        Self { m: &self.m * a }
    }

    pub fn add(&self, other: &SymMatrix) -> Self {
        Self { m: &self.m + &other.m }
    }

    pub fn sub(&self, other: &SymMatrix) -> Self {
        Self { m: &self.m - &other.m }
    }

    /// Principal submatrix on `idx` (in the given order).
    pub fn principal(&self, idx: &[usize]) -> Self {
        Self::from_upper(&submatrix(&self.m, idx, idx))
    }

    pub fn frobenius(&self) -> f64 {
        self.m.norm()
    }
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().fold(0.0, |a, z| a.max(z.norm()))
}

pub fn submatrix(m: &CMat, rows: &[usize], cols: &[usize]) -> CMat {
    CMat::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
}

pub fn to_complex(m: &RMat) -> CMat {
    m.map(|x| c(x, 0.0))
}

/// Orthonormal basis of a subspace of `C^ambient_dim`, stored as columns.
#[derive(Clone, Debug)]
pub struct Subspace {
    pub ambient_dim: usize,
    pub basis: CMat,
}

impl Subspace {
    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn projector(&self) -> CMat {
        &self.basis * self.basis.adjoint()
    }
}

/// Eigen-decomposition with ascending eigenvalues and column eigenvectors.
#[derive(Clone, Debug)]
pub struct SymEigen {
    pub values: Vec<f64>,
    pub vectors: RMat,
}

pub fn sym_eig(a: &RMat) -> SymEigen {
    let sym = (a + a.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = RMat::from_fn(a.nrows(), order.len(), |r, k| eig.eigenvectors[(r, order[k])]);
    SymEigen { values, vectors }
}

/// Spectrum of `H = -I_b^{-1} Q`, i.e. the pencil `(Q + lambda I_b) v = 0`.
/// Eigenvectors are `b`-orthonormal.
pub fn generalized_sym_eig(q: &RMat, b: &[f64]) -> Result<SymEigen> {
    if let Some(&bad) = b.iter().find(|&&x| !(x > 0.0)) {
        return Err(Error::NonPositiveWeight(bad));
    }
    let n = q.nrows();
    let s: Vec<f64> = b.iter().map(|x| x.sqrt().recip()).collect();
    let h = RMat::from_fn(n, n, |i, j| -q[(i, j)] * s[i] * s[j]);
    let mut eig = sym_eig(&h);
    for r in 0..n {
        for k in 0..n {
            eig.vectors[(r, k)] *= s[r];
        }
    }
    Ok(eig)
}

/// Orthonormal basis of the directions with singular value at most
/// `tol * sigma_max`. A zero matrix has the full space as kernel.
///
/// The rank comes from the singular values; the basis is the trailing part of
/// a full pivoted QR of `a^H`, i.e. the orthogonal complement of the row space.
pub fn kernel_basis(a: &CMat, tol: f64) -> Subspace {
    let n = a.ncols();
    if n == 0 {
        return Subspace { ambient_dim: 0, basis: CMat::zeros(0, 0) };
    }
    let r = if a.nrows() == 0 { 0 } else { rank(a, tol) };
    if r == 0 {
        return Subspace { ambient_dim: n, basis: CMat::identity(n, n) };
    }
    let mut ah = a.adjoint();
    if ah.ncols() < n {
        ah = ah.resize_horizontally(n, C64::default());
    }
    let q = ah.col_piv_qr().q();
    Subspace { ambient_dim: n, basis: q.columns(r, n - r).into_owned() }
}

pub fn select_columns(m: &CMat, cols: &[usize]) -> CMat {
    CMat::from_fn(m.nrows(), cols.len(), |r, k| m[(r, cols[k])])
}

pub fn singular_values(a: &CMat) -> Vec<f64> {
    if a.is_empty() {
        return Vec::new();
    }
    let mut sv: Vec<f64> = a.singular_values().iter().copied().collect();
    sv.sort_by(|x, y| y.total_cmp(x));
    sv
}

pub fn rank(a: &CMat, tol: f64) -> usize {
    let sv = singular_values(a);
    match sv.first() {
        Some(&smax) if smax > 0.0 => sv.iter().filter(|&&s| s > tol * smax).count(),
        _ => 0,
    }
}

/// Orthonormal basis of the column span, dropping directions below `tol * sigma_max`.
pub fn orthonormalize(a: &CMat, tol: f64) -> CMat {
    if a.ncols() == 0 || a.nrows() == 0 {
        return CMat::zeros(a.nrows(), 0);
    }
    column_basis(a, rank(a, tol))
}

/// Orthonormal basis of the leading `p`-dimensional column space, from a
/// column-pivoted QR. The singular vectors of nalgebra's complex SVD can lose
/// about half the digits on rank-deficient input, so spans are never taken
/// from it; only singular values are.
pub fn column_basis(a: &CMat, p: usize) -> CMat {
    let p = p.min(a.nrows()).min(a.ncols());
    if p == 0 {
        return CMat::zeros(a.nrows(), 0);
    }
    let q = a.clone().col_piv_qr().q();
    q.columns(0, p).into_owned()
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_hermitian_eigenvalue(a: &CMat) -> Result<f64> {
    check_hermitian(a)?;
    let h = (a + a.adjoint()) * c(0.5, 0.0);
    let eig = SymmetricEigen::new(h);
    Ok(eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min))
}

fn check_hermitian(a: &CMat) -> Result<()> {
    let scale = max_abs(a).max(1.0);
    let defect = max_abs(&(a - a.adjoint()));
    if a.nrows() != a.ncols() || defect > 1e-12 * scale {
        return Err(Error::NotHermitian(defect));
    }
    Ok(())
}

/// True iff the smallest eigenvalue exceeds `-tol`.
pub fn is_positive_definite(a: &CMat, tol: f64) -> Result<bool> {
    Ok(min_hermitian_eigenvalue(a)? > -tol)
}

pub fn det(a: &CMat) -> C64 {
    if a.nrows() == 0 {
        return c(1.0, 0.0);
    }
    a.clone().lu().determinant()
}

/// Solves `a x = b`, failing when `a` is numerically singular.
pub fn solve(a: &CMat, b: &CMat) -> Result<CMat> {
    if a.nrows() == 0 {
        return Ok(CMat::zeros(0, b.ncols()));
    }
    let sv = singular_values(a);
    let smax = sv[0];
    let smin = *sv.last().unwrap();
    if smax == 0.0 || smin <= SINGULAR_TOL * smax {
        return Err(Error::SingularInterior { sigma_min: smin, sigma_max: smax });
    }
    a.clone()
        .lu()
        .solve(b)
        .ok_or(Error::SingularInterior { sigma_min: smin, sigma_max: smax })
}

/// Spectral norm of `P_A - P_B` for the spans of two orthonormal frames.
pub fn subspace_distance(a: &CMat, b: &CMat) -> f64 {
    let pa = a * a.adjoint();
    let pb = b * b.adjoint();
    singular_values(&(pa - pb)).first().copied().unwrap_or(0.0)
}

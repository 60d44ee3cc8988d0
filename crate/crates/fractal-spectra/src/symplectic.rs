//! Lagrangian frames in `V = E + E*`, coisotropic subspaces and symplectic
//! reduction.
//!
//! Coordinates are `(x, xi)` with `x` in the first `K` rows. The form is
//! `omega(X, Y) = X^t Omega Y` with `Omega = [[0, I], [-I, 0]]`.

use crate::error::{Error, Result};
use crate::linalg::{
    c, kernel_basis, min_hermitian_eigenvalue, orthonormalize, rank, singular_values, solve, column_basis, CMat,
    SymMatrix, C64, RANK_TOL,
};
use crate::network::VertexPartition;
use crate::structure::{Lattice, SelfSimilarStructure};

pub fn omega(k: usize) -> CMat {
    let mut m = CMat::zeros(2 * k, 2 * k);
    for i in 0..k {
        m[(i, k + i)] = c(1.0, 0.0);
        m[(k + i, i)] = c(-1.0, 0.0);
    }
    m
}

/// Orthonormal `2K x K` frame of a Lagrangian subspace.
#[derive(Clone, Debug)]
pub struct LagrangianFrame {
    k: usize,
    cols: CMat,
}

impl LagrangianFrame {
    /// Checks rank and isotropy, then orthonormalises.
    pub fn new(cols: CMat) -> Result<Self> {
        let (rows, k) = cols.shape();
        if rows != 2 * k {
            return Err(Error::DimensionMismatch(format!("frame is {rows}x{k}")));
        }
        let q = orthonormalize(&cols, 1e-10);
        if q.ncols() != k {
            return Err(Error::DimensionMismatch(format!("frame has rank {} < {k}", q.ncols())));
        }
        let frame = Self { k, cols: q };
        let defect = frame.isotropy_defect();
        if defect > 1e-10 {
            return Err(Error::NotSymmetric(defect));
        }
        Ok(frame)
    }

    fn from_orthonormal(cols: CMat) -> Self {
        Self { k: cols.ncols(), cols }
    }

    /// The graph `L_Q` of a symmetric matrix.
    pub fn from_sym(q: &SymMatrix) -> Self {
        let k = q.dim();
        let mut f = CMat::zeros(2 * k, k);
        f.view_mut((0, 0), (k, k)).copy_from(&CMat::identity(k, k));
        f.view_mut((k, 0), (k, k)).copy_from(q.as_matrix());
        Self::from_orthonormal(orthonormalize(&f, 0.0))
    }

    /// Graph of an arbitrary square matrix; rejects nonsymmetric input.
    pub fn from_matrix(q: &CMat) -> Result<Self> {
        Ok(Self::from_sym(&SymMatrix::try_from_matrix(q.clone(), 1e-12)?))
    }

    /// The unique `Q` with `L = L_Q`, when `L` misses `0 + E*`.
    pub fn to_sym(&self) -> Result<SymMatrix> {
        let x = self.x();
        let sv = singular_values(&x);
        if sv.last().is_some_and(|&s| s <= 1e-9) {
            return Err(Error::AtInfinity);
        }
        let y = self.xi();
        // Q = Y X^{-1}, i.e. Q^t = X^{-t} Y^t.
        let qt = solve(&x.transpose(), &y.transpose()).map_err(|_| Error::AtInfinity)?;
        Ok(SymMatrix::from_upper(&((qt.transpose() + qt) * c(0.5, 0.0))))
    }

    pub fn half_dim(&self) -> usize {
        self.k
    }

    pub fn cols(&self) -> &CMat {
        &self.cols
    }

    pub fn x(&self) -> CMat {
        self.cols.rows(0, self.k).into_owned()
    }

    pub fn xi(&self) -> CMat {
        self.cols.rows(self.k, self.k).into_owned()
    }

    /// `max |F^t Omega F|`, zero for a Lagrangian frame.
    pub fn isotropy_defect(&self) -> f64 {
        crate::linalg::max_abs(&(self.cols.transpose() * omega(self.k) * &self.cols))
    }

    /// Image under a linear map of `V`.
    pub fn transform(&self, s: &CMat) -> Self {
        Self::from_orthonormal(orthonormalize(&(s * &self.cols), 1e-12))
    }

    /// `(x, xi) -> (x, a xi)`, the frame version of `Q -> a Q`.
    pub fn scale(&self, a: C64) -> Self {
        let mut f = self.cols.clone();
        for z in f.rows_mut(self.k, self.k).iter_mut() {
            *z *= a;
        }
        Self::from_orthonormal(orthonormalize(&f, 1e-12))
    }

    /// `(x, xi) -> (x, xi + Q0 x)`, the frame version of `Q -> Q + Q0`.
    pub fn translate(&self, q0: &SymMatrix) -> Self {
        let mut f = self.cols.clone();
        let shift = q0.as_matrix() * self.x();
        let mut lower = f.rows_mut(self.k, self.k);
        lower += shift;
        Self::from_orthonormal(orthonormalize(&f, 1e-12))
    }

    /// Direct sum in `V_{F_1} + ... + V_{F_m}` with coordinates
    /// `(x_1, .., x_m, xi_1, .., xi_m)`.
    pub fn direct_sum(frames: &[LagrangianFrame]) -> Self {
        let total: usize = frames.iter().map(|f| f.k).sum();
        let mut out = CMat::zeros(2 * total, total);
        let mut off = 0;
        for f in frames {
            out.view_mut((off, off), (f.k, f.k)).copy_from(&f.x());
            out.view_mut((total + off, off), (f.k, f.k)).copy_from(&f.xi());
            off += f.k;
        }
        Self::from_orthonormal(out)
    }

    /// Smallest eigenvalue of the Hermitian form `-i omega(conj X, X)` on the frame.
    pub fn siegel_margin(&self) -> f64 {
        let m = self.cols.adjoint() * omega(self.k) * &self.cols * c(0.0, -1.0);
        min_hermitian_eigenvalue(&((&m + m.adjoint()) * c(0.5, 0.0))).expect("symmetrised form is Hermitian")
    }

    pub fn distance(&self, other: &LagrangianFrame) -> f64 {
        crate::linalg::subspace_distance(&self.cols, &other.cols)
    }
}

pub fn in_siegel(l: &LagrangianFrame) -> bool {
    l.siegel_margin() > 1e-12
}

/// A coisotropic `W = ker C` of dimension `K + p`, with a projection onto
/// `W / W° = C^{2p}` that carries `omega` to the standard form.
#[derive(Clone, Debug)]
pub struct CoisotropicSubspace {
    k: usize,
    constraints: CMat,
    projection: CMat,
    w_perp: CMat,
}

impl CoisotropicSubspace {
    pub fn from_parts(k: usize, constraints: CMat, projection: CMat) -> Result<Self> {
        if constraints.ncols() != 2 * k || projection.ncols() != 2 * k || projection.nrows() % 2 != 0 {
            return Err(Error::DimensionMismatch("coisotropic data has wrong shape".into()));
        }
        let p = projection.nrows() / 2;
        let w_perp = if constraints.nrows() == 0 {
            CMat::zeros(2 * k, 0)
        } else {
            orthonormalize(&(omega(k) * constraints.transpose()), RANK_TOL)
        };
        if w_perp.ncols() + p != k {
            return Err(Error::DimensionMismatch(format!(
                "constraints of rank {} do not match quotient dimension {}",
                w_perp.ncols(),
                2 * p
            )));
        }
        Ok(Self { k, constraints, projection, w_perp })
    }

    pub fn ambient_half_dim(&self) -> usize {
        self.k
    }

    pub fn quotient_half_dim(&self) -> usize {
        self.projection.nrows() / 2
    }

    pub fn constraints(&self) -> &CMat {
        &self.constraints
    }

    pub fn projection(&self) -> &CMat {
        &self.projection
    }

    /// Orthonormal frame of `W°`.
    pub fn w_perp(&self) -> &CMat {
        &self.w_perp
    }

    /// Orthonormal frame of `W`.
    pub fn frame(&self) -> CMat {
        kernel_basis(&self.constraints, RANK_TOL).basis
    }

    /// Reduction by `next` (a coisotropic of the quotient) after this one.
    pub fn compose(&self, next: &CoisotropicSubspace) -> Result<Self> {
        if next.k != self.quotient_half_dim() {
            return Err(Error::DimensionMismatch("composition across different spaces".into()));
        }
        let extra = &next.constraints * &self.projection;
        let mut cons = CMat::zeros(self.constraints.nrows() + extra.nrows(), 2 * self.k);
        cons.rows_mut(0, self.constraints.nrows()).copy_from(&self.constraints);
        cons.rows_mut(self.constraints.nrows(), extra.nrows()).copy_from(&extra);
        Self::from_parts(self.k, cons, &next.projection * &self.projection)
    }

    /// Image `S(W)` under an invertible symplectic map `S`.
    pub fn transform(&self, s: &CMat) -> Result<Self> {
        let inv = s.clone().try_inverse().ok_or(Error::DimensionMismatch("singular map".into()))?;
        Self::from_parts(self.k, &self.constraints * &inv, &self.projection * &inv)
    }
}

/// `W = {x in Im s, s*xi vanishes off the kept classes}` for a partition `s`
/// and an ordered list of kept classes. The quotient coordinates are class
/// averages of `x` and class sums of `xi`.
pub fn w_glue_trace(part: &VertexPartition, kept: &[usize]) -> Result<CoisotropicSubspace> {
    let n = part.size();
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut is_kept = vec![false; part.classes()];
    for &cl in kept {
        is_kept[cl] = true;
    }
    for cl in 0..part.classes() {
        let members = part.members(cl);
        for w in members.windows(2) {
            rows.push(vec![(w[0], 1.0), (w[1], -1.0)]);
        }
        if !is_kept[cl] {
            rows.push(members.iter().map(|&a| (n + a, 1.0)).collect());
        }
    }
    let mut cons = CMat::zeros(rows.len(), 2 * n);
    for (r, row) in rows.iter().enumerate() {
        for &(col, v) in row {
            cons[(r, col)] = c(v, 0.0);
        }
    }
    let p = kept.len();
    let mut proj = CMat::zeros(2 * p, 2 * n);
    for (j, &cl) in kept.iter().enumerate() {
        let members = part.members(cl);
        for &a in &members {
            proj[(j, a)] = c(1.0 / members.len() as f64, 0.0);
            proj[(p + j, n + a)] = c(1.0, 0.0);
        }
    }
    CoisotropicSubspace::from_parts(n, cons, proj)
}

/// `C^F + (C^{boundary})*`, reducing to the boundary in the given order.
pub fn w_trace(k: usize, boundary: &[usize]) -> Result<CoisotropicSubspace> {
    w_glue_trace(&VertexPartition::identity(k), boundary)
}

/// `Im(s) + (C^F)*`, reducing to the classes of the partition.
pub fn w_glue(part: &VertexPartition) -> Result<CoisotropicSubspace> {
    let all: Vec<usize> = (0..part.classes()).collect();
    w_glue_trace(part, &all)
}

/// The coisotropic of `V_{F~<1>}` that glues the copies and traces onto `F`.
pub fn w_renorm(s: &SelfSimilarStructure) -> Result<CoisotropicSubspace> {
    let p1 = s.level_one_partition()?;
    w_glue_trace(&p1, &(0..s.k).collect::<Vec<_>>())
}

/// The level-n analogue on `N^n` copies of `F`, glued by the lattice cell map.
pub fn w_level(lat: &Lattice) -> Result<CoisotropicSubspace> {
    w_glue_trace(&lat.cell_partition(), &lat.boundary)
}

/// Symplectic reduction `(L cap W) / W°` in the quotient coordinates of `W`.
pub fn reduce(l: &LagrangianFrame, w: &CoisotropicSubspace) -> LagrangianFrame {
    assert_eq!(l.k, w.k, "frame and coisotropic live in different spaces");
    let p = w.quotient_half_dim();
    let lf = &l.cols;
    let inter = if w.constraints.nrows() == 0 {
        lf.clone()
    } else {
        lf * kernel_basis(&(&w.constraints * lf), RANK_TOL).basis
    };
    let image = &w.projection * inter;
    LagrangianFrame::from_orthonormal(column_basis(&image, p))
}

/// `dim(L cap W°)`.
pub fn reduction_defect(l: &LagrangianFrame, w: &CoisotropicSubspace) -> usize {
    let wp = &w.w_perp;
    if wp.ncols() == 0 {
        return 0;
    }
    let mut stacked = CMat::zeros(2 * l.k, l.k + wp.ncols());
    stacked.columns_mut(0, l.k).copy_from(&l.cols);
    stacked.columns_mut(l.k, wp.ncols()).copy_from(wp);
    stacked.ncols() - rank(&stacked, RANK_TOL)
}

//! Neumann, Dirichlet and Neumann-Dirichlet spectra of `H = -I_b^{-1} Q`,
//! characteristic determinants and density-of-states approximants.

use crate::error::{Error, Result};
use crate::linalg::{c, generalized_sym_eig, rank, submatrix, to_complex, CMat, RMat, SymMatrix, C64};
use crate::network::complement;
use crate::par::Exec;

/// Eigenvalues closer than this fraction of the spectral width form one cluster.
pub const CLUSTER_TOL: f64 = 1e-7;
/// Default imaginary offset of the Green-function proxy.
pub const GREEN_EPS: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Condition {
    Neumann,
    Dirichlet,
    Nd,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Cluster {
    pub value: f64,
    pub multiplicity: usize,
}

#[derive(Clone, Debug)]
pub struct SpectrumReport {
    pub level: usize,
    pub condition: Condition,
    /// Ascending, repeated according to multiplicity.
    pub eigenvalues: Vec<f64>,
    pub clusters: Vec<Cluster>,
}

impl SpectrumReport {
    pub fn count(&self) -> usize {
        self.eigenvalues.len()
    }

    fn from_clusters(level: usize, condition: Condition, clusters: Vec<Cluster>) -> Self {
        let eigenvalues = clusters.iter().flat_map(|c| std::iter::repeat_n(c.value, c.multiplicity)).collect();
        Self { level, condition, eigenvalues, clusters }
    }
}

fn real_form(q: &SymMatrix) -> Result<RMat> {
    if !q.is_real(1e-12 * q.frobenius().max(1.0)) {
        return Err(Error::ComplexInput);
    }
    Ok(q.re())
}

/// Index ranges of clusters in an ascending list.
pub fn cluster_ranges(values: &[f64], rel_tol: f64) -> Vec<std::ops::Range<usize>> {
    if values.is_empty() {
        return Vec::new();
    }
    let width = values[values.len() - 1] - values[0];
    let scale = if width > 0.0 { width } else { values[0].abs().max(1.0) };
    let tol = rel_tol * scale;
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..values.len() {
        if values[i] - values[i - 1] > tol {
            out.push(start..i);
            start = i;
        }
    }
    out.push(start..values.len());
    out
}

fn clusters_of(values: &[f64], rel_tol: f64) -> Vec<Cluster> {
    cluster_ranges(values, rel_tol)
        .into_iter()
        .map(|r| Cluster { value: values[r.clone()].iter().sum::<f64>() / r.len() as f64, multiplicity: r.len() })
        .collect()
}

pub fn neumann_spectrum(q: &SymMatrix, b: &[f64], level: usize) -> Result<SpectrumReport> {
    let eig = generalized_sym_eig(&real_form(q)?, b)?;
    Ok(SpectrumReport::from_clusters(level, Condition::Neumann, clusters_of(&eig.values, CLUSTER_TOL)))
}

pub fn dirichlet_spectrum(q: &SymMatrix, b: &[f64], boundary: &[usize], level: usize) -> Result<SpectrumReport> {
    let interior = complement(q.dim(), boundary);
    if interior.is_empty() {
        return Ok(SpectrumReport::from_clusters(level, Condition::Dirichlet, Vec::new()));
    }
    let qi = real_form(&q.principal(&interior))?;
    let bi: Vec<f64> = interior.iter().map(|&x| b[x]).collect();
    let eig = generalized_sym_eig(&qi, &bi)?;
    Ok(SpectrumReport::from_clusters(level, Condition::Dirichlet, clusters_of(&eig.values, CLUSTER_TOL)))
}

/// Eigenvalues admitting eigenfunctions that vanish on `boundary`, with the
/// dimension of that subspace as multiplicity.
pub fn nd_spectrum(q: &SymMatrix, b: &[f64], boundary: &[usize], level: usize) -> Result<SpectrumReport> {
    nd_spectrum_with_tol(q, b, boundary, level, CLUSTER_TOL)
}

pub fn nd_spectrum_with_tol(
    q: &SymMatrix,
    b: &[f64],
    boundary: &[usize],
    level: usize,
    cluster_tol: f64,
) -> Result<SpectrumReport> {
    let eig = generalized_sym_eig(&real_form(q)?, b)?;
    if complement(q.dim(), boundary).is_empty() {
        return Ok(SpectrumReport::from_clusters(level, Condition::Nd, Vec::new()));
    }
    let bmax = b.iter().cloned().fold(0.0, f64::max);
    let mut clusters = Vec::new();
    for r in cluster_ranges(&eig.values, cluster_tol) {
        let cols: Vec<usize> = r.clone().collect();
        let v = RMat::from_fn(boundary.len(), cols.len(), |i, k| eig.vectors[(boundary[i], cols[k])]);
        // Eigenvectors are b-normalised, so entries are of size 1/sqrt(b).
        let scale = bmax.sqrt().recip();
        let sv = v.singular_values();
        let trace_rank = sv.iter().filter(|&&s| s > 1e-9 * scale).count();
        let dim = cols.len() - trace_rank.min(cols.len());
        if dim > 0 {
            let value = eig.values[r.clone()].iter().sum::<f64>() / r.len() as f64;
            clusters.push(Cluster { value, multiplicity: dim });
        }
    }
    Ok(SpectrumReport::from_clusters(level, Condition::Nd, clusters))
}

/// `dim ker [Q + lambda I_b ; boundary rows]`, the direct definition of the
/// N-D multiplicity.
pub fn nd_dimension_stacked(q: &SymMatrix, b: &[f64], boundary: &[usize], lambda: f64, tol: f64) -> usize {
    let n = q.dim();
    let mut m = CMat::zeros(n + boundary.len(), n);
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] = q.get(i, j);
        }
        m[(i, i)] += lambda * b[i];
    }
    for (r, &x) in boundary.iter().enumerate() {
        m[(n + r, x)] = c(1.0, 0.0);
    }
    n - rank(&m, tol)
}

fn shifted(q: &SymMatrix, b: &[f64], lambda: C64, boundary: Option<&[usize]>) -> CMat {
    let mut m = q.as_matrix().clone();
    for i in 0..q.dim() {
        m[(i, i)] += lambda * b[i];
    }
    match boundary {
        None => m,
        Some(bd) => {
            let interior = complement(q.dim(), bd);
            submatrix(&m, &interior, &interior)
        }
    }
}

/// `det(Q + lambda I_b)`, or its interior principal minor when a boundary is given.
pub fn char_det(q: &SymMatrix, b: &[f64], lambda: C64, boundary: Option<&[usize]>) -> C64 {
    crate::linalg::det(&shifted(q, b, lambda, boundary))
}

/// `ln |det(Q + lambda I_b)|` computed from the LU factors, safe against overflow.
pub fn log_abs_char_det(q: &SymMatrix, b: &[f64], lambda: C64, boundary: Option<&[usize]>) -> f64 {
    let m = shifted(q, b, lambda, boundary);
    if m.nrows() == 0 {
        return 0.0;
    }
    let lu = m.lu();
    lu.u().diagonal().iter().map(|z| z.norm().ln()).sum()
}

/// `(1/norm) ln |det(Q + (lambda + i eps) I_b)|` over a grid.
pub fn green_proxy(q: &SymMatrix, b: &[f64], grid: &[f64], eps: f64, norm: f64, exec: Exec) -> Vec<f64> {
    exec.map_slice(grid, |&x| log_abs_char_det(q, b, c(x, eps), None) / norm)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Bin {
    pub left: f64,
    pub right: f64,
    pub mass: f64,
}

/// Histogram of `values`, each carrying `weight`, over `bins` equal bins of `[lo, hi]`.
/// Values outside the range are dropped; `hi` itself falls in the last bin.
pub fn dos_histogram(values: &[f64], weight: f64, bins: usize, lo: f64, hi: f64) -> Vec<Bin> {
    assert!(bins >= 1, "need at least one bin");
    let width = (hi - lo) / bins as f64;
    let mut out: Vec<Bin> = (0..bins)
        .map(|k| Bin { left: lo + k as f64 * width, right: lo + (k + 1) as f64 * width, mass: 0.0 })
        .collect();
    for &v in values {
        if v < lo || v > hi {
            continue;
        }
        let k = if width > 0.0 { (((v - lo) / width) as usize).min(bins - 1) } else { 0 };
        out[k].mass += weight;
    }
    out
}

/// Smallest interval containing every value, widened slightly when degenerate.
pub fn common_range(sets: &[&[f64]]) -> (f64, f64) {
    let lo = sets.iter().flat_map(|s| s.iter()).cloned().fold(f64::INFINITY, f64::min);
    let hi = sets.iter().flat_map(|s| s.iter()).cloned().fold(f64::NEG_INFINITY, f64::max);
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi > lo {
        (lo, hi)
    } else {
        (lo - 0.5, hi + 0.5)
    }
}

/// Sup distance between the weighted counting functions of two ascending
/// lists. A jump may be matched up to `tol` to its right, which absorbs
/// multiplets reported at values that differ only by rounding. `tol = 0`
/// gives the plain sup norm.
pub fn cdf_distance(a: &[f64], wa: f64, b: &[f64], wb: f64, tol: f64) -> f64 {
    let mut points: Vec<f64> = a.iter().chain(b).copied().collect();
    points.sort_by(f64::total_cmp);
    let count = |s: &[f64], x: f64| s.partition_point(|&v| v <= x) as f64;
    points
        .iter()
        .map(|&x| {
            let ab = count(a, x) * wa - count(b, x + tol) * wb;
            let ba = count(b, x) * wb - count(a, x + tol) * wa;
            ab.max(ba).max(0.0)
        })
        .fold(0.0, f64::max)
}

/// Slack used when comparing spectra: rounding scale of the common range.
pub fn cdf_tolerance(sets: &[&[f64]]) -> f64 {
    let (lo, hi) = common_range(sets);
    1e-9 * (hi - lo).max(1.0)
}

/// The bilinear pencil `Q + lambda I_b` in complex form.
pub fn pencil(q: &SymMatrix, b: &[f64], lambda: C64) -> SymMatrix {
    SymMatrix::from_upper(&shifted(q, b, lambda, None))
}

/// Real diagonal matrix `I_b`.
pub fn weight_matrix(b: &[f64]) -> CMat {
    to_complex(&RMat::from_diagonal(&nalgebra::DVector::from_column_slice(b)))
}

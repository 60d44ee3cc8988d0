//! Electrical networks, their quadratic forms, the trace map and gluing.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::linalg::{c, solve, submatrix, CMat, CVec, SymMatrix, C64};

/// Conductances on unordered pairs plus a dissipative term per vertex.
///
/// Values are ordinary reals. Physical networks have nonnegative entries;
/// weak connecting networks are allowed to carry signed values.
#[derive(Clone, Debug, PartialEq)]
pub struct ElectricalNetwork {
    size: usize,
    conductances: BTreeMap<(usize, usize), f64>,
    dissipative: Vec<f64>,
}

impl ElectricalNetwork {
    pub fn new(size: usize) -> Self {
        Self { size, conductances: BTreeMap::new(), dissipative: vec![0.0; size] }
    }

    /// Complete graph with unit conductances and no dissipation.
    pub fn complete(size: usize) -> Self {
        let mut net = Self::new(size);
        for i in 0..size {
            for j in i + 1..size {
                net.add_edge(i, j, 1.0);
            }
        }
        net
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// Adds `rho` to the conductance between `i` and `j`.
    pub fn add_edge(&mut self, i: usize, j: usize, rho: f64) {
        assert!(i != j && i < self.size && j < self.size, "edge ({i},{j}) out of range");
        *self.conductances.entry((i.min(j), i.max(j))).or_insert(0.0) += rho;
    }

    pub fn add_dissipative(&mut self, i: usize, rho: f64) {
        self.dissipative[i] += rho;
    }

    pub fn conductance(&self, i: usize, j: usize) -> f64 {
        self.conductances.get(&(i.min(j), i.max(j))).copied().unwrap_or(0.0)
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.conductances.iter().map(|(&(i, j), &r)| (i, j, r))
    }

    pub fn dissipative(&self) -> &[f64] {
        &self.dissipative
    }

    pub fn is_conservative(&self) -> bool {
        self.dissipative.iter().all(|&r| r == 0.0)
    }

    pub fn is_nonnegative(&self) -> bool {
        self.conductances.values().all(|&r| r >= 0.0) && self.dissipative.iter().all(|&r| r >= 0.0)
    }

    /// Connectedness of the graph of positive conductances.
    pub fn is_irreducible(&self) -> bool {
        if self.size == 0 {
            return true;
        }
        let mut seen = vec![false; self.size];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(v) = stack.pop() {
            for (i, j, r) in self.edges() {
                if r <= 0.0 {
                    continue;
                }
                let w = if i == v { j } else if j == v { i } else { continue };
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }
}

pub fn q_matrix(net: &ElectricalNetwork) -> SymMatrix {
    let k = net.size;
    let mut m = CMat::zeros(k, k);
    for i in 0..k {
        m[(i, i)] = c(net.dissipative[i], 0.0);
    }
    for (i, j, r) in net.edges() {
        m[(i, j)] -= r;
        m[(j, i)] -= r;
        m[(i, i)] += r;
        m[(j, j)] += r;
    }
    SymMatrix::from_upper(&m)
}

/// Recovers the network of a real Dirichlet-form matrix.
pub fn network_from_q(q: &SymMatrix) -> Result<ElectricalNetwork> {
    if !q.is_real(0.0) {
        return Err(Error::NotADirichletForm("complex entries".into()));
    }
    let k = q.dim();
    let mut net = ElectricalNetwork::new(k);
    for i in 0..k {
        let mut row = 0.0;
        for j in 0..k {
            let v = q.get(i, j).re;
            row += v;
            if j != i && v > 0.0 {
                return Err(Error::NotADirichletForm(format!("positive off-diagonal at ({i},{j})")));
            }
            if j > i && v != 0.0 {
                net.add_edge(i, j, -v);
            }
        }
        if row < 0.0 {
            return Err(Error::NotADirichletForm(format!("negative row sum at {i}")));
        }
        net.dissipative[i] = row;
    }
    Ok(net)
}

/// Dirichlet cone membership for a real matrix: off-diagonal entries at most
/// `tol`, row sums at least `-tol`.
pub fn is_dirichlet_form(q: &SymMatrix, tol: f64) -> bool {
    let k = q.dim();
    q.is_real(tol)
        && (0..k).all(|i| {
            let row: f64 = (0..k).map(|j| q.get(i, j).re).sum();
            row >= -tol && (0..k).all(|j| j == i || q.get(i, j).re <= tol)
        })
}

pub fn complement(size: usize, subset: &[usize]) -> Vec<usize> {
    let mut mark = vec![false; size];
    for &x in subset {
        mark[x] = true;
    }
    (0..size).filter(|&x| !mark[x]).collect()
}

fn check_subset(size: usize, subset: &[usize]) -> Result<()> {
    let mut mark = vec![false; size];
    for &x in subset {
        if x >= size || mark[x] {
            return Err(Error::DimensionMismatch(format!("bad vertex subset {subset:?} of {size} points")));
        }
        mark[x] = true;
    }
    if subset.is_empty() {
        return Err(Error::DimensionMismatch("empty boundary".into()));
    }
    Ok(())
}

/// Schur complement of the interior block onto `boundary` (kept in the given order).
pub fn trace_map(q: &SymMatrix, boundary: &[usize]) -> Result<SymMatrix> {
    check_subset(q.dim(), boundary)?;
    let interior = complement(q.dim(), boundary);
    let m = q.as_matrix();
    let qbb = submatrix(m, boundary, boundary);
    if interior.is_empty() {
        return Ok(SymMatrix::from_upper(&qbb));
    }
    let b = submatrix(m, boundary, &interior);
    let qii = submatrix(m, &interior, &interior);
    let x = solve(&qii, &b.transpose())?;
    Ok(SymMatrix::from_upper(&(qbb - b * x)))
}

/// Extension of boundary data that annihilates the interior rows of `q`.
pub fn harmonic_extension(q: &SymMatrix, boundary: &[usize], f: &CVec) -> Result<CVec> {
    check_subset(q.dim(), boundary)?;
    if f.len() != boundary.len() {
        return Err(Error::DimensionMismatch("boundary data length".into()));
    }
    let interior = complement(q.dim(), boundary);
    let mut out = CVec::zeros(q.dim());
    for (k, &x) in boundary.iter().enumerate() {
        out[x] = f[k];
    }
    if interior.is_empty() {
        return Ok(out);
    }
    let m = q.as_matrix();
    let bt = submatrix(m, &interior, boundary);
    let qii = submatrix(m, &interior, &interior);
    let rhs = -(bt * f);
    let h = solve(&qii, &CMat::from_column_slice(rhs.len(), 1, rhs.as_slice()))?;
    for (k, &x) in interior.iter().enumerate() {
        out[x] = h[(k, 0)];
    }
    Ok(out)
}

/// Surjection of `0..size` onto contiguous class ids `0..classes`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VertexPartition {
    class_of: Vec<usize>,
    classes: usize,
}

impl VertexPartition {
    pub fn identity(size: usize) -> Self {
        Self { class_of: (0..size).collect(), classes: size }
    }

    pub fn from_class_of(class_of: Vec<usize>) -> Result<Self> {
        let classes = class_of.iter().map(|&c| c + 1).max().unwrap_or(0);
        let mut hit = vec![false; classes];
        for &c in &class_of {
            hit[c] = true;
        }
        if let Some(empty) = hit.iter().position(|h| !h) {
            return Err(Error::DimensionMismatch(format!("class {empty} is empty")));
        }
        Ok(Self { class_of, classes })
    }

    /// Builds a partition from explicit classes; points not listed become singletons
    /// placed after the listed classes.
    pub fn from_classes(size: usize, classes: &[Vec<usize>]) -> Result<Self> {
        let mut class_of = vec![usize::MAX; size];
        for (id, cls) in classes.iter().enumerate() {
            if cls.is_empty() {
                return Err(Error::DimensionMismatch(format!("class {id} is empty")));
            }
            for &x in cls {
                if x >= size || class_of[x] != usize::MAX {
                    return Err(Error::DimensionMismatch(format!("point {x} misplaced in class {id}")));
                }
                class_of[x] = id;
            }
        }
        let mut next = classes.len();
        for slot in class_of.iter_mut().filter(|s| **s == usize::MAX) {
            *slot = next;
            next += 1;
        }
        Ok(Self { class_of, classes: next })
    }

    pub fn size(&self) -> usize {
        self.class_of.len()
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn class_of(&self, x: usize) -> usize {
        self.class_of[x]
    }

    pub fn as_map(&self) -> &[usize] {
        &self.class_of
    }

    pub fn members(&self, class: usize) -> Vec<usize> {
        (0..self.size()).filter(|&x| self.class_of[x] == class).collect()
    }
}

/// Pushforward `s^t Q s` of a form along a partition.
pub fn glue(q: &SymMatrix, part: &VertexPartition) -> SymMatrix {
    assert_eq!(q.dim(), part.size(), "partition size must match the matrix");
    let mut out = CMat::zeros(part.classes, part.classes);
    let m = q.as_matrix();
    for i in 0..q.dim() {
        for j in 0..q.dim() {
            out[(part.class_of[i], part.class_of[j])] += m[(i, j)];
        }
    }
    SymMatrix::from_upper(&out)
}

/// Bilinear energy `<Qf, f>`.
pub fn energy(q: &SymMatrix, f: &CVec) -> C64 {
    (q.as_matrix() * f).dot(f)
}

/// The current `Qf` seen as a covector.
pub fn current(q: &SymMatrix, f: &CVec) -> CVec {
    q.as_matrix() * f
}

//! Finite self-similar structures and the lattice tower they generate.
//!
//! Points of `{1..N} x F` are indexed `copy * K + vertex` (0-based). Level-n
//! vertices are ordered boundary first, then the remaining level-1 points,
//! then the interior vertices of each copy in copy order.

use crate::error::{Error, Result};
use crate::linalg::{c, CMat, SymMatrix};
use crate::network::{q_matrix, ElectricalNetwork, VertexPartition};

/// Per-copy conductance scalings `w` and measure scalings `b`.
#[derive(Clone, Debug, PartialEq)]
pub struct Weights {
    pub w: Vec<f64>,
    pub b: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SelfSimilarStructure {
    pub k: usize,
    pub copies: usize,
    /// Nontrivial classes of the gluing relation as `(copy, vertex)` lists.
    /// Points not listed are singletons.
    pub glue: Vec<Vec<(usize, usize)>>,
    /// Image of each vertex of `F` in `{1..N} x F`, in `F` order.
    pub boundary: Vec<(usize, usize)>,
    pub weights: Option<Weights>,
    /// Weak connecting network on the `N*K` points of `{1..N} x F`.
    pub weak: Option<ElectricalNetwork>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Diagnostics {
    pub errors: Vec<String>,
    /// Whether `w_i / b_i` is constant across copies; `None` without weights.
    pub hypothesis_h: Option<bool>,
}

impl Diagnostics {
    pub fn is_valid(&self) -> bool {
        self.errors.is_empty()
    }
}

impl SelfSimilarStructure {
    pub fn point(&self, copy: usize, vertex: usize) -> usize {
        copy * self.k + vertex
    }

    pub fn validate(&self) -> Diagnostics {
        let mut errors = Vec::new();
        let (k, n) = (self.k, self.copies);
        if k == 0 {
            errors.push("cell size must be positive".to_string());
        }
        if n < 2 {
            errors.push(format!("need at least 2 copies, got {n}"));
        }
        let in_range = |&(i, x): &(usize, usize)| i < n && x < k;
        let mut seen = vec![false; n * k];
        for (id, cls) in self.glue.iter().enumerate() {
            if cls.is_empty() {
                errors.push(format!("glue class {id} is empty"));
            }
            for p in cls {
                if !in_range(p) {
                    errors.push(format!("glue class {id} has out-of-range point {p:?}"));
                } else if std::mem::replace(&mut seen[self.point(p.0, p.1)], true) {
                    errors.push(format!("point {p:?} appears in more than one glue class"));
                }
            }
        }
        if self.boundary.len() != k {
            errors.push(format!("boundary has {} entries, expected {k}", self.boundary.len()));
        }
        if errors.is_empty() {
            let part = self.level_one_partition_unchecked();
            let mut targets: Vec<usize> = Vec::new();
            for p in &self.boundary {
                if !in_range(p) {
                    errors.push(format!("boundary point {p:?} out of range"));
                    continue;
                }
                let t = part.class_of(self.point(p.0, p.1));
                if targets.contains(&t) {
                    errors.push("boundary not injective".to_string());
                }
                targets.push(t);
            }
        }
        if let Some(wt) = &self.weights {
            if wt.w.len() != n || wt.b.len() != n {
                errors.push("weights must have one entry per copy".to_string());
            } else if wt.w.iter().chain(&wt.b).any(|&x| !(x > 0.0)) {
                errors.push("weights must be positive".to_string());
            }
        }
        if let Some(weak) = &self.weak {
            if weak.size() != n * k {
                errors.push(format!("weak network has {} points, expected {}", weak.size(), n * k));
            }
        }
        let hypothesis_h = self.weights.as_ref().filter(|w| w.w.len() == w.b.len()).map(|wt| {
            let g: Vec<f64> = wt.w.iter().zip(&wt.b).map(|(w, b)| w / b).collect();
            g.iter().all(|x| (x - g[0]).abs() <= 1e-12 * g[0].abs())
        });
        Diagnostics { errors, hypothesis_h }
    }

    fn ensure_valid(&self) -> Result<()> {
        let d = self.validate();
        if d.is_valid() {
            Ok(())
        } else {
            Err(Error::InvalidStructure(d.errors))
        }
    }

    fn level_one_partition_unchecked(&self) -> VertexPartition {
        let nk = self.copies * self.k;
        let mut raw = vec![usize::MAX; nk];
        for (id, cls) in self.glue.iter().enumerate() {
            for &(i, x) in cls {
                raw[self.point(i, x)] = id;
            }
        }
        let mut next = self.glue.len();
        for slot in raw.iter_mut().filter(|s| **s == usize::MAX) {
            *slot = next;
            next += 1;
        }
        // Renumber: boundary classes first in F order, then by first appearance.
        let mut new_id = vec![usize::MAX; next];
        let mut count = 0;
        let boundary_points = self.boundary.iter().filter(|&&(i, x)| i < self.copies && x < self.k);
        for &(i, x) in boundary_points {
            let r = raw[self.point(i, x)];
            if new_id[r] == usize::MAX {
                new_id[r] = count;
                count += 1;
            }
        }
        for p in 0..nk {
            if new_id[raw[p]] == usize::MAX {
                new_id[raw[p]] = count;
                count += 1;
            }
        }
        VertexPartition::from_class_of(raw.iter().map(|&r| new_id[r]).collect())
            .expect("renumbering is contiguous")
    }

    /// The map `{1..N} x F -> F_<1>` in canonical vertex order.
    pub fn level_one_partition(&self) -> Result<VertexPartition> {
        self.ensure_valid()?;
        Ok(self.level_one_partition_unchecked())
    }

    pub fn conductance_weight(&self, copy: usize) -> f64 {
        self.weights.as_ref().map_or(1.0, |w| w.w[copy])
    }

    pub fn measure_weight(&self, copy: usize) -> f64 {
        self.weights.as_ref().map_or(1.0, |w| w.b[copy])
    }

    /// Weak network matrix on `{1..N} x F` (zero when absent).
    pub fn weak_matrix(&self) -> SymMatrix {
        match &self.weak {
            Some(net) => q_matrix(net),
            None => SymMatrix::zeros(self.copies * self.k),
        }
    }

    pub fn has_weak(&self) -> bool {
        self.weak.as_ref().is_some_and(|w| w.edges().any(|e| e.2 != 0.0) || w.dissipative().iter().any(|&d| d != 0.0))
    }
}

/// The level-n lattice `F_<n>`.
#[derive(Clone, Debug)]
pub struct Lattice {
    pub level: usize,
    pub n_vertices: usize,
    /// Boundary vertices in `F` order; always `0..K` by construction.
    pub boundary: Vec<usize>,
    /// Vertex indices of each level-0 cell, addresses in lexicographic order.
    pub cells: Vec<Vec<usize>>,
    pub cell_weight: Vec<f64>,
    pub cell_mass: Vec<f64>,
    /// For each vertex, the top-level copies containing it.
    pub parent_copies: Vec<Vec<usize>>,
}

impl Lattice {
    /// Address `(i_1, .., i_n)` of cell number `idx`.
    pub fn address(&self, idx: usize, copies: usize) -> Vec<usize> {
        let mut out = vec![0; self.level];
        let mut r = idx;
        for slot in out.iter_mut().rev() {
            *slot = r % copies;
            r /= copies;
        }
        out
    }

    /// The partition of `N^n x F` onto the lattice vertices.
    pub fn cell_partition(&self) -> VertexPartition {
        VertexPartition::from_class_of(self.cells.iter().flatten().copied().collect())
            .expect("cell map is surjective")
    }
}

/// How copy `i` of a level-n lattice sits in level n+1.
fn copy_map<'a>(s: &SelfSimilarStructure, p1: &'a VertexPartition, prev_n: usize, i: usize) -> impl Fn(usize) -> usize + 'a {
    let m1 = p1.classes();
    let k = s.k;
    move |v| if v < k { p1.class_of(i * k + v) } else { m1 + i * (prev_n - k) + (v - k) }
}

fn next_size(p1: &VertexPartition, n_copies: usize, k: usize, prev_n: usize) -> usize {
    p1.classes() + n_copies * (prev_n - k)
}

pub fn level_zero(k: usize) -> Lattice {
    Lattice {
        level: 0,
        n_vertices: k,
        boundary: (0..k).collect(),
        cells: vec![(0..k).collect()],
        cell_weight: vec![1.0],
        cell_mass: vec![1.0],
        parent_copies: vec![Vec::new(); k],
    }
}

pub fn build_lattice(s: &SelfSimilarStructure, n: usize) -> Result<Lattice> {
    let p1 = s.level_one_partition()?;
    let mut lat = level_zero(s.k);
    for _ in 0..n {
        let prev = lat;
        let size = next_size(&p1, s.copies, s.k, prev.n_vertices);
        let mut cells = Vec::with_capacity(prev.cells.len() * s.copies);
        let mut cell_weight = Vec::with_capacity(cells.capacity());
        let mut cell_mass = Vec::with_capacity(cells.capacity());
        let mut parent_copies = vec![Vec::new(); size];
        for i in 0..s.copies {
            let map = copy_map(s, &p1, prev.n_vertices, i);
            for (ci, cell) in prev.cells.iter().enumerate() {
                cells.push(cell.iter().map(|&v| map(v)).collect());
                cell_weight.push(s.conductance_weight(i) * prev.cell_weight[ci]);
                cell_mass.push(s.measure_weight(i) * prev.cell_mass[ci]);
            }
            for v in 0..prev.n_vertices {
                let parents = &mut parent_copies[map(v)];
                if !parents.contains(&i) {
                    parents.push(i);
                }
            }
        }
        lat = Lattice {
            level: prev.level + 1,
            n_vertices: size,
            boundary: (0..s.k).collect(),
            cells,
            cell_weight,
            cell_mass,
            parent_copies,
        };
    }
    Ok(lat)
}

/// One recursion step: copies of `q` (a form on a level-n lattice with
/// `q.dim()` vertices) glued together plus the weak network on the joining points.
pub fn assemble_step(s: &SelfSimilarStructure, p1: &VertexPartition, q: &SymMatrix) -> SymMatrix {
    let prev_n = q.dim();
    let size = next_size(p1, s.copies, s.k, prev_n);
    let mut out = CMat::zeros(size, size);
    let m = q.as_matrix();
    for i in 0..s.copies {
        let map = copy_map(s, p1, prev_n, i);
        let idx: Vec<usize> = (0..prev_n).map(&map).collect();
        let w = c(s.conductance_weight(i), 0.0);
        for a in 0..prev_n {
            for b in 0..prev_n {
                out[(idx[a], idx[b])] += m[(a, b)] * w;
            }
        }
    }
    if s.has_weak() {
        let weak = s.weak_matrix();
        let wm = weak.as_matrix();
        let nk = s.copies * s.k;
        for a in 0..nk {
            for b in 0..nk {
                out[(p1.class_of(a), p1.class_of(b))] += wm[(a, b)];
            }
        }
    }
    SymMatrix::from_upper(&out)
}

/// The level-n form `Q_<n>` built from a (possibly complex) form on `F`.
pub fn assemble_matrix(s: &SelfSimilarStructure, q: &SymMatrix, n: usize) -> Result<SymMatrix> {
    if q.dim() != s.k {
        return Err(Error::DimensionMismatch(format!("form has size {}, cell has {}", q.dim(), s.k)));
    }
    let p1 = s.level_one_partition()?;
    let mut cur = q.clone();
    for _ in 0..n {
        cur = assemble_step(s, &p1, &cur);
    }
    Ok(cur)
}

pub fn assemble_network(s: &SelfSimilarStructure, net: &ElectricalNetwork, n: usize) -> Result<SymMatrix> {
    assemble_matrix(s, &q_matrix(net), n)
}

pub fn assemble_measure(s: &SelfSimilarStructure, b: &[f64], n: usize) -> Result<Vec<f64>> {
    if let Some(&bad) = b.iter().find(|&&x| !(x > 0.0)) {
        return Err(Error::NonPositiveWeight(bad));
    }
    if b.len() != s.k {
        return Err(Error::DimensionMismatch("measure length".into()));
    }
    let p1 = s.level_one_partition()?;
    let mut cur = b.to_vec();
    for _ in 0..n {
        let prev_n = cur.len();
        let mut next = vec![0.0; next_size(&p1, s.copies, s.k, prev_n)];
        for i in 0..s.copies {
            let map = copy_map(s, &p1, prev_n, i);
            for (v, &mass) in cur.iter().enumerate() {
                next[map(v)] += s.measure_weight(i) * mass;
            }
        }
        cur = next;
    }
    Ok(cur)
}

pub fn sierpinski() -> SelfSimilarStructure {
    SelfSimilarStructure {
        k: 3,
        copies: 3,
        glue: vec![vec![(0, 1), (1, 0)], vec![(1, 2), (2, 1)], vec![(0, 2), (2, 0)]],
        boundary: vec![(0, 0), (1, 1), (2, 2)],
        weights: None,
        weak: None,
    }
}

/// Three triangles joined by two weak triangles: one through the points
/// `(i, i+1)` with conductance `r` and dissipation `v`, one through `(i, i-1)`
/// with `r2` and `v2`.
pub fn gamma_bar_semi(r: f64, r2: f64, v: f64, v2: f64) -> SelfSimilarStructure {
    let k = 3;
    let a: Vec<usize> = (0..3).map(|i| i * k + (i + 1) % 3).collect();
    let b: Vec<usize> = (0..3).map(|i| i * k + (i + 2) % 3).collect();
    let mut weak = ElectricalNetwork::new(9);
    for (pts, rho, diss) in [(&a, r, v), (&b, r2, v2)] {
        for x in 0..3 {
            weak.add_edge(pts[x], pts[(x + 1) % 3], rho);
            weak.add_dissipative(pts[x], diss);
        }
    }
    SelfSimilarStructure {
        k,
        copies: 3,
        glue: Vec::new(),
        boundary: vec![(0, 0), (1, 1), (2, 2)],
        weights: None,
        weak: Some(weak),
    }
}

pub fn gamma_bar(r: f64, v: f64) -> SelfSimilarStructure {
    gamma_bar_semi(r, r, v, v)
}

/// Two copies of a segment joined end to end.
pub fn unit_interval() -> SelfSimilarStructure {
    SelfSimilarStructure {
        k: 2,
        copies: 2,
        glue: vec![vec![(0, 1), (1, 0)]],
        boundary: vec![(0, 0), (1, 1)],
        weights: None,
        weak: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::C64;

    #[test]
    fn sierpinski_counts() {
        let s = sierpinski();
        assert!(s.validate().is_valid());
        let l1 = build_lattice(&s, 1).unwrap();
        assert_eq!(l1.n_vertices, 6);
        assert_eq!(l1.boundary, vec![0, 1, 2]);
        assert_eq!(build_lattice(&s, 2).unwrap().n_vertices, 15);
        let l0 = build_lattice(&s, 0).unwrap();
        assert_eq!((l0.n_vertices, l0.boundary.clone()), (3, vec![0, 1, 2]));
    }

    #[test]
    fn invalid_structures_reported() {
        let mut s = sierpinski();
        s.boundary[2] = (0, 0);
        assert!(s.validate().errors.iter().any(|e| e.contains("not injective")));
        let mut s = sierpinski();
        s.glue.push(Vec::new());
        assert!(s.validate().errors.iter().any(|e| e.contains("empty")));
        let mut s = sierpinski();
        s.copies = 1;
        assert!(!s.validate().is_valid());
    }

    #[test]
    fn gasket_level_one_laplacian() {
        let s = sierpinski();
        let q = assemble_network(&s, &ElectricalNetwork::complete(3), 1).unwrap();
        for v in 0..6 {
            let want = if v < 3 { 2.0 } else { 4.0 };
            assert_eq!(q.get(v, v), c(want, 0.0));
            let row: C64 = (0..6).map(|j| q.get(v, j)).sum();
            assert_eq!(row, c(0.0, 0.0));
        }
    }

    #[test]
    fn measures() {
        let s = sierpinski();
        let b1 = assemble_measure(&s, &[1.0; 3], 1).unwrap();
        assert_eq!(b1, vec![1.0, 1.0, 1.0, 2.0, 2.0, 2.0]);
        assert_eq!(assemble_measure(&s, &[1.0, 2.0, 3.0], 0).unwrap(), vec![1.0, 2.0, 3.0]);
        let mut w = sierpinski();
        w.weights = Some(Weights { w: vec![1.0; 3], b: vec![0.5, 0.25, 0.25] });
        assert_eq!(assemble_measure(&w, &[1.0; 3], 1).unwrap()[0], 0.5);
        assert!(matches!(assemble_measure(&s, &[1.0, 0.0, 1.0], 1), Err(Error::NonPositiveWeight(_))));
    }

    #[test]
    fn hypothesis_h_status() {
        let mut s = sierpinski();
        assert_eq!(s.validate().hypothesis_h, None);
        s.weights = Some(Weights { w: vec![2.0, 4.0, 6.0], b: vec![1.0, 2.0, 3.0] });
        assert_eq!(s.validate().hypothesis_h, Some(true));
        s.weights = Some(Weights { w: vec![2.0, 4.0, 6.0], b: vec![1.0, 1.0, 1.0] });
        assert_eq!(s.validate().hypothesis_h, Some(false));
    }

    #[test]
    fn gamma_bar_weak_net() {
        let s = gamma_bar(1.0, 2.0);
        let weak = s.weak.as_ref().unwrap();
        assert_eq!(weak.edges().filter(|e| e.2 == 1.0).count(), 6);
        assert_eq!(weak.dissipative().iter().filter(|&&d| d == 2.0).count(), 6);
        assert_eq!(build_lattice(&s, 1).unwrap().n_vertices, 9);
    }
}

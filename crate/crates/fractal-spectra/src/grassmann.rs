//! The even Grassmann algebra `A_F` spanned by balanced monomials in
//! `eta_bar` and `eta`.
//!
//! A key `(I, J)` (bitmasks, `|I| = |J| = k`) stands for the paired monomial
//! `(eta_bar_{i1} eta_{j1}) ... (eta_bar_{ik} eta_{jk})` with both index lists
//! ascending. The pairs are even and commute, so with this basis the
//! coefficient of `(I, J)` in `exp(eta_bar Q eta)` is exactly `det Q_{I,J}`.
//! Keys are kept in a `BTreeMap` so that every sum is formed in a fixed order.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::linalg::{c, det, submatrix, SymMatrix, C64};
use crate::network::VertexPartition;
use crate::structure::SelfSimilarStructure;

pub type Key = (u64, u64);

#[derive(Clone, Debug, PartialEq)]
pub struct GrassmannElement {
    k: usize,
    coeffs: BTreeMap<Key, C64>,
}

fn mask_of(idx: &[usize]) -> u64 {
    idx.iter().fold(0, |m, &i| m | (1u64 << i))
}

fn indices(mut m: u64) -> Vec<usize> {
    let mut out = Vec::with_capacity(m.count_ones() as usize);
    while m != 0 {
        out.push(m.trailing_zeros() as usize);
        m &= m - 1;
    }
    out
}

/// Number of pairs `(a in A, b in B)` with `a > b`.
fn inversions(a: u64, b: u64) -> u32 {
    let mut n = 0;
    let mut bm = b;
    while bm != 0 {
        let j = bm.trailing_zeros();
        n += (a >> j >> 1).count_ones();
        bm &= bm - 1;
    }
    n
}

fn sign(parity: u32) -> f64 {
    if parity % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Parity of the permutation sorting `seq` (assumed distinct).
fn sort_parity(seq: &[usize]) -> u32 {
    let mut n = 0;
    for i in 0..seq.len() {
        for j in i + 1..seq.len() {
            if seq[i] > seq[j] {
                n += 1;
            }
        }
    }
    n
}

/// Number of balanced monomials over `k` generators pairs, `C(2k, k)`.
pub fn basis_dimension(k: usize) -> u64 {
    (1..=k as u64).fold(1, |acc, i| acc * (k as u64 + i) / i)
}

impl GrassmannElement {
    pub fn zero(k: usize) -> Self {
        assert!(k <= 64, "at most 64 generators");
        Self { k, coeffs: BTreeMap::new() }
    }

    pub fn unit(k: usize) -> Self {
        Self::monomial(k, &[], &[], c(1.0, 0.0))
    }

    pub fn monomial(k: usize, i: &[usize], j: &[usize], coeff: C64) -> Self {
        assert_eq!(i.len(), j.len(), "monomials are balanced");
        let mut out = Self::zero(k);
        out.coeffs.insert((mask_of(i), mask_of(j)), coeff);
        out
    }

    pub fn ground_size(&self) -> usize {
        self.k
    }

    pub fn coeff(&self, i: &[usize], j: &[usize]) -> C64 {
        self.coeffs.get(&(mask_of(i), mask_of(j))).copied().unwrap_or_default()
    }

    pub fn coeff_by_key(&self, key: Key) -> C64 {
        self.coeffs.get(&key).copied().unwrap_or_default()
    }

    pub fn terms(&self) -> impl Iterator<Item = (Key, C64)> + '_ {
        self.coeffs.iter().map(|(&k, &v)| (k, v))
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    fn accumulate(&mut self, key: Key, v: C64) {
        if v != C64::default() {
            *self.coeffs.entry(key).or_default() += v;
        }
    }

    pub fn norm(&self) -> f64 {
        self.coeffs.values().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn scale(&self, a: C64) -> Self {
        Self { k: self.k, coeffs: self.coeffs.iter().map(|(&key, &v)| (key, v * a)).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.k, other.k);
        let mut out = self.clone();
        for (key, v) in other.terms() {
            *out.coeffs.entry(key).or_default() += v;
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(c(-1.0, 0.0)))
    }

    /// Largest coefficient difference relative to the largest coefficient of `other`.
    pub fn relative_error(&self, other: &Self) -> f64 {
        let diff = self.sub(other).coeffs.values().fold(0.0f64, |m, z| m.max(z.norm()));
        let scale = other.coeffs.values().fold(0.0f64, |m, z| m.max(z.norm()));
        if scale == 0.0 {
            diff
        } else {
            diff / scale
        }
    }
}

/// Product of two elements over the same generators.
pub fn mul(x: &GrassmannElement, y: &GrassmannElement) -> GrassmannElement {
    assert_eq!(x.k, y.k, "product over different ground sets");
    let mut out = GrassmannElement::zero(x.k);
    for (&(i1, j1), &a) in &x.coeffs {
        for (&(i2, j2), &b) in &y.coeffs {
            if i1 & i2 != 0 || j1 & j2 != 0 {
                continue;
            }
            let s = sign(inversions(i1, i2) + inversions(j1, j2));
            out.accumulate((i1 | i2, j1 | j2), a * b * s);
        }
    }
    out
}

/// `exp(eta_bar Q eta)`, built as the product of `1 + Q_ij eta_bar_i eta_j`.
pub fn exp_eta(q: &SymMatrix) -> GrassmannElement {
    let k = q.dim();
    let mut out = GrassmannElement::unit(k);
    for i in 0..k {
        for j in 0..k {
            let v = q.get(i, j);
            if v != C64::default() {
                let mut f = GrassmannElement::unit(k);
                f.coeffs.insert((1 << i, 1 << j), v);
                out = mul(&out, &f);
            }
        }
    }
    out
}

/// `exp(eta_bar Q eta)` from its definition as the table of all minors.
pub fn exp_eta_minors(q: &SymMatrix) -> GrassmannElement {
    let k = q.dim();
    let mut out = GrassmannElement::zero(k);
    for im in 0..(1u64 << k) {
        for jm in 0..(1u64 << k) {
            if im.count_ones() == jm.count_ones() {
                out.accumulate((im, jm), det(&submatrix(q.as_matrix(), &indices(im), &indices(jm))));
            }
        }
    }
    out
}

/// Interior product by `prod_{x in S} eta_bar_x eta_x`. The result lives on
/// the complement of `S`, relabelled in ascending order.
pub fn interior_reduce(x: &GrassmannElement, interior: &[usize]) -> GrassmannElement {
    let s = mask_of(interior);
    let keep: Vec<usize> = (0..x.k).filter(|&v| s >> v & 1 == 0).collect();
    let compress = |m: u64| keep.iter().enumerate().fold(0u64, |acc, (new, &old)| acc | ((m >> old & 1) << new));
    let mut out = GrassmannElement::zero(keep.len());
    for (&(i, j), &v) in &x.coeffs {
        if i & s != s || j & s != s {
            continue;
        }
        let (ri, rj) = (i & !s, j & !s);
        let sg = sign(inversions(s, ri) + inversions(s, rj));
        out.accumulate((compress(ri), compress(rj)), v * sg);
    }
    out
}

/// Image under the algebra morphism `eta_x -> eta_{map(x)}` into `target` generators.
pub fn glue_morphism_map(x: &GrassmannElement, map: &[usize], target: usize) -> GrassmannElement {
    assert_eq!(map.len(), x.k, "map must cover the ground set");
    let mut out = GrassmannElement::zero(target);
    for (&(i, j), &v) in &x.coeffs {
        let mi: Vec<usize> = indices(i).iter().map(|&a| map[a]).collect();
        let mj: Vec<usize> = indices(j).iter().map(|&a| map[a]).collect();
        let (im, jm) = (mask_of(&mi), mask_of(&mj));
        if im.count_ones() as usize != mi.len() || jm.count_ones() as usize != mj.len() {
            continue;
        }
        out.accumulate((im, jm), v * sign(sort_parity(&mi) + sort_parity(&mj)));
    }
    out
}

pub fn glue_morphism(x: &GrassmannElement, part: &VertexPartition) -> GrassmannElement {
    glue_morphism_map(x, part.as_map(), part.classes())
}

/// Multiplies degree-k coefficients by `alpha^k`.
pub fn tau_scale(x: &GrassmannElement, alpha: C64) -> Result<GrassmannElement> {
    if alpha == C64::default() {
        return Err(Error::ZeroScale);
    }
    let coeffs = x.coeffs.iter().map(|(&key, &v)| (key, v * alpha.powi(key.0.count_ones() as i32))).collect();
    Ok(GrassmannElement { k: x.k, coeffs })
}

pub fn tau_translate(x: &GrassmannElement, q0: &SymMatrix) -> GrassmannElement {
    mul(&exp_eta(q0), x)
}

/// Pairing with the top monomial (`plus`) or with the unit.
pub fn pair(x: &GrassmannElement, plus: bool) -> C64 {
    let full = if x.k == 64 { u64::MAX } else { (1u64 << x.k) - 1 };
    if plus {
        x.coeff_by_key((full, full))
    } else {
        x.coeff_by_key((0, 0))
    }
}

/// The symmetric matrix of a decomposable element `a exp(eta_bar Q eta)`.
pub fn projectivize(x: &GrassmannElement) -> Result<SymMatrix> {
    let unit = x.coeff_by_key((0, 0));
    if unit.norm() <= 1e-12 * x.norm() || x.is_empty() {
        return Err(Error::AtInfinity);
    }
    Ok(SymMatrix::from_fn(x.k, |i, j| x.coeff_by_key((1 << i, 1 << j)) / unit))
}

/// The level-1 renormalisation lift: copies of `x` glued into `A_{F_<1>}` one
/// at a time, multiplied together with the weak term, then reduced onto the
/// boundary.
pub fn renorm_lift(x: &GrassmannElement, s: &SelfSimilarStructure) -> Result<GrassmannElement> {
    if x.k != s.k {
        return Err(Error::DimensionMismatch(format!("element has {} generators, cell has {}", x.k, s.k)));
    }
    let p1 = s.level_one_partition()?;
    let m = p1.classes();
    let mut acc = GrassmannElement::unit(m);
    for i in 0..s.copies {
        let scaled = tau_scale(x, c(s.conductance_weight(i), 0.0))?;
        let map: Vec<usize> = (0..s.k).map(|v| p1.class_of(s.point(i, v))).collect();
        acc = mul(&acc, &glue_morphism_map(&scaled, &map, m));
    }
    if s.has_weak() {
        acc = tau_translate(&acc, &crate::network::glue(&s.weak_matrix(), &p1));
    }
    let interior: Vec<usize> = (s.k..m).collect();
    Ok(interior_reduce(&acc, &interior))
}

/// Default scale ladder for [`vanishing_order`].
pub const ORDER_SCALES: [f64; 4] = [1e-2, 1e-3, 1e-4, 1e-5];

/// Numeric order of vanishing at `t = 0` of a function known through its norm.
///
/// Each scale `t` gives the estimate `log2(|f(2t)| / |f(t)|)`. Coarse scales
/// carry `O(t)` corrections, so the ladder is read from the fine end: the two
/// finest estimates must agree within 0.2 and sit within 0.2 of an integer.
pub fn vanishing_order_by_norm(norm: impl Fn(f64) -> f64, scales: &[f64]) -> Result<usize> {
    let est: Vec<f64> = scales.iter().map(|&t| (norm(2.0 * t) / norm(t)).log2()).collect();
    let n = est.len();
    if n < 2 || est.iter().any(|e| !e.is_finite()) {
        return Err(Error::OrderUnstable(est));
    }
    let (a, b) = (est[n - 2], est[n - 1]);
    if (a - b).abs() > 0.2 || (b - b.round()).abs() > 0.2 || b.round() < 0.0 {
        return Err(Error::OrderUnstable(est));
    }
    Ok(b.round() as usize)
}

/// Order of vanishing of `lambda -> curve(lambda)` at `lambda0`, probing along
/// the real direction.
pub fn vanishing_order(
    curve: impl Fn(C64) -> GrassmannElement,
    lambda0: C64,
    scales: &[f64],
) -> Result<usize> {
    vanishing_order_by_norm(|t| curve(lambda0 + t).norm(), scales)
}

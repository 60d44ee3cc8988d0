//! The renormalisation map on symmetric matrices (`T`), on Lagrangian frames
//! (`g`), and in projector coordinates for symmetric structures.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grassmann::{exp_eta, mul, renorm_lift, vanishing_order_by_norm, GrassmannElement, ORDER_SCALES};
use crate::linalg::{c, kernel_basis, sym_eig, to_complex, CMat, RMat, SymMatrix, C64};
use crate::network::trace_map;
use crate::par::Exec;
use crate::structure::{assemble_step, SelfSimilarStructure};
use crate::symplectic::{in_siegel, reduce, reduction_defect, w_renorm, LagrangianFrame};

/// Orthogonal decomposition `I = P_0 + ... + P_r` into real projectors.
#[derive(Clone, Debug)]
pub struct CoordinateChart {
    projectors: Vec<RMat>,
    dims: Vec<usize>,
    bases: Vec<RMat>,
}

impl CoordinateChart {
    pub fn new(projectors: Vec<RMat>) -> Result<Self> {
        let k = projectors.first().map(|p| p.nrows()).ok_or(Error::InvalidChart("no projectors".into()))?;
        let tol = 1e-10;
        let mut sum = RMat::zeros(k, k);
        for (i, p) in projectors.iter().enumerate() {
            if p.shape() != (k, k) {
                return Err(Error::InvalidChart(format!("projector {i} has the wrong shape")));
            }
            if (p - p.transpose()).amax() > tol || (p * p - p).amax() > tol {
                return Err(Error::InvalidChart(format!("P_{i} is not a symmetric idempotent")));
            }
            for (j, q) in projectors.iter().enumerate().skip(i + 1) {
                if (p * q).amax() > tol {
                    return Err(Error::InvalidChart(format!("P_{i} P_{j} != 0")));
                }
            }
            sum += p;
        }
        if (sum - RMat::identity(k, k)).amax() > tol {
            return Err(Error::InvalidChart("projectors do not sum to the identity".into()));
        }
        let mut dims = Vec::new();
        let mut bases = Vec::new();
        for p in &projectors {
            let eig = sym_eig(p);
            let cols: Vec<usize> = (0..k).filter(|&j| eig.values[j] > 0.5).collect();
            dims.push(cols.len());
            bases.push(RMat::from_fn(k, cols.len(), |r, j| eig.vectors[(r, cols[j])]));
        }
        if dims.contains(&0) {
            return Err(Error::InvalidChart("zero projector".into()));
        }
        Ok(Self { projectors, dims, bases })
    }

    /// Constants and their orthogonal complement on `C^k`.
    pub fn constants(k: usize) -> Self {
        let p0 = RMat::from_element(k, k, 1.0 / k as f64);
        let p1 = RMat::identity(k, k) - &p0;
        Self::new(vec![p0, p1]).expect("constants chart is valid")
    }

    pub fn k(&self) -> usize {
        self.projectors[0].nrows()
    }

    pub fn len(&self) -> usize {
        self.projectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.projectors.is_empty()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn projectors(&self) -> &[RMat] {
        &self.projectors
    }

    /// Orthonormal basis of the range of `P_i`, as columns.
    pub fn basis(&self, i: usize) -> &RMat {
        &self.bases[i]
    }

    /// `sum_i u_i P_i`.
    pub fn matrix(&self, u: &[C64]) -> SymMatrix {
        let k = self.k();
        let mut m = CMat::zeros(k, k);
        for (p, &ui) in self.projectors.iter().zip(u) {
            m += to_complex(p) * ui;
        }
        SymMatrix::from_upper(&m)
    }

    /// Coordinates `tr(P_i Q) / p_i` of a matrix commuting with every `P_i`.
    pub fn coords(&self, q: &SymMatrix) -> Result<Vec<C64>> {
        let qm = q.as_matrix();
        let scale = qm.norm();
        let mut out = Vec::with_capacity(self.len());
        for (p, &d) in self.projectors.iter().zip(&self.dims) {
            let pc = to_complex(p);
            let comm = (&pc * qm - qm * &pc).norm();
            // Rounding noise of a vanishing image is let through in absolute terms.
            if comm > 1e-8 * scale && comm > 1e-13 {
                return Err(Error::NotEquivariant(comm / scale));
            }
            out.push((&pc * qm).trace() / d as f64);
        }
        Ok(out)
    }

    /// The Lagrangian of a homogeneous point: `span{(v_i f, u_i f)}` over the
    /// basis vectors `f` of each block.
    pub fn frame(&self, point: &[(C64, C64)]) -> Result<LagrangianFrame> {
        let k = self.k();
        let mut f = CMat::zeros(2 * k, k);
        let mut col = 0;
        for (i, &(u, v)) in point.iter().enumerate() {
            let b = &self.bases[i];
            for j in 0..b.ncols() {
                for r in 0..k {
                    f[(r, col)] = v * b[(r, j)];
                    f[(k + r, col)] = u * b[(r, j)];
                }
                col += 1;
            }
        }
        LagrangianFrame::new(f)
    }

    /// Homogeneous coordinates `(u_i, v_i)` of an equivariant Lagrangian.
    pub fn frame_coords(&self, l: &LagrangianFrame) -> Vec<(C64, C64)> {
        let (x, y) = (l.x(), l.xi());
        self.bases
            .iter()
            .map(|b| {
                let bc = to_complex(b);
                let mx = bc.transpose() * &x;
                let my = bc.transpose() * &y;
                let mut stacked = CMat::zeros(2 * mx.nrows(), mx.ncols());
                stacked.rows_mut(0, mx.nrows()).copy_from(&mx);
                stacked.rows_mut(mx.nrows(), my.nrows()).copy_from(&my);
                let svd = stacked.svd(false, true);
                let vt = svd.v_t.expect("requested");
                let best = (0..svd.singular_values.len())
                    .max_by(|&a, &b| svd.singular_values[a].total_cmp(&svd.singular_values[b]))
                    .unwrap_or(0);
                let z = vt.row(best).adjoint();
                let (a, b) = (&mx * &z, &my * &z);
                // Both images are multiples of one vector; project onto the larger.
                let w = if a.norm() >= b.norm() { &a } else { &b };
                let (u, v) = (w.dotc(&b), w.dotc(&a));
                // Fix the phase so that v, or else u, is real and positive.
                let pivot = if v.norm() > 1e-12 { v } else { u };
                let n = (u.norm_sqr() + v.norm_sqr()).sqrt() * pivot.norm();
                (u * pivot.conj() / n, v * pivot.conj() / n)
            })
            .collect()
    }
}

/// The level-1 form `glue(sum_i w_i Q) + Q_weak` on `F_<1>`.
pub fn level_one(q: &SymMatrix, s: &SelfSimilarStructure) -> Result<SymMatrix> {
    if q.dim() != s.k {
        return Err(Error::DimensionMismatch(format!("form has size {}, cell has {}", q.dim(), s.k)));
    }
    Ok(assemble_step(s, &s.level_one_partition()?, q))
}

/// `T(Q)`: the level-1 form traced onto the boundary, which is `0..K` in `F` order.
pub fn t_map(q: &SymMatrix, s: &SelfSimilarStructure) -> Result<SymMatrix> {
    let boundary: Vec<usize> = (0..s.k).collect();
    trace_map(&level_one(q, s)?, &boundary)
}

/// `g(L)` together with the reduction defect `dim(L~ cap W°)`.
pub fn g_map(l: &LagrangianFrame, s: &SelfSimilarStructure) -> Result<(LagrangianFrame, usize)> {
    let copies: Vec<LagrangianFrame> =
        (0..s.copies).map(|i| l.scale(c(s.conductance_weight(i), 0.0))).collect();
    let mut big = LagrangianFrame::direct_sum(&copies);
    if s.has_weak() {
        big = big.translate(&s.weak_matrix());
    }
    let w = w_renorm(s)?;
    Ok((reduce(&big, &w), reduction_defect(&big, &w)))
}

pub fn coords_eval(u: &[C64], chart: &CoordinateChart, s: &SelfSimilarStructure) -> Result<Vec<C64>> {
    chart.coords(&t_map(&chart.matrix(u), s)?)
}

/// `prod_i prod_k (v_i + u_i xi_bar_i^k xi_i^k)`.
pub fn s_hat(point: &[(C64, C64)], chart: &CoordinateChart) -> GrassmannElement {
    let k = chart.k();
    let mut out = GrassmannElement::unit(k);
    for (i, &(u, v)) in point.iter().enumerate() {
        let b = chart.basis(i);
        for j in 0..b.ncols() {
            let f = b.column(j);
            let ff = SymMatrix::from_fn(k, |a, bb| c(f[a] * f[bb], 0.0));
            // exp(f f^t) = 1 + xi_bar xi, since the pair squares to zero.
            let factor = exp_eta(&ff).scale(u).add(&GrassmannElement::unit(k).scale(v - u));
            out = mul(&out, &factor);
        }
    }
    out
}

/// Largest degree of the numerator or denominator of a rational function of
/// one variable, sampled on circles.
fn rational_degree(f: &dyn Fn(C64) -> Result<C64>, max_degree: usize, center: C64, radius: f64) -> Result<usize> {
    for d in 0..=max_degree {
        let m = 2 * d + 3;
        let fit_pts: Vec<C64> =
            (0..m).map(|k| center + C64::from_polar(radius, std::f64::consts::TAU * (k as f64 + 0.1) / m as f64)).collect();
        let check_pts: Vec<C64> = (0..5)
            .map(|k| center + C64::from_polar(0.7 * radius, std::f64::consts::TAU * (k as f64 + 0.37) / 5.0))
            .collect();
        let fit_vals = fit_pts.iter().map(|&z| f(z)).collect::<Result<Vec<_>>>()?;
        let mut a = CMat::zeros(m, 2 * d + 2);
        for (r, (&z, &fz)) in fit_pts.iter().zip(&fit_vals).enumerate() {
            let mut zp = c(1.0, 0.0);
            for e in 0..=d {
                a[(r, e)] = zp;
                a[(r, d + 1 + e)] = -fz * zp;
                zp *= z - center;
            }
        }
        let null = kernel_basis(&a, 0.0);
        let coef = if null.dim() > 0 {
            null.basis.column(0).into_owned()
        } else {
            let svd = a.clone().svd(false, true);
            let vt = svd.v_t.expect("requested");
            let smallest = (0..svd.singular_values.len())
                .min_by(|&x, &y| svd.singular_values[x].total_cmp(&svd.singular_values[y]))
                .unwrap();
            vt.row(smallest).adjoint()
        };
        let eval = |z: C64| {
            let (mut p, mut q, mut zp) = (C64::default(), C64::default(), c(1.0, 0.0));
            for e in 0..=d {
                p += coef[e] * zp;
                q += coef[d + 1 + e] * zp;
                zp *= z - center;
            }
            p / q
        };
        let mut ok = true;
        for &z in &check_pts {
            let want = f(z)?;
            if (eval(z) - want).norm() > 1e-7 * want.norm().max(1.0) {
                ok = false;
                break;
            }
        }
        if ok {
            return Ok(d);
        }
    }
    Err(Error::DegreeUnresolved(max_degree))
}

fn random_c(rng: &mut ChaCha8Rng) -> C64 {
    c(rng.gen_range(-1.0..1.0), rng.gen_range(0.2..1.5))
}

/// Degree matrix: entry `[i][j]` is the degree of output coordinate `j` in
/// the input pair `i`, so that `N p_i = sum_j d[i][j] p_j + h_i`.
pub fn bidegree_estimate(
    s: &SelfSimilarStructure,
    chart: &CoordinateChart,
    seed: u64,
    exec: Exec,
) -> Result<Vec<Vec<usize>>> {
    let r = chart.len();
    let jobs: Vec<(usize, usize)> = (0..r).flat_map(|i| (0..r).map(move |j| (i, j))).collect();
    let results = exec.map_slice(&jobs, |&(i, j)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ((i * 64 + j) as u64).wrapping_mul(0x9e37_79b9));
        let mut last = Err(Error::DegreeUnresolved(8));
        for _ in 0..3 {
            let base: Vec<C64> = (0..r).map(|_| random_c(&mut rng)).collect();
            let f = |z: C64| {
                let mut u = base.clone();
                u[i] = z;
                Ok(coords_eval(&u, chart, s)?[j])
            };
            last = rational_degree(&f, 8, base[i], 0.5);
            if last.is_ok() {
                break;
            }
        }
        last
    });
    let mut out = vec![vec![0; r]; r];
    for (&(i, j), res) in jobs.iter().zip(results) {
        out[i][j] = res?;
    }
    Ok(out)
}

/// The locus `a u_j + b v_j = 0` in pair `j`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Locus {
    pub pair: usize,
    pub a: C64,
    pub b: C64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BalanceReport {
    /// `N p_i` for each pair.
    pub lhs: Vec<usize>,
    /// `sum_j d[i][j] p_j + h_i` for each pair.
    pub rhs: Vec<usize>,
    pub h: Vec<usize>,
}

impl BalanceReport {
    pub fn holds(&self) -> bool {
        self.lhs == self.rhs
    }
}

pub fn balance(s: &SelfSimilarStructure, chart: &CoordinateChart, degrees: &[Vec<usize>], h: &[usize]) -> BalanceReport {
    let p = chart.dims();
    let lhs = p.iter().map(|&pi| s.copies * pi).collect();
    let rhs = (0..p.len()).map(|i| (0..p.len()).map(|j| degrees[i][j] * p[j]).sum::<usize>() + h[i]).collect();
    BalanceReport { lhs, rhs, h: h.to_vec() }
}

/// Vanishing order of `R(s_hat(.))` across each locus, minimised over random
/// base points, plus the per-pair totals `h`.
pub fn divisor_orders(
    s: &SelfSimilarStructure,
    chart: &CoordinateChart,
    loci: &[Locus],
    seed: u64,
    exec: Exec,
) -> Result<(Vec<usize>, Vec<usize>)> {
    let r = chart.len();
    let orders = exec.map_slice(loci, |locus| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (locus.pair as u64 + 1).wrapping_mul(0x51_7cc1));
        let mut best: Option<usize> = None;
        let mut last_err = None;
        for _ in 0..3 {
            let base: Vec<(C64, C64)> = (0..r).map(|_| (random_c(&mut rng), c(1.0, 0.0) + random_c(&mut rng) * 0.3)).collect();
            let curve = |t: f64| {
                let mut pt = base.clone();
                pt[locus.pair] = (-locus.b + locus.a.conj() * t, locus.a + locus.b.conj() * t);
                renorm_lift(&s_hat(&pt, chart), s).map(|x| x.norm())
            };
            let norm = |t: f64| curve(t).unwrap_or(f64::NAN);
            match vanishing_order_by_norm(norm, &ORDER_SCALES) {
                Ok(o) => best = Some(best.map_or(o, |b: usize| b.min(o))),
                Err(e) => last_err = Some(e),
            }
        }
        best.ok_or_else(|| last_err.unwrap_or(Error::OrderUnstable(Vec::new())))
    });
    let orders = orders.into_iter().collect::<Result<Vec<_>>>()?;
    let mut h = vec![0; r];
    for (locus, &o) in loci.iter().zip(&orders) {
        h[locus.pair] += o;
    }
    Ok((orders, h))
}

#[derive(Clone, Debug)]
pub struct OrbitStep {
    pub frame: LagrangianFrame,
    /// `None` at points of the compactification divisor.
    pub matrix: Option<SymMatrix>,
    pub defect: usize,
    pub in_siegel: bool,
}

/// Iterates `g`, recording the symmetric chart when it exists. The starting
/// point is step 0.
pub fn orbit(start: &LagrangianFrame, s: &SelfSimilarStructure, steps: usize) -> Result<Vec<OrbitStep>> {
    let record = |frame: LagrangianFrame, defect| OrbitStep {
        matrix: frame.to_sym().ok(),
        in_siegel: in_siegel(&frame),
        frame,
        defect,
    };
    let mut out = vec![record(start.clone(), 0)];
    for _ in 0..steps {
        let (next, defect) = g_map(&out.last().expect("nonempty").frame, s)?;
        out.push(record(next, defect));
    }
    Ok(out)
}

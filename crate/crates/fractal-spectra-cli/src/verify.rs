//! Checkable identities run against a structure file.

use std::fmt;

use fractal_spectra::grassmann::{
    exp_eta, glue_morphism, interior_reduce, pair, projectivize, renorm_lift, vanishing_order, GrassmannElement,
    ORDER_SCALES,
};
use fractal_spectra::linalg::{c, det, submatrix, sym_eig, CMat, RMat, SymMatrix, C64};
use fractal_spectra::network::{complement, energy, glue, harmonic_extension, trace_map};
use fractal_spectra::par::Exec;
use fractal_spectra::renorm::{balance, bidegree_estimate, divisor_orders, g_map, t_map};
use fractal_spectra::spectra::{char_det, nd_spectrum};
use fractal_spectra::structure::{assemble_matrix, assemble_measure, build_lattice, SelfSimilarStructure};
use fractal_spectra::symplectic::{
    in_siegel, reduce, reduction_defect, w_glue, w_level, w_renorm, w_trace, LagrangianFrame,
};
use fractal_spectra::Result;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::StructureConfig;
use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Suite {
    Identities,
    Degrees,
    All,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    Skip,
}

#[derive(Clone, Debug)]
pub struct Check {
    pub name: &'static str,
    pub status: Status,
    /// Largest residual seen, when the check measures one.
    pub residual: Option<f64>,
    pub detail: String,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Skip => "SKIP",
        };
        write!(f, "{tag} {:<20}", self.name)?;
        if let Some(r) = self.residual {
            write!(f, " max residual {r:.3e}")?;
        }
        write!(f, "  {}", self.detail)
    }
}

struct Ctx {
    s: SelfSimilarStructure,
    q: SymMatrix,
    b: Vec<f64>,
    cfg: StructureConfig,
    seed: u64,
    exec: Exec,
}

impl Ctx {
    fn rng(&self, salt: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed.wrapping_mul(0x2545_f491_4f6c_dd1d) ^ salt)
    }

    fn boundary(&self) -> Vec<usize> {
        (0..self.s.k).collect()
    }

    fn plain(&self) -> bool {
        self.s.weights.is_none()
    }
}

fn rand_c(r: &mut ChaCha8Rng) -> C64 {
    c(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0))
}

fn random_sym(k: usize, r: &mut ChaCha8Rng) -> SymMatrix {
    SymMatrix::from_upper(&CMat::from_fn(k, k, |_, _| rand_c(r)))
}

fn random_siegel(k: usize, r: &mut ChaCha8Rng) -> SymMatrix {
    let a = RMat::from_fn(k, k, |_, _| r.gen_range(-1.0..1.0));
    let im = &a * a.transpose() + RMat::identity(k, k) * 0.05;
    let re = RMat::from_fn(k, k, |_, _| r.gen_range(-1.0..1.0));
    SymMatrix::from_fn(k, |i, j| c(0.5 * (re[(i, j)] + re[(j, i)]), im[(i, j)]))
}

fn rel(a: &CMat, b: &CMat) -> f64 {
    (a - b).norm() / b.norm().max(1e-300)
}

/// Residual accumulator: a check passes when every residual is within `tol`.
struct Acc {
    name: &'static str,
    tol: f64,
    worst: f64,
    trials: usize,
    error: Option<String>,
}

impl Acc {
    fn new(name: &'static str, tol: f64) -> Self {
        Self { name, tol, worst: 0.0, trials: 0, error: None }
    }

    fn push(&mut self, r: f64) {
        self.trials += 1;
        self.worst = if r.is_nan() { f64::NAN } else { self.worst.max(r) };
    }

    fn fail(&mut self, e: impl fmt::Display) {
        self.error.get_or_insert_with(|| e.to_string());
    }

    fn finish(self, extra: &str) -> Check {
        let ok = self.error.is_none() && self.worst <= self.tol;
        let mut detail = format!("{} trials, tol {:.0e}", self.trials, self.tol);
        if !extra.is_empty() {
            detail = format!("{detail}; {extra}");
        }
        if let Some(e) = self.error {
            detail = format!("{detail}; error: {e}");
        }
        Check {
            name: self.name,
            status: if ok { Status::Pass } else { Status::Fail },
            residual: Some(self.worst),
            detail,
        }
    }
}

fn skip(name: &'static str, why: &str) -> Check {
    Check { name, status: Status::Skip, residual: None, detail: why.to_string() }
}

fn trace_energy(ctx: &Ctx) -> Check {
    let mut acc = Acc::new("trace_energy", 1e-9);
    let mut r = ctx.rng(1);
    let bd = ctx.boundary();
    let q1 = match assemble_matrix(&ctx.s, &ctx.q, 1) {
        Ok(q) => q,
        Err(e) => {
            acc.fail(e);
            return acc.finish("");
        }
    };
    match trace_map(&q1, &bd) {
        Ok(t) => {
            for _ in 0..20 {
                let f = fractal_spectra::linalg::CVec::from_fn(bd.len(), |_, _| c(r.gen_range(-1.0..1.0), 0.0));
                match harmonic_extension(&q1, &bd, &f) {
                    Ok(h) => {
                        let (e1, e0) = (energy(&q1, &h), energy(&t, &f));
                        acc.push((e1 - e0).norm() / e0.norm().max(1.0));
                    }
                    Err(e) => acc.fail(e),
                }
            }
        }
        Err(e) => acc.fail(e),
    }
    acc.finish("level-1 network against its boundary trace")
}

fn grassmann_trace(ctx: &Ctx) -> Check {
    let mut acc = Acc::new("grassmann_trace", 1e-9);
    let mut r = ctx.rng(2);
    let k = ctx.s.k;
    let mut forms: Vec<(SymMatrix, Vec<usize>)> = Vec::new();
    for _ in 0..20 {
        let bd: Vec<usize> = loop {
            let v: Vec<usize> = (0..k).filter(|_| r.gen_bool(0.5)).collect();
            if !v.is_empty() && (v.len() < k || k == 1) {
                break v;
            }
        };
        forms.push((random_sym(k, &mut r), bd));
    }
    if let Ok(q1) = assemble_matrix(&ctx.s, &ctx.q, 1) {
        if q1.dim() <= 10 {
            let shifted = q1.add(&SymMatrix::identity(q1.dim()).scale(c(0.3, 0.7)));
            forms.push((shifted, ctx.boundary()));
        }
    }
    for (q, bd) in forms {
        let interior = complement(q.dim(), &bd);
        let lhs = interior_reduce(&exp_eta(&q), &interior);
        match trace_map(&q, &bd) {
            Ok(t) => {
                let d = det(&submatrix(q.as_matrix(), &interior, &interior));
                acc.push(lhs.relative_error(&exp_eta(&t).scale(d)));
            }
            Err(e) => acc.fail(e),
        }
    }
    acc.finish("")
}

fn grassmann_glue(ctx: &Ctx) -> Check {
    let mut acc = Acc::new("grassmann_glue", 1e-9);
    let size = ctx.s.copies * ctx.s.k;
    if size > 12 {
        return skip(acc.name, "more than 12 points in the copies");
    }
    let p1 = match ctx.s.level_one_partition() {
        Ok(p) => p,
        Err(e) => {
            acc.fail(e);
            return acc.finish("");
        }
    };
    let mut r = ctx.rng(3);
    for _ in 0..10 {
        let q = random_sym(size, &mut r);
        acc.push(glue_morphism(&exp_eta(&q), &p1).relative_error(&exp_eta(&glue(&q, &p1))));
    }
    acc.finish("level-1 gluing")
}

fn frame_reductions(ctx: &Ctx) -> Check {
    let mut acc = Acc::new("frame_reductions", 1e-9);
    let mut r = ctx.rng(4);
    let size = ctx.s.copies * ctx.s.k;
    let run = |acc: &mut Acc, r: &mut ChaCha8Rng| -> Result<()> {
        let p1 = ctx.s.level_one_partition()?;
        let wg = w_glue(&p1)?;
        let wt = w_trace(p1.classes(), &ctx.boundary())?;
        for _ in 0..10 {
            let q = random_sym(size, r);
            let l = LagrangianFrame::from_sym(&q);
            let g = glue(&q, &p1);
            acc.push(reduce(&l, &wg).distance(&LagrangianFrame::from_sym(&g)));
            let t = trace_map(&g, &ctx.boundary())?;
            acc.push(reduce(&LagrangianFrame::from_sym(&g), &wt).distance(&LagrangianFrame::from_sym(&t)));
        }
        Ok(())
    };
    if let Err(e) = run(&mut acc, &mut r) {
        acc.fail(e);
    }
    acc.finish("gluing and trace as reductions")
}

fn composition(ctx: &Ctx) -> Check {
    let mut acc = Acc::new("composition", 1e-8);
    let mut r = ctx.rng(5);
    let size = ctx.s.copies * ctx.s.k;
    let run = |acc: &mut Acc, r: &mut ChaCha8Rng| -> Result<()> {
        let p1 = ctx.s.level_one_partition()?;
        let wg = w_glue(&p1)?;
        let wt = w_trace(p1.classes(), &ctx.boundary())?;
        let both = wg.compose(&wt)?;
        let direct = w_renorm(&ctx.s)?;
        for _ in 0..10 {
            let l = LagrangianFrame::from_sym(&random_sym(size, r));
            let seq = reduce(&reduce(&l, &wg), &wt);
            acc.push(seq.distance(&reduce(&l, &both)));
            acc.push(seq.distance(&reduce(&l, &direct)));
        }
        Ok(())
    };
    if let Err(e) = run(&mut acc, &mut r) {
        acc.fail(e);
    }
    acc.finish("two-step reduction against the composite")
}

fn iterates(ctx: &Ctx) -> Check {
    let mut acc = Acc::new("iterates", 1e-8);
    let mut r = ctx.rng(6);
    for _ in 0..3 {
        let q = random_sym(ctx.s.k, &mut r);
        let mut t = q.clone();
        for n in 1..=3 {
            let step = t_map(&t, &ctx.s).and_then(|next| {
                let direct = trace_map(&assemble_matrix(&ctx.s, &q, n)?, &ctx.boundary())?;
                Ok((next, direct))
            });
            match step {
                Ok((next, direct)) => {
                    acc.push(rel(next.as_matrix(), direct.as_matrix()));
                    t = next;
                }
                Err(e) => {
                    acc.fail(e);
                    break;
                }
            }
        }
    }
    acc.finish("levels 1..3")
}

fn three_paths(ctx: &Ctx) -> Check {
    let mut acc = Acc::new("three_paths", 1e-8);
    let mut r = ctx.rng(7);
    for _ in 0..20 {
        let q = random_sym(ctx.s.k, &mut r);
        let res = (|| -> Result<(f64, f64)> {
            let t = t_map(&q, &ctx.s)?;
            let g = g_map(&LagrangianFrame::from_sym(&q), &ctx.s)?.0.to_sym()?;
            let lift = projectivize(&renorm_lift(&exp_eta(&q), &ctx.s)?)?;
            Ok((rel(g.as_matrix(), t.as_matrix()), rel(lift.as_matrix(), t.as_matrix())))
        })();
        match res {
            Ok((a, b)) => {
                acc.push(a);
                acc.push(b);
            }
            Err(e) => acc.fail(e),
        }
    }
    acc.finish("Schur, frame and Grassmann paths")
}

fn siegel(ctx: &Ctx) -> Check {
    let mut acc = Acc::new("siegel", 1e-10);
    let mut r = ctx.rng(8);
    let mut outside = 0;
    for _ in 0..50 {
        let q = random_siegel(ctx.s.k, &mut r);
        match t_map(&q, &ctx.s) {
            Ok(t) => {
                let lo = sym_eig(&t.im()).values.iter().cloned().fold(f64::INFINITY, f64::min);
                acc.push((-lo).max(0.0));
            }
            Err(e) => acc.fail(e),
        }
        match g_map(&LagrangianFrame::from_sym(&q), &ctx.s) {
            Ok((g, _)) if in_siegel(&g) => {}
            Ok(_) => outside += 1,
            Err(e) => acc.fail(e),
        }
    }
    if outside > 0 {
        acc.fail(format!("{outside} images left the half space"));
    }
    acc.finish("negative part of Im T(Q)")
}

fn phi(ctx: &Ctx, lam: C64) -> GrassmannElement {
    exp_eta(&ctx.q.add(&SymMatrix::real_diag(&ctx.b).scale(lam)))
}

fn lift_n(ctx: &Ctx, x: GrassmannElement, n: usize) -> Result<GrassmannElement> {
    (0..n).try_fold(x, |x, _| renorm_lift(&x, &ctx.s))
}

fn determinant_bridge(ctx: &Ctx) -> Check {
    let mut acc = Acc::new("determinant_bridge", 1e-8);
    if !ctx.plain() {
        return skip(acc.name, "per-copy weights rescale the pencil");
    }
    let mut r = ctx.rng(9);
    let run = |acc: &mut Acc, r: &mut ChaCha8Rng| -> Result<()> {
        let q1 = assemble_matrix(&ctx.s, &ctx.q, 1)?;
        let b1 = assemble_measure(&ctx.s, &ctx.b, 1)?;
        let bd = ctx.boundary();
        for _ in 0..20 {
            let lam = rand_c(r) * 4.0;
            let lifted = renorm_lift(&phi(ctx, lam), &ctx.s)?;
            for (plus, want) in [(true, char_det(&q1, &b1, lam, None)), (false, char_det(&q1, &b1, lam, Some(&bd)))] {
                acc.push((pair(&lifted, plus) - want).norm() / want.norm().max(1e-300));
            }
        }
        Ok(())
    };
    if let Err(e) = run(&mut acc, &mut r) {
        acc.fail(e);
    }
    acc.finish("Neumann and Dirichlet determinants at level 1")
}

/// Reduction defect at `lambda` of the level-n cells against the level-n
/// coisotropic. Weak connections from every level are collected in
/// `Q_<n>` of the zero form and pulled back to one preimage of each vertex.
fn level_defect(ctx: &Ctx, n: usize, lam: f64) -> Result<usize> {
    let lat = build_lattice(&ctx.s, n)?;
    let w = w_level(&lat)?;
    let frames: Vec<LagrangianFrame> = lat
        .cell_weight
        .iter()
        .zip(&lat.cell_mass)
        .map(|(&wt, &m)| {
            let cell = ctx.q.scale(c(wt, 0.0)).add(&SymMatrix::real_diag(&ctx.b).scale(c(lam * m, 0.0)));
            LagrangianFrame::from_sym(&cell)
        })
        .collect();
    let mut l = LagrangianFrame::direct_sum(&frames);
    if ctx.s.has_weak() {
        let weak = assemble_matrix(&ctx.s, &SymMatrix::zeros(ctx.s.k), n)?;
        let points: Vec<usize> = lat.cells.iter().flatten().copied().collect();
        let mut first = vec![usize::MAX; lat.n_vertices];
        for (p, &v) in points.iter().enumerate().rev() {
            first[v] = p;
        }
        let mut lifted = CMat::zeros(points.len(), points.len());
        for a in 0..lat.n_vertices {
            for b in 0..lat.n_vertices {
                lifted[(first[a], first[b])] = weak.get(a, b);
            }
        }
        l = l.translate(&SymMatrix::from_upper(&lifted));
    }
    Ok(reduction_defect(&l, &w))
}

/// Orders above this sink under rounding before the scale ladder resolves them.
const MAX_PROBED_ORDER: usize = 4;

fn nd_machinery(ctx: &Ctx) -> Check {
    let name = "nd_machinery";
    let bd = ctx.boundary();
    let res = (|| -> Result<(Vec<usize>, usize, usize, Vec<String>)> {
        let mut reports = Vec::new();
        for n in 1..=4 {
            let q = assemble_matrix(&ctx.s, &ctx.q, n)?;
            let b = assemble_measure(&ctx.s, &ctx.b, n)?;
            reports.push(nd_spectrum(&q, &b, &bd, n)?);
        }
        let counts: Vec<usize> = reports.iter().map(|r| r.count()).collect();
        let (mut checked, mut unprobed) = (0, 0);
        let mut bad = Vec::new();
        for n in 1..counts.len() {
            if counts[n] < ctx.s.copies * counts[n - 1] {
                bad.push(format!("count {} at level {} below {} x {}", counts[n], n + 1, ctx.s.copies, counts[n - 1]));
            }
        }
        for n in 1..=2 {
            for cl in &reports[n - 1].clusters {
                let mult = cl.multiplicity;
                let defect = level_defect(ctx, n, cl.value)?;
                if defect != mult {
                    bad.push(format!("level {n} at {}: defect {defect} vs {mult}", cl.value));
                }
                if n == 1 {
                    let shifted = ctx.q.add(&SymMatrix::real_diag(&ctx.b).scale(c(cl.value, 0.0)));
                    let g = g_map(&LagrangianFrame::from_sym(&shifted), &ctx.s)?.1;
                    if ctx.plain() && g != mult {
                        bad.push(format!("level 1 at {}: g defect {g} vs {mult}", cl.value));
                    }
                }
                if !ctx.plain() || (n > 1 && mult > MAX_PROBED_ORDER) {
                    unprobed += 1;
                } else {
                    let curve = |z: C64| lift_n(ctx, phi(ctx, z), n).expect("lift of a valid structure");
                    let order = vanishing_order(curve, c(cl.value, 0.0), &ORDER_SCALES)?;
                    if order != mult {
                        bad.push(format!("level {n} at {}: order {order} vs {mult}", cl.value));
                    }
                }
                checked += 1;
            }
        }
        Ok((counts, checked, unprobed, bad))
    })();
    match res {
        Ok((counts, checked, unprobed, bad)) => {
            let mut detail = format!("counts {counts:?}, {checked} eigenvalues checked, {unprobed} orders not probed");
            if !bad.is_empty() {
                detail = format!("{detail}; {}", bad.join("; "));
            }
            Check { name, status: if bad.is_empty() { Status::Pass } else { Status::Fail }, residual: None, detail }
        }
        Err(e) => Check { name, status: Status::Fail, residual: None, detail: format!("error: {e}") },
    }
}

fn degree_checks(ctx: &Ctx) -> Vec<Check> {
    let chart = match ctx.cfg.chart() {
        Ok(Some(ch)) => ch,
        Ok(None) => return vec![skip("degrees", "no chart"), skip("divisors", "no chart"), skip("balance", "no chart")],
        Err(e) => {
            let fail = |name| Check { name, status: Status::Fail, residual: None, detail: e.to_string() };
            return vec![fail("degrees"), fail("divisors"), fail("balance")];
        }
    };
    let expect = ctx.cfg.expect.clone().unwrap_or(crate::config::Expectations { degrees: None, loci: Vec::new() });
    let mut out = Vec::new();
    let degrees = bidegree_estimate(&ctx.s, &chart, ctx.seed, ctx.exec);
    out.push(match (&degrees, &expect.degrees) {
        (Ok(d), Some(want)) if d == want => {
            Check { name: "degrees", status: Status::Pass, residual: None, detail: format!("{d:?}") }
        }
        (Ok(d), Some(want)) => Check {
            name: "degrees",
            status: Status::Fail,
            residual: None,
            detail: format!("{d:?}, expected {want:?}"),
        },
        (Ok(d), None) => Check { name: "degrees", status: Status::Pass, residual: None, detail: format!("{d:?} (no reference)") },
        (Err(e), _) => Check { name: "degrees", status: Status::Fail, residual: None, detail: format!("error: {e}") },
    });
    let loci = ctx.cfg.loci();
    let orders = divisor_orders(&ctx.s, &chart, &loci, ctx.seed, ctx.exec);
    out.push(match &orders {
        Ok((o, h)) => {
            let wrong: Vec<String> = expect
                .loci
                .iter()
                .zip(o)
                .filter_map(|(l, &got)| match l.order {
                    Some(want) if want != got => Some(format!("pair {} locus ({}, {}): {got} vs {want}", l.pair, l.a, l.b)),
                    _ => None,
                })
                .collect();
            let status = if wrong.is_empty() { Status::Pass } else { Status::Fail };
            let mut detail = format!("orders {o:?}, h {h:?}");
            if !wrong.is_empty() {
                detail = format!("{detail}; {}", wrong.join("; "));
            }
            Check { name: "divisors", status, residual: None, detail }
        }
        Err(e) => Check { name: "divisors", status: Status::Fail, residual: None, detail: format!("error: {e}") },
    });
    out.push(match (&degrees, &orders) {
        (Ok(d), Ok((_, h))) => {
            let rep = balance(&ctx.s, &chart, d, h);
            Check {
                name: "balance",
                status: if rep.holds() { Status::Pass } else { Status::Fail },
                residual: None,
                detail: format!("N p = {:?}, sum d p + h = {:?}", rep.lhs, rep.rhs),
            }
        }
        _ => Check { name: "balance", status: Status::Fail, residual: None, detail: "needs degrees and divisors".into() },
    });
    out
}

/// Runs a suite. Structure and network errors are configuration errors;
/// failures inside a check are reported by that check.
pub fn run(cfg: &StructureConfig, suite: Suite, seed: u64, exec: Exec) -> std::result::Result<Vec<Check>, CliError> {
    let ctx = Ctx { s: cfg.structure()?, q: cfg.q()?, b: cfg.measure()?, cfg: cfg.clone(), seed, exec };
    let mut out = Vec::new();
    if matches!(suite, Suite::Identities | Suite::All) {
        let groups: [fn(&Ctx) -> Check; 10] = [
            trace_energy,
            grassmann_trace,
            grassmann_glue,
            frame_reductions,
            composition,
            iterates,
            three_paths,
            siegel,
            determinant_bridge,
            nd_machinery,
        ];
        out.extend(exec.map_slice(&groups, |f| f(&ctx)));
    }
    if matches!(suite, Suite::Degrees | Suite::All) {
        out.extend(degree_checks(&ctx));
    }
    Ok(out)
}

pub fn all_passed(checks: &[Check]) -> bool {
    checks.iter().all(|c| c.status != Status::Fail)
}

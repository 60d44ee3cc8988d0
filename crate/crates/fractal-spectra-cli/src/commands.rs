use std::fmt::Write;

use fractal_spectra::linalg::{c, SymMatrix, C64};
use fractal_spectra::par::Exec;
use fractal_spectra::renorm::orbit;
use fractal_spectra::spectra::{
    common_range, dirichlet_spectrum, dos_histogram, green_proxy, nd_spectrum, neumann_spectrum, Cluster,
};
use fractal_spectra::structure::{assemble_matrix, assemble_measure};
use fractal_spectra::symplectic::LagrangianFrame;

use crate::config::StructureConfig;
use crate::{fmt_f64, CliError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Bc {
    Neumann,
    Dirichlet,
    Nd,
}

fn level_data(cfg: &StructureConfig, level: usize) -> Result<(SymMatrix, Vec<f64>, usize), CliError> {
    let s = cfg.structure()?;
    let (q, b) = (cfg.q()?, cfg.measure()?);
    Ok((assemble_matrix(&s, &q, level)?, assemble_measure(&s, &b, level)?, s.k))
}

/// Clusters in ascending order, sign-flipped for the Laplacian convention.
pub fn clusters(cfg: &StructureConfig, level: usize, bc: Bc, laplacian: bool) -> Result<Vec<Cluster>, CliError> {
    let (q, b, k) = level_data(cfg, level)?;
    let boundary: Vec<usize> = (0..k).collect();
    let rep = match bc {
        Bc::Neumann => neumann_spectrum(&q, &b, level)?,
        Bc::Dirichlet => dirichlet_spectrum(&q, &b, &boundary, level)?,
        Bc::Nd => nd_spectrum(&q, &b, &boundary, level)?,
    };
    let mut out = rep.clusters;
    if laplacian {
        out.reverse();
        for cl in &mut out {
            cl.value = -cl.value;
        }
    }
    Ok(out)
}

pub fn spectrum_csv(cfg: &StructureConfig, level: usize, bc: Bc, laplacian: bool) -> Result<String, CliError> {
    let mut out = String::from("eigenvalue,multiplicity\n");
    for cl in clusters(cfg, level, bc, laplacian)? {
        writeln!(out, "{},{}", fmt_f64(cl.value), cl.multiplicity).unwrap();
    }
    Ok(out)
}

pub struct DosOptions {
    pub level: usize,
    pub bins: usize,
    pub bc: Bc,
    pub range: Option<(f64, f64)>,
    pub laplacian: bool,
}

pub fn dos_csv(cfg: &StructureConfig, opt: &DosOptions) -> Result<String, CliError> {
    if opt.bins == 0 {
        return Err(CliError::Config("--bins must be positive".into()));
    }
    let values: Vec<f64> = clusters(cfg, opt.level, opt.bc, opt.laplacian)?
        .iter()
        .flat_map(|cl| std::iter::repeat_n(cl.value, cl.multiplicity))
        .collect();
    let (lo, hi) = opt.range.unwrap_or_else(|| common_range(&[&values]));
    let weight = (cfg.n as f64).powi(opt.level as i32).recip();
    let mut out = String::from("bin_left,bin_right,mass\n");
    for bin in dos_histogram(&values, weight, opt.bins, lo, hi) {
        writeln!(out, "{},{},{}", fmt_f64(bin.left), fmt_f64(bin.right), fmt_f64(bin.mass)).unwrap();
    }
    Ok(out)
}

/// `(1/N^n) ln|det(Q_<n> + (lambda + i eps) I_b)|` over `points` equispaced values of `[lo, hi]`.
pub fn green_csv(
    cfg: &StructureConfig,
    level: usize,
    (lo, hi, points): (f64, f64, usize),
    eps: f64,
    laplacian: bool,
    exec: Exec,
) -> Result<String, CliError> {
    let (q, b, _) = level_data(cfg, level)?;
    let grid: Vec<f64> = match points {
        0 => Vec::new(),
        1 => vec![lo],
        p => (0..p).map(|i| lo + (hi - lo) * i as f64 / (p - 1) as f64).collect(),
    };
    let sign = if laplacian { -1.0 } else { 1.0 };
    let eval: Vec<f64> = grid.iter().map(|&x| sign * x).collect();
    let norm = (cfg.n as f64).powi(level as i32);
    let vals = green_proxy(&q, &b, &eval, eps, norm, exec);
    let mut out = String::from("lambda,green\n");
    for (x, g) in grid.iter().zip(vals) {
        writeln!(out, "{},{}", fmt_f64(*x), fmt_f64(g)).unwrap();
    }
    Ok(out)
}

/// Parses `3`, `-1.5`, `i`, `-2i`, `1+2i`, `0.5-1e-3i`.
pub fn parse_complex(text: &str) -> Option<C64> {
    let s = text.trim();
    let Some(body) = s.strip_suffix('i') else {
        return s.parse().ok().map(|re| c(re, 0.0));
    };
    let bytes = body.as_bytes();
    let split = (1..bytes.len()).rev().find(|&p| {
        (bytes[p] == b'+' || bytes[p] == b'-') && !matches!(bytes[p - 1], b'e' | b'E')
    });
    let imag = |t: &str| match t {
        "" | "+" => Some(1.0),
        "-" => Some(-1.0),
        t => t.parse().ok(),
    };
    match split {
        Some(p) => Some(c(body[..p].parse().ok()?, imag(&body[p..])?)),
        None => Some(c(0.0, imag(body)?)),
    }
}

pub fn parse_coords(text: &str) -> Result<Vec<C64>, CliError> {
    text.split(',')
        .map(|t| parse_complex(t).ok_or_else(|| CliError::Config(format!("bad coordinate {t:?}"))))
        .collect()
}

pub struct RenormOptions {
    pub steps: usize,
    pub coords: Option<Vec<C64>>,
    /// Report homogeneous pairs `(u_i, v_i)` instead of affine coordinates.
    pub frame: bool,
}

pub fn renorm_csv(cfg: &StructureConfig, opt: &RenormOptions) -> Result<String, CliError> {
    let s = cfg.structure()?;
    let chart = cfg.chart()?;
    let start = match (&opt.coords, &chart) {
        (Some(u), Some(ch)) => {
            if u.len() != ch.len() {
                return Err(CliError::Config(format!("chart has {} coordinates, got {}", ch.len(), u.len())));
            }
            ch.matrix(u)
        }
        (Some(_), None) => return Err(CliError::Config("--coords needs a chart in the config".into())),
        (None, _) => cfg.q()?,
    };
    let traj = orbit(&LagrangianFrame::from_sym(&start), &s, opt.steps)?;
    let k = s.k;
    let mut head = vec!["step".to_string(), "defect".into(), "in_siegel".into(), "at_infinity".into()];
    match (&chart, opt.frame) {
        (Some(ch), true) => {
            for i in 0..ch.len() {
                head.extend([format!("u{i}_re"), format!("u{i}_im"), format!("v{i}_re"), format!("v{i}_im")]);
            }
        }
        (Some(ch), false) => {
            for i in 0..ch.len() {
                head.extend([format!("u{i}_re"), format!("u{i}_im")]);
            }
        }
        (None, _) => {
            for i in 0..k {
                for j in i..k {
                    head.extend([format!("q{}{}_re", i + 1, j + 1), format!("q{}{}_im", i + 1, j + 1)]);
                }
            }
        }
    }
    let mut out = head.join(",") + "\n";
    let cplx = |z: C64| format!("{},{}", fmt_f64(z.re), fmt_f64(z.im));
    for (n, step) in traj.iter().enumerate() {
        let mut row = vec![n.to_string(), step.defect.to_string(), step.in_siegel.to_string()];
        row.push(step.matrix.is_none().to_string());
        match (&chart, opt.frame, &step.matrix) {
            (Some(ch), true, _) => row.extend(ch.frame_coords(&step.frame).into_iter().map(|(u, v)| format!("{},{}", cplx(u), cplx(v)))),
            (Some(ch), false, Some(m)) => row.extend(ch.coords(m)?.into_iter().map(cplx)),
            (None, _, Some(m)) => {
                for i in 0..k {
                    for j in i..k {
                        row.push(cplx(m.get(i, j)));
                    }
                }
            }
            (Some(ch), false, None) => row.extend(std::iter::repeat_n("inf,inf".to_string(), ch.len())),
            (None, _, None) => row.extend(std::iter::repeat_n("inf,inf".to_string(), k * (k + 1) / 2)),
        }
        out += &(row.join(",") + "\n");
    }
    Ok(out)
}

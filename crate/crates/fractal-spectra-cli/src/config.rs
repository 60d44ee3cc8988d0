//! JSON structure files. Copies and vertices are numbered from 1.

use fractal_spectra::linalg::{RMat, SymMatrix};
use fractal_spectra::network::{q_matrix, ElectricalNetwork};
use fractal_spectra::renorm::{CoordinateChart, Locus};
use fractal_spectra::structure::{SelfSimilarStructure, Weights};
use fractal_spectra::linalg::c;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// A `[copy, vertex]` pair.
pub type Point = [usize; 2];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StructureConfig {
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(default)]
    pub glue: Vec<Vec<Point>>,
    pub boundary: Vec<Point>,
    pub network: NetworkConfig,
    pub measure: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<WeightsConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weak: Option<WeakConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chart: Option<Vec<Vec<Vec<f64>>>>,
    /// Reference values checked by `verify --suite degrees`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expect: Option<Expectations>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkConfig {
    pub edges: Vec<(usize, usize, f64)>,
    #[serde(default)]
    pub dissipative: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightsConfig {
    pub w: Vec<f64>,
    pub b: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeakConfig {
    #[serde(default)]
    pub edges: Vec<(Point, Point, f64)>,
    #[serde(default)]
    pub dissipative: Vec<(Point, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expectations {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub degrees: Option<Vec<Vec<usize>>>,
    #[serde(default)]
    pub loci: Vec<LocusConfig>,
}

/// The locus `a u_pair + b v_pair = 0`, with pairs numbered from 0 like the
/// chart projectors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LocusConfig {
    pub pair: usize,
    pub a: f64,
    pub b: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<usize>,
}

pub const BUILTINS: [(&str, &str); 4] = [
    ("sierpinski", include_str!("../configs/sierpinski.json")),
    ("gamma_bar", include_str!("../configs/gamma_bar.json")),
    ("gamma_bar_semi", include_str!("../configs/gamma_bar_semi.json")),
    ("unit_interval", include_str!("../configs/unit_interval.json")),
];

pub fn builtin(name: &str) -> Option<StructureConfig> {
    BUILTINS.iter().find(|(n, _)| *n == name).map(|(_, text)| parse(text).expect("builtin configs parse"))
}

pub fn parse(text: &str) -> Result<StructureConfig, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
}

/// Reads a config file, or a builtin when `source` names one and no such file exists.
pub fn load(source: &str) -> Result<StructureConfig, CliError> {
    match std::fs::read_to_string(source) {
        Ok(text) => parse(&text).map_err(|e| CliError::Config(format!("{source}: {e}"))),
        Err(err) => builtin(source).ok_or_else(|| CliError::Config(format!("{source}: {err}"))),
    }
}

/// One key per line for the top-level fields, so configs diff cleanly.
pub fn to_json(cfg: &StructureConfig) -> String {
    let value = serde_json::to_value(cfg).expect("config serialises");
    let map = value.as_object().expect("config is an object");
    let lines: Vec<String> = map
        .iter()
        .map(|(k, v)| format!("  {}: {}", serde_json::to_string(k).unwrap(), serde_json::to_string(v).unwrap()))
        .collect();
    format!("{{\n{}\n}}\n", lines.join(",\n"))
}

fn point(p: Point, cfg: &StructureConfig, what: &str) -> Result<(usize, usize), CliError> {
    let [i, x] = p;
    if i == 0 || x == 0 || i > cfg.n || x > cfg.k {
        return Err(CliError::Config(format!("{what}: [{i}, {x}] is outside 1..={} x 1..={}", cfg.n, cfg.k)));
    }
    Ok((i - 1, x - 1))
}

fn vertex(v: usize, k: usize, what: &str) -> Result<usize, CliError> {
    if v == 0 || v > k {
        return Err(CliError::Config(format!("{what}: vertex {v} is outside 1..={k}")));
    }
    Ok(v - 1)
}

impl StructureConfig {
    pub fn structure(&self) -> Result<SelfSimilarStructure, CliError> {
        let glue = self
            .glue
            .iter()
            .enumerate()
            .map(|(ci, cl)| cl.iter().map(|&p| point(p, self, &format!("glue[{ci}]"))).collect())
            .collect::<Result<Vec<Vec<_>>, _>>()?;
        let boundary =
            self.boundary.iter().map(|&p| point(p, self, "boundary")).collect::<Result<Vec<_>, _>>()?;
        let weights = self.weights.as_ref().map(|w| Weights { w: w.w.clone(), b: w.b.clone() });
        let weak = match &self.weak {
            None => None,
            Some(wk) => {
                let mut net = ElectricalNetwork::new(self.n * self.k);
                let idx = |(i, x): (usize, usize)| i * self.k + x;
                for (e, &(p, q, rho)) in wk.edges.iter().enumerate() {
                    let what = format!("weak.edges[{e}]");
                    net.add_edge(idx(point(p, self, &what)?), idx(point(q, self, &what)?), rho);
                }
                for (e, &(p, v)) in wk.dissipative.iter().enumerate() {
                    net.add_dissipative(idx(point(p, self, &format!("weak.dissipative[{e}]"))?), v);
                }
                Some(net)
            }
        };
        let s = SelfSimilarStructure { k: self.k, copies: self.n, glue, boundary, weights, weak };
        let diag = s.validate();
        if !diag.is_valid() {
            return Err(CliError::Config(diag.errors.join("; ")));
        }
        Ok(s)
    }

    pub fn network(&self) -> Result<ElectricalNetwork, CliError> {
        let mut net = ElectricalNetwork::new(self.k);
        for (e, &(i, j, rho)) in self.network.edges.iter().enumerate() {
            let what = format!("network.edges[{e}]");
            let (i, j) = (vertex(i, self.k, &what)?, vertex(j, self.k, &what)?);
            if i == j {
                return Err(CliError::Config(format!("{what}: loop at vertex {}", i + 1)));
            }
            net.add_edge(i, j, rho);
        }
        if !self.network.dissipative.is_empty() && self.network.dissipative.len() != self.k {
            return Err(CliError::Config(format!("network.dissipative needs {} entries", self.k)));
        }
        for (i, &d) in self.network.dissipative.iter().enumerate() {
            net.add_dissipative(i, d);
        }
        Ok(net)
    }

    pub fn q(&self) -> Result<SymMatrix, CliError> {
        Ok(q_matrix(&self.network()?))
    }

    pub fn measure(&self) -> Result<Vec<f64>, CliError> {
        if self.measure.len() != self.k {
            return Err(CliError::Config(format!("measure needs {} entries, got {}", self.k, self.measure.len())));
        }
        if let Some(bad) = self.measure.iter().find(|&&b| !(b > 0.0)) {
            return Err(CliError::Config(format!("measure entries must be positive, got {bad}")));
        }
        Ok(self.measure.clone())
    }

    pub fn chart(&self) -> Result<Option<CoordinateChart>, CliError> {
        let Some(mats) = &self.chart else { return Ok(None) };
        let projectors = mats
            .iter()
            .enumerate()
            .map(|(pi, rows)| {
                if rows.len() != self.k || rows.iter().any(|r| r.len() != self.k) {
                    return Err(CliError::Config(format!("chart[{pi}] must be {0}x{0}", self.k)));
                }
                Ok(RMat::from_fn(self.k, self.k, |i, j| rows[i][j]))
            })
            .collect::<Result<Vec<_>, _>>()?;
        CoordinateChart::new(projectors).map(Some).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn loci(&self) -> Vec<Locus> {
        self.expect
            .iter()
            .flat_map(|e| &e.loci)
            .map(|l| Locus { pair: l.pair, a: c(l.a, 0.0), b: c(l.b, 0.0) })
            .collect()
    }
}

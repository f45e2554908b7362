//! Reduced-graph summaries and their expansion back to full graphs.
//!
//! `reduce` collapses a partitioned graph into a k-vertex summary of
//! pair densities; `expand` rebuilds a graph of the original size by
//! filling inter-class blocks at the summarized densities. The
//! feasibility arithmetic for embedding bounded-degree subgraphs into
//! the expansion lives here too.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::graph::{edge_density, Graph, VertexSet};
use crate::io::IoError;
use crate::partition::{EquitablePartition, PairStatuses};

#[derive(Debug, Error)]
pub enum CodecError {
    #[error("density threshold {0} must exceed epsilon {1}")]
    ThresholdBelowEpsilon(f64, f64),
    #[error("d must exceed epsilon, got d={0}, epsilon={1}")]
    DensityNotAboveEpsilon(f64, f64),
    #[error("expansion size m must be at least 1")]
    EmptyExpansion,
    #[error("t must be at least 1")]
    BadFold,
    #[error("{0}")]
    BadInput(String),
}

/// k-vertex summary: pair densities plus an adjacency restricted to the
/// regular pairs whose density clears the threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedGraph {
    pub k: usize,
    /// Cardinality of the classes that produced this summary.
    pub m: usize,
    /// Symmetric, zero diagonal, entries in [0, 1].
    pub densities: Vec<Vec<f64>>,
    pub edges: Vec<Vec<bool>>,
    pub d_threshold: f64,
    pub epsilon: f64,
}

impl ReducedGraph {
    pub fn edge_count(&self) -> usize {
        let mut c = 0;
        for i in 0..self.k {
            for j in (i + 1)..self.k {
                if self.edges[i][j] {
                    c += 1;
                }
            }
        }
        c
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExpansionMode {
    /// Every cross pair gets the block density as its weight.
    ConstantWeight,
    /// Each cross edge appears independently with the block density as
    /// probability, unit weight.
    RandomBernoulli,
    /// Every cross pair gets weight 1.
    Complete,
}

#[derive(Debug, Clone)]
pub struct ExpansionSpec {
    /// Vertices per class in the expansion.
    pub m: usize,
    pub mode: ExpansionMode,
    pub seed: u64,
    /// When set, diagonal blocks are filled at these per-class densities
    /// (same mode as the cross blocks). Default: intra blocks stay empty.
    pub fill_intra: Option<Vec<f64>>,
}

impl ExpansionSpec {
    pub fn constant(m: usize) -> Self {
        ExpansionSpec { m, mode: ExpansionMode::ConstantWeight, seed: 0, fill_intra: None }
    }
}

/// Summarize a partitioned graph. The exceptional class is dropped; the
/// densities must have been measured on the graph the partition refers
/// to. The codec keeps its own epsilon: the expansion-feasibility
/// arithmetic requires `d_threshold > epsilon`, and the threshold is
/// meaningful only against this value.
pub fn reduce(
    partition: &EquitablePartition,
    densities: &[Vec<f64>],
    statuses: &PairStatuses,
    d_threshold: f64,
    epsilon: f64,
) -> Result<ReducedGraph, CodecError> {
    if d_threshold <= epsilon {
        return Err(CodecError::ThresholdBelowEpsilon(d_threshold, epsilon));
    }
    let k = partition.k();
    if densities.len() != k || statuses.k() != k {
        return Err(CodecError::BadInput(format!(
            "partition has {k} classes, densities {}, statuses {}",
            densities.len(),
            statuses.k()
        )));
    }
    let mut dens = vec![vec![0.0; k]; k];
    let mut edges = vec![vec![false; k]; k];
    for r in 0..k {
        for s in (r + 1)..k {
            dens[r][s] = densities[r][s];
            dens[s][r] = densities[r][s];
            let regular = !statuses.get(r, s).is_irregular();
            if regular && densities[r][s] > d_threshold {
                edges[r][s] = true;
                edges[s][r] = true;
            }
        }
    }
    Ok(ReducedGraph {
        k,
        m: partition.class_size(),
        densities: dens,
        edges,
        d_threshold,
        epsilon,
    })
}

/// Per-class internal densities of the partitioned graph, for the
/// optional intra-block fill on expansion.
pub fn intra_densities(g: &Graph, partition: &EquitablePartition) -> Vec<f64> {
    partition
        .classes
        .iter()
        .map(|class| {
            let m = class.members();
            let c = m.len();
            if c < 2 {
                return 0.0;
            }
            let mut sum = 0.0;
            for (i, &u) in m.iter().enumerate() {
                for &v in m.iter().skip(i + 1) {
                    sum += g.weight(u, v);
                }
            }
            sum / ((c * (c - 1)) as f64 / 2.0)
        })
        .collect()
}

/// Blow-up: each summary vertex becomes `t` independent vertices, each
/// summary edge a complete bipartite block.
pub fn t_fold(r: &ReducedGraph, t: usize) -> Result<Graph, CodecError> {
    if t == 0 {
        return Err(CodecError::BadFold);
    }
    let mut g = Graph::empty(r.k * t);
    for i in 0..r.k {
        for j in (i + 1)..r.k {
            if r.edges[i][j] {
                for a in 0..t {
                    for b in 0..t {
                        g.set_weight(i * t + a, j * t + b, 1.0).unwrap();
                    }
                }
            }
        }
    }
    Ok(g)
}

/// Expand a summary to a graph on `k * m` vertices. Inter-class blocks
/// of summary edges are filled per the mode; everything else stays
/// empty unless an intra fill is requested. Random fills draw from a
/// dedicated stream per block, so block contents do not depend on the
/// order blocks are filled in.
pub fn expand(r: &ReducedGraph, spec: &ExpansionSpec) -> Result<Graph, CodecError> {
    if spec.m == 0 {
        return Err(CodecError::EmptyExpansion);
    }
    if let Some(intra) = &spec.fill_intra {
        if intra.len() != r.k {
            return Err(CodecError::BadInput(format!(
                "{} intra densities for {} classes",
                intra.len(),
                r.k
            )));
        }
    }
    let m = spec.m;
    let mut g = Graph::empty(r.k * m);
    let fill_block = |g: &mut Graph, i: usize, j: usize, density: f64| {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        rng.set_stream((i * r.k + j) as u64);
        for a in 0..m {
            let bstart = if i == j { a + 1 } else { 0 };
            for b in bstart..m {
                let w = match spec.mode {
                    ExpansionMode::ConstantWeight => density,
                    ExpansionMode::Complete => 1.0,
                    ExpansionMode::RandomBernoulli => {
                        if rng.gen_bool(density.clamp(0.0, 1.0)) {
                            1.0
                        } else {
                            0.0
                        }
                    }
                };
                if w > 0.0 {
                    g.set_weight(i * m + a, j * m + b, w).unwrap();
                }
            }
        }
    };
    for i in 0..r.k {
        for j in (i + 1)..r.k {
            if r.edges[i][j] {
                fill_block(&mut g, i, j, r.densities[i][j]);
            }
        }
    }
    if let Some(intra) = &spec.fill_intra {
        for (i, &d) in intra.iter().enumerate() {
            if d > 0.0 {
                fill_block(&mut g, i, i, d);
            }
        }
    }
    Ok(g)
}

/// Map from expanded vertex index to the original vertex it stands for:
/// expanded `(class i, slot s)` is the s-th member of class i. Valid when
/// the expansion size equals the class size. Exceptional vertices have
/// no image and are simply absent.
pub fn identity_map(partition: &EquitablePartition) -> Vec<(usize, usize)> {
    let m = partition.class_size();
    let mut map = Vec::with_capacity(partition.k() * m);
    for (i, class) in partition.classes.iter().enumerate() {
        for (s, v) in class.iter().enumerate() {
            map.push((v, i * m + s));
        }
    }
    map
}

#[derive(Debug, Clone, Copy)]
pub struct Feasibility {
    pub feasible: bool,
    pub epsilon0: f64,
    /// Lower bound on the number of labeled copies: (epsilon0 * m)^h.
    pub copy_lower_bound: f64,
}

/// Embedding feasibility for a subgraph with `h` vertices and maximum
/// degree `max_degree` into a t-fold expansion with classes of size `m`:
/// with delta = d - epsilon and epsilon0 = delta^Δ / (2 + Δ), the
/// embedding goes through when epsilon <= epsilon0 and t - 1 <=
/// epsilon0 * m.
pub fn key_lemma_feasibility(
    d: f64,
    epsilon: f64,
    max_degree: u32,
    h: u32,
    m: usize,
    t: usize,
) -> Result<Feasibility, CodecError> {
    if d <= epsilon {
        return Err(CodecError::DensityNotAboveEpsilon(d, epsilon));
    }
    if epsilon <= 0.0 {
        return Err(CodecError::BadInput("epsilon must be positive".into()));
    }
    if max_degree == 0 || h == 0 {
        return Err(CodecError::BadInput("max_degree and h must be positive".into()));
    }
    let delta = d - epsilon;
    let epsilon0 = delta.powi(max_degree as i32) / (2.0 + max_degree as f64);
    let feasible = epsilon <= epsilon0 && (t as f64 - 1.0) <= epsilon0 * m as f64;
    let copy_lower_bound = (epsilon0 * m as f64).powi(h as i32);
    Ok(Feasibility { feasible, epsilon0, copy_lower_bound })
}

/// Two compression-rate views of a summary of an n-vertex graph:
/// node_ratio compares vertex counts; storage_ratio compares the summary
/// (pair densities plus the class map) against the full pair set.
pub fn compression_metrics(n: usize, k: usize) -> (f64, f64) {
    let nf = n as f64;
    let kf = k as f64;
    let node_ratio = 1.0 - kf / nf;
    let full = nf * (nf - 1.0) / 2.0;
    let summary = kf * (kf - 1.0) / 2.0 + nf;
    let storage_ratio = 1.0 - summary / full;
    (node_ratio, storage_ratio)
}

/// Summary file format: header `k m epsilon d_threshold`, then the k×k
/// density rows, then the 0/1 edge-mask rows.
pub fn reduced_to_string(r: &ReducedGraph) -> String {
    let mut out = String::new();
    writeln!(out, "{} {} {:.16e} {:.16e}", r.k, r.m, r.epsilon, r.d_threshold).unwrap();
    for row in &r.densities {
        let cells: Vec<String> = row.iter().map(|d| format!("{:.16e}", d)).collect();
        writeln!(out, "{}", cells.join(" ")).unwrap();
    }
    for row in &r.edges {
        let cells: Vec<&str> = row.iter().map(|&e| if e { "1" } else { "0" }).collect();
        writeln!(out, "{}", cells.join(" ")).unwrap();
    }
    out
}

pub fn reduced_from_string(text: &str) -> Result<ReducedGraph, IoError> {
    let perr = |line: usize, message: String| IoError::Parse { line, message };
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| perr(1, "empty summary file".into()))?;
    let parts: Vec<&str> = header.split_whitespace().collect();
    if parts.len() != 4 {
        return Err(perr(1, format!("expected `k m epsilon d_threshold`, got {header:?}")));
    }
    let k: usize = parts[0].parse().map_err(|_| perr(1, "bad k".into()))?;
    let m: usize = parts[1].parse().map_err(|_| perr(1, "bad m".into()))?;
    let epsilon: f64 = parts[2].parse().map_err(|_| perr(1, "bad epsilon".into()))?;
    let d_threshold: f64 = parts[3].parse().map_err(|_| perr(1, "bad d_threshold".into()))?;
    let mut densities = Vec::with_capacity(k);
    for i in 0..k {
        let lineno = i + 2;
        let line = lines.next().ok_or_else(|| perr(lineno, "missing density row".into()))?;
        let row: Result<Vec<f64>, _> = line
            .split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|_| perr(lineno, format!("bad density {t:?}"))))
            .collect();
        let row = row?;
        if row.len() != k {
            return Err(perr(lineno, format!("expected {k} entries, got {}", row.len())));
        }
        densities.push(row);
    }
    let mut edges = Vec::with_capacity(k);
    for i in 0..k {
        let lineno = k + i + 2;
        let line = lines.next().ok_or_else(|| perr(lineno, "missing edge-mask row".into()))?;
        let row: Result<Vec<bool>, _> = line
            .split_whitespace()
            .map(|t| match t {
                "0" => Ok(false),
                "1" => Ok(true),
                other => Err(perr(lineno, format!("bad mask entry {other:?}"))),
            })
            .collect();
        let row = row?;
        if row.len() != k {
            return Err(perr(lineno, format!("expected {k} entries, got {}", row.len())));
        }
        edges.push(row);
    }
    Ok(ReducedGraph { k, m, densities, edges, d_threshold, epsilon })
}

pub fn save_reduced(r: &ReducedGraph, path: impl AsRef<Path>) -> Result<(), IoError> {
    fs::write(path, reduced_to_string(r))?;
    Ok(())
}

pub fn load_reduced(path: impl AsRef<Path>) -> Result<ReducedGraph, IoError> {
    reduced_from_string(&fs::read_to_string(path)?)
}

/// Block density of the expansion between classes i and j.
pub fn expanded_block_density(g: &Graph, m: usize, i: usize, j: usize) -> f64 {
    let x: VertexSet = (i * m..(i + 1) * m).collect();
    let y: VertexSet = (j * m..(j + 1) * m).collect();
    edge_density(g, &x, &y).unwrap_or(0.0)
}

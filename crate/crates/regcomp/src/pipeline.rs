//! Point-data ingestion, similarity graphs, clustering, densification,
//! and end-to-end orchestration of the compress/expand pipeline with an
//! artifact directory as output.

use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::codec::compression_metrics;
use crate::graph::Graph;
use crate::io::{self, GraphFormat};
use crate::synth::{complete_inter, run_sze, SzeConfig, SzeRun};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("stage {stage}: {message}")]
    Stage { stage: &'static str, message: String },
}

fn stage_err(stage: &'static str, e: impl std::fmt::Display) -> PipelineError {
    PipelineError::Stage { stage, message: e.to_string() }
}

#[derive(Debug, Clone)]
pub struct PointDataset {
    pub points: Vec<Vec<f64>>,
    pub labels: Option<Vec<usize>>,
}

impl PointDataset {
    pub fn validate(&self) -> Result<(), PipelineError> {
        let err = |m: String| PipelineError::Stage { stage: "load-points", message: m };
        if self.points.len() < 2 {
            return Err(err("need at least 2 points".into()));
        }
        let dim = self.points[0].len();
        for (i, p) in self.points.iter().enumerate() {
            if p.len() != dim {
                return Err(err(format!("point {i} has dimension {}, expected {dim}", p.len())));
            }
            if p.iter().any(|v| !v.is_finite()) {
                return Err(err(format!("point {i} has a non-finite coordinate")));
            }
        }
        if let Some(l) = &self.labels {
            if l.len() != self.points.len() {
                return Err(err(format!("{} labels for {} points", l.len(), self.points.len())));
            }
        }
        Ok(())
    }
}

/// CSV of comma-separated reals, one point per row; with `labeled` the
/// last column is an integer class id.
pub fn load_points_csv(path: impl AsRef<Path>, labeled: bool) -> Result<PointDataset, PipelineError> {
    let text = fs::read_to_string(&path).map_err(|e| stage_err("load-points", e))?;
    let mut points = Vec::new();
    let mut labels = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if labeled {
            let tail = cells.pop().ok_or_else(|| {
                stage_err("load-points", format!("line {}: empty row", idx + 1))
            })?;
            let lab: usize = tail.parse().map_err(|_| {
                stage_err("load-points", format!("line {}: bad label {tail:?}", idx + 1))
            })?;
            labels.push(lab);
        }
        let row: Result<Vec<f64>, _> = cells
            .iter()
            .map(|c| {
                c.parse::<f64>().map_err(|_| {
                    stage_err("load-points", format!("line {}: bad coordinate {c:?}", idx + 1))
                })
            })
            .collect();
        points.push(row?);
    }
    let ds = PointDataset { points, labels: if labeled { Some(labels) } else { None } };
    ds.validate()?;
    Ok(ds)
}

pub fn points_to_csv(ds: &PointDataset) -> String {
    let mut out = String::new();
    for (i, p) in ds.points.iter().enumerate() {
        let mut cells: Vec<String> = p.iter().map(|v| format!("{v}")).collect();
        if let Some(l) = &ds.labels {
            cells.push(l[i].to_string());
        }
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Synthetic labeled blob dataset: `k` Gaussian clusters in `dim`
/// dimensions with unit-spaced centers.
pub fn make_blobs(n: usize, k: usize, dim: usize, spread: f64, seed: u64) -> PointDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centers: Vec<Vec<f64>> =
        (0..k).map(|_| (0..dim).map(|_| rng.gen_range(-4.0..4.0)).collect()).collect();
    let mut points = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let c = i % k;
        // Box-Muller pairs for gaussian coordinates
        let point: Vec<f64> = (0..dim)
            .map(|d| {
                let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
                let u2: f64 = rng.gen_range(0.0..1.0);
                let z = (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos();
                centers[c][d] + spread * z
            })
            .collect();
        points.push(point);
        labels.push(c);
    }
    PointDataset { points, labels: Some(labels) }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Gaussian similarity graph: W_ij = exp(-dist² / sigma²), zero diagonal.
pub fn similarity_matrix(data: &PointDataset, sigma: f64) -> Result<Graph, PipelineError> {
    data.validate()?;
    if !(sigma > 0.0) {
        return Err(stage_err("similarity", format!("sigma {sigma} must be positive")));
    }
    let n = data.points.len();
    let mut g = Graph::empty(n);
    for i in 0..n {
        for j in (i + 1)..n {
            let w = (-sq_dist(&data.points[i], &data.points[j]) / (sigma * sigma)).exp();
            if w > 0.0 {
                g.set_weight(i, j, w).map_err(|e| stage_err("similarity", e))?;
            }
        }
    }
    Ok(g)
}

/// Seeded Lloyd iterations with random distinct initial centers.
pub fn kmeans(points: &[Vec<f64>], k: usize, seed: u64, iterations: usize) -> Vec<usize> {
    assert!(k >= 1 && k <= points.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx: Vec<usize> = (0..points.len()).collect();
    idx.shuffle(&mut rng);
    let mut centers: Vec<Vec<f64>> = idx[..k].iter().map(|&i| points[i].clone()).collect();
    let mut assign = vec![0usize; points.len()];
    for _ in 0..iterations {
        let mut changed = false;
        for (i, p) in points.iter().enumerate() {
            let best = (0..k)
                .min_by(|&a, &b| sq_dist(p, &centers[a]).partial_cmp(&sq_dist(p, &centers[b])).unwrap())
                .unwrap();
            if assign[i] != best {
                assign[i] = best;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        let dim = points[0].len();
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (i, p) in points.iter().enumerate() {
            counts[assign[i]] += 1;
            for d in 0..dim {
                sums[assign[i]][d] += p[d];
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                for d in 0..dim {
                    centers[c][d] = sums[c][d] / counts[c] as f64;
                }
            }
        }
    }
    assign
}

/// Constant-weight inter-cluster completion, the simple densifier.
pub fn densify_inter_completion(
    g: &Graph,
    clustering: &[usize],
    w: f64,
) -> Result<Graph, PipelineError> {
    complete_inter(g, clustering, w).map_err(|e| stage_err("densify", e))
}

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub sigma: f64,
    pub sze: SzeConfig,
    /// Constant completion weight; None disables densification.
    pub densify: Option<f64>,
    /// Cluster count for the densifier when no labels are available.
    pub densify_clusters: usize,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            sigma: 1.0,
            sze: SzeConfig::default(),
            densify: None,
            densify_clusters: 10,
            seed: 7,
        }
    }
}

pub enum PipelineInput {
    Points(PointDataset),
    Graph { graph: Graph, labels: Option<Vec<usize>> },
}

#[derive(Debug, Serialize)]
pub struct PipelineSummary {
    pub n: usize,
    pub k: usize,
    pub converged: bool,
    pub c0_fraction: f64,
    pub node_ratio: f64,
    pub storage_ratio: f64,
    pub reldev_input: Option<f64>,
    pub reldev_reconstruction: Option<f64>,
    pub graph_density: f64,
    pub densified: bool,
}

impl PipelineSummary {
    pub fn csv(&self) -> String {
        let fmt = |v: Option<f64>| v.map_or_else(|| "nan".into(), |x: f64| x.to_string());
        format!(
            "n,k,converged,c0_fraction,node_ratio,storage_ratio,reldev_input,reldev_reconstruction,graph_density,densified\n{},{},{},{},{},{},{},{},{},{}\n",
            self.n,
            self.k,
            self.converged,
            self.c0_fraction,
            self.node_ratio,
            self.storage_ratio,
            fmt(self.reldev_input),
            fmt(self.reldev_reconstruction),
            self.graph_density,
            self.densified
        )
    }
}

/// Build or take a graph, optionally densify, run the round trip, and
/// write every artifact into `out_dir`.
pub fn pipeline_run(
    config: &PipelineConfig,
    input: PipelineInput,
    out_dir: impl AsRef<Path>,
) -> Result<(PipelineSummary, SzeRun), PipelineError> {
    let out_dir = out_dir.as_ref();
    fs::create_dir_all(out_dir).map_err(|e| stage_err("setup", e))?;

    let (graph, labels) = match input {
        PipelineInput::Points(ds) => {
            let labels = ds.labels.clone();
            (similarity_matrix(&ds, config.sigma)?, labels)
        }
        PipelineInput::Graph { graph, labels } => (graph, labels),
    };

    let (graph, densified) = match config.densify {
        Some(w) => {
            let clustering = match &labels {
                Some(l) => l.clone(),
                None => {
                    // no labels: cluster a spectral-free embedding is out of
                    // scope, so cluster the adjacency rows directly
                    let rows: Vec<Vec<f64>> =
                        (0..graph.n()).map(|i| (0..graph.n()).map(|j| graph.weight(i, j)).collect()).collect();
                    kmeans(&rows, config.densify_clusters, config.seed, 50)
                }
            };
            (densify_inter_completion(&graph, &clustering, w)?, true)
        }
        None => (graph, false),
    };

    io::save_graph(&graph, out_dir.join("graph.txt"), GraphFormat::DenseMatrix)
        .map_err(|e| stage_err("write-graph", e))?;

    let mut sze = config.sze.clone();
    sze.partition.rng_seed = config.seed;
    let run = run_sze(&graph, &sze).map_err(|e| stage_err("round-trip", e))?;

    io::save_partition(&run.outcome.partition, out_dir.join("partition.txt"))
        .map_err(|e| stage_err("write-partition", e))?;
    fs::write(
        out_dir.join("trace.csv"),
        crate::partition::trace_to_csv(&run.outcome.trace),
    )
    .map_err(|e| stage_err("write-trace", e))?;
    crate::codec::save_reduced(&run.reduced, out_dir.join("reduced.txt"))
        .map_err(|e| stage_err("write-reduced", e))?;
    io::save_graph(&run.expanded, out_dir.join("reconstruction.txt"), GraphFormat::DenseMatrix)
        .map_err(|e| stage_err("write-reconstruction", e))?;

    let write_report = |name: &str, rep: &Option<crate::metrics::MetricsReport>| {
        let text = match rep {
            Some(r) => serde_json::to_string_pretty(r).expect("report serializes"),
            None => "{\"error\": \"metrics unavailable: graph disconnected or has isolated vertices\"}".to_string(),
        };
        fs::write(out_dir.join(name), text).map_err(|e| stage_err("write-metrics", e))
    };
    write_report("metrics_input.json", &run.input_report)?;
    write_report("metrics_reconstruction.json", &run.recon_report)?;

    let (node_ratio, storage_ratio) = compression_metrics(graph.n(), run.reduced.k);
    let summary = PipelineSummary {
        n: graph.n(),
        k: run.reduced.k,
        converged: run.outcome.converged,
        c0_fraction: run.c0_fraction,
        node_ratio,
        storage_ratio,
        reldev_input: run.input_report.as_ref().map(|r| r.reldev_mean),
        reldev_reconstruction: run.recon_report.as_ref().map(|r| r.reldev_mean),
        graph_density: crate::synth::global_density(&graph),
        densified,
    };
    fs::write(out_dir.join("summary.csv"), summary.csv())
        .map_err(|e| stage_err("write-summary", e))?;
    Ok((summary, run))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn similarity_kernel_values() {
        let ds = PointDataset {
            points: vec![vec![0.0, 0.0], vec![0.0, 0.0], vec![1.0, 0.0]],
            labels: None,
        };
        let g = similarity_matrix(&ds, 1.0).unwrap();
        // duplicates: weight 1
        assert_abs_diff_eq!(g.weight(0, 1), 1.0);
        // distance sigma: e^{-1}
        assert_abs_diff_eq!(g.weight(0, 2), (-1.0f64).exp(), epsilon = 1e-12);
        assert_eq!(g.weight(0, 0), 0.0);
    }

    #[test]
    fn similarity_rejects_bad_input() {
        let ds = PointDataset { points: vec![vec![0.0], vec![f64::NAN]], labels: None };
        assert!(similarity_matrix(&ds, 1.0).is_err());
        let ok = PointDataset { points: vec![vec![0.0], vec![1.0]], labels: None };
        assert!(similarity_matrix(&ok, 0.0).is_err());
        assert!(similarity_matrix(&ok, -1.0).is_err());
    }

    #[test]
    fn points_csv_round_trip() {
        let ds = make_blobs(30, 3, 4, 0.1, 5);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("pts.csv");
        std::fs::write(&p, points_to_csv(&ds)).unwrap();
        let back = load_points_csv(&p, true).unwrap();
        assert_eq!(back.points.len(), 30);
        assert_eq!(back.labels.as_ref().unwrap(), ds.labels.as_ref().unwrap());
    }

    #[test]
    fn kmeans_recovers_separated_blobs() {
        let ds = make_blobs(90, 3, 2, 0.05, 11);
        let found = kmeans(&ds.points, 3, 2, 100);
        let truth = ds.labels.unwrap();
        // same-cluster pairs agree between found and planted labels
        let mut agree = 0;
        let mut total = 0;
        for i in 0..90 {
            for j in (i + 1)..90 {
                total += 1;
                if (truth[i] == truth[j]) == (found[i] == found[j]) {
                    agree += 1;
                }
            }
        }
        assert!(agree as f64 / total as f64 > 0.95, "pair agreement {agree}/{total}");
    }

    #[test]
    fn densify_identity_on_complete_and_volume_monotone() {
        let g = Graph::complete(6);
        let labels = vec![0, 0, 0, 1, 1, 1];
        let same = densify_inter_completion(&g, &labels, 0.2).unwrap();
        assert_eq!(same, g);

        let (gt, l) = crate::synth::make_gt(&crate::synth::GroundTruthSpec::default(), 1).unwrap();
        let dense = densify_inter_completion(&gt, &l, 0.2).unwrap();
        assert!(dense.volume() > gt.volume());
        // intra weights untouched
        for i in 0..20 {
            for j in (i + 1)..20 {
                assert_eq!(dense.weight(i, j), gt.weight(i, j));
            }
        }
    }

    #[test]
    fn pipeline_writes_artifacts() {
        let (gt, labels) = crate::synth::make_gt(&crate::synth::GroundTruthSpec::default(), 1).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let cfg = PipelineConfig::default();
        let (summary, _) = pipeline_run(
            &cfg,
            PipelineInput::Graph { graph: gt, labels: Some(labels) },
            dir.path(),
        )
        .unwrap();
        assert_eq!(summary.n, 200);
        for f in [
            "graph.txt",
            "partition.txt",
            "trace.csv",
            "reduced.txt",
            "reconstruction.txt",
            "metrics_input.json",
            "metrics_reconstruction.json",
            "summary.csv",
        ] {
            assert!(dir.path().join(f).exists(), "missing artifact {f}");
        }
        assert_abs_diff_eq!(summary.node_ratio, 1.0 - summary.k as f64 / 200.0, epsilon = 1e-12);
    }
}

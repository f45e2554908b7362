//! Synthetic benchmarks: a planted clique-chain ground truth, controlled
//! sparsification/densification perturbations, and the three experiment
//! grids evaluating how well the compress–expand round trip preserves
//! resistance structure.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::codec::{expand, identity_map, reduce, CodecError, ExpansionMode, ExpansionSpec, ReducedGraph};
use crate::graph::{Graph, GraphError};
use crate::metrics::{rel_dev_aggregate_pairs, MetricsError, MetricsReport};
use crate::partition::{find_regular_partition, PartitionConfig, PartitionError, PartitionOutcome};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("{requested} inter edges per link exceed the {available} available pairs")]
    TooManyInterEdges { requested: usize, available: usize },
    #[error("requested {requested} additions but only {available} absent pairs exist")]
    NotEnoughAbsentPairs { requested: usize, available: usize },
    #[error("fraction {0} outside [0, 1]")]
    BadFraction(f64),
    #[error("weight {0} outside (0, 1]")]
    BadWeight(f64),
    #[error("spec invalid: {0}")]
    BadSpec(String),
    #[error("labels length {0} does not match graph size {1}")]
    LabelMismatch(usize, usize),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Partition(#[from] PartitionError),
    #[error(transparent)]
    Codec(#[from] CodecError),
}

/// Chain of k cliques of size s, with a fixed number of random unit
/// edges between each pair of consecutive cliques.
#[derive(Debug, Clone, Copy)]
pub struct GroundTruthSpec {
    pub k: usize,
    pub s: usize,
    pub inter_edges_per_link: usize,
}

impl Default for GroundTruthSpec {
    fn default() -> Self {
        GroundTruthSpec { k: 10, s: 20, inter_edges_per_link: 20 }
    }
}

impl GroundTruthSpec {
    pub fn n(&self) -> usize {
        self.k * self.s
    }

    /// Number of intra-cluster pairs (all present in the ground truth).
    pub fn max_intra(&self) -> usize {
        self.k * self.s * (self.s - 1) / 2
    }

    /// Number of inter-cluster pairs across all class pairs.
    pub fn max_inter(&self) -> usize {
        let n = self.n();
        n * (n - 1) / 2 - self.max_intra()
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        if self.k < 2 || self.s < 2 {
            return Err(SynthError::BadSpec(format!("need k >= 2 and s >= 2, got k={}, s={}", self.k, self.s)));
        }
        if self.inter_edges_per_link > self.s * self.s {
            return Err(SynthError::TooManyInterEdges {
                requested: self.inter_edges_per_link,
                available: self.s * self.s,
            });
        }
        Ok(())
    }
}

/// Build the ground truth and its planted class labels.
pub fn make_gt(spec: &GroundTruthSpec, seed: u64) -> Result<(Graph, Vec<usize>), SynthError> {
    spec.validate()?;
    let (k, s) = (spec.k, spec.s);
    let mut g = Graph::empty(k * s);
    for c in 0..k {
        for i in (c * s)..((c + 1) * s) {
            for j in (i + 1)..((c + 1) * s) {
                g.set_weight(i, j, 1.0)?;
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for c in 0..(k - 1) {
        // all s*s pairs between clique c and c+1, sampled without replacement
        let picks = sample(&mut rng, s * s, spec.inter_edges_per_link);
        for t in picks.iter() {
            let i = c * s + t / s;
            let j = (c + 1) * s + t % s;
            g.set_weight(i, j, 1.0)?;
        }
    }
    let labels = (0..k * s).map(|v| v / s).collect();
    Ok((g, labels))
}

fn check_labels(g: &Graph, labels: &[usize]) -> Result<(), SynthError> {
    if labels.len() != g.n() {
        return Err(SynthError::LabelMismatch(labels.len(), g.n()));
    }
    Ok(())
}

fn intra_edges(g: &Graph, labels: &[usize]) -> Vec<(usize, usize)> {
    let n = g.n();
    let mut out = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if labels[i] == labels[j] && g.weight(i, j) > 0.0 {
                out.push((i, j));
            }
        }
    }
    out
}

fn inter_pairs(g: &Graph, labels: &[usize], absent: bool) -> Vec<(usize, usize)> {
    let n = g.n();
    let mut out = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if labels[i] != labels[j] && (g.weight(i, j) > 0.0) != absent {
                out.push((i, j));
            }
        }
    }
    out
}

/// Remove `round(fraction * intra-edge-count)` intra-cluster edges,
/// chosen uniformly. Returns the graph and the removal count.
pub fn sparsify_intra(
    g: &Graph,
    labels: &[usize],
    fraction: f64,
    seed: u64,
) -> Result<(Graph, usize), SynthError> {
    check_labels(g, labels)?;
    if !(0.0..=1.0).contains(&fraction) {
        return Err(SynthError::BadFraction(fraction));
    }
    let edges = intra_edges(g, labels);
    let q = (fraction * edges.len() as f64).round() as usize;
    let mut out = g.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for t in sample(&mut rng, edges.len(), q).iter() {
        let (i, j) = edges[t];
        out.set_weight(i, j, 0.0)?;
    }
    Ok((out, q))
}

/// Add `count` currently-absent inter-cluster edges (any class pair) at
/// the given weight, chosen uniformly.
pub fn add_inter(
    g: &Graph,
    labels: &[usize],
    count: usize,
    weight: f64,
    seed: u64,
) -> Result<Graph, SynthError> {
    check_labels(g, labels)?;
    if !(weight > 0.0 && weight <= 1.0) {
        return Err(SynthError::BadWeight(weight));
    }
    let absent = inter_pairs(g, labels, true);
    if count > absent.len() {
        return Err(SynthError::NotEnoughAbsentPairs { requested: count, available: absent.len() });
    }
    let mut out = g.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for t in sample(&mut rng, absent.len(), count).iter() {
        let (i, j) = absent[t];
        out.set_weight(i, j, weight)?;
    }
    Ok(out)
}

/// Set every absent inter-cluster pair to the given weight.
pub fn complete_inter(g: &Graph, labels: &[usize], weight: f64) -> Result<Graph, SynthError> {
    check_labels(g, labels)?;
    if !(weight > 0.0 && weight <= 1.0) {
        return Err(SynthError::BadWeight(weight));
    }
    let mut out = g.clone();
    for (i, j) in inter_pairs(g, labels, true) {
        out.set_weight(i, j, weight)?;
    }
    Ok(out)
}

pub fn global_density(g: &Graph) -> f64 {
    let n = g.n() as f64;
    if n < 2.0 {
        return 0.0;
    }
    g.volume() / (n * (n - 1.0))
}

/// Edge-count interpolation D(x) = (1 - x) * n_in + x * n_out used for
/// the selective-density bookkeeping.
pub fn planted_density_formula(x: f64, n_in: usize, n_out: usize) -> f64 {
    (1.0 - x) * n_in as f64 + x * n_out as f64
}

/// Full round-trip configuration: partitioning, summary threshold, and
/// expansion mode.
#[derive(Debug, Clone)]
pub struct SzeConfig {
    pub partition: PartitionConfig,
    pub d_threshold: f64,
    /// Epsilon the summary is built against; must stay below d_threshold.
    pub codec_epsilon: f64,
    pub mode: ExpansionMode,
}

impl Default for SzeConfig {
    fn default() -> Self {
        // chain densities are small, so the summary works against a much
        // finer epsilon than the partition does
        SzeConfig {
            partition: PartitionConfig {
                epsilon: 0.5,
                initial_classes: 10,
                max_iterations: 20,
                rng_seed: 7,
                binarize_threshold: 0.5,
            },
            d_threshold: 0.01,
            codec_epsilon: 0.005,
            mode: ExpansionMode::ConstantWeight,
        }
    }
}

#[derive(Debug)]
pub struct SzeRun {
    pub outcome: PartitionOutcome,
    pub reduced: ReducedGraph,
    pub expanded: Graph,
    /// Deviation statistics on the input, over the vertices the summary
    /// kept; absent when the input is disconnected or has an isolated
    /// vertex.
    pub input_report: Option<MetricsReport>,
    /// Same statistics on the reconstruction, over the same pairs mapped
    /// through the codec's vertex identity.
    pub recon_report: Option<MetricsReport>,
    pub c0_fraction: f64,
}

fn report_or_none(g: &Graph, pairs: &[(usize, usize)], seed: u64) -> Option<MetricsReport> {
    match rel_dev_aggregate_pairs(g, pairs, seed) {
        Ok(r) => Some(r),
        Err(MetricsError::Disconnected)
        | Err(MetricsError::IsolatedVertex(_))
        | Err(MetricsError::TooSmall) => None,
        // numeric failures on these dense solves would be a bug; surface loudly
        Err(e) => panic!("metrics failure: {e}"),
    }
}

/// Compress then expand, evaluating deviation statistics on both sides
/// over identical vertex pairs.
pub fn run_sze(g: &Graph, config: &SzeConfig) -> Result<SzeRun, SynthError> {
    let outcome = find_regular_partition(g, &config.partition)?;
    let reduced = reduce(
        &outcome.partition,
        &outcome.densities,
        &outcome.statuses,
        config.d_threshold,
        config.codec_epsilon,
    )?;
    let m = outcome.partition.class_size();
    let spec = ExpansionSpec {
        m,
        mode: config.mode,
        seed: config.partition.rng_seed,
        fill_intra: None,
    };
    let expanded = expand(&reduced, &spec)?;

    let map = identity_map(&outcome.partition);
    let mut orig_pairs = Vec::new();
    let mut expanded_pairs = Vec::new();
    for a in 0..map.len() {
        for b in (a + 1)..map.len() {
            orig_pairs.push((map[a].0, map[b].0));
            expanded_pairs.push((map[a].1, map[b].1));
        }
    }
    let seed = config.partition.rng_seed;
    let input_report = report_or_none(g, &orig_pairs, seed);
    let recon_report = report_or_none(&expanded, &expanded_pairs, seed);
    let c0_fraction = outcome.partition.exceptional.len() as f64 / g.n() as f64;
    Ok(SzeRun { outcome, reduced, expanded, input_report, recon_report, c0_fraction })
}

#[derive(Debug, Clone)]
pub struct ExperimentRow {
    pub experiment: u8,
    pub variant: String,
    pub level: f64,
    pub seed: u64,
    pub reldev_gt: Option<f64>,
    pub reldev_sze: Option<f64>,
    pub density: f64,
    pub converged: bool,
    pub c0_frac: f64,
}

pub fn rows_to_csv(rows: &[ExperimentRow]) -> String {
    let fmt = |v: Option<f64>| v.map_or_else(|| "nan".to_string(), |x| x.to_string());
    let mut out = String::from("experiment,variant,level,seed,reldev_gt,reldev_sze,density,converged,c0_frac\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.experiment,
            r.variant,
            r.level,
            r.seed,
            fmt(r.reldev_gt),
            fmt(r.reldev_sze),
            r.density,
            r.converged,
            r.c0_frac
        ));
    }
    out
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub gt: GroundTruthSpec,
    pub sze: SzeConfig,
    pub base_seed: u64,
    pub levels: Vec<f64>,
    pub seeds_per_level: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            gt: GroundTruthSpec::default(),
            sze: SzeConfig::default(),
            base_seed: 0,
            levels: (0..10).map(|i| i as f64 / 10.0).collect(),
            seeds_per_level: 5,
        }
    }
}

impl ExperimentConfig {
    fn sze_for(&self, seed: u64) -> SzeConfig {
        let mut cfg = self.sze.clone();
        cfg.partition.rng_seed = self.base_seed + 300 + seed;
        cfg
    }
}

fn run_row(
    experiment: u8,
    variant: &str,
    level: f64,
    seed: u64,
    g: &Graph,
    cfg: &SzeConfig,
) -> Result<ExperimentRow, SynthError> {
    let run = run_sze(g, cfg)?;
    Ok(ExperimentRow {
        experiment,
        variant: variant.to_string(),
        level,
        seed,
        reldev_gt: run.input_report.as_ref().map(|r| r.reldev_mean),
        reldev_sze: run.recon_report.as_ref().map(|r| r.reldev_mean),
        density: global_density(g),
        converged: run.outcome.converged,
        c0_frac: run.c0_fraction,
    })
}

/// Experiment 1: remove q intra edges, add exactly q inter edges at unit
/// weight — the unweighted edge count stays constant across the grid.
pub fn experiment_constant_density(cfg: &ExperimentConfig) -> Result<Vec<ExperimentRow>, SynthError> {
    let (gt, labels) = make_gt(&cfg.gt, cfg.base_seed + 1)?;
    let mut rows = Vec::new();
    for &level in &cfg.levels {
        for seed in 0..cfg.seeds_per_level {
            let (sparse, q) = sparsify_intra(&gt, &labels, level, cfg.base_seed + 100 + seed)?;
            let g = add_inter(&sparse, &labels, q, 1.0, cfg.base_seed + 200 + seed)?;
            rows.push(run_row(1, "constant-density", level, seed, &g, &cfg.sze_for(seed))?);
        }
    }
    Ok(rows)
}

/// Experiment 2: sparsify only. Variant "delete" removes intra edges;
/// variant "complete-w" additionally sets every absent inter pair to a
/// constant weight.
pub fn experiment_sparsify_only(
    cfg: &ExperimentConfig,
    completion_weight: f64,
) -> Result<Vec<ExperimentRow>, SynthError> {
    let (gt, labels) = make_gt(&cfg.gt, cfg.base_seed + 1)?;
    let mut rows = Vec::new();
    for &level in &cfg.levels {
        for seed in 0..cfg.seeds_per_level {
            let (sparse, _) = sparsify_intra(&gt, &labels, level, cfg.base_seed + 100 + seed)?;
            rows.push(run_row(2, "delete", level, seed, &sparse, &cfg.sze_for(seed))?);
            let completed = complete_inter(&sparse, &labels, completion_weight)?;
            rows.push(run_row(2, "complete-w", level, seed, &completed, &cfg.sze_for(seed))?);
        }
    }
    Ok(rows)
}

/// Bring the total inter-cluster edge count up to `target` unit edges.
fn top_up_inter(
    g: &Graph,
    labels: &[usize],
    target: usize,
    seed: u64,
) -> Result<Graph, SynthError> {
    let present = inter_pairs(g, labels, false).len();
    if target <= present {
        return Ok(g.clone());
    }
    add_inter(g, labels, target - present, 1.0, seed)
}

/// Experiment 3: selective density. Variant "joint" sweeps x, removing
/// x of the intra pairs and raising the inter edge count to x of the
/// inter pairs. Variants "retain-R" fix the intra retention at R and
/// sweep the inter fraction alone.
pub fn experiment_selective_density(
    cfg: &ExperimentConfig,
    retentions: &[f64],
) -> Result<Vec<ExperimentRow>, SynthError> {
    let (gt, labels) = make_gt(&cfg.gt, cfg.base_seed + 1)?;
    let n_out = cfg.gt.max_inter();
    let mut rows = Vec::new();
    for &level in &cfg.levels {
        for seed in 0..cfg.seeds_per_level {
            let (sparse, _) = sparsify_intra(&gt, &labels, level, cfg.base_seed + 100 + seed)?;
            let target = (level * n_out as f64).round() as usize;
            let g = top_up_inter(&sparse, &labels, target, cfg.base_seed + 200 + seed)?;
            rows.push(run_row(3, "joint", level, seed, &g, &cfg.sze_for(seed))?);
        }
    }
    for &retention in retentions {
        let variant = format!("retain-{retention}");
        for &level in &cfg.levels {
            for seed in 0..cfg.seeds_per_level {
                let (sparse, _) =
                    sparsify_intra(&gt, &labels, 1.0 - retention, cfg.base_seed + 100 + seed)?;
                let target = (level * n_out as f64).round() as usize;
                let g = top_up_inter(&sparse, &labels, target, cfg.base_seed + 200 + seed)?;
                rows.push(run_row(3, &variant, level, seed, &g, &cfg.sze_for(seed))?);
            }
        }
    }
    Ok(rows)
}

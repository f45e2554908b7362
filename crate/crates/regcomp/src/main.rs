//! Command-line front end: generation, perturbation, partitioning,
//! reduce/expand, metrics, experiment grids, and the full pipeline.
//!
//! Exit codes: 0 success, 2 partition non-convergence (artifacts are
//! still written), 1 any other error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use regcomp::codec::{self, expand, reduce, ExpansionMode, ExpansionSpec};
use regcomp::graph::edge_density;
use regcomp::io::{self, GraphFormat};
use regcomp::metrics::{rel_dev_aggregate, sample_pairs};
use regcomp::partition::{check_all_pairs, find_regular_partition, trace_to_csv, PartitionConfig};
use regcomp::pipeline::{
    load_points_csv, pipeline_run, PipelineConfig, PipelineInput, PointDataset,
};
use regcomp::synth::{
    add_inter, complete_inter, experiment_constant_density, experiment_selective_density,
    experiment_sparsify_only, make_gt, rows_to_csv, sparsify_intra, ExperimentConfig,
    GroundTruthSpec, SzeConfig,
};

#[derive(Parser)]
#[command(name = "regcomp", version, about = "Graph compression via regular partitions")]
struct Cli {
    /// Base RNG seed for every randomized step.
    #[arg(long, global = true, default_value_t = 7)]
    seed: u64,
    /// Regularity tolerance; defaults per subcommand when omitted.
    #[arg(long, global = true)]
    epsilon: Option<f64>,
    /// Worker thread cap; results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Directory all artifacts are written to.
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Constant,
    Bernoulli,
    Complete,
}

impl From<ModeArg> for ExpansionMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Constant => ExpansionMode::ConstantWeight,
            ModeArg::Bernoulli => ExpansionMode::RandomBernoulli,
            ModeArg::Complete => ExpansionMode::Complete,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate the planted clique-chain benchmark graph.
    Gen {
        #[arg(long, default_value_t = 10)]
        k: usize,
        #[arg(long, default_value_t = 20)]
        s: usize,
        /// Edges between each pair of consecutive cliques.
        #[arg(long, default_value_t = 20)]
        inter: usize,
    },
    /// Sparsify and/or densify a labeled graph.
    Perturb {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        /// Fraction of intra-cluster edges to remove.
        #[arg(long, default_value_t = 0.0)]
        remove_intra: f64,
        /// Number of absent inter-cluster pairs to add.
        #[arg(long, default_value_t = 0)]
        add_inter: usize,
        /// Weight of added edges.
        #[arg(long, default_value_t = 1.0)]
        weight: f64,
        /// Set every remaining absent inter pair to this weight.
        #[arg(long)]
        complete_inter: Option<f64>,
    },
    /// Find a regular partition; writes partition.txt and trace.csv.
    Partition {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 10)]
        b: usize,
        #[arg(long, default_value_t = 0.5)]
        binarize_threshold: f64,
        #[arg(long, default_value_t = 20)]
        max_iterations: usize,
    },
    /// Summarize a partitioned graph; writes reduced.txt.
    Reduce {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        partition: PathBuf,
        #[arg(long, default_value_t = 0.01)]
        d_threshold: f64,
        /// Epsilon the summary is built against (must be below d_threshold).
        #[arg(long, default_value_t = 0.005)]
        codec_epsilon: f64,
        #[arg(long, default_value_t = 0.5)]
        binarize_threshold: f64,
    },
    /// Expand a summary back to a full graph; writes expanded.txt.
    Expand {
        #[arg(long)]
        input: PathBuf,
        /// Vertices per class; defaults to the summary's class size.
        #[arg(long)]
        m: Option<usize>,
        #[arg(long, value_enum, default_value_t = ModeArg::Constant)]
        mode: ModeArg,
    },
    /// Resistance and spectral statistics; writes metrics.json.
    Metrics {
        #[arg(long)]
        input: PathBuf,
    },
    /// Run one of the three synthetic experiment grids.
    Experiment {
        /// 1: constant density, 2: sparsify-only, 3: selective density.
        which: u8,
        #[arg(long, default_value_t = 10)]
        levels: usize,
        #[arg(long, default_value_t = 5)]
        seeds: u64,
        /// Completion weight for experiment 2's second variant.
        #[arg(long, default_value_t = 0.2)]
        w: f64,
        /// Intra retentions for experiment 3's fixed-retention variants.
        #[arg(long, value_delimiter = ',', default_values_t = vec![0.5, 0.75, 1.0])]
        retentions: Vec<f64>,
    },
    /// Full compress/expand pipeline over a point set or a graph.
    Pipeline {
        /// CSV of points, one per row.
        #[arg(long, conflicts_with = "graph")]
        points: Option<PathBuf>,
        /// Last CSV column is a class label.
        #[arg(long, requires = "points")]
        labeled: bool,
        /// Pre-built graph file instead of points.
        #[arg(long)]
        graph: Option<PathBuf>,
        /// Labels file for the densifier (one id per line).
        #[arg(long)]
        labels: Option<PathBuf>,
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
        /// Densify via inter-cluster completion, e.g. `inter:0.2`.
        #[arg(long)]
        densify: Option<String>,
        /// Cluster count for the densifier when no labels are given.
        #[arg(long, default_value_t = 10)]
        clusters: usize,
        #[arg(long, default_value_t = 0.01)]
        d_threshold: f64,
        #[arg(long, default_value_t = 0.005)]
        codec_epsilon: f64,
    },
}

fn load_labels(path: &Path) -> Result<Vec<usize>, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| l.trim().parse::<usize>().map_err(|_| format!("bad label {l:?}")))
        .collect()
}

fn partition_config(cli: &Cli, b: usize, binarize: f64, max_iterations: usize, default_eps: f64) -> PartitionConfig {
    PartitionConfig {
        epsilon: cli.epsilon.unwrap_or(default_eps),
        initial_classes: b,
        max_iterations,
        rng_seed: cli.seed,
        binarize_threshold: binarize,
    }
}

fn run(cli: &Cli) -> Result<u8, String> {
    fs::create_dir_all(&cli.out_dir).map_err(|e| e.to_string())?;
    let out = |name: &str| cli.out_dir.join(name);
    match &cli.cmd {
        Command::Gen { k, s, inter } => {
            let spec = GroundTruthSpec { k: *k, s: *s, inter_edges_per_link: *inter };
            let (g, labels) = make_gt(&spec, cli.seed).map_err(|e| e.to_string())?;
            io::save_graph(&g, out("graph.txt"), GraphFormat::EdgeList).map_err(|e| e.to_string())?;
            let text: String = labels.iter().map(|l| format!("{l}\n")).collect();
            fs::write(out("labels.txt"), text).map_err(|e| e.to_string())?;
            println!("wrote {} and labels.txt (n={}, density={:.4})",
                out("graph.txt").display(), g.n(), regcomp::synth::global_density(&g));
            Ok(0)
        }
        Command::Perturb { input, labels, remove_intra, add_inter: add, weight, complete_inter: complete } => {
            let g = io::load_graph_auto(input).map_err(|e| e.to_string())?;
            let labels = load_labels(labels)?;
            let (mut g, q) =
                sparsify_intra(&g, &labels, *remove_intra, cli.seed).map_err(|e| e.to_string())?;
            if *add > 0 {
                g = add_inter(&g, &labels, *add, *weight, cli.seed + 1).map_err(|e| e.to_string())?;
            }
            if let Some(w) = complete {
                g = complete_inter(&g, &labels, *w).map_err(|e| e.to_string())?;
            }
            io::save_graph(&g, out("perturbed.txt"), GraphFormat::EdgeList).map_err(|e| e.to_string())?;
            println!("removed {q} intra edges, added {add} inter edges -> {}", out("perturbed.txt").display());
            Ok(0)
        }
        Command::Partition { input, b, binarize_threshold, max_iterations } => {
            let g = io::load_graph_auto(input).map_err(|e| e.to_string())?;
            let config = partition_config(cli, *b, *binarize_threshold, *max_iterations, 0.25);
            let outcome = find_regular_partition(&g, &config).map_err(|e| e.to_string())?;
            io::save_partition(&outcome.partition, out("partition.txt")).map_err(|e| e.to_string())?;
            fs::write(out("trace.csv"), trace_to_csv(&outcome.trace)).map_err(|e| e.to_string())?;
            println!(
                "k={} c={} c0={} converged={}",
                outcome.partition.k(),
                outcome.partition.class_size(),
                outcome.partition.exceptional.len(),
                outcome.converged
            );
            if !outcome.converged {
                if let Some(reason) = &outcome.failure {
                    eprintln!("not converged: {reason}");
                }
                return Ok(2);
            }
            Ok(0)
        }
        Command::Reduce { input, partition, d_threshold, codec_epsilon, binarize_threshold } => {
            let g = io::load_graph_auto(input).map_err(|e| e.to_string())?;
            let p = io::load_partition(partition).map_err(|e| e.to_string())?;
            let eps = cli.epsilon.unwrap_or(0.25);
            let gb = g.binarize(*binarize_threshold).map_err(|e| e.to_string())?;
            let statuses = check_all_pairs(&gb, &p, eps).map_err(|e| e.to_string())?;
            let k = p.k();
            let mut dens = vec![vec![0.0; k]; k];
            for r in 0..k {
                for s in (r + 1)..k {
                    let v = edge_density(&g, &p.classes[r], &p.classes[s]).map_err(|e| e.to_string())?;
                    dens[r][s] = v;
                    dens[s][r] = v;
                }
            }
            let reduced =
                reduce(&p, &dens, &statuses, *d_threshold, *codec_epsilon).map_err(|e| e.to_string())?;
            codec::save_reduced(&reduced, out("reduced.txt")).map_err(|e| e.to_string())?;
            println!("k={} edges={} -> {}", reduced.k, reduced.edge_count(), out("reduced.txt").display());
            Ok(0)
        }
        Command::Expand { input, m, mode } => {
            let reduced = codec::load_reduced(input).map_err(|e| e.to_string())?;
            let spec = ExpansionSpec {
                m: m.unwrap_or(reduced.m),
                mode: (*mode).into(),
                seed: cli.seed,
                fill_intra: None,
            };
            let g = expand(&reduced, &spec).map_err(|e| e.to_string())?;
            io::save_graph(&g, out("expanded.txt"), GraphFormat::DenseMatrix).map_err(|e| e.to_string())?;
            println!("n={} -> {}", g.n(), out("expanded.txt").display());
            Ok(0)
        }
        Command::Metrics { input } => {
            let g = io::load_graph_auto(input).map_err(|e| e.to_string())?;
            let report = rel_dev_aggregate(&g, cli.seed).map_err(|e| e.to_string())?;
            let chk = regcomp::metrics::resistance_bound_check(&g, &sample_pairs(g.n(), cli.seed))
                .map_err(|e| e.to_string())?;
            fs::write(out("metrics.json"), serde_json::to_string_pretty(&report).unwrap())
                .map_err(|e| e.to_string())?;
            println!("{}", regcomp::metrics::MetricsReport::csv_header());
            println!("{}", report.csv_row());
            println!("bound holds: {} (bipartite: {})", chk.holds, chk.bipartite);
            Ok(0)
        }
        Command::Experiment { which, levels, seeds, w, retentions } => {
            let grid: Vec<f64> = (0..*levels).map(|i| i as f64 / *levels as f64).collect();
            let mut sze = SzeConfig::default();
            if let Some(eps) = cli.epsilon {
                sze.partition.epsilon = eps;
            }
            let cfg = ExperimentConfig {
                gt: GroundTruthSpec::default(),
                sze,
                base_seed: cli.seed,
                levels: grid,
                seeds_per_level: *seeds,
            };
            let rows = match which {
                1 => experiment_constant_density(&cfg),
                2 => experiment_sparsify_only(&cfg, *w),
                3 => experiment_selective_density(&cfg, retentions),
                other => return Err(format!("unknown experiment {other}; expected 1, 2 or 3")),
            }
            .map_err(|e| e.to_string())?;
            let path = out(&format!("experiment{which}.csv"));
            fs::write(&path, rows_to_csv(&rows)).map_err(|e| e.to_string())?;
            println!("{} rows -> {}", rows.len(), path.display());
            Ok(0)
        }
        Command::Pipeline {
            points,
            labeled,
            graph,
            labels,
            sigma,
            densify,
            clusters,
            d_threshold,
            codec_epsilon,
        } => {
            let input = match (points, graph) {
                (Some(p), None) => {
                    let ds: PointDataset = load_points_csv(p, *labeled).map_err(|e| e.to_string())?;
                    PipelineInput::Points(ds)
                }
                (None, Some(gp)) => {
                    let g = io::load_graph_auto(gp).map_err(|e| e.to_string())?;
                    let l = labels.as_ref().map(|lp| load_labels(lp)).transpose()?;
                    PipelineInput::Graph { graph: g, labels: l }
                }
                _ => return Err("pass exactly one of --points or --graph".into()),
            };
            let densify_w = match densify {
                None => None,
                Some(spec) => {
                    let w = spec
                        .strip_prefix("inter:")
                        .and_then(|t| t.parse::<f64>().ok())
                        .ok_or_else(|| format!("bad densify spec {spec:?}, expected inter:<w>"))?;
                    Some(w)
                }
            };
            let mut sze = SzeConfig { d_threshold: *d_threshold, codec_epsilon: *codec_epsilon, ..Default::default() };
            if let Some(eps) = cli.epsilon {
                sze.partition.epsilon = eps;
            }
            let config = PipelineConfig {
                sigma: *sigma,
                sze,
                densify: densify_w,
                densify_clusters: *clusters,
                seed: cli.seed,
            };
            let (summary, _) = pipeline_run(&config, input, &cli.out_dir).map_err(|e| e.to_string())?;
            println!(
                "n={} k={} node_ratio={:.4} storage_ratio={:.4} converged={}",
                summary.n, summary.k, summary.node_ratio, summary.storage_ratio, summary.converged
            );
            if !summary.converged {
                return Ok(2);
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("warning: could not set thread pool size: {e}");
        }
    }
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(1)
        }
    }
}

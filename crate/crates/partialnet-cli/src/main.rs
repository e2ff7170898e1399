//! Command-line front end: simulation grids, the spectral-theory
//! verification sweep, the karate club study, the political-blog
//! pipeline, and one-shot perceived-view statistics.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use partialnet::experiments::{
    run_grid, run_karate, run_polblogs, run_theory_check, AnchorRule, ExperimentGrid, MetricSet,
    Model, QRule, TheoryCheckConfig,
};
use partialnet::graph::{load_edge_list, IndexBase};
use partialnet::report::{emit_csv, grid_csv, to_json_string};
use partialnet::view::{perceive_based, perceive_within, view_stats, Depth};

#[derive(Parser)]
#[command(
    name = "partialnet",
    version,
    about = "Individual-centered partial-information network analysis"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum Metrics {
    /// Edge-ratio and within-depth statistics only
    Stats,
    /// Statistics plus partial-information detection
    Partial,
    /// Everything, including the full-information baseline
    All,
}

#[derive(Args)]
struct OutputArgs {
    /// Output file (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Subcommand)]
enum Command {
    /// Run a simulation grid over node counts and sparsity rules
    Simulate {
        /// Block model: 1, 2, or 3
        #[arg(long, default_value = "1")]
        model: String,
        /// Comma-separated node counts
        #[arg(
            long,
            value_delimiter = ',',
            default_value = "300,600,900,1200,1500,1800,2100"
        )]
        ns: Vec<usize>,
        /// Comma-separated q rules: fixed(V), sqrt_logn_over_n,
        /// quarter_root_logn_over_n_half, inv_sqrt_n
        #[arg(
            long,
            value_delimiter = ',',
            default_value = "fixed(0.1),sqrt_logn_over_n,quarter_root_logn_over_n_half,inv_sqrt_n"
        )]
        qs: Vec<String>,
        #[arg(long, default_value_t = 100)]
        reps: usize,
        #[arg(long, default_value_t = 20240817)]
        seed: u64,
        #[arg(long, default_value_t = 50)]
        restarts: usize,
        /// Anchor node (0-based) in each simulated network
        #[arg(long, default_value_t = 0)]
        anchor: usize,
        #[arg(long, value_enum, default_value = "all")]
        metrics: Metrics,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Verify the spectral theory numerically on random instances
    TheoryCheck {
        #[arg(long, default_value_t = 50)]
        instances: usize,
        #[arg(long, default_value_t = 20240817)]
        seed: u64,
        /// Community counts to draw from
        #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
        ks: Vec<usize>,
        #[arg(long, default_value_t = 100)]
        n_min: usize,
        #[arg(long, default_value_t = 400)]
        n_max: usize,
        #[arg(long, default_value_t = 0.1)]
        q_min: f64,
        #[arg(long, default_value_t = 0.3)]
        q_max: f64,
        #[arg(long, default_value_t = 20)]
        restarts: usize,
        /// Exit with status 2 if any instance fails its tolerances
        #[arg(long)]
        strict: bool,
        /// Output file (stdout when omitted); always JSON
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Anchored detection on the embedded karate club network
    Karate {
        /// Anchors: member numbers 1-34, or H / A
        #[arg(long, value_delimiter = ',', default_value = "H,2,3,A,20,32")]
        anchors: Vec<String>,
        /// Edges to delete before the second pass, as U:V pairs
        #[arg(long, value_delimiter = ',', default_value = "A:20")]
        delete: Vec<String>,
        /// Number of communities to detect (scored against the
        /// two-faction ground truth)
        #[arg(long, default_value_t = 2)]
        k: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 50)]
        restarts: usize,
        /// Output file (stdout when omitted); always JSON
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Within-depth detection on a political-blog style edge list
    Polblogs {
        #[arg(long)]
        edges: PathBuf,
        /// CSV file `node_id,community` with a header line
        #[arg(long)]
        labels: PathBuf,
        /// Anchor node ids, in the edge file's numbering
        #[arg(long, value_delimiter = ',')]
        anchors: Vec<usize>,
        /// First node id in the files: 0 or 1
        #[arg(long, default_value_t = 1)]
        base: u8,
        /// Number of communities to detect
        #[arg(long, default_value_t = 2)]
        k: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 50)]
        restarts: usize,
        /// Output file (stdout when omitted); always JSON
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// One-shot view statistics for an anchor in an edge-list graph
    Perceive {
        #[arg(long)]
        edges: PathBuf,
        /// Anchor node id, in the edge file's numbering
        #[arg(long)]
        anchor: usize,
        #[arg(long, default_value_t = 2)]
        depth: u32,
        /// First node id in the file: 0 or 1
        #[arg(long, default_value_t = 0)]
        base: u8,
        /// Output file (stdout when omitted); always JSON
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_base(base: u8) -> anyhow::Result<IndexBase> {
    match base {
        0 => Ok(IndexBase::Zero),
        1 => Ok(IndexBase::One),
        other => bail!("--base must be 0 or 1, got {other}"),
    }
}

fn write_or_print(text: &str, out: &Option<PathBuf>) -> anyhow::Result<()> {
    match out {
        Some(path) => {
            std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn run() -> anyhow::Result<ExitCode> {
    let cli = Cli::parse();
    match cli.command {
        Command::Simulate {
            model,
            ns,
            qs,
            reps,
            seed,
            restarts,
            anchor,
            metrics,
            output,
        } => {
            let grid = ExperimentGrid {
                model: Model::parse(&model)?,
                ns,
                qs: qs
                    .iter()
                    .map(|q| QRule::parse(q))
                    .collect::<Result<Vec<_>, _>>()?,
                reps,
                seed,
                anchor: if anchor == 0 {
                    AnchorRule::FirstNode
                } else {
                    AnchorRule::Explicit(anchor)
                },
                metrics: match metrics {
                    Metrics::Stats => MetricSet::stats_only(),
                    Metrics::Partial => MetricSet {
                        full_baseline: false,
                        ..MetricSet::default()
                    },
                    Metrics::All => MetricSet::default(),
                },
                restarts,
            };
            let result = run_grid(&grid)?;
            match output.format {
                Format::Csv => match &output.out {
                    Some(path) => emit_csv(&result, path)?,
                    None => print!("{}", grid_csv(&result)),
                },
                Format::Json => write_or_print(&to_json_string(&result)?, &output.out)?,
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::TheoryCheck {
            instances,
            seed,
            ks,
            n_min,
            n_max,
            q_min,
            q_max,
            restarts,
            strict,
            out,
        } => {
            let config = TheoryCheckConfig {
                instances,
                seed,
                ks,
                n_range: (n_min, n_max),
                q_range: (q_min, q_max),
                restarts,
            };
            let report = run_theory_check(&config)?;
            write_or_print(&to_json_string(&report)?, &out)?;
            if strict && !report.all_pass {
                return Ok(ExitCode::from(2));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Karate {
            anchors,
            delete,
            k,
            seed,
            restarts,
            out,
        } => {
            let deletions = delete
                .iter()
                .filter(|s| !s.trim().is_empty())
                .map(|pair| {
                    pair.split_once(':')
                        .map(|(u, v)| (u.trim().to_string(), v.trim().to_string()))
                        .with_context(|| format!("--delete entry {pair:?} is not U:V"))
                })
                .collect::<anyhow::Result<Vec<_>>>()?;
            let study = run_karate(&anchors, &deletions, k, seed, restarts)?;
            write_or_print(&to_json_string(&study)?, &out)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Polblogs {
            edges,
            labels,
            anchors,
            base,
            k,
            seed,
            restarts,
            out,
        } => {
            let study = run_polblogs(
                &edges,
                &labels,
                parse_base(base)?,
                &anchors,
                k,
                seed,
                restarts,
            )?;
            write_or_print(&to_json_string(&study)?, &out)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Perceive {
            edges,
            anchor,
            depth,
            base,
            out,
        } => {
            let base = parse_base(base)?;
            let graph = load_edge_list(&edges, base, true)?;
            let offset = match base {
                IndexBase::Zero => 0usize,
                IndexBase::One => 1,
            };
            let index = anchor
                .checked_sub(offset)
                .filter(|&i| i < graph.n())
                .with_context(|| format!("anchor {anchor} out of range"))?;
            let view = perceive_based(&graph, index, Depth::from_level(depth)?);
            let stats = view_stats(&graph, &view)?;
            let (within, _) = perceive_within(&view);
            let payload = serde_json::json!({
                "n": graph.n(),
                "edges": graph.edge_count(),
                "anchor": anchor,
                "depth": depth,
                "perceived_edges": view.b().edge_count(),
                "within_depth_nodes": view.within_depth_nodes().len(),
                "within_view_nodes": within.n(),
                "stats": stats,
            });
            write_or_print(&to_json_string(&payload)?, &out)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use log::{info, warn};

use dualweb_core::audience::{build_audience_graph_with_margin, duplication_matrix, Panel, VisitationLog};
use dualweb_core::communities::{detect_communities, CommunityPartition, LouvainOptions};
use dualweb_core::crawler::{crawl, CrawlConfig};
use dualweb_core::graph::{
    read_graph_json, read_node_csv, write_directed_edges_csv, write_edge_list_csv, write_graph_json, SymmetrizeRule,
    WeightedGraph,
};
use dualweb_core::hyperlink::{build_hyperlink_graph, ingest_edge_list};
use dualweb_core::layout::{fr_layout, render_svg, LayoutOptions, LayoutResult, RenderOptions};
use dualweb_core::metrics::{
    degree_distribution, network_stats, CentralizationVariant, ClusteringVariant, MetricsOptions,
};
use dualweb_core::pipeline::{cmd_reproduce, RunConfig};
use dualweb_core::qap::{qap_correlation, QapMode, QapOptions, Tail, Transform};
use dualweb_core::synth::{write_dataset, SynthConfig};

#[derive(Parser)]
#[command(name = "dualweb", version, about = "Audience and hyperlink network analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct SeedArg {
    /// Random seed
    #[arg(long, env = "DUALWEB_SEED")]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic paired dataset
    Synth {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out_dir: PathBuf,
        #[command(flatten)]
        seed: SeedArg,
    },
    /// Crawl seed sites and count inter-seed hyperlinks
    Crawl {
        #[arg(long)]
        config: PathBuf,
        /// Directed edge list CSV
        #[arg(long)]
        out: PathBuf,
        /// Crawl report JSON [default: <out>.report.json]
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Build the audience network from a visitation log
    BuildAudience {
        #[arg(long)]
        log: PathBuf,
        #[arg(long)]
        panel: PathBuf,
        #[arg(long)]
        meta: PathBuf,
        /// Duplication must exceed expectation by more than this
        #[arg(long, default_value_t = 0.0)]
        min_margin: f64,
        #[arg(long)]
        out: PathBuf,
        /// Also write the duplication matrix
        #[arg(long)]
        dup: Option<PathBuf>,
        /// Also write an undirected edge list
        #[arg(long)]
        edges: Option<PathBuf>,
    },
    /// Build the undirected hyperlink network from a directed edge list
    BuildHyperlink {
        #[arg(long)]
        edges: PathBuf,
        #[arg(long)]
        meta: PathBuf,
        #[arg(long, default_value = "sum")]
        symmetrize: SymmetrizeRule,
        #[arg(long)]
        out: PathBuf,
    },
    /// Descriptive statistics of the dichotomized graph
    Metrics {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        ccdf: Option<PathBuf>,
        #[arg(long)]
        plot: Option<PathBuf>,
        #[arg(long, default_value = "avg-local")]
        clustering: ClusteringVariant,
        #[arg(long, default_value = "freeman")]
        centralization: CentralizationVariant,
    },
    /// Louvain communities on the weighted graph
    Communities {
        #[arg(long)]
        graph: PathBuf,
        #[command(flatten)]
        seed: SeedArg,
        #[arg(long, default_value_t = 1.0)]
        resolution: f64,
        #[arg(long, default_value_t = 5)]
        restarts: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// QAP correlation between two aligned graphs
    Qap {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long, default_value_t = 1000)]
        perms: usize,
        #[command(flatten)]
        seed: SeedArg,
        #[arg(long, default_value = "two-sided")]
        tail: Tail,
        #[arg(long, default_value = "none")]
        transform: Transform,
        #[arg(long, default_value = "auto")]
        mode: QapMode,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fruchterman-Reingold layout
    Layout {
        #[arg(long)]
        graph: PathBuf,
        #[command(flatten)]
        seed: SeedArg,
        #[arg(long, default_value_t = 500)]
        iterations: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Render a laid-out graph as SVG
    Render {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        pos: PathBuf,
        #[arg(long)]
        partition: PathBuf,
        #[arg(long)]
        meta: PathBuf,
        #[arg(long, default_value_t = 0.2)]
        edge_quantile: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the whole comparison and write every artefact
    Reproduce {
        /// Run config JSON; defaults to the synthetic configuration
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out_dir: PathBuf,
        #[command(flatten)]
        seed: SeedArg,
    },
}

fn write_json<T: serde::Serialize>(value: &T, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn load_graph(path: &Path) -> Result<WeightedGraph> {
    read_graph_json(path).with_context(|| format!("reading graph {}", path.display()))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synth { config, out_dir, seed } => {
            let mut cfg = match config {
                Some(p) => {
                    serde_json::from_str(&fs::read_to_string(&p).with_context(|| format!("reading {}", p.display()))?)?
                }
                None => SynthConfig::default(),
            };
            if let Some(s) = seed.seed {
                cfg.seed = s;
            }
            let paths = write_dataset(&cfg, &out_dir)?;
            info!("wrote synthetic dataset to {}", out_dir.display());
            println!("{}", serde_json::to_string_pretty(&paths)?);
        }
        Command::Crawl { config, out, report } => {
            let cfg = CrawlConfig::read_json(&config)?;
            let result = crawl(&cfg)?;
            write_directed_edges_csv(&result.resolved_edges, &out)?;
            let report = report.unwrap_or_else(|| out.with_extension("report.json"));
            fs::write(&report, result.to_json()?)?;
            if !result.dropped_sites.is_empty() {
                warn!("no pages fetched for: {}", result.dropped_sites.join(", "));
            }
            info!("fetched {} pages, {} edges", result.fetched, result.edges.len());
        }
        Command::BuildAudience {
            log,
            panel,
            meta,
            min_margin,
            out,
            dup,
            edges,
        } => {
            let nodes = read_node_csv(&meta)?;
            let log = VisitationLog::read_csv(&log)?;
            let panel = Panel::read_json(&panel)?;
            let matrix = duplication_matrix(&log, &panel, &nodes.ids())?;
            let g = build_audience_graph_with_margin(&matrix, min_margin);
            write_graph_json(&g, &out)?;
            if let Some(p) = dup {
                matrix.write_json(&p)?;
            }
            if let Some(p) = edges {
                write_edge_list_csv(&g, &p)?;
            }
            info!("audience network: {} nodes, {} ties", g.len(), g.tie_count());
        }
        Command::BuildHyperlink {
            edges,
            meta,
            symmetrize,
            out,
        } => {
            let nodes = read_node_csv(&meta)?;
            let (counts, stats) = ingest_edge_list(&edges, &nodes)?;
            if stats.unresolved_rows > 0 {
                warn!(
                    "skipped {} rows with unresolved hosts: {}",
                    stats.unresolved_rows,
                    stats.unresolved_hosts.join(", ")
                );
            }
            let g = build_hyperlink_graph(&counts, symmetrize).valued;
            write_graph_json(&g, &out)?;
            info!("hyperlink network: {} nodes, {} ties", g.len(), g.tie_count());
        }
        Command::Metrics {
            graph,
            out,
            ccdf,
            plot,
            clustering,
            centralization,
        } => {
            let g = dualweb_core::graph::dichotomize(&load_graph(&graph)?);
            let stats = network_stats(
                &g,
                MetricsOptions {
                    clustering,
                    centralization,
                },
            )?;
            write_json(&stats, &out)?;
            let dist = degree_distribution(&g);
            if let Some(p) = ccdf {
                dist.write_ccdf_csv(&p)?;
            }
            if let Some(p) = plot {
                fs::write(&p, dist.to_svg("degree CCDF"))?;
            }
        }
        Command::Communities {
            graph,
            seed,
            resolution,
            restarts,
            out,
        } => {
            let g = load_graph(&graph)?;
            let opts = LouvainOptions { resolution, restarts };
            let p = detect_communities(&g, seed.seed.unwrap_or(0), opts)?;
            p.write_json(&out)?;
            info!("{} communities, Q = {:.4}", p.n_communities, p.modularity_q);
        }
        Command::Qap {
            a,
            b,
            perms,
            seed,
            tail,
            transform,
            mode,
            out,
        } => {
            let (a, b) = (load_graph(&a)?, load_graph(&b)?);
            let opts = QapOptions {
                n_permutations: perms,
                seed: seed.seed.unwrap_or(0),
                tail,
                transform,
                mode,
            };
            let r = qap_correlation(&a, &b, opts)?;
            write_json(&r, &out)?;
            info!("r = {:.4}, p = {:.4}", r.r_observed, r.p_value);
        }
        Command::Layout {
            graph,
            seed,
            iterations,
            out,
        } => {
            let g = load_graph(&graph)?;
            let opts = LayoutOptions {
                iterations,
                ..Default::default()
            };
            fr_layout(&g, seed.seed.unwrap_or(0), opts)?.write_json(&out)?;
        }
        Command::Render {
            graph,
            pos,
            partition,
            meta,
            edge_quantile,
            out,
        } => {
            let g = load_graph(&graph)?;
            let nodes = read_node_csv(&meta)?;
            let layout = LayoutResult::read_json(&pos, g.nodes())?;
            let partition = CommunityPartition::read_json(&partition, g.nodes())?;
            let opts = RenderOptions {
                edge_quantile,
                ..Default::default()
            };
            fs::write(&out, render_svg(&g, &layout, &partition, &nodes, &opts)?)?;
        }
        Command::Reproduce { config, out_dir, seed } => {
            let mut cfg = match config {
                Some(p) => RunConfig::read_json(&p)?,
                None => RunConfig::default(),
            };
            if let Some(s) = seed.seed {
                cfg.seed = s;
            }
            let report = cmd_reproduce(&cfg, &out_dir)?;
            print!("{}", fs::read_to_string(out_dir.join("table.md"))?);
            let d = &report.directional;
            info!(
                "clustering gap {:.3}, centralization gap {:.3}, density gap {:.3}",
                d.clustering_gap, d.centralization_gap, d.density_gap
            );
        }
    }
    Ok(())
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

//! End-to-end run: build both networks, compare them and write every
//! artefact plus one JSON report.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::audience::{build_audience_graph_with_margin, duplication_matrix, Panel, VisitationLog};
use crate::communities::{
    cluster_purity, detect_communities, label_agreement, LouvainOptions, PurityAttribute, PurityReport,
};
use crate::error::{Error, Result};
use crate::graph::{
    align_common, dichotomize, read_node_csv, write_graph_json, NodeSet, SymmetrizeRule, WeightedGraph,
};
use crate::hyperlink::{build_hyperlink_graph, ingest_edge_list, IngestStats};
use crate::layout::{fr_layout, render_svg, LayoutOptions, RenderOptions};
use crate::metrics::{degree_distribution, network_stats, MetricsOptions, NetworkStats};
use crate::qap::{qap_correlation, QapMode, QapOptions, QapResult, Tail, Transform};
use crate::synth::{write_dataset, SynthConfig};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InputPaths {
    pub log: Option<PathBuf>,
    pub panel: Option<PathBuf>,
    pub edges: Option<PathBuf>,
    pub metadata: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QapSettings {
    pub n_permutations: usize,
    pub tail: Tail,
    pub transform: Transform,
    pub mode: QapMode,
}

impl Default for QapSettings {
    fn default() -> Self {
        let d = QapOptions::default();
        QapSettings {
            n_permutations: d.n_permutations,
            tail: d.tail,
            transform: d.transform,
            mode: d.mode,
        }
    }
}

/// Every knob of a run. `synth` set means the inputs are generated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub seed: u64,
    pub synth: Option<SynthConfig>,
    pub inputs: InputPaths,
    pub min_margin: f64,
    pub symmetrize: SymmetrizeRule,
    pub metrics: MetricsOptions,
    pub communities: LouvainOptions,
    pub qap: QapSettings,
    pub layout: LayoutOptions,
    pub edge_quantile: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 42,
            synth: Some(SynthConfig::default()),
            inputs: InputPaths::default(),
            min_margin: 0.0,
            symmetrize: SymmetrizeRule::Sum,
            metrics: MetricsOptions::default(),
            communities: LouvainOptions::default(),
            qap: QapSettings::default(),
            layout: LayoutOptions::default(),
            edge_quantile: 0.2,
        }
    }
}

impl RunConfig {
    pub fn read_json(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|_| Error::MissingInput(path.to_path_buf()))?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Checks inputs before any computation.
    pub fn validate(&self) -> Result<()> {
        if let Some(s) = &self.synth {
            return s.validate();
        }
        let i = &self.inputs;
        for (name, path) in [
            ("metadata", &i.metadata),
            ("log", &i.log),
            ("panel", &i.panel),
            ("edges", &i.edges),
        ] {
            match path {
                None => return Err(Error::InvalidConfig(format!("no {name} input given"))),
                Some(p) if !p.is_file() => return Err(Error::MissingInput(p.clone())),
                Some(_) => {}
            }
        }
        if !(0.0..=1.0).contains(&self.edge_quantile) {
            return Err(Error::InvalidConfig("edge_quantile must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommunitySummary {
    pub n_communities: usize,
    pub modularity_q: f64,
    pub sizes: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkSection {
    pub stats: NetworkStats,
    /// Max over median degree; absent when the median is 0.
    pub degree_max_median_ratio: Option<f64>,
    pub communities: CommunitySummary,
    pub geo_purity: PurityReport,
    pub language_purity: PurityReport,
    /// Agreement of detected communities with planted blocks (synthetic runs).
    pub planted_agreement: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub measure: String,
    pub hyperlink: String,
    pub audience: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionalChecks {
    pub clustering_gap: f64,
    pub centralization_gap: f64,
    pub density_gap: f64,
    pub audience_more_clustered: bool,
    pub audience_less_centralized: bool,
    pub audience_denser: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReproduceReport {
    pub seed: u64,
    pub config: RunConfig,
    pub n_sites: usize,
    pub visits: usize,
    pub universe_size: u64,
    pub hyperlink_ingest: IngestStats,
    pub audience: NetworkSection,
    pub hyperlink: NetworkSection,
    pub qap: QapResult,
    pub directional: DirectionalChecks,
    pub table: Vec<TableRow>,
    pub outputs: BTreeMap<String, String>,
}

fn stage<T>(name: &'static str, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::Stage {
        stage: name,
        source: Box::new(e),
    })
}

fn read_blocks(path: &Path) -> Result<BTreeMap<String, String>> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut map = BTreeMap::new();
    for rec in reader.records() {
        let rec = rec?;
        map.insert(rec[0].to_string(), rec[1].to_string());
    }
    Ok(map)
}

struct Artifacts<'a> {
    dir: &'a Path,
    files: BTreeMap<String, String>,
}

impl Artifacts<'_> {
    fn path(&mut self, key: &str, file: &str) -> PathBuf {
        self.files.insert(key.to_string(), file.to_string());
        self.dir.join(file)
    }
}

#[allow(clippy::too_many_arguments)]
fn analyse(
    name: &str,
    valued: &WeightedGraph,
    nodes: &NodeSet,
    planted: Option<&BTreeMap<String, String>>,
    cfg: &RunConfig,
    out: &mut Artifacts<'_>,
) -> Result<NetworkSection> {
    let binary = dichotomize(valued);
    write_graph_json(valued, &out.path(&format!("{name}_graph"), &format!("{name}.json")))?;
    let stats = stage("metrics", network_stats(&binary, cfg.metrics))?;
    let dist = degree_distribution(&binary);
    dist.write_ccdf_csv(&out.path(&format!("{name}_ccdf"), &format!("{name}_degree_ccdf.csv")))?;
    std::fs::write(
        out.path(&format!("{name}_degree_plot"), &format!("{name}_degree.svg")),
        dist.to_svg(&format!("{name} degree CCDF")),
    )?;
    let median = dist.median_degree();
    let ratio = (median > 0.0).then(|| dist.max_degree() as f64 / median);

    let partition = stage("communities", detect_communities(valued, cfg.seed, cfg.communities))?;
    partition.write_json(&out.path(&format!("{name}_partition"), &format!("{name}_partition.json")))?;
    let geo = stage("purity", cluster_purity(&partition, nodes, PurityAttribute::Geography))?;
    let lang = stage("purity", cluster_purity(&partition, nodes, PurityAttribute::Language))?;
    let planted_agreement = planted.map(|blocks| {
        // global sites carry no planted block
        let (found, truth): (Vec<usize>, Vec<String>) = partition
            .nodes()
            .iter()
            .zip(partition.labels())
            .filter_map(|(id, &l)| blocks.get(id).filter(|b| *b != "global").map(|b| (l, b.clone())))
            .unzip();
        let mut ids: Vec<&String> = truth.iter().collect();
        ids.sort();
        ids.dedup();
        let truth: Vec<usize> = truth.iter().map(|b| ids.binary_search(&b).expect("present")).collect();
        label_agreement(&found, &truth)
    });

    let layout = stage("layout", fr_layout(valued, cfg.seed, cfg.layout))?;
    layout.write_json(&out.path(&format!("{name}_layout"), &format!("{name}_layout.json")))?;
    let svg = stage(
        "render",
        render_svg(
            valued,
            &layout,
            &partition,
            nodes,
            &RenderOptions {
                edge_quantile: cfg.edge_quantile,
                title: format!("{name} network"),
                ..Default::default()
            },
        ),
    )?;
    std::fs::write(out.path(&format!("{name}_map"), &format!("{name}.svg")), svg)?;

    Ok(NetworkSection {
        degree_max_median_ratio: ratio,
        communities: CommunitySummary {
            n_communities: partition.n_communities,
            modularity_q: partition.modularity_q,
            sizes: partition.sizes(),
        },
        stats,
        geo_purity: geo,
        language_purity: lang,
        planted_agreement,
    })
}

fn fmt_pct(x: f64) -> String {
    format!("{:.0}%", x * 100.0)
}

fn build_table(h: &NetworkSection, a: &NetworkSection) -> Vec<TableRow> {
    let row = |m: &str, h: String, a: String| TableRow {
        measure: m.to_string(),
        hyperlink: h,
        audience: a,
    };
    let purity = |s: &NetworkSection| s.geo_purity.mean_purity.map_or("-".into(), |p| format!("{p:.3}"));
    vec![
        row("Nodes", h.stats.n_nodes.to_string(), a.stats.n_nodes.to_string()),
        row("Ties", h.stats.n_ties.to_string(), a.stats.n_ties.to_string()),
        row(
            "Clustering Coefficient",
            format!("{:.3}", h.stats.clustering_coefficient),
            format!("{:.3}", a.stats.clustering_coefficient),
        ),
        row(
            "Network Centralization",
            fmt_pct(h.stats.centralization),
            fmt_pct(a.stats.centralization),
        ),
        row(
            "Density",
            format!("{:.3}", h.stats.density),
            format!("{:.3}", a.stats.density),
        ),
        row(
            "Communities",
            h.communities.n_communities.to_string(),
            a.communities.n_communities.to_string(),
        ),
        row("Geographic purity", purity(h), purity(a)),
    ]
}

fn table_markdown(rows: &[TableRow], qap: &QapResult) -> String {
    let mut s = String::from("| Measure | Hyperlink network | Audience network |\n|---|---|---|\n");
    for r in rows {
        s.push_str(&format!("| {} | {} | {} |\n", r.measure, r.hyperlink, r.audience));
    }
    s.push_str(&format!(
        "\nQAP correlation of valued ties: r = {:.3}, p = {:.3} ({} relabelings)\n",
        qap.r_observed, qap.p_value, qap.n_permutations
    ));
    s
}

/// Runs the whole comparison, writing artefacts into `out_dir` as each
/// stage completes and finally `report.json` and `table.md`.
pub fn cmd_reproduce(config: &RunConfig, out_dir: &Path) -> Result<ReproduceReport> {
    stage("validate", config.validate())?;
    std::fs::create_dir_all(out_dir)?;
    let mut cfg = config.clone();
    let mut out = Artifacts {
        dir: out_dir,
        files: BTreeMap::new(),
    };

    let mut blocks = None;
    if let Some(synth) = &mut cfg.synth {
        synth.seed = cfg.seed;
        let paths = stage("synth", write_dataset(synth, &out_dir.join("data")))?;
        blocks = Some(stage("synth", read_blocks(&paths.blocks))?);
        cfg.inputs = InputPaths {
            log: Some(paths.log),
            panel: Some(paths.panel),
            edges: Some(paths.edges),
            metadata: Some(paths.metadata),
        };
    }
    let inputs = &cfg.inputs;
    let nodes = stage("load", read_node_csv(inputs.metadata.as_deref().expect("validated")))?;
    let log = stage(
        "load",
        VisitationLog::read_csv(inputs.log.as_deref().expect("validated")),
    )?;
    let panel = stage("load", Panel::read_json(inputs.panel.as_deref().expect("validated")))?;

    let ids = nodes.ids();
    let dup = stage("build-audience", duplication_matrix(&log, &panel, &ids))?;
    let audience = build_audience_graph_with_margin(&dup, cfg.min_margin);
    let (counts, ingest) = stage(
        "build-hyperlink",
        ingest_edge_list(inputs.edges.as_deref().expect("validated"), &nodes),
    )?;
    let hyperlink = build_hyperlink_graph(&counts, cfg.symmetrize).valued;

    let (audience, hyperlink) = stage("align", align_common(&audience, &hyperlink))?;

    let a = analyse("audience", &audience, &nodes, blocks.as_ref(), &cfg, &mut out)?;
    let h = analyse("hyperlink", &hyperlink, &nodes, blocks.as_ref(), &cfg, &mut out)?;

    let qap = stage(
        "qap",
        qap_correlation(
            &audience,
            &hyperlink,
            QapOptions {
                n_permutations: cfg.qap.n_permutations,
                seed: cfg.seed,
                tail: cfg.qap.tail,
                transform: cfg.qap.transform,
                mode: cfg.qap.mode,
            },
        ),
    )?;

    let directional = DirectionalChecks {
        clustering_gap: a.stats.clustering_coefficient - h.stats.clustering_coefficient,
        centralization_gap: h.stats.centralization - a.stats.centralization,
        density_gap: a.stats.density - h.stats.density,
        audience_more_clustered: a.stats.clustering_coefficient > h.stats.clustering_coefficient,
        audience_less_centralized: a.stats.centralization < h.stats.centralization,
        audience_denser: a.stats.density > h.stats.density,
    };
    let table = build_table(&h, &a);
    std::fs::write(out.path("table", "table.md"), table_markdown(&table, &qap))?;
    out.path("report", "report.json");

    let report = ReproduceReport {
        seed: cfg.seed,
        config: config.clone(),
        n_sites: ids.len(),
        visits: log.len(),
        universe_size: panel.universe_size,
        hyperlink_ingest: ingest,
        audience: a,
        hyperlink: h,
        qap,
        directional,
        table,
        outputs: out.files.clone(),
    };
    std::fs::write(
        out_dir.join("report.json"),
        serde_json::to_string_pretty(&report)? + "\n",
    )?;
    Ok(report)
}

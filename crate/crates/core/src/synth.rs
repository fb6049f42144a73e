//! Seeded generators for paired synthetic datasets: block-structured
//! audience behaviour (each user prefers sites of their own
//! geo-linguistic block) and preferential-attachment hyperlinking that
//! ignores blocks entirely.

use std::collections::HashMap;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::audience::{Panel, VisitationLog};
use crate::error::{Error, Result};
use crate::graph::{write_directed_edges_csv, write_node_csv, DirectedCountGraph, NodeSet, SiteNode, GLOBAL};

const GEOGRAPHIES: [(&str, &str); 20] = [
    ("US", "en"),
    ("BR", "pt"),
    ("DE", "de"),
    ("JP", "ja"),
    ("RU", "ru"),
    ("FR", "fr"),
    ("CN", "zh"),
    ("TR", "tr"),
    ("KR", "ko"),
    ("IN", "hi"),
    ("ES", "es"),
    ("IT", "it"),
    ("PL", "pl"),
    ("MX", "es"),
    ("ID", "id"),
    ("GB", "en"),
    ("NL", "nl"),
    ("SA", "ar"),
    ("VN", "vi"),
    ("TH", "th"),
];

// RNG streams, one per generator
const AUDIENCE_STREAM: u64 = 0;
const HYPERLINK_STREAM: u64 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub n_sites: usize,
    pub n_blocks: usize,
    pub n_global_sites: usize,
    pub n_users: usize,
    pub p_in: f64,
    pub p_out: f64,
    pub p_global: f64,
    pub ba_m: usize,
    pub owner_cliques: Vec<Vec<String>>,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_sites: 200,
            n_blocks: 5,
            n_global_sites: 10,
            n_users: 10_000,
            p_in: 0.15,
            p_out: 0.01,
            p_global: 0.4,
            ba_m: 3,
            owner_cliques: Vec::new(),
            seed: 42,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        for (name, p) in [("p_in", self.p_in), ("p_out", self.p_out), ("p_global", self.p_global)] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} = {p} is not a probability"));
            }
        }
        if self.p_in <= self.p_out {
            return bad("p_in must exceed p_out".into());
        }
        if self.n_blocks == 0 {
            return bad("n_blocks must be at least 1".into());
        }
        if self.n_sites == 0 || self.n_global_sites > self.n_sites {
            return bad("need 1 <= n_sites and n_global_sites <= n_sites".into());
        }
        Ok(())
    }

    fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        rng
    }

    fn block_sites(&self) -> usize {
        self.n_sites - self.n_global_sites
    }

    /// Planted block of each site in node order; `None` for global sites.
    pub fn site_blocks(&self) -> Vec<Option<usize>> {
        let block_sites = self.block_sites();
        (0..self.n_global_sites)
            .map(|_| None)
            .chain((0..block_sites).map(|k| Some(k * self.n_blocks / block_sites)))
            .collect()
    }

    /// Site metadata: global platforms first, then block sites grouped by
    /// block, each block with its own geography and language.
    pub fn nodes(&self) -> Result<NodeSet> {
        let blocks = self.site_blocks();
        let mut per_block = vec![0usize; self.n_blocks];
        let nodes = blocks
            .iter()
            .enumerate()
            .map(|(i, block)| match block {
                None => {
                    let id = format!("global-{i:03}");
                    SiteNode::new(id.clone(), GLOBAL)
                        .with_hosts([format!("{id}.example")])
                        .with_languages(["en"])
                }
                Some(b) => {
                    let (geo, lang) = block_identity(*b);
                    let k = per_block[*b];
                    per_block[*b] += 1;
                    let id = format!("{}-{k:03}", geo.to_lowercase());
                    SiteNode::new(id.clone(), geo)
                        .with_hosts([format!("{id}.example")])
                        .with_languages([lang])
                }
            })
            .collect();
        NodeSet::new(nodes)
    }
}

fn block_identity(block: usize) -> (String, String) {
    match GEOGRAPHIES.get(block) {
        Some(&(geo, lang)) => (geo.to_string(), lang.to_string()),
        None => (format!("X{block}"), format!("x{block}")),
    }
}

#[derive(Debug, Clone)]
pub struct AudienceData {
    pub log: VisitationLog,
    pub panel: Panel,
    pub nodes: NodeSet,
}

/// Each user joins a uniformly drawn block and visits every site
/// independently: `p_in` inside their block, `p_out` elsewhere, `p_global`
/// for global platforms.
pub fn generate_audience_log(cfg: &SynthConfig) -> Result<AudienceData> {
    cfg.validate()?;
    let nodes = cfg.nodes()?;
    let blocks = cfg.site_blocks();
    let mut rng = cfg.rng(AUDIENCE_STREAM);
    let mut log = VisitationLog::default();
    for u in 0..cfg.n_users {
        let home = rng.gen_range(0..cfg.n_blocks);
        let user = format!("u{u:06}");
        for (site, block) in nodes.nodes().iter().zip(&blocks) {
            let p = match block {
                None => cfg.p_global,
                Some(b) if *b == home => cfg.p_in,
                Some(_) => cfg.p_out,
            };
            if rng.gen_bool(p) {
                log.insert(user.clone(), site.id.clone());
            }
        }
    }
    Ok(AudienceData {
        log,
        // an empty panel still needs a positive universe
        panel: Panel::new(cfg.n_users.max(1) as u64, "synthetic")?,
        nodes,
    })
}

/// Sites join in a seeded random order, independent of blocks and of the
/// audience generator; each links to `ba_m` distinct earlier arrivals
/// drawn with probability proportional to in-degree + 1. Owner cliques are
/// then cross-linked in both directions.
pub fn generate_hyperlink_graph(cfg: &SynthConfig) -> Result<DirectedCountGraph> {
    cfg.validate()?;
    if cfg.ba_m >= cfg.n_sites {
        return Err(Error::InvalidConfig("ba_m must be below n_sites".into()));
    }
    let nodes = cfg.nodes()?;
    let n = nodes.len();
    let mut rng = cfg.rng(HYPERLINK_STREAM);
    let mut arrival: Vec<usize> = (0..n).collect();
    arrival.shuffle(&mut rng);
    let mut graph = DirectedCountGraph::empty(nodes.ids())?;
    let mut in_degree = vec![0u64; n];
    let mut chosen = Vec::with_capacity(cfg.ba_m);
    for k in 1..n {
        let earlier = &arrival[..k];
        chosen.clear();
        let m = cfg.ba_m.min(k);
        let mut total: u64 = earlier.iter().map(|&t| in_degree[t] + 1).sum();
        while chosen.len() < m {
            let mut x = rng.gen_range(0..total);
            let target = earlier
                .iter()
                .copied()
                .filter(|t| !chosen.contains(t))
                .find(|&t| {
                    let w = in_degree[t] + 1;
                    if x < w {
                        true
                    } else {
                        x -= w;
                        false
                    }
                })
                .expect("draw below remaining weight");
            total -= in_degree[target] + 1;
            chosen.push(target);
        }
        for &t in &chosen {
            graph.add(arrival[k], t, 1);
            in_degree[t] += 1;
        }
    }
    let index: HashMap<&str, usize> = nodes
        .nodes()
        .iter()
        .enumerate()
        .map(|(i, s)| (s.id.as_str(), i))
        .collect();
    for clique in &cfg.owner_cliques {
        let members = clique
            .iter()
            .map(|id| {
                index
                    .get(id.as_str())
                    .copied()
                    .ok_or_else(|| Error::UnknownNode(id.clone()))
            })
            .collect::<Result<Vec<_>>>()?;
        for &a in &members {
            for &b in &members {
                if a != b && graph.count(a, b) == 0 {
                    graph.add(a, b, 1);
                }
            }
        }
    }
    Ok(graph)
}

/// Paths of a dataset written by [`write_dataset`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetPaths {
    pub metadata: std::path::PathBuf,
    pub log: std::path::PathBuf,
    pub panel: std::path::PathBuf,
    pub edges: std::path::PathBuf,
    pub blocks: std::path::PathBuf,
}

/// Generates both datasets and writes `nodes.csv`, `visits.csv`,
/// `panel.json`, `edges.csv` and `blocks.csv` into `dir`.
pub fn write_dataset(cfg: &SynthConfig, dir: &Path) -> Result<DatasetPaths> {
    std::fs::create_dir_all(dir)?;
    let audience = generate_audience_log(cfg)?;
    let links = generate_hyperlink_graph(cfg)?;
    let paths = DatasetPaths {
        metadata: dir.join("nodes.csv"),
        log: dir.join("visits.csv"),
        panel: dir.join("panel.json"),
        edges: dir.join("edges.csv"),
        blocks: dir.join("blocks.csv"),
    };
    write_node_csv(&audience.nodes, &paths.metadata)?;
    audience.log.write_csv(&paths.log)?;
    audience.panel.write_json(&paths.panel)?;
    write_directed_edges_csv(&links, &paths.edges)?;
    let mut w = csv::Writer::from_path(&paths.blocks)?;
    w.write_record(["id", "block"])?;
    for (node, block) in audience.nodes.nodes().iter().zip(cfg.site_blocks()) {
        let label = block.map_or_else(|| "global".to_string(), |b| b.to_string());
        w.write_record([node.id.as_str(), &label])?;
    }
    w.flush()?;
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audience::{build_audience_graph, duplication_matrix};

    fn small() -> SynthConfig {
        SynthConfig {
            n_sites: 40,
            n_blocks: 4,
            n_global_sites: 4,
            n_users: 2000,
            ..Default::default()
        }
    }

    #[test]
    fn no_cross_block_ties_without_crossover() {
        let cfg = SynthConfig {
            p_out: 0.0,
            p_global: 0.0,
            ..small()
        };
        let data = generate_audience_log(&cfg).unwrap();
        let dup = duplication_matrix(&data.log, &data.panel, &data.nodes.ids()).unwrap();
        let g = build_audience_graph(&dup);
        let blocks = cfg.site_blocks();
        for i in 0..g.len() {
            for j in 0..g.len() {
                if let (Some(a), Some(b)) = (blocks[i], blocks[j]) {
                    if a != b {
                        assert_eq!(g.weight(i, j), 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn within_block_duplication_dominates() {
        let cfg = SynthConfig::default();
        let data = generate_audience_log(&cfg).unwrap();
        let dup = duplication_matrix(&data.log, &data.panel, &data.nodes.ids()).unwrap();
        let blocks = cfg.site_blocks();
        let (mut within, mut nw, mut across, mut na) = (0.0, 0, 0.0, 0);
        for (i, j) in dup.pairs() {
            if let (Some(a), Some(b)) = (blocks[i], blocks[j]) {
                if a == b {
                    within += dup.duplication(i, j);
                    nw += 1;
                } else {
                    across += dup.duplication(i, j);
                    na += 1;
                }
            }
        }
        let (within, across) = (within / nw as f64, across / na as f64);
        // expected within 0.2*0.15^2 + 0.8*0.01^2 = 4.58e-3,
        // across 0.4*0.15*0.01 + 0.6*0.01^2 = 6.6e-4
        assert!((within - 4.58e-3).abs() < 3e-4, "within {within}");
        assert!((across - 6.6e-4).abs() < 6e-5, "across {across}");
        assert!(within > 5.0 * across);
    }

    #[test]
    fn zero_users_gives_empty_log() {
        let cfg = SynthConfig { n_users: 0, ..small() };
        let data = generate_audience_log(&cfg).unwrap();
        assert!(data.log.is_empty());
        let reach = crate::audience::compute_reach(&data.log, &data.panel, &data.nodes.ids()).unwrap();
        assert!(reach.iter().all(|&r| r == 0.0));
    }

    #[test]
    fn minimal_attachment_is_complete() {
        let cfg = SynthConfig {
            n_sites: 4,
            n_global_sites: 0,
            n_blocks: 1,
            ba_m: 3,
            ..small()
        };
        let g = generate_hyperlink_graph(&cfg).unwrap();
        // whatever the arrival order, every pair is linked exactly once
        for a in 0..4 {
            for b in 0..a {
                assert_eq!(g.count(a, b) + g.count(b, a), 1);
            }
        }
        assert_eq!(g.edge_count(), 6);
    }

    #[test]
    fn attachment_concentrates_in_links() {
        let cfg = SynthConfig::default();
        let g = generate_hyperlink_graph(&cfg).unwrap();
        let mut indeg = g.in_degrees();
        indeg.sort_unstable_by(|a, b| b.cmp(a));
        let total: u64 = indeg.iter().sum();
        let top = (cfg.n_sites as f64 * 0.01).ceil() as usize;
        let share = indeg[..top].iter().sum::<u64>() as f64 / total as f64;
        let uniform = top as f64 / cfg.n_sites as f64;
        assert!(share >= 5.0 * uniform, "top share {share}");
    }

    #[test]
    fn owner_cliques_are_cross_linked() {
        let cfg = small();
        let ids = cfg.nodes().unwrap().ids();
        let clique = vec![ids[10].clone(), ids[20].clone(), ids[30].clone()];
        let g = generate_hyperlink_graph(&SynthConfig {
            owner_cliques: vec![clique],
            ..cfg.clone()
        })
        .unwrap();
        for a in [10, 20, 30] {
            for b in [10, 20, 30] {
                if a != b {
                    assert!(g.count(a, b) >= 1);
                }
            }
        }
        let bad = SynthConfig {
            owner_cliques: vec![vec!["nope".into()]],
            ..cfg
        };
        assert!(generate_hyperlink_graph(&bad).is_err());
    }

    #[test]
    fn generators_are_reproducible() {
        let cfg = small();
        assert_eq!(
            generate_audience_log(&cfg).unwrap().log,
            generate_audience_log(&cfg).unwrap().log
        );
        assert_eq!(
            generate_hyperlink_graph(&cfg).unwrap(),
            generate_hyperlink_graph(&cfg).unwrap()
        );
        let other = SynthConfig { seed: 7, ..cfg.clone() };
        assert_ne!(
            generate_audience_log(&cfg).unwrap().log,
            generate_audience_log(&other).unwrap().log
        );
    }

    #[test]
    fn config_validation() {
        assert!(SynthConfig {
            p_in: 0.01,
            p_out: 0.02,
            ..small()
        }
        .validate()
        .is_err());
        assert!(SynthConfig {
            p_global: 1.5,
            ..small()
        }
        .validate()
        .is_err());
        assert!(SynthConfig { n_blocks: 0, ..small() }.validate().is_err());
        assert!(generate_hyperlink_graph(&SynthConfig { ba_m: 40, ..small() }).is_err());
    }

    #[test]
    fn metadata_blocks() {
        let nodes = SynthConfig::default().nodes().unwrap();
        assert_eq!(nodes.len(), 200);
        assert_eq!(nodes.nodes().iter().filter(|n| n.is_global()).count(), 10);
        let geos: std::collections::BTreeSet<_> = nodes.nodes().iter().map(|n| n.geography.clone()).collect();
        assert_eq!(geos.len(), 6);
    }
}

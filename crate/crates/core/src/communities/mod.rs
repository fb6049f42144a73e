//! Weighted modularity, Louvain community detection and cluster purity.

mod louvain;
mod purity;

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;

pub use louvain::{detect_communities, detect_communities_with, LouvainOptions};
pub use purity::{cluster_purity, label_agreement, ClusterPurity, PurityAttribute, PurityReport};

/// Newman weighted modularity at resolution 1.
pub fn modularity(g: &WeightedGraph, labels: &[usize]) -> Result<f64> {
    modularity_with_resolution(g, labels, 1.0)
}

/// `Q = (1/2m) sum_ij [w_ij - gamma k_i k_j / 2m] delta(c_i, c_j)`, evaluated
/// per community as `sum_c [in_c / 2m - gamma (tot_c / 2m)^2]`.
pub fn modularity_with_resolution(g: &WeightedGraph, labels: &[usize], resolution: f64) -> Result<f64> {
    if labels.len() != g.len() {
        return Err(Error::InvalidPartition(format!(
            "{} labels for {} nodes",
            labels.len(),
            g.len()
        )));
    }
    let two_m = 2.0 * g.total_weight();
    if two_m <= 0.0 {
        return Err(Error::ZeroWeight);
    }
    let mut internal: HashMap<usize, f64> = HashMap::new();
    let mut total: HashMap<usize, f64> = HashMap::new();
    for i in 0..g.len() {
        let ci = labels[i];
        for (j, w) in g.neighbors(i) {
            *total.entry(ci).or_default() += w;
            if labels[j] == ci {
                *internal.entry(ci).or_default() += w;
            }
        }
    }
    let mut communities: Vec<usize> = total.keys().copied().collect();
    communities.sort_unstable();
    Ok(communities
        .into_iter()
        .map(|c| {
            let inside = internal.get(&c).copied().unwrap_or(0.0) / two_m;
            let share = total[&c] / two_m;
            inside - resolution * share * share
        })
        .sum())
}

/// Relabels communities densely in order of first appearance.
pub(crate) fn densify(labels: &[usize]) -> Vec<usize> {
    let mut map = HashMap::new();
    labels
        .iter()
        .map(|&l| {
            let next = map.len();
            *map.entry(l).or_insert(next)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CommunityPartition {
    nodes: Vec<String>,
    labels: Vec<usize>,
    pub modularity_q: f64,
    pub seed: u64,
    pub n_communities: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct PartitionJson {
    assignment: BTreeMap<String, usize>,
    q: f64,
    seed: u64,
    #[serde(default)]
    n_communities: Option<usize>,
}

impl CommunityPartition {
    pub fn new(nodes: Vec<String>, labels: &[usize], modularity_q: f64, seed: u64) -> Result<Self> {
        if nodes.len() != labels.len() {
            return Err(Error::InvalidPartition(format!(
                "{} labels for {} nodes",
                labels.len(),
                nodes.len()
            )));
        }
        let labels = densify(labels);
        let n_communities = labels.iter().max().map_or(0, |m| m + 1);
        Ok(CommunityPartition {
            nodes,
            labels,
            modularity_q,
            seed,
            n_communities,
        })
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    /// Community of each node, in node order; ids are dense from 0.
    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn community_of(&self, id: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n == id).map(|i| self.labels[i])
    }

    pub fn assignment(&self) -> BTreeMap<String, usize> {
        self.nodes.iter().cloned().zip(self.labels.iter().copied()).collect()
    }

    /// Community sizes indexed by community id.
    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.n_communities];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }

    pub fn to_json(&self) -> Result<String> {
        let json = PartitionJson {
            assignment: self.assignment(),
            q: self.modularity_q,
            seed: self.seed,
            n_communities: Some(self.n_communities),
        };
        Ok(serde_json::to_string_pretty(&json)? + "\n")
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    /// Reads a partition and orders it by `nodes`; every node must appear.
    pub fn read_json(path: &Path, nodes: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|_| Error::MissingInput(path.to_path_buf()))?;
        let json: PartitionJson = serde_json::from_str(&text)?;
        if json.assignment.is_empty() {
            return Err(Error::InvalidPartition("partition is empty".into()));
        }
        let labels = nodes
            .iter()
            .map(|id| {
                json.assignment
                    .get(id)
                    .copied()
                    .ok_or_else(|| Error::InvalidPartition(format!("node `{id}` has no community")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(nodes.to_vec(), &labels, json.q, json.seed)
    }
}

//! Shared graph model: site metadata, dense undirected weighted graphs and
//! directed hyperlink count matrices, plus the transforms both network
//! builders share.

mod io;

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use io::{
    read_directed_edges_csv, read_graph_json, read_node_csv, write_directed_edges_csv, write_edge_list_csv,
    write_graph_json, write_node_csv, GraphJson,
};

/// Geography sentinel for sites with no single focal country.
pub const GLOBAL: &str = "GLOBAL";

/// Largest node count accepted by the dense matrix representation.
pub const DENSE_NODE_CAP: usize = 5000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SiteNode {
    pub id: String,
    pub host_patterns: Vec<String>,
    pub languages: BTreeSet<String>,
    pub geography: String,
}

impl SiteNode {
    pub fn new(id: impl Into<String>, geography: impl Into<String>) -> Self {
        let id = id.into();
        SiteNode {
            host_patterns: vec![id.clone()],
            id,
            languages: BTreeSet::new(),
            geography: geography.into(),
        }
    }

    pub fn with_hosts<I, S>(mut self, hosts: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.host_patterns = hosts.into_iter().map(Into::into).collect();
        self
    }

    pub fn with_languages<I, S>(mut self, langs: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.languages = langs.into_iter().map(Into::into).collect();
        self
    }

    pub fn is_global(&self) -> bool {
        self.geography == GLOBAL
    }

    pub fn validate(&self) -> Result<()> {
        if self.id.trim().is_empty() {
            return Err(Error::InvalidNode("empty id".into()));
        }
        if !is_geography_code(&self.geography) {
            return Err(Error::InvalidNode(format!(
                "`{}` has invalid geography `{}`",
                self.id, self.geography
            )));
        }
        if self.host_patterns.iter().any(|h| h.trim().is_empty()) {
            return Err(Error::InvalidNode(format!("`{}` has an empty host pattern", self.id)));
        }
        Ok(())
    }
}

/// Uppercase ASCII alphanumeric codes such as `BR`, `US` or `GLOBAL`.
fn is_geography_code(code: &str) -> bool {
    !code.is_empty()
        && code.len() <= 12
        && code
            .bytes()
            .all(|b| b.is_ascii_uppercase() || b.is_ascii_digit() || b == b'-')
}

/// An ordered, id-unique collection of site metadata.
#[derive(Debug, Clone, Default)]
pub struct NodeSet {
    nodes: Vec<SiteNode>,
    index: HashMap<String, usize>,
}

impl NodeSet {
    pub fn new(nodes: Vec<SiteNode>) -> Result<Self> {
        let mut index = HashMap::with_capacity(nodes.len());
        for (i, node) in nodes.iter().enumerate() {
            node.validate()?;
            if index.insert(node.id.clone(), i).is_some() {
                return Err(Error::DuplicateNode(node.id.clone()));
            }
        }
        Ok(NodeSet { nodes, index })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[SiteNode] {
        &self.nodes
    }

    pub fn ids(&self) -> Vec<String> {
        self.nodes.iter().map(|n| n.id.clone()).collect()
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn get(&self, id: &str) -> Option<&SiteNode> {
        self.index_of(id).map(|i| &self.nodes[i])
    }
}

fn index_ids(nodes: &[String]) -> Result<HashMap<String, usize>> {
    if nodes.len() > DENSE_NODE_CAP {
        return Err(Error::TooManyNodes {
            n: nodes.len(),
            cap: DENSE_NODE_CAP,
        });
    }
    let mut index = HashMap::with_capacity(nodes.len());
    for (i, id) in nodes.iter().enumerate() {
        if id.is_empty() {
            return Err(Error::InvalidNode("empty id".into()));
        }
        if index.insert(id.clone(), i).is_some() {
            return Err(Error::DuplicateNode(id.clone()));
        }
    }
    Ok(index)
}

/// Undirected graph over an ordered node list, stored as a dense symmetric
/// matrix with a zero diagonal and nonnegative weights.
#[derive(Debug, Clone)]
pub struct WeightedGraph {
    nodes: Vec<String>,
    index: HashMap<String, usize>,
    weights: Vec<f64>,
}

impl PartialEq for WeightedGraph {
    fn eq(&self, other: &Self) -> bool {
        self.nodes == other.nodes && self.weights == other.weights
    }
}

impl WeightedGraph {
    /// Builds a graph from a row-major `n * n` matrix, checking symmetry,
    /// the zero diagonal and nonnegativity.
    pub fn new(nodes: Vec<String>, weights: Vec<f64>) -> Result<Self> {
        let index = index_ids(&nodes)?;
        let n = nodes.len();
        if weights.len() != n * n {
            return Err(Error::InvalidGraph(format!(
                "expected {} weights for {n} nodes, got {}",
                n * n,
                weights.len()
            )));
        }
        for i in 0..n {
            if weights[i * n + i] != 0.0 {
                return Err(Error::InvalidGraph(format!("self-loop on `{}`", nodes[i])));
            }
            for j in (i + 1)..n {
                let w = weights[i * n + j];
                if !w.is_finite() || w < 0.0 {
                    return Err(Error::InvalidGraph(format!(
                        "weight ({}, {}) = {w} is not a finite nonnegative number",
                        nodes[i], nodes[j]
                    )));
                }
                if w != weights[j * n + i] {
                    return Err(Error::InvalidGraph(format!(
                        "asymmetric weight between `{}` and `{}`",
                        nodes[i], nodes[j]
                    )));
                }
            }
        }
        Ok(WeightedGraph { nodes, index, weights })
    }

    /// Builds a graph by evaluating `weight(i, j)` for every `i < j`.
    /// Negative or non-finite values are rejected.
    pub fn from_fn<F>(nodes: Vec<String>, mut weight: F) -> Result<Self>
    where
        F: FnMut(usize, usize) -> f64,
    {
        let index = index_ids(&nodes)?;
        let n = nodes.len();
        let mut weights = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let w = weight(i, j);
                if !w.is_finite() || w < 0.0 {
                    return Err(Error::InvalidGraph(format!(
                        "weight ({}, {}) = {w} is not a finite nonnegative number",
                        nodes[i], nodes[j]
                    )));
                }
                weights[i * n + j] = w;
                weights[j * n + i] = w;
            }
        }
        Ok(WeightedGraph { nodes, index, weights })
    }

    pub fn empty(nodes: Vec<String>) -> Result<Self> {
        Self::from_fn(nodes, |_, _| 0.0)
    }

    /// Builds a graph from undirected `(i, j, weight)` triples; repeated
    /// pairs accumulate.
    pub fn from_edges<I>(nodes: Vec<String>, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let n = nodes.len();
        let mut weights = vec![0.0; n * n];
        for (i, j, w) in edges {
            if i >= n || j >= n {
                return Err(Error::InvalidGraph(format!(
                    "edge ({i}, {j}) out of range for {n} nodes"
                )));
            }
            if i == j {
                continue;
            }
            weights[i * n + j] += w;
            weights[j * n + i] += w;
        }
        Self::new(nodes, weights)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    #[inline]
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[i * self.nodes.len() + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.nodes.len();
        &self.weights[i * n..(i + 1) * n]
    }

    /// Row-major weight matrix.
    pub fn matrix(&self) -> &[f64] {
        &self.weights
    }

    pub fn has_tie(&self, i: usize, j: usize) -> bool {
        self.weight(i, j) > 0.0
    }

    /// Number of node pairs with positive weight.
    pub fn tie_count(&self) -> usize {
        let n = self.len();
        (0..n)
            .map(|i| ((i + 1)..n).filter(|&j| self.has_tie(i, j)).count())
            .sum()
    }

    /// Number of ties incident to each node.
    pub fn degrees(&self) -> Vec<usize> {
        (0..self.len())
            .map(|i| self.row(i).iter().filter(|&&w| w > 0.0).count())
            .collect()
    }

    /// Sum of weights over unordered pairs (`m` in the modularity formula).
    pub fn total_weight(&self) -> f64 {
        let n = self.len();
        let mut total = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                total += self.weight(i, j);
            }
        }
        total
    }

    pub fn max_weight(&self) -> f64 {
        self.weights.iter().copied().fold(0.0, f64::max)
    }

    /// Off-diagonal upper-triangle cells in row-major order.
    pub fn upper_triangle(&self) -> Vec<f64> {
        let n = self.len();
        let mut out = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for i in 0..n {
            out.extend_from_slice(&self.row(i)[i + 1..]);
        }
        out
    }

    /// Neighbour indices and weights of node `i`.
    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.row(i)
            .iter()
            .enumerate()
            .filter(|(_, &w)| w > 0.0)
            .map(|(j, &w)| (j, w))
    }

    /// Graph whose node at position `k` is this graph's node `perm[k]`.
    pub fn reorder(&self, perm: &[usize]) -> Result<Self> {
        check_permutation(perm, self.len())?;
        let nodes = perm.iter().map(|&p| self.nodes[p].clone()).collect();
        Self::from_fn(nodes, |i, j| self.weight(perm[i], perm[j]))
    }

    /// Restricts the graph to the given ids, in that order.
    pub fn subgraph(&self, ids: &[String]) -> Result<Self> {
        let idx = ids
            .iter()
            .map(|id| self.index_of(id).ok_or_else(|| Error::UnknownNode(id.clone())))
            .collect::<Result<Vec<_>>>()?;
        Self::from_fn(ids.to_vec(), |i, j| self.weight(idx[i], idx[j]))
    }

    /// Returns a graph with every weight passed through `f`; values must
    /// stay finite and nonnegative.
    pub fn map_weights<F: Fn(f64) -> f64>(&self, f: F) -> Result<Self> {
        Self::from_fn(self.nodes.clone(), |i, j| {
            let w = self.weight(i, j);
            if w > 0.0 {
                f(w)
            } else {
                0.0
            }
        })
    }
}

pub(crate) fn check_permutation(perm: &[usize], n: usize) -> Result<()> {
    let mut seen = vec![false; n];
    if perm.len() != n {
        return Err(Error::InvalidConfig(format!(
            "permutation has length {}, expected {n}",
            perm.len()
        )));
    }
    for &p in perm {
        if p >= n || std::mem::replace(&mut seen[p], true) {
            return Err(Error::InvalidConfig("not a permutation".into()));
        }
    }
    Ok(())
}

/// Directed multi-link counts: `count(i, j)` hyperlinks from `i` to `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectedCountGraph {
    nodes: Vec<String>,
    counts: Vec<u64>,
}

impl DirectedCountGraph {
    pub fn empty(nodes: Vec<String>) -> Result<Self> {
        index_ids(&nodes)?;
        let n = nodes.len();
        Ok(DirectedCountGraph {
            nodes,
            counts: vec![0; n * n],
        })
    }

    pub fn new(nodes: Vec<String>, counts: Vec<u64>) -> Result<Self> {
        index_ids(&nodes)?;
        let n = nodes.len();
        if counts.len() != n * n {
            return Err(Error::InvalidGraph(format!(
                "expected {} counts for {n} nodes, got {}",
                n * n,
                counts.len()
            )));
        }
        if (0..n).any(|i| counts[i * n + i] != 0) {
            return Err(Error::InvalidGraph("nonzero diagonal in link counts".into()));
        }
        Ok(DirectedCountGraph { nodes, counts })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    #[inline]
    pub fn count(&self, i: usize, j: usize) -> u64 {
        self.counts[i * self.nodes.len() + j]
    }

    /// Adds `by` links from `i` to `j`. Self links are ignored.
    pub fn add(&mut self, i: usize, j: usize, by: u64) {
        if i != j {
            let n = self.nodes.len();
            self.counts[i * n + j] += by;
        }
    }

    /// Number of ordered pairs with at least one link.
    pub fn edge_count(&self) -> usize {
        self.counts.iter().filter(|&&c| c > 0).count()
    }

    pub fn in_degrees(&self) -> Vec<u64> {
        let n = self.len();
        (0..n).map(|j| (0..n).map(|i| self.count(i, j)).sum()).collect()
    }

    /// Nonzero `(src, dst, count)` triples in row-major order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, u64)> + '_ {
        let n = self.len();
        self.counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(move |(k, &c)| (k / n, k % n, c))
    }
}

/// How the two directions of a hyperlink pair combine into one tie.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SymmetrizeRule {
    #[default]
    Sum,
    Max,
    Or,
}

impl std::str::FromStr for SymmetrizeRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sum" => Ok(Self::Sum),
            "max" => Ok(Self::Max),
            "or" => Ok(Self::Or),
            other => Err(Error::InvalidConfig(format!(
                "unknown symmetrize rule `{other}` (expected sum|max|or)"
            ))),
        }
    }
}

pub fn symmetrize(g: &DirectedCountGraph) -> WeightedGraph {
    symmetrize_with(g, SymmetrizeRule::Sum)
}

pub fn symmetrize_with(g: &DirectedCountGraph, rule: SymmetrizeRule) -> WeightedGraph {
    WeightedGraph::from_fn(g.nodes.clone(), |i, j| {
        let (a, b) = (g.count(i, j), g.count(j, i));
        match rule {
            SymmetrizeRule::Sum => (a + b) as f64,
            SymmetrizeRule::Max => a.max(b) as f64,
            SymmetrizeRule::Or => u8::from(a + b > 0) as f64,
        }
    })
    .expect("directed graph nodes were validated")
}

/// Presence/absence view: positive weights become 1.
pub fn dichotomize(g: &WeightedGraph) -> WeightedGraph {
    WeightedGraph {
        nodes: g.nodes.clone(),
        index: g.index.clone(),
        weights: g.weights.iter().map(|&w| if w > 0.0 { 1.0 } else { 0.0 }).collect(),
    }
}

/// Restricts both graphs to their shared node ids, ordered as in `a`.
pub fn align_common(a: &WeightedGraph, b: &WeightedGraph) -> Result<(WeightedGraph, WeightedGraph)> {
    let common: Vec<String> = a.nodes.iter().filter(|id| b.index.contains_key(*id)).cloned().collect();
    if common.is_empty() {
        return Err(Error::EmptyIntersection);
    }
    Ok((a.subgraph(&common)?, b.subgraph(&common)?))
}

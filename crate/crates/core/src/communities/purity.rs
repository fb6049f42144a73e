use std::collections::BTreeMap;

use pathfinding::prelude::{kuhn_munkres, Matrix};
use serde::{Deserialize, Serialize};

use super::CommunityPartition;
use crate::error::{Error, Result};
use crate::graph::{NodeSet, SiteNode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PurityAttribute {
    Geography,
    Language,
}

impl PurityAttribute {
    /// Values a node contributes; empty means "excluded from the count".
    fn values(self, node: &SiteNode) -> Vec<&str> {
        match self {
            PurityAttribute::Geography if node.is_global() => Vec::new(),
            PurityAttribute::Geography => vec![node.geography.as_str()],
            PurityAttribute::Language => node.languages.iter().map(String::as_str).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterPurity {
    pub community: usize,
    pub size: usize,
    /// Members carrying the attribute (GLOBAL geography excluded).
    pub counted: usize,
    pub modal_value: Option<String>,
    /// `None` when no member carries the attribute.
    pub purity: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PurityReport {
    pub attribute: PurityAttribute,
    pub clusters: Vec<ClusterPurity>,
    /// Size-weighted mean over clusters with a defined purity.
    pub mean_purity: Option<f64>,
    pub undefined_clusters: Vec<usize>,
}

/// Share of each cluster's members that carry the cluster's most common
/// attribute value. Ties between values pick the lexicographically first.
pub fn cluster_purity(
    partition: &CommunityPartition,
    nodes: &NodeSet,
    attribute: PurityAttribute,
) -> Result<PurityReport> {
    let mut members: Vec<Vec<&SiteNode>> = vec![Vec::new(); partition.n_communities];
    for (id, &c) in partition.nodes().iter().zip(partition.labels()) {
        let node = nodes.get(id).ok_or_else(|| Error::UnknownNode(id.clone()))?;
        members[c].push(node);
    }
    let mut clusters = Vec::with_capacity(members.len());
    let mut undefined = Vec::new();
    let (mut weighted, mut weight) = (0.0, 0usize);
    for (community, group) in members.iter().enumerate() {
        let mut counted = 0;
        let mut tally: BTreeMap<&str, usize> = BTreeMap::new();
        for node in group {
            let values = attribute.values(node);
            if !values.is_empty() {
                counted += 1;
            }
            for v in values {
                *tally.entry(v).or_default() += 1;
            }
        }
        let modal = tally
            .iter()
            .fold(None, |best: Option<(&str, usize)>, (&v, &c)| match best {
                Some((_, bc)) if bc >= c => best,
                _ => Some((v, c)),
            });
        let purity = modal.map(|(_, c)| c as f64 / counted as f64);
        match purity {
            Some(p) => {
                weighted += p * group.len() as f64;
                weight += group.len();
            }
            None => undefined.push(community),
        }
        clusters.push(ClusterPurity {
            community,
            size: group.len(),
            counted,
            modal_value: modal.map(|(v, _)| v.to_string()),
            purity,
        });
    }
    Ok(PurityReport {
        attribute,
        clusters,
        mean_purity: (weight > 0).then(|| weighted / weight as f64),
        undefined_clusters: undefined,
    })
}

/// Fraction of nodes whose found community maps to their true label under
/// the best one-to-one matching of communities to labels.
pub fn label_agreement(found: &[usize], truth: &[usize]) -> f64 {
    assert_eq!(found.len(), truth.len(), "label vectors differ in length");
    if found.is_empty() {
        return 1.0;
    }
    let rows = found.iter().max().map_or(0, |m| m + 1);
    let cols = truth.iter().max().map_or(0, |m| m + 1);
    let mut table = vec![vec![0i64; cols]; rows];
    for (&f, &t) in found.iter().zip(truth) {
        table[f][t] += 1;
    }
    // kuhn_munkres needs rows <= columns
    let table = if rows <= cols {
        table
    } else {
        (0..cols).map(|t| (0..rows).map(|f| table[f][t]).collect()).collect()
    };
    let width = table[0].len();
    let matrix = Matrix::from_rows(table).expect("rectangular table");
    debug_assert!(matrix.rows <= width);
    let (matched, _) = kuhn_munkres(&matrix);
    matched as f64 / found.len() as f64
}

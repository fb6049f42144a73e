//! Hyperlink network: directed inter-site link counts from an edge list or
//! a crawl, symmetrised into an undirected tie matrix.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::crawler::HostResolver;
use crate::error::Result;
use crate::graph::{
    dichotomize, read_directed_edges_csv, symmetrize_with, DirectedCountGraph, NodeSet, SymmetrizeRule, WeightedGraph,
};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestStats {
    pub rows: usize,
    pub self_links_dropped: usize,
    pub unresolved_rows: usize,
    /// Endpoint strings that matched no node, sorted and deduplicated.
    pub unresolved_hosts: Vec<String>,
}

/// Reads a `src,dst,count` edge list. Endpoints may be node ids or
/// hostnames; hostnames resolve through the nodes' host patterns.
pub fn ingest_edge_list(path: &Path, nodes: &NodeSet) -> Result<(DirectedCountGraph, IngestStats)> {
    let rows = read_directed_edges_csv(path)?;
    let resolver = HostResolver::new(nodes);
    let lookup = |s: &str| nodes.index_of(s).or_else(|| resolver.resolve_host(host_part(s)));
    let mut graph = DirectedCountGraph::empty(nodes.ids())?;
    let mut stats = IngestStats::default();
    let mut unresolved = std::collections::BTreeSet::new();
    for (line, src, dst, count) in rows {
        stats.rows += 1;
        match (lookup(&src), lookup(&dst)) {
            (Some(i), Some(j)) if i == j => stats.self_links_dropped += 1,
            (Some(i), Some(j)) => graph.add(i, j, count),
            (a, b) => {
                for (end, hit) in [(&src, a), (&dst, b)] {
                    if hit.is_none() {
                        log::warn!("{}:{line}: unresolvable endpoint `{end}`", path.display());
                        unresolved.insert(end.clone());
                    }
                }
                stats.unresolved_rows += 1;
            }
        }
    }
    stats.unresolved_hosts = unresolved.into_iter().collect();
    Ok((graph, stats))
}

// Accepts bare hosts as well as URLs.
fn host_part(s: &str) -> &str {
    let s = s.split_once("://").map_or(s, |(_, rest)| rest);
    let s = s.split(['/', '?', '#']).next().unwrap_or(s);
    s.rsplit_once(':').map_or(
        s,
        |(h, port)| {
            if port.bytes().all(|b| b.is_ascii_digit()) {
                h
            } else {
                s
            }
        },
    )
}

/// Valued and dichotomised undirected views of a hyperlink count graph.
#[derive(Debug, Clone)]
pub struct HyperlinkNetwork {
    pub valued: WeightedGraph,
    pub dichotomized: WeightedGraph,
}

pub fn build_hyperlink_graph(g: &DirectedCountGraph, rule: SymmetrizeRule) -> HyperlinkNetwork {
    let valued = symmetrize_with(g, rule);
    let dichotomized = dichotomize(&valued);
    HyperlinkNetwork { valued, dichotomized }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::graph::SiteNode;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn nodes() -> NodeSet {
        NodeSet::new(vec![
            SiteNode::new("A", "US").with_hosts(["a.example"]),
            SiteNode::new("B", "BR").with_hosts(["b.example"]),
            SiteNode::new("C", "DE").with_hosts(["c.example"]),
        ])
        .unwrap()
    }

    fn ingest(text: &str) -> Result<(DirectedCountGraph, IngestStats)> {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("edges.csv");
        std::fs::write(&path, text).unwrap();
        ingest_edge_list(&path, &nodes())
    }

    #[test]
    fn aggregates_repeated_rows() {
        let (g, stats) = ingest("src,dst,count\nA,B,2\nA,B,1\n").unwrap();
        assert_eq!(g.count(0, 1), 3);
        assert_eq!(stats.rows, 2);
    }

    #[test]
    fn drops_self_links() {
        let (g, stats) = ingest("A,A,5\n").unwrap();
        assert_eq!(g.count(0, 0), 0);
        assert_eq!(stats.self_links_dropped, 1);
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn empty_file_gives_empty_graph() {
        let (g, stats) = ingest("").unwrap();
        assert_eq!(g.edge_count(), 0);
        assert_eq!(g.len(), 3);
        assert_eq!(stats, IngestStats::default());
    }

    #[test]
    fn hosts_resolve_and_unknowns_are_counted() {
        let (g, stats) = ingest("www.a.example,http://b.example/x,4\nA,zzz.example,1\n").unwrap();
        assert_eq!(g.count(0, 1), 4);
        assert_eq!(stats.unresolved_rows, 1);
        assert_eq!(stats.unresolved_hosts, vec!["zzz.example"]);
    }

    #[test]
    fn malformed_row_reports_line() {
        match ingest("src,dst,count\nA,B,2\nA,B,lots\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        assert!(matches!(ingest("A,B\n"), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn valued_and_dichotomized_views() {
        let mut g = DirectedCountGraph::empty(nodes().ids()).unwrap();
        g.add(0, 1, 3);
        g.add(1, 0, 1);
        let net = build_hyperlink_graph(&g, SymmetrizeRule::Sum);
        assert_eq!(net.valued.weight(0, 1), 4.0);
        assert_eq!(net.dichotomized.weight(0, 1), 1.0);
        assert_eq!(net.valued.weight(0, 2), 0.0);
        assert_eq!(net.dichotomized.weight(1, 2), 0.0);
    }

    fn random_counts(n: usize, seed: u64) -> DirectedCountGraph {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut g = DirectedCountGraph::empty((0..n).map(|i| format!("n{i}")).collect()).unwrap();
        for i in 0..n {
            for j in 0..n {
                if i != j && rng.gen_bool(0.25) {
                    g.add(i, j, rng.gen_range(1..4));
                }
            }
        }
        g
    }

    #[test]
    fn dichotomized_matches_boolean_or_oracle() {
        let g = random_counts(15, 8);
        let net = build_hyperlink_graph(&g, SymmetrizeRule::Sum);
        for i in 0..15 {
            for j in 0..15 {
                let oracle = i != j && (g.count(i, j) > 0 || g.count(j, i) > 0);
                assert_eq!(net.dichotomized.weight(i, j), f64::from(u8::from(oracle)));
            }
        }
    }

    proptest! {
        #[test]
        fn ties_bounded_by_directed_edges(n in 1usize..15, seed in any::<u64>()) {
            let g = random_counts(n, seed);
            let net = build_hyperlink_graph(&g, SymmetrizeRule::Sum);
            prop_assert!(net.valued.tie_count() <= g.edge_count());
        }

        #[test]
        fn dichotomized_view_ignores_rule(n in 1usize..15, seed in any::<u64>()) {
            let g = random_counts(n, seed);
            let sum = build_hyperlink_graph(&g, SymmetrizeRule::Sum).dichotomized;
            let max = build_hyperlink_graph(&g, SymmetrizeRule::Max).dichotomized;
            let or = build_hyperlink_graph(&g, SymmetrizeRule::Or).dichotomized;
            prop_assert_eq!(&sum, &max);
            prop_assert_eq!(&sum, &or);
        }
    }
}

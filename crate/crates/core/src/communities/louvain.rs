//! Louvain modularity optimisation: greedy local moves followed by
//! aggregation of communities into super-nodes, repeated until no node
//! moves. Several seeded restarts run and the best partition is kept.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{densify, modularity_with_resolution, CommunityPartition};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::graph::WeightedGraph;

const MAX_PASSES: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LouvainOptions {
    pub resolution: f64,
    pub restarts: usize,
}

impl Default for LouvainOptions {
    fn default() -> Self {
        LouvainOptions {
            resolution: 1.0,
            restarts: 5,
        }
    }
}

/// Sparse view of one aggregation level.
struct Level {
    adj: Vec<Vec<(usize, f64)>>,
    self_loops: Vec<f64>,
    degree: Vec<f64>,
}

impl Level {
    fn from_graph(g: &WeightedGraph) -> Self {
        let adj: Vec<Vec<(usize, f64)>> = (0..g.len()).map(|i| g.neighbors(i).collect()).collect();
        let degree = adj.iter().map(|row| row.iter().map(|&(_, w)| w).sum()).collect();
        Level {
            self_loops: vec![0.0; g.len()],
            adj,
            degree,
        }
    }

    fn len(&self) -> usize {
        self.adj.len()
    }

    /// Collapses each community into one node. `labels` must be dense.
    fn aggregate(&self, labels: &[usize]) -> Level {
        let k = labels.iter().max().map_or(0, |m| m + 1);
        let mut self_loops = vec![0.0; k];
        let mut degree = vec![0.0; k];
        let mut links: Vec<std::collections::BTreeMap<usize, f64>> = vec![Default::default(); k];
        for i in 0..self.len() {
            let ci = labels[i];
            self_loops[ci] += self.self_loops[i];
            degree[ci] += self.degree[i];
            for &(j, w) in &self.adj[i] {
                let cj = labels[j];
                if ci == cj {
                    // each internal edge is seen from both ends
                    self_loops[ci] += w / 2.0;
                } else {
                    *links[ci].entry(cj).or_default() += w;
                }
            }
        }
        Level {
            adj: links.into_iter().map(|m| m.into_iter().collect()).collect(),
            self_loops,
            degree,
        }
    }
}

/// One round of greedy moves. Returns dense labels and whether any node
/// changed community.
fn local_moving(level: &Level, two_m: f64, resolution: f64, rng: &mut ChaCha8Rng) -> (Vec<usize>, bool) {
    let n = level.len();
    let mut comm: Vec<usize> = (0..n).collect();
    let mut tot = level.degree.clone();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);

    let mut link_to = vec![0.0; n];
    let mut touched: Vec<usize> = Vec::new();
    let mut any_move = false;
    for _ in 0..MAX_PASSES {
        let mut moved = false;
        for &i in &order {
            let ki = level.degree[i];
            let old = comm[i];
            for &(j, w) in &level.adj[i] {
                let c = comm[j];
                if link_to[c] == 0.0 {
                    touched.push(c);
                }
                link_to[c] += w;
            }
            tot[old] -= ki;
            let gain = |c: usize, link: f64| link - resolution * tot[c] * ki / two_m;
            let mut best = old;
            let mut best_gain = gain(old, link_to[old]);
            touched.sort_unstable();
            for &c in &touched {
                let g = gain(c, link_to[c]);
                if g - best_gain > 1e-12 * ki {
                    best = c;
                    best_gain = g;
                }
            }
            for &c in &touched {
                link_to[c] = 0.0;
            }
            touched.clear();
            tot[best] += ki;
            if best != old {
                comm[i] = best;
                moved = true;
            }
        }
        if !moved {
            break;
        }
        any_move = true;
    }
    (densify(&comm), any_move)
}

fn louvain_once(g: &WeightedGraph, resolution: f64, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut level = Level::from_graph(g);
    let two_m: f64 = level.degree.iter().sum();
    let mut labels: Vec<usize> = (0..g.len()).collect();
    loop {
        let (moves, changed) = local_moving(&level, two_m, resolution, rng);
        if !changed {
            break;
        }
        for l in labels.iter_mut() {
            *l = moves[*l];
        }
        level = level.aggregate(&moves);
    }
    densify(&labels)
}

pub fn detect_communities(g: &WeightedGraph, seed: u64, opts: LouvainOptions) -> Result<CommunityPartition> {
    detect_communities_with(g, seed, opts, Exec::default())
}

/// Best-of-restarts Louvain. Restart `r` draws its scan orders from the
/// ChaCha stream `r` of `seed`, so the winner is independent of how
/// restarts are scheduled. Ties in Q go to fewer communities, then to the
/// earlier restart.
pub fn detect_communities_with(
    g: &WeightedGraph,
    seed: u64,
    opts: LouvainOptions,
    exec: Exec,
) -> Result<CommunityPartition> {
    if g.is_empty() {
        return Err(Error::InvalidGraph(
            "cannot detect communities in an empty graph".into(),
        ));
    }
    if opts.resolution.is_nan() || opts.resolution <= 0.0 {
        return Err(Error::InvalidConfig("resolution must be positive".into()));
    }
    let nodes = g.nodes().to_vec();
    if g.total_weight() == 0.0 {
        // no ties: every node is its own community and Q is taken as 0
        let labels: Vec<usize> = (0..g.len()).collect();
        return CommunityPartition::new(nodes, &labels, 0.0, seed);
    }
    let restarts = opts.restarts.max(1);
    let runs = exec.map_range(restarts, |r| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(r as u64);
        let labels = louvain_once(g, opts.resolution, &mut rng);
        let q = modularity_with_resolution(g, &labels, opts.resolution).expect("m > 0");
        let k = labels.iter().max().map_or(0, |m| m + 1);
        (q, k, labels)
    });
    let mut best = 0;
    for (r, run) in runs.iter().enumerate().skip(1) {
        let (q, k) = (run.0, run.1);
        let (bq, bk) = (runs[best].0, runs[best].1);
        if q > bq + 1e-12 || ((q - bq).abs() <= 1e-12 && k < bk) {
            best = r;
        }
    }
    let (q, _, labels) = runs.into_iter().nth(best).expect("at least one restart");
    CommunityPartition::new(nodes, &labels, q, seed)
}

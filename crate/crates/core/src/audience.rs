//! Audience network construction from panel visitation data.
//!
//! Each site's reach is the share of the panel universe that visited it at
//! least once; duplication is the share that visited both sites of a pair.
//! A tie exists only where observed duplication exceeds the product of the
//! two reaches, and its weight is the excess.

use std::collections::{BTreeSet, HashMap};
use std::fs::File;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::graph::WeightedGraph;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Panel {
    pub universe_size: u64,
    pub window: String,
}

impl Panel {
    pub fn new(universe_size: u64, window: impl Into<String>) -> Result<Self> {
        let panel = Panel {
            universe_size,
            window: window.into(),
        };
        panel.validate()?;
        Ok(panel)
    }

    pub fn validate(&self) -> Result<()> {
        if self.universe_size == 0 {
            return Err(Error::InvalidPanel("universe size must be at least 1".into()));
        }
        Ok(())
    }

    pub fn read_json(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|_| Error::MissingInput(path.to_path_buf()))?;
        let panel: Panel = serde_json::from_reader(file)?;
        panel.validate()?;
        Ok(panel)
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }
}

/// Deduplicated `(user, site)` visit pairs for one window.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct VisitationLog {
    records: BTreeSet<(String, String)>,
}

impl VisitationLog {
    pub fn from_records<I, U, S>(records: I) -> Self
    where
        I: IntoIterator<Item = (U, S)>,
        U: Into<String>,
        S: Into<String>,
    {
        VisitationLog {
            records: records.into_iter().map(|(u, s)| (u.into(), s.into())).collect(),
        }
    }

    pub fn insert(&mut self, user: impl Into<String>, site: impl Into<String>) {
        self.records.insert((user.into(), site.into()));
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> impl Iterator<Item = (&str, &str)> {
        self.records.iter().map(|(u, s)| (u.as_str(), s.as_str()))
    }

    pub fn user_count(&self) -> usize {
        self.records
            .iter()
            .map(|(u, _)| u.as_str())
            .collect::<BTreeSet<_>>()
            .len()
    }

    /// Reads `user_id,site_id` rows (header optional); repeat visits collapse.
    pub fn read_csv(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|_| Error::MissingInput(path.to_path_buf()))?;
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_reader(file);
        let mut log = VisitationLog::default();
        for (k, record) in reader.records().enumerate() {
            let record = record?;
            if k == 0 && &record[0] == "user_id" {
                continue;
            }
            if record.len() != 2 || record[0].is_empty() || record[1].is_empty() {
                return Err(Error::Parse {
                    path: path.display().to_string(),
                    line: record.position().map_or(k as u64 + 1, |p| p.line()),
                    msg: "expected `user_id,site_id`".into(),
                });
            }
            log.insert(&record[0], &record[1]);
        }
        Ok(log)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["user_id", "site_id"])?;
        for (u, s) in self.records() {
            w.write_record([u, s])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Per-site visitor sets as bitsets over a dense user index.
struct AudienceSets {
    words: usize,
    bits: Vec<u64>,
    users: usize,
}

impl AudienceSets {
    fn build(log: &VisitationLog, panel: &Panel, nodes: &[String]) -> Result<Self> {
        panel.validate()?;
        let site_index: HashMap<&str, usize> = nodes.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
        let mut user_index: HashMap<&str, usize> = HashMap::new();
        let mut unknown = BTreeSet::new();
        for (u, s) in log.records() {
            let next = user_index.len();
            user_index.entry(u).or_insert(next);
            if !site_index.contains_key(s) {
                unknown.insert(s.to_string());
            }
        }
        if !unknown.is_empty() {
            return Err(Error::UnknownSites(unknown.into_iter().collect()));
        }
        let users = user_index.len();
        if users as u64 > panel.universe_size {
            return Err(Error::InvalidPanel(format!(
                "log references {users} users but the universe holds {}",
                panel.universe_size
            )));
        }
        let words = users.div_ceil(64).max(1);
        let mut bits = vec![0u64; words * nodes.len()];
        for (u, s) in log.records() {
            let (ui, si) = (user_index[u], site_index[s]);
            bits[si * words + ui / 64] |= 1 << (ui % 64);
        }
        Ok(AudienceSets { words, bits, users })
    }

    fn row(&self, site: usize) -> &[u64] {
        &self.bits[site * self.words..(site + 1) * self.words]
    }

    fn size(&self, site: usize) -> u64 {
        self.row(site).iter().map(|w| w.count_ones() as u64).sum()
    }

    fn shared(&self, a: usize, b: usize) -> u64 {
        self.row(a)
            .iter()
            .zip(self.row(b))
            .map(|(x, y)| (x & y).count_ones() as u64)
            .sum()
    }
}

/// Fraction of the universe visiting each site, in `nodes` order.
pub fn compute_reach(log: &VisitationLog, panel: &Panel, nodes: &[String]) -> Result<Vec<f64>> {
    let sets = AudienceSets::build(log, panel, nodes)?;
    let n = panel.universe_size as f64;
    Ok((0..nodes.len()).map(|i| sets.size(i) as f64 / n).collect())
}

/// Symmetric shared-audience matrix; the diagonal holds each site's reach.
#[derive(Debug, Clone, PartialEq)]
pub struct DuplicationMatrix {
    nodes: Vec<String>,
    universe_size: u64,
    shared: Vec<u64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct DuplicationJson {
    nodes: Vec<String>,
    universe_size: u64,
    duplication: Vec<Vec<f64>>,
}

impl DuplicationMatrix {
    /// Builds the matrix from raw shared-visitor counts (row-major, the
    /// diagonal holding each site's visitor count).
    pub fn from_counts(nodes: Vec<String>, universe_size: u64, shared: Vec<u64>) -> Result<Self> {
        let n = nodes.len();
        if universe_size == 0 {
            return Err(Error::InvalidPanel("universe size must be at least 1".into()));
        }
        if shared.len() != n * n {
            return Err(Error::InvalidGraph("duplication matrix has the wrong size".into()));
        }
        let m = DuplicationMatrix {
            nodes,
            universe_size,
            shared,
        };
        m.check_invariants()?;
        Ok(m)
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

    pub fn universe_size(&self) -> u64 {
        self.universe_size
    }

    /// Users who visited both `i` and `j` (or `i`, when `i == j`).
    pub fn shared_count(&self, i: usize, j: usize) -> u64 {
        self.shared[i * self.nodes.len() + j]
    }

    pub fn duplication(&self, i: usize, j: usize) -> f64 {
        self.shared_count(i, j) as f64 / self.universe_size as f64
    }

    pub fn reach(&self, i: usize) -> f64 {
        self.duplication(i, i)
    }

    /// Distinct unordered site pairs, `n (n - 1) / 2`.
    pub fn pair_count(&self) -> usize {
        let n = self.nodes.len();
        n * n.saturating_sub(1) / 2
    }

    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> {
        let n = self.nodes.len();
        (0..n).flat_map(move |i| ((i + 1)..n).map(move |j| (i, j)))
    }

    /// Symmetry, shared-audience upper bound and the Fréchet lower bound.
    pub fn check_invariants(&self) -> Result<()> {
        let n = self.nodes.len();
        let total = self.universe_size;
        for i in 0..n {
            if self.shared_count(i, i) > total {
                return Err(Error::InvalidGraph(format!("reach of `{}` exceeds 1", self.nodes[i])));
            }
            for j in (i + 1)..n {
                let c = self.shared_count(i, j);
                let (ri, rj) = (self.shared_count(i, i), self.shared_count(j, j));
                if c != self.shared_count(j, i) {
                    return Err(Error::InvalidGraph("asymmetric duplication".into()));
                }
                if c > ri.min(rj) {
                    return Err(Error::InvalidGraph(format!(
                        "duplication of ({}, {}) exceeds a reach",
                        self.nodes[i], self.nodes[j]
                    )));
                }
                if c + total < ri + rj {
                    return Err(Error::InvalidGraph(format!(
                        "duplication of ({}, {}) is below the Fréchet bound",
                        self.nodes[i], self.nodes[j]
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let n = self.len();
        let json = DuplicationJson {
            nodes: self.nodes.clone(),
            universe_size: self.universe_size,
            duplication: (0..n)
                .map(|i| (0..n).map(|j| self.duplication(i, j)).collect())
                .collect(),
        };
        std::fs::write(path, serde_json::to_string(&json)? + "\n")?;
        Ok(())
    }
}

pub fn duplication_matrix(log: &VisitationLog, panel: &Panel, nodes: &[String]) -> Result<DuplicationMatrix> {
    duplication_matrix_with(log, panel, nodes, Exec::default())
}

/// Like [`duplication_matrix`], with an explicit execution strategy. Rows
/// of the pair space are distributed across workers.
pub fn duplication_matrix_with(
    log: &VisitationLog,
    panel: &Panel,
    nodes: &[String],
    exec: Exec,
) -> Result<DuplicationMatrix> {
    let sets = AudienceSets::build(log, panel, nodes)?;
    debug_assert!(sets.users as u64 <= panel.universe_size);
    let n = nodes.len();
    let rows = exec.map_range(n, |i| {
        (i..n)
            .map(|j| if i == j { sets.size(i) } else { sets.shared(i, j) })
            .collect::<Vec<u64>>()
    });
    let mut shared = vec![0u64; n * n];
    for (i, row) in rows.into_iter().enumerate() {
        for (off, c) in row.into_iter().enumerate() {
            let j = i + off;
            shared[i * n + j] = c;
            shared[j * n + i] = c;
        }
    }
    DuplicationMatrix::from_counts(nodes.to_vec(), panel.universe_size, shared)
}

/// Duplication expected when visits to two sites are independent.
pub fn expected_duplication(reach_i: f64, reach_j: f64) -> f64 {
    reach_i * reach_j
}

pub fn build_audience_graph(dup: &DuplicationMatrix) -> WeightedGraph {
    build_audience_graph_with_margin(dup, 0.0)
}

/// Tie weight is `d - e` where observed duplication `d` exceeds the
/// independence expectation `e` by strictly more than `min_margin`.
pub fn build_audience_graph_with_margin(dup: &DuplicationMatrix, min_margin: f64) -> WeightedGraph {
    WeightedGraph::from_fn(dup.nodes.clone(), |i, j| {
        let observed = dup.duplication(i, j);
        let expected = expected_duplication(dup.reach(i), dup.reach(j));
        if observed > expected + min_margin {
            observed - expected
        } else {
            0.0
        }
    })
    .expect("duplication matrix nodes were validated")
}

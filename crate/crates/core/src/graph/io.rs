use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{DirectedCountGraph, NodeSet, SiteNode, WeightedGraph};
use crate::error::{Error, Result};

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            Error::MissingInput(path.to_path_buf())
        } else {
            e.into()
        }
    })
}

fn split_list(field: &str) -> impl Iterator<Item = String> + '_ {
    field
        .split(';')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_string)
}

/// Reads `id,host_patterns,languages,geography` rows. List fields are
/// `;`-separated; an empty host list defaults to the id.
pub fn read_node_csv(path: &Path) -> Result<NodeSet> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(open(path)?);
    let mut nodes = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != 4 {
            return Err(Error::Parse {
                path: path.display().to_string(),
                line,
                msg: format!("expected 4 fields, found {}", record.len()),
            });
        }
        let id = record[0].to_string();
        let mut hosts: Vec<String> = split_list(&record[1]).map(|h| h.to_lowercase()).collect();
        if hosts.is_empty() {
            hosts.push(id.to_lowercase());
        }
        let node = SiteNode {
            id,
            host_patterns: hosts,
            languages: split_list(&record[2]).collect(),
            geography: record[3].to_string(),
        };
        node.validate().map_err(|e| Error::Parse {
            path: path.display().to_string(),
            line,
            msg: e.to_string(),
        })?;
        nodes.push(node);
    }
    NodeSet::new(nodes)
}

pub fn write_node_csv(nodes: &NodeSet, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["id", "host_patterns", "languages", "geography"])?;
    for node in nodes.nodes() {
        let langs: Vec<&str> = node.languages.iter().map(String::as_str).collect();
        w.write_record([
            node.id.as_str(),
            &node.host_patterns.join(";"),
            &langs.join(";"),
            &node.geography,
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// On-disk form of a [`WeightedGraph`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraphJson {
    pub nodes: Vec<String>,
    pub weights: Vec<Vec<f64>>,
}

impl From<&WeightedGraph> for GraphJson {
    fn from(g: &WeightedGraph) -> Self {
        GraphJson {
            nodes: g.nodes().to_vec(),
            weights: (0..g.len()).map(|i| g.row(i).to_vec()).collect(),
        }
    }
}

impl TryFrom<GraphJson> for WeightedGraph {
    type Error = Error;

    fn try_from(json: GraphJson) -> Result<Self> {
        let n = json.nodes.len();
        if json.weights.len() != n || json.weights.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidGraph(format!("weight matrix is not {n} x {n}")));
        }
        WeightedGraph::new(json.nodes, json.weights.into_iter().flatten().collect())
    }
}

pub fn read_graph_json(path: &Path) -> Result<WeightedGraph> {
    let json: GraphJson = serde_json::from_reader(std::io::BufReader::new(open(path)?))?;
    json.try_into()
}

pub fn write_graph_json(g: &WeightedGraph, path: &Path) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    serde_json::to_writer(&mut out, &GraphJson::from(g))?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}

/// Writes `src,dst,weight`, one row per undirected tie with `src < dst`.
pub fn write_edge_list_csv(g: &WeightedGraph, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["src", "dst", "weight"])?;
    let mut rows = Vec::new();
    for i in 0..g.len() {
        for (j, weight) in g.neighbors(i).filter(|&(j, _)| j > i) {
            let (a, b) = (&g.nodes()[i], &g.nodes()[j]);
            let (src, dst) = if a < b { (a, b) } else { (b, a) };
            rows.push((src.clone(), dst.clone(), weight));
        }
    }
    rows.sort_by(|x, y| (&x.0, &x.1).cmp(&(&y.0, &y.1)));
    for (src, dst, weight) in rows {
        w.write_record([src, dst, weight.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `src,dst,count` for every nonzero directed count.
pub fn write_directed_edges_csv(g: &DirectedCountGraph, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["src", "dst", "count"])?;
    for (i, j, c) in g.edges() {
        w.write_record([g.nodes()[i].as_str(), g.nodes()[j].as_str(), &c.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Raw `src,dst,count` rows with their 1-based line numbers. A leading
/// `src,dst,count` header is skipped.
pub fn read_directed_edges_csv(path: &Path) -> Result<Vec<(u64, String, String, u64)>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(open(path)?);
    let mut rows = Vec::new();
    for (k, record) in reader.records().enumerate() {
        let record = record?;
        let line = record.position().map_or(k as u64 + 1, |p| p.line());
        if k == 0 && record.get(2) == Some("count") {
            continue;
        }
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        let bad = |msg: String| Error::Parse {
            path: path.display().to_string(),
            line,
            msg,
        };
        if record.len() != 3 {
            return Err(bad(format!("expected 3 fields, found {}", record.len())));
        }
        let count = record[2]
            .parse::<u64>()
            .map_err(|e| bad(format!("bad count `{}`: {e}", &record[2])))?;
        if record[0].is_empty() || record[1].is_empty() {
            return Err(bad("empty endpoint".into()));
        }
        rows.push((line, record[0].to_string(), record[1].to_string(), count));
    }
    Ok(rows)
}

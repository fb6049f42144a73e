//! Descriptive statistics on dichotomised networks. Any positive weight
//! counts as a tie, so valued graphs can be passed directly.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::graph::WeightedGraph;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClusteringVariant {
    /// Mean of local coefficients; nodes of degree < 2 contribute 0.
    #[default]
    AvgLocal,
    /// Closed triads over connected triads.
    Transitivity,
}

impl std::str::FromStr for ClusteringVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "avg-local" => Ok(Self::AvgLocal),
            "transitivity" => Ok(Self::Transitivity),
            other => Err(Error::InvalidConfig(format!("unknown clustering variant `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CentralizationVariant {
    #[default]
    Freeman,
    Hhi,
}

impl std::str::FromStr for CentralizationVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "freeman" => Ok(Self::Freeman),
            "hhi" => Ok(Self::Hhi),
            other => Err(Error::InvalidConfig(format!(
                "unknown centralization variant `{other}`"
            ))),
        }
    }
}

fn require(what: &'static str, g: &WeightedGraph, min: usize) -> Result<()> {
    if g.len() < min {
        return Err(Error::TooFewNodes {
            what,
            min,
            got: g.len(),
        });
    }
    Ok(())
}

/// Ties present over `n (n - 1) / 2`.
pub fn density(g: &WeightedGraph) -> Result<f64> {
    require("density", g, 2)?;
    let n = g.len() as f64;
    Ok(g.tie_count() as f64 / (n * (n - 1.0) / 2.0))
}

pub fn degree(g: &WeightedGraph, id: &str) -> Result<usize> {
    let i = g.index_of(id).ok_or_else(|| Error::UnknownNode(id.to_string()))?;
    Ok(g.neighbors(i).count())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegreeDistribution {
    pub histogram: BTreeMap<usize, usize>,
    /// `(k, P(degree >= k))` for each observed degree `k`.
    pub ccdf: Vec<(usize, f64)>,
}

pub fn degree_distribution(g: &WeightedGraph) -> DegreeDistribution {
    let degrees = g.degrees();
    let mut histogram = BTreeMap::new();
    for &d in &degrees {
        *histogram.entry(d).or_insert(0) += 1;
    }
    let n = degrees.len() as f64;
    let mut remaining = degrees.len();
    let mut ccdf = Vec::with_capacity(histogram.len());
    for (&k, &count) in &histogram {
        ccdf.push((k, remaining as f64 / n));
        remaining -= count;
    }
    DegreeDistribution { histogram, ccdf }
}

impl DegreeDistribution {
    pub fn write_ccdf_csv(&self, path: &std::path::Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["degree", "count", "ccdf"])?;
        for &(k, p) in &self.ccdf {
            w.write_record([k.to_string(), self.histogram[&k].to_string(), p.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn max_degree(&self) -> usize {
        self.histogram.keys().next_back().copied().unwrap_or(0)
    }

    pub fn median_degree(&self) -> f64 {
        let total: usize = self.histogram.values().sum();
        if total == 0 {
            return 0.0;
        }
        let nth = |rank: usize| {
            let mut seen = 0;
            for (&k, &c) in &self.histogram {
                seen += c;
                if seen > rank {
                    return k as f64;
                }
            }
            unreachable!("rank below total")
        };
        if total % 2 == 1 {
            nth(total / 2)
        } else {
            (nth(total / 2 - 1) + nth(total / 2)) / 2.0
        }
    }

    /// Log-log scatter of the degree CCDF. Degree-0 nodes are omitted.
    pub fn to_svg(&self, title: &str) -> String {
        let (w, h, pad) = (480.0, 360.0, 50.0);
        let points: Vec<(f64, f64)> = self
            .ccdf
            .iter()
            .filter(|&&(k, _)| k > 0)
            .map(|&(k, p)| ((k as f64).log10(), p.log10()))
            .collect();
        let x_max = points.iter().map(|p| p.0).fold(1.0_f64, f64::max).ceil();
        let y_min = points.iter().map(|p| p.1).fold(-1.0_f64, f64::min).floor();
        let sx = |x: f64| pad + x / x_max * (w - 2.0 * pad);
        let sy = |y: f64| pad + (y / y_min) * (h - 2.0 * pad);
        let mut svg = String::new();
        let _ = writeln!(
            svg,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
        );
        let _ = writeln!(svg, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="25" text-anchor="middle" font-family="sans-serif" font-size="14">{}</text>"#,
            w / 2.0,
            xml_escape(title)
        );
        let _ = writeln!(
            svg,
            r#"<path d="M{pad},{pad} L{pad},{b} L{r},{b}" stroke="black" fill="none"/>"#,
            b = h - pad,
            r = w - pad
        );
        for d in 0..=(x_max as i32) {
            let x = sx(d as f64);
            let _ = writeln!(
                svg,
                r#"<text x="{x:.1}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="10">1e{d}</text>"#,
                h - pad + 15.0
            );
        }
        for d in (y_min as i32)..=0 {
            let y = sy(d as f64);
            let _ = writeln!(
                svg,
                r#"<text x="{}" y="{y:.1}" text-anchor="end" font-family="sans-serif" font-size="10">1e{d}</text>"#,
                pad - 5.0
            );
        }
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="11">degree</text>"#,
            w / 2.0,
            h - 10.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="14" y="{}" text-anchor="middle" font-family="sans-serif" font-size="11" transform="rotate(-90 14 {})">P(D &gt;= k)</text>"#,
            h / 2.0,
            h / 2.0
        );
        for (x, y) in points {
            let _ = writeln!(
                svg,
                r##"<circle cx="{:.2}" cy="{:.2}" r="3" fill="#1f77b4"/>"##,
                sx(x),
                sy(y)
            );
        }
        svg.push_str("</svg>\n");
        svg
    }
}

pub(crate) fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Neighbour sets as bitsets for fast triangle counting.
struct Adjacency {
    words: usize,
    bits: Vec<u64>,
}

impl Adjacency {
    fn new(g: &WeightedGraph) -> Self {
        let n = g.len();
        let words = n.div_ceil(64).max(1);
        let mut bits = vec![0u64; n * words];
        for i in 0..n {
            for (j, _) in g.neighbors(i) {
                bits[i * words + j / 64] |= 1 << (j % 64);
            }
        }
        Adjacency { words, bits }
    }

    fn row(&self, i: usize) -> &[u64] {
        &self.bits[i * self.words..(i + 1) * self.words]
    }

    /// Ties among the neighbours of `i`.
    fn closed_triads(&self, g: &WeightedGraph, i: usize) -> u64 {
        let ri = self.row(i);
        let twice: u64 = g
            .neighbors(i)
            .map(|(j, _)| {
                ri.iter()
                    .zip(self.row(j))
                    .map(|(a, b)| (a & b).count_ones() as u64)
                    .sum::<u64>()
            })
            .sum();
        twice / 2
    }
}

/// Per-node `(closed triads, degree)`, computed with the given strategy.
fn triads(g: &WeightedGraph, exec: Exec) -> Vec<(u64, u64)> {
    let adj = Adjacency::new(g);
    exec.map_range(g.len(), |i| (adj.closed_triads(g, i), g.neighbors(i).count() as u64))
}

/// Local clustering coefficient of every node (0 where degree < 2).
pub fn local_clustering(g: &WeightedGraph) -> Vec<f64> {
    local_clustering_with(g, Exec::default())
}

pub fn local_clustering_with(g: &WeightedGraph, exec: Exec) -> Vec<f64> {
    triads(g, exec)
        .into_iter()
        .map(|(t, d)| {
            if d < 2 {
                0.0
            } else {
                t as f64 / (d * (d - 1) / 2) as f64
            }
        })
        .collect()
}

pub fn clustering_coefficient(g: &WeightedGraph) -> Result<f64> {
    clustering_coefficient_with(g, ClusteringVariant::AvgLocal, Exec::default())
}

pub fn clustering_coefficient_with(g: &WeightedGraph, variant: ClusteringVariant, exec: Exec) -> Result<f64> {
    require("clustering coefficient", g, 3)?;
    match variant {
        ClusteringVariant::AvgLocal => {
            let local = local_clustering_with(g, exec);
            Ok(local.iter().sum::<f64>() / local.len() as f64)
        }
        ClusteringVariant::Transitivity => {
            let (closed, connected) = triads(g, exec).into_iter().fold((0u64, 0u64), |(c, t), (tri, d)| {
                (c + tri, t + d * d.saturating_sub(1) / 2)
            });
            Ok(if connected == 0 {
                0.0
            } else {
                closed as f64 / connected as f64
            })
        }
    }
}

/// Freeman degree centralization, `sum(d_max - d_i) / ((n - 1)(n - 2))`.
pub fn centralization(g: &WeightedGraph) -> Result<f64> {
    require("centralization", g, 3)?;
    let degrees = g.degrees();
    let max = *degrees.iter().max().expect("n >= 3");
    let gap: usize = degrees.iter().map(|&d| max - d).sum();
    let n = g.len() as f64;
    Ok(gap as f64 / ((n - 1.0) * (n - 2.0)))
}

/// Herfindahl-Hirschman concentration of degree shares, `sum((d_i / sum d)^2)`.
pub fn degree_hhi(g: &WeightedGraph) -> Result<f64> {
    require("centralization", g, 3)?;
    let degrees = g.degrees();
    let total: usize = degrees.iter().sum();
    if total == 0 {
        return Ok(0.0);
    }
    Ok(degrees.iter().map(|&d| (d as f64 / total as f64).powi(2)).sum())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct MetricsOptions {
    pub clustering: ClusteringVariant,
    pub centralization: CentralizationVariant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkStats {
    pub n_nodes: usize,
    pub n_ties: usize,
    pub density: f64,
    pub clustering_coefficient: f64,
    pub clustering_variant: ClusteringVariant,
    pub centralization: f64,
    pub centralization_variant: CentralizationVariant,
    /// Degree HHI, always reported alongside the chosen centralization.
    pub degree_hhi: f64,
    pub max_degree: usize,
    pub median_degree: f64,
    pub degree_histogram: BTreeMap<usize, usize>,
}

pub fn network_stats(g: &WeightedGraph, opts: MetricsOptions) -> Result<NetworkStats> {
    network_stats_with(g, opts, Exec::default())
}

pub fn network_stats_with(g: &WeightedGraph, opts: MetricsOptions, exec: Exec) -> Result<NetworkStats> {
    let dist = degree_distribution(g);
    let hhi = degree_hhi(g)?;
    Ok(NetworkStats {
        n_nodes: g.len(),
        n_ties: g.tie_count(),
        density: density(g)?,
        clustering_coefficient: clustering_coefficient_with(g, opts.clustering, exec)?,
        clustering_variant: opts.clustering,
        centralization: match opts.centralization {
            CentralizationVariant::Freeman => centralization(g)?,
            CentralizationVariant::Hhi => hhi,
        },
        centralization_variant: opts.centralization,
        degree_hhi: hhi,
        max_degree: dist.max_degree(),
        median_degree: dist.median_degree(),
        degree_histogram: dist.histogram,
    })
}

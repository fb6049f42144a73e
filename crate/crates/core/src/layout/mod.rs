//! Fruchterman-Reingold layout and SVG rendering of network maps.

mod geometry;
mod render;

use std::collections::BTreeMap;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;

pub use geometry::{convex_hull, hull_overlap_ratio, point_in_convex};
pub use render::{render_svg, RenderOptions, GLOBAL_COLOR, PALETTE};

const MIN_DISTANCE: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LayoutOptions {
    pub iterations: usize,
    pub width: f64,
    pub height: f64,
    /// Multiplier on the ideal edge length `sqrt(area / n)`.
    pub spring_constant: f64,
}

impl Default for LayoutOptions {
    fn default() -> Self {
        LayoutOptions {
            iterations: 500,
            width: 1000.0,
            height: 1000.0,
            spring_constant: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayoutResult {
    nodes: Vec<String>,
    positions: Vec<(f64, f64)>,
    pub iterations: usize,
    pub seed: u64,
    pub width: f64,
    pub height: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct LayoutJson {
    positions: BTreeMap<String, [f64; 2]>,
    iterations: usize,
    seed: u64,
    width: f64,
    height: f64,
}

impl LayoutResult {
    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn positions(&self) -> &[(f64, f64)] {
        &self.positions
    }

    pub fn position(&self, id: &str) -> Option<(f64, f64)> {
        self.nodes.iter().position(|n| n == id).map(|i| self.positions[i])
    }

    pub fn to_json(&self) -> Result<String> {
        let json = LayoutJson {
            positions: self
                .nodes
                .iter()
                .cloned()
                .zip(self.positions.iter().map(|&(x, y)| [x, y]))
                .collect(),
            iterations: self.iterations,
            seed: self.seed,
            width: self.width,
            height: self.height,
        };
        Ok(serde_json::to_string_pretty(&json)? + "\n")
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    /// Reads a layout; positions are ordered by `nodes` and every node
    /// must be present.
    pub fn read_json(path: &Path, nodes: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|_| Error::MissingInput(path.to_path_buf()))?;
        let json: LayoutJson = serde_json::from_str(&text)?;
        let positions = nodes
            .iter()
            .map(|id| {
                json.positions
                    .get(id)
                    .map(|&[x, y]| (x, y))
                    .ok_or_else(|| Error::InvalidConfig(format!("layout has no position for `{id}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(LayoutResult {
            nodes: nodes.to_vec(),
            positions,
            iterations: json.iterations,
            seed: json.seed,
            width: json.width,
            height: json.height,
        })
    }
}

/// Classic Fruchterman-Reingold: repulsion `k^2 / d` between all pairs,
/// attraction `d^2 / k` along ties scaled by weight relative to the
/// heaviest tie, displacement capped by a temperature that cools linearly
/// to zero. Positions stay inside the frame.
pub fn fr_layout(g: &WeightedGraph, seed: u64, opts: LayoutOptions) -> Result<LayoutResult> {
    if g.is_empty() {
        return Err(Error::InvalidGraph("cannot lay out an empty graph".into()));
    }
    if !(opts.width > 0.0 && opts.height > 0.0) {
        return Err(Error::InvalidConfig("layout frame must have positive size".into()));
    }
    let n = g.len();
    let (w, h) = (opts.width, opts.height);
    let mut result = LayoutResult {
        nodes: g.nodes().to_vec(),
        positions: vec![(w / 2.0, h / 2.0); n],
        iterations: opts.iterations,
        seed,
        width: w,
        height: h,
    };
    if n == 1 {
        return Ok(result);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pos: Vec<(f64, f64)> = (0..n).map(|_| (rng.gen_range(0.0..w), rng.gen_range(0.0..h))).collect();
    let k = opts.spring_constant * (w * h / n as f64).sqrt();
    let k2 = k * k;
    let max_w = g.max_weight();
    let edges: Vec<(usize, usize, f64)> = (0..n)
        .flat_map(|i| {
            g.neighbors(i)
                .filter(move |&(j, _)| j > i)
                .map(move |(j, wt)| (i, j, wt / max_w))
        })
        .collect();
    let t0 = w.min(h) / 10.0;
    let mut disp = vec![(0.0, 0.0); n];

    for iter in 0..opts.iterations {
        let temperature = t0 * (1.0 - iter as f64 / opts.iterations as f64);
        disp.iter_mut().for_each(|d| *d = (0.0, 0.0));
        for i in 0..n {
            for j in (i + 1)..n {
                let (dx, dy, d) = separation(pos[i], pos[j], i, j);
                let f = k2 / d;
                let (fx, fy) = (dx / d * f, dy / d * f);
                disp[i].0 += fx;
                disp[i].1 += fy;
                disp[j].0 -= fx;
                disp[j].1 -= fy;
            }
        }
        for &(i, j, wt) in &edges {
            let (dx, dy, d) = separation(pos[i], pos[j], i, j);
            let f = d * d / k * wt;
            let (fx, fy) = (dx / d * f, dy / d * f);
            disp[i].0 -= fx;
            disp[i].1 -= fy;
            disp[j].0 += fx;
            disp[j].1 += fy;
        }
        for (p, &(dx, dy)) in pos.iter_mut().zip(&disp) {
            let len = (dx * dx + dy * dy).sqrt();
            if len > 0.0 {
                let step = len.min(temperature);
                p.0 = (p.0 + dx / len * step).clamp(0.0, w);
                p.1 = (p.1 + dy / len * step).clamp(0.0, h);
            }
        }
    }
    result.positions = pos;
    Ok(result)
}

/// Vector from `b` to `a` and its length, nudged apart when the points
/// (nearly) coincide.
#[inline]
fn separation(a: (f64, f64), b: (f64, f64), i: usize, j: usize) -> (f64, f64, f64) {
    let (mut dx, mut dy) = (a.0 - b.0, a.1 - b.1);
    let mut d = (dx * dx + dy * dy).sqrt();
    if d < MIN_DISTANCE {
        let angle = (i * 31 + j * 17) as f64;
        dx = MIN_DISTANCE * angle.cos();
        dy = MIN_DISTANCE * angle.sin();
        d = MIN_DISTANCE;
    }
    (dx, dy, d)
}

use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::LayoutResult;
use crate::communities::CommunityPartition;
use crate::error::{Error, Result};
use crate::graph::{NodeSet, WeightedGraph, GLOBAL};
use crate::metrics::xml_escape;

/// 20-colour qualitative cycle, assigned to geography codes in sorted order.
pub const PALETTE: [&str; 20] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#bcbd22", "#17becf", "#aec7e8",
    "#ffbb78", "#98df8a", "#ff9896", "#c5b0d5", "#c49c94", "#f7b6d2", "#dbdb8d", "#9edae5", "#393b79", "#637939",
];

pub const GLOBAL_COLOR: &str = "#999999";

#[derive(Debug, Clone, PartialEq)]
pub struct RenderOptions {
    /// Share of ties drawn, heaviest first.
    pub edge_quantile: f64,
    pub node_radius: f64,
    pub title: String,
}

impl Default for RenderOptions {
    fn default() -> Self {
        RenderOptions {
            edge_quantile: 0.2,
            node_radius: 7.0,
            title: String::new(),
        }
    }
}

fn color_map(nodes: &NodeSet, ids: &[String]) -> BTreeMap<String, &'static str> {
    let mut codes: Vec<&str> = ids
        .iter()
        .filter_map(|id| nodes.get(id))
        .map(|n| n.geography.as_str())
        .filter(|&g| g != GLOBAL)
        .collect();
    codes.sort_unstable();
    codes.dedup();
    let mut map: BTreeMap<String, &'static str> = codes
        .into_iter()
        .enumerate()
        .map(|(i, c)| (c.to_string(), PALETTE[i % PALETTE.len()]))
        .collect();
    map.insert(GLOBAL.to_string(), GLOBAL_COLOR);
    map
}

/// Renders the graph as an SVG map: fill colour encodes geography, the
/// label is the community id, and only the heaviest `edge_quantile` share
/// of ties is drawn with opacity rising with weight rank. Node elements
/// follow graph node order.
pub fn render_svg(
    g: &WeightedGraph,
    layout: &LayoutResult,
    partition: &CommunityPartition,
    nodes: &NodeSet,
    opts: &RenderOptions,
) -> Result<String> {
    if partition.nodes().is_empty() && !g.is_empty() {
        return Err(Error::InvalidPartition("partition is empty".into()));
    }
    let mut placed = Vec::with_capacity(g.len());
    for id in g.nodes() {
        let pos = layout
            .position(id)
            .ok_or_else(|| Error::InvalidConfig(format!("layout has no position for `{id}`")))?;
        let community = partition
            .community_of(id)
            .ok_or_else(|| Error::InvalidPartition(format!("node `{id}` has no community")))?;
        let node = nodes.get(id).ok_or_else(|| Error::UnknownNode(id.clone()))?;
        placed.push((pos, community, node));
    }
    let colors = color_map(nodes, g.nodes());

    let mut ties: Vec<(usize, usize, f64)> = (0..g.len())
        .flat_map(|i| g.neighbors(i).filter(move |&(j, _)| j > i).map(move |(j, w)| (i, j, w)))
        .collect();
    ties.sort_by(|a, b| b.2.total_cmp(&a.2).then((a.0, a.1).cmp(&(b.0, b.1))));
    let keep = ((ties.len() as f64) * opts.edge_quantile.clamp(0.0, 1.0)).ceil() as usize;
    let drawn = &ties[..keep.min(ties.len())];

    let (w, h) = (layout.width, layout.height);
    let legend_w = 160.0;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{h}" viewBox="0 0 {} {h}">"#,
        w + legend_w,
        w + legend_w
    );
    let _ = writeln!(svg, r#"<rect width="{}" height="{h}" fill="white"/>"#, w + legend_w);
    if !opts.title.is_empty() {
        let _ = writeln!(
            svg,
            r#"<text x="10" y="20" font-family="sans-serif" font-size="16">{}</text>"#,
            xml_escape(&opts.title)
        );
    }
    svg.push_str("<g class=\"edges\" stroke=\"#555555\">\n");
    for (rank, &(i, j, _)) in drawn.iter().enumerate() {
        let opacity = 0.15 + 0.6 * (1.0 - rank as f64 / drawn.len().max(1) as f64);
        let (a, b) = (placed[i].0, placed[j].0);
        let _ = writeln!(
            svg,
            r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke-opacity="{opacity:.3}"/>"#,
            a.0, a.1, b.0, b.1
        );
    }
    svg.push_str("</g>\n<g class=\"nodes\" font-family=\"sans-serif\" font-size=\"8\" text-anchor=\"middle\">\n");
    for ((x, y), community, node) in &placed {
        let fill = colors.get(&node.geography).copied().unwrap_or(GLOBAL_COLOR);
        let _ = writeln!(
            svg,
            r#"<circle cx="{x:.2}" cy="{y:.2}" r="{}" fill="{fill}" stroke="black" stroke-width="0.5"><title>{}</title></circle>"#,
            opts.node_radius,
            xml_escape(&node.id)
        );
        let _ = writeln!(
            svg,
            r#"<text class="label" x="{x:.2}" y="{:.2}">{community}</text>"#,
            y + 3.0
        );
    }
    svg.push_str("</g>\n<g class=\"legend\" font-family=\"sans-serif\" font-size=\"12\">\n");
    for (row, (code, color)) in colors.iter().enumerate() {
        let y = 30.0 + row as f64 * 18.0;
        let _ = writeln!(
            svg,
            r#"<rect x="{}" y="{y}" width="12" height="12" fill="{color}"/><text x="{}" y="{}">{}</text>"#,
            w + 10.0,
            w + 28.0,
            y + 10.0,
            xml_escape(code)
        );
    }
    svg.push_str("</g>\n</svg>\n");
    Ok(svg)
}

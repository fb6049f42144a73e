use dualweb_core::audience::{build_audience_graph, duplication_matrix};
use dualweb_core::communities::{detect_communities, LouvainOptions};
use dualweb_core::graph::WeightedGraph;
use dualweb_core::layout::{fr_layout, hull_overlap_ratio, render_svg, LayoutOptions, RenderOptions};
use dualweb_core::synth::{generate_audience_log, SynthConfig};

fn synthetic_audience(cfg: &SynthConfig) -> (WeightedGraph, dualweb_core::NodeSet) {
    let data = generate_audience_log(cfg).unwrap();
    let dup = duplication_matrix(&data.log, &data.panel, &data.nodes.ids()).unwrap();
    (build_audience_graph(&dup), data.nodes)
}

#[test]
fn planted_blocks_occupy_separate_regions() {
    let cfg = SynthConfig::default();
    let (g, _) = synthetic_audience(&cfg);
    let layout = fr_layout(&g, 42, LayoutOptions::default()).unwrap();
    let mut groups = vec![Vec::new(); cfg.n_blocks];
    for (i, block) in cfg.site_blocks().into_iter().enumerate() {
        if let Some(b) = block {
            groups[b].push(i);
        }
    }
    let ratio = hull_overlap_ratio(layout.positions(), &groups, 1000.0, 1000.0, 200);
    assert!(ratio < 0.40, "hull overlap {ratio}");

    // control: groups that ignore the planted blocks overlap heavily
    let mixed: Vec<Vec<usize>> = (0..cfg.n_blocks)
        .map(|b| {
            (cfg.n_global_sites..g.len())
                .filter(|i| i % cfg.n_blocks == b)
                .collect()
        })
        .collect();
    let control = hull_overlap_ratio(layout.positions(), &mixed, 1000.0, 1000.0, 200);
    assert!(control > 0.5, "control overlap {control}");
}

#[test]
fn rendered_map_follows_node_order() {
    let cfg = SynthConfig {
        n_sites: 40,
        n_users: 2000,
        n_global_sites: 4,
        ..SynthConfig::default()
    };
    let (g, nodes) = synthetic_audience(&cfg);
    let opts = LayoutOptions {
        iterations: 100,
        ..Default::default()
    };
    let layout = fr_layout(&g, 3, opts).unwrap();
    let partition = detect_communities(&g, 3, LouvainOptions::default()).unwrap();
    let svg = render_svg(&g, &layout, &partition, &nodes, &RenderOptions::default()).unwrap();
    assert_eq!(svg.matches("<circle").count(), g.len());
    let mut last = 0;
    for id in g.nodes() {
        let at = svg
            .find(&format!("<title>{id}"))
            .unwrap_or_else(|| panic!("{id} not rendered"));
        assert!(at > last, "{id} out of order");
        last = at;
    }
    assert!(svg.contains("#999999"), "GLOBAL nodes are gray");
}

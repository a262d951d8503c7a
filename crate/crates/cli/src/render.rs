//! SVG output. This is the one place exact values become floats; everything
//! upstream of the coordinate conversion is still exact.
//!
//! Curve convention: the leg-side curve `g_n∘π_n` is drawn in blue, the
//! hypotenuse-side curve `g̃_n∘π̃_n` in red. Trees are drawn layered, with
//! the vertical coordinate proportional to exact depth.

use anyhow::Result;
use std::fmt::Write as _;

use treelike_core::construct::TowerLevel;
use treelike_core::mtree::{MetricTree, VertexId};
use treelike_core::plcurve::PlanePath;

#[derive(Clone, Copy, PartialEq, Eq)]
pub enum CurveKind {
    Alpha,
    Beta,
    Gamma,
}

const BLUE: &str = "#1f4fd8";
const RED: &str = "#d82f2f";

fn polyline(out: &mut String, path: &PlanePath, color: &str, origin: (f64, f64), scale: f64) {
    let pts: Vec<String> = path
        .breakpoints()
        .iter()
        .map(|(_, p)| {
            let x = origin.0 + p.x.to_f64() * scale;
            let y = origin.1 + (1.0 - p.y.to_f64()) * scale;
            format!("{x:.2},{y:.2}")
        })
        .collect();
    writeln!(
        out,
        r#"  <polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
        pts.join(" ")
    )
    .unwrap();
}

struct TreeLayout {
    nodes: Vec<(VertexId, f64, f64)>,
    edges: Vec<(usize, usize)>,
    max_x: f64,
    max_y: f64,
}

fn layout_tree(tree: &MetricTree) -> TreeLayout {
    let mut xs: std::collections::BTreeMap<VertexId, f64> = Default::default();
    let mut next_leaf = 0.0f64;
    // Post-order: leaves take successive slots, parents center over children.
    fn place(
        tree: &MetricTree,
        v: VertexId,
        xs: &mut std::collections::BTreeMap<VertexId, f64>,
        next_leaf: &mut f64,
    ) -> f64 {
        let children = tree.children(v).unwrap();
        if children.is_empty() {
            let x = *next_leaf;
            *next_leaf += 1.0;
            xs.insert(v, x);
            return x;
        }
        let mut sum = 0.0;
        for &c in children {
            sum += place(tree, c, xs, next_leaf);
        }
        let x = sum / children.len() as f64;
        xs.insert(v, x);
        x
    }
    place(tree, tree.root(), &mut xs, &mut next_leaf);

    let ids: Vec<VertexId> = tree.vertex_ids().collect();
    let index: std::collections::BTreeMap<VertexId, usize> =
        ids.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let mut nodes = Vec::with_capacity(ids.len());
    let mut max_x = 0.0f64;
    let mut max_y = 0.0f64;
    for &v in &ids {
        let x = xs[&v];
        let y = tree.depth(v).unwrap().to_f64();
        max_x = max_x.max(x);
        max_y = max_y.max(y);
        nodes.push((v, x, y));
    }
    let edges = ids
        .iter()
        .filter_map(|&v| tree.parent(v).unwrap().map(|(p, _)| (index[&v], index[&p])))
        .collect();
    TreeLayout { nodes, edges, max_x, max_y }
}

fn tree_panel(out: &mut String, tree: &MetricTree, color: &str, origin: (f64, f64), size: f64) {
    let layout = layout_tree(tree);
    let sx = if layout.max_x > 0.0 { size / layout.max_x } else { 0.0 };
    let sy = if layout.max_y > 0.0 { size / layout.max_y } else { 0.0 };
    let coords: Vec<(f64, f64)> = layout
        .nodes
        .iter()
        .map(|(_, x, y)| {
            let px = origin.0 + if layout.max_x > 0.0 { x * sx } else { size / 2.0 };
            (px, origin.1 + y * sy)
        })
        .collect();
    for (a, b) in &layout.edges {
        writeln!(
            out,
            r#"  <line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{color}" stroke-width="1"/>"#,
            coords[*a].0, coords[*a].1, coords[*b].0, coords[*b].1
        )
        .unwrap();
    }
    for (x, y) in &coords {
        writeln!(
            out,
            r#"  <circle cx="{x:.2}" cy="{y:.2}" r="2" fill="{color}"/>"#
        )
        .unwrap();
    }
}

pub fn render(
    level1: &TowerLevel,
    level: &TowerLevel,
    curves: &[CurveKind],
    trees: bool,
    scale: u32,
) -> Result<String> {
    let s = scale as f64;
    let margin = (s / 10.0).max(16.0);
    let curve_panel = !curves.is_empty();
    let mut width = margin;
    if curve_panel {
        width += s + margin;
    }
    let tree_size = 0.75 * s;
    if trees {
        width += 2.0 * (tree_size + margin);
    }
    let height = s + 2.0 * margin;

    let mut out = String::new();
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}">"#
    )
    .unwrap();
    writeln!(out, r#"  <rect width="100%" height="100%" fill="white"/>"#).unwrap();

    let mut cursor = margin;
    if curve_panel {
        let origin = (cursor, margin);
        for kind in curves {
            match kind {
                CurveKind::Alpha => polyline(&mut out, &level1.curve()?, BLUE, origin, s),
                CurveKind::Beta => polyline(&mut out, &level1.curve_t()?, RED, origin, s),
                CurveKind::Gamma => {
                    polyline(&mut out, &level.curve()?, BLUE, origin, s);
                    polyline(&mut out, &level.curve_t()?, RED, origin, s);
                }
            }
        }
        cursor += s + margin;
    }
    if trees {
        tree_panel(&mut out, &level.e, BLUE, (cursor, margin), tree_size);
        cursor += tree_size + margin;
        tree_panel(&mut out, &level.et, RED, (cursor, margin), tree_size);
    }
    writeln!(out, "</svg>").unwrap();
    Ok(out)
}

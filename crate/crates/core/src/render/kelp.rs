//! Kelp-style overlays: circles on a set's cells joined along its flow arcs.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use super::{escape, num, ordered_overlays, RenderError, SvgDocument};
use crate::grid::{CellId, HostGrid};
use crate::setsystem::SetSystem;
use crate::solver::Embedding;
use crate::StyleSheet;

/// Scale for the `rank`-th of `count` sets sharing a node or edge; earlier
/// sets are drawn larger so later ones stay visible on top.
fn share_scale(rank: usize, count: usize) -> f64 {
    (count - rank) as f64 / count as f64
}

pub fn render_kelp_overlays(
    mut doc: SvgDocument,
    emb: &Embedding,
    sys: &SetSystem,
    grid: &HostGrid,
    style: &StyleSheet,
    selected: &[String],
) -> Result<SvgDocument, RenderError> {
    style.validate()?;
    let order = ordered_overlays(sys, style, selected)?;
    let mut nodes: Vec<BTreeSet<CellId>> = Vec::new();
    let mut arcs: Vec<BTreeSet<(CellId, CellId)>> = Vec::new();
    for (name, _) in &order {
        let flows = emb.flows.get(name).ok_or_else(|| RenderError::MissingFlows(name.clone()))?;
        nodes.push(emb.region(sys, name));
        arcs.push(flows.iter().map(|f| (f.from.min(f.to), f.from.max(f.to))).collect());
    }
    let mut node_users: BTreeMap<CellId, usize> = BTreeMap::new();
    let mut arc_users: BTreeMap<(CellId, CellId), usize> = BTreeMap::new();
    for n in nodes.iter().flatten() {
        *node_users.entry(*n).or_default() += 1;
    }
    for a in arcs.iter().flatten() {
        *arc_users.entry(*a).or_default() += 1;
    }

    let mut node_rank: BTreeMap<CellId, usize> = BTreeMap::new();
    let mut arc_rank: BTreeMap<(CellId, CellId), usize> = BTreeMap::new();
    for (i, (name, color)) in order.into_iter().enumerate() {
        let mut markup = format!("<g class=\"overlay kelp\" data-set=\"{}\">\n", escape(&name));
        for &(a, b) in &arcs[i] {
            let rank = arc_rank.entry((a, b)).or_default();
            let w = style.kelp_edge_width * share_scale(*rank, arc_users[&(a, b)]);
            *rank += 1;
            let (Some(pa), Some(pb)) = (grid.center(a), grid.center(b)) else { continue };
            let (pa, pb) = (doc.frame.map(pa), doc.frame.map(pb));
            let _ = writeln!(
                markup,
                "<line class=\"kelp-edge\" data-set=\"{}\" x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{color}\" stroke-width=\"{}\" stroke-linecap=\"round\"/>",
                escape(&name),
                num(pa.x),
                num(pa.y),
                num(pb.x),
                num(pb.y),
                num(w * style.scale),
            );
        }
        for &c in &nodes[i] {
            let rank = node_rank.entry(c).or_default();
            let r = style.kelp_node_radius * share_scale(*rank, node_users[&c]);
            *rank += 1;
            let Some(p) = grid.center(c) else { continue };
            let p = doc.frame.map(p);
            let _ = writeln!(
                markup,
                "<circle class=\"kelp-node\" data-set=\"{}\" cx=\"{}\" cy=\"{}\" r=\"{}\" fill=\"{color}\"/>",
                escape(&name),
                num(p.x),
                num(p.y),
                num(r * style.scale),
            );
        }
        markup.push_str("</g>\n");
        doc.overlays.push((name, markup));
    }
    Ok(doc)
}

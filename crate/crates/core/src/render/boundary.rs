//! Boundary-style overlays.
//!
//! Every region's boundary is traced along cell sides with the interior on
//! the left, so outer loops run counterclockwise and holes clockwise. Each
//! side is offset inward past the cell spacing and past the bands of sets
//! drawn earlier on the same side.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use super::{escape, gradient_shade, num, ordered_overlays, RenderError, SvgDocument};
use crate::grid::{CellId, HostGrid, Point2};
use crate::metrics::connected_components;
use crate::setsystem::SetSystem;
use crate::solver::Embedding;
use crate::StyleSheet;

type Key = (i64, i64);

fn key(p: Point2) -> Key {
    ((p.x * 1e6).round() as i64, (p.y * 1e6).round() as i64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryEdge {
    pub cell: CellId,
    pub side: usize,
    pub from: Point2,
    pub to: Point2,
}

impl BoundaryEdge {
    fn segment(&self) -> (Key, Key) {
        (key(self.from), key(self.to))
    }
}

/// Closed boundary loops of `cells`, interior on the left of every edge.
///
/// Where two cells of the set meet only at a corner the walk stays with the
/// cell it arrived on, so such cells get separate loops.
pub fn boundary_loops(grid: &HostGrid, cells: &BTreeSet<CellId>) -> Vec<Vec<BoundaryEdge>> {
    let kind = grid.kind();
    let corners = kind.corners();
    let mut edges = Vec::new();
    for &id in cells {
        let Some(pos) = grid.position(id) else { continue };
        let cell = &grid.cells()[pos];
        for (k, (dc, dr)) in kind.neighbor_offsets().iter().enumerate() {
            let n = grid.id_at(cell.row as i64 + *dr as i64, cell.col as i64 + *dc as i64);
            if n.is_some_and(|n| cells.contains(&n)) {
                continue;
            }
            edges.push(BoundaryEdge {
                cell: id,
                side: k,
                from: cell.center + corners[k],
                to: cell.center + corners[(k + 1) % corners.len()],
            });
        }
    }
    let mut starting: BTreeMap<Key, Vec<usize>> = BTreeMap::new();
    for (i, e) in edges.iter().enumerate() {
        starting.entry(key(e.from)).or_default().push(i);
    }
    let next = |i: usize| -> usize {
        let cands = &starting[&key(edges[i].to)];
        *cands.iter().find(|&&j| edges[j].cell == edges[i].cell).unwrap_or(&cands[0])
    };
    let mut used = vec![false; edges.len()];
    let mut loops = Vec::new();
    for first in 0..edges.len() {
        if used[first] {
            continue;
        }
        let mut lp = Vec::new();
        let mut cur = first;
        while !used[cur] {
            used[cur] = true;
            lp.push(edges[cur]);
            cur = next(cur);
        }
        loops.push(lp);
    }
    loops
}

fn left_normal(a: Point2, b: Point2) -> Point2 {
    let d = b - a;
    let len = (d.x * d.x + d.y * d.y).sqrt();
    Point2::new(-d.y / len, d.x / len)
}

/// Polygon of the loop with edge `i` moved `dist[i]` to its left.
fn offset_loop(lp: &[BoundaryEdge], dist: &[f64]) -> Vec<Point2> {
    let m = lp.len();
    let mut out = Vec::with_capacity(m);
    for i in 0..m {
        let prev = (i + m - 1) % m;
        let v = lp[i].from;
        let na = left_normal(lp[prev].from, lp[prev].to);
        let nb = left_normal(lp[i].from, lp[i].to);
        let (da, db) = (dist[prev], dist[i]);
        let det = na.x * nb.y - na.y * nb.x;
        if det.abs() < 1e-9 {
            out.push(v + na * da);
            if (da - db).abs() > 1e-12 {
                out.push(v + nb * db);
            }
        } else {
            let qx = (da * nb.y - db * na.y) / det;
            let qy = (na.x * db - nb.x * da) / det;
            out.push(v + Point2::new(qx, qy));
        }
    }
    out
}

fn path_data(doc: &SvgDocument, polys: &[Vec<Point2>]) -> String {
    let mut d = String::new();
    for poly in polys {
        for (i, p) in poly.iter().enumerate() {
            let q = doc.frame.map(*p);
            let _ = write!(d, "{}{},{} ", if i == 0 { "M" } else { "L" }, num(q.x), num(q.y));
        }
        d.push_str("Z ");
    }
    d.trim_end().to_string()
}

/// Adds one closed path per connected component of each selected overlay.
pub fn render_boundary_overlays(
    mut doc: SvgDocument,
    emb: &Embedding,
    sys: &SetSystem,
    grid: &HostGrid,
    style: &StyleSheet,
    selected: &[String],
) -> Result<SvgDocument, RenderError> {
    style.validate()?;
    let order = ordered_overlays(sys, style, selected)?;
    let t = style.boundary_thickness;
    let steps = style.gradient_steps.max(1);
    let mut drawn: BTreeMap<(Key, Key), usize> = BTreeMap::new();

    for (name, color) in order {
        let region = emb.region(sys, &name);
        let mut markup = format!("<g class=\"overlay\" data-set=\"{}\">\n", escape(&name));
        let mut touched = Vec::new();
        for comp in connected_components(grid, &region) {
            let loops = boundary_loops(grid, &comp);
            let depth: Vec<Vec<usize>> =
                loops.iter().map(|lp| lp.iter().map(|e| drawn.get(&e.segment()).copied().unwrap_or(0)).collect()).collect();
            let band = |inner: f64| -> Vec<Vec<Point2>> {
                loops
                    .iter()
                    .zip(&depth)
                    .map(|(lp, ks)| {
                        let dist: Vec<f64> =
                            ks.iter().map(|&k| style.cell_spacing / 2.0 + k as f64 * t + inner).collect();
                        offset_loop(lp, &dist)
                    })
                    .collect()
            };
            let _ = writeln!(
                markup,
                "<path class=\"overlay-boundary\" data-set=\"{}\" d=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"{}\" stroke-linejoin=\"miter\"/>",
                escape(&name),
                path_data(&doc, &band(t / 2.0)),
                num(t * style.scale),
            );
            for j in 1..steps {
                let w = t / steps as f64;
                let _ = writeln!(
                    markup,
                    "<path class=\"overlay-gradient\" data-set=\"{}\" d=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"{}\" stroke-linejoin=\"miter\"/>",
                    escape(&name),
                    path_data(&doc, &band((j as f64 + 0.5) * w)),
                    gradient_shade(&color, j),
                    num(w * style.scale),
                );
            }
            touched.extend(loops.iter().flatten().map(|e| e.segment()));
        }
        for seg in touched {
            *drawn.entry(seg).or_default() += 1;
        }
        markup.push_str("</g>\n");
        doc.overlays.push((name, markup));
    }
    Ok(doc)
}

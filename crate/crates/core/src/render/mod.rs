//! SVG rendering: base-map tessellation, boundary and Kelp overlays, labels
//! and a static HTML gallery.
//!
//! Geometry is computed in layout units (unit cell edges) and mapped to
//! pixels only when written, with a fixed number of decimals so equal inputs
//! give byte-identical documents.

mod boundary;
mod gallery;
mod kelp;
mod labels;

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{CellId, HostGrid, Point2};
use crate::setsystem::{SetKind, SetSystem};
use crate::solver::Embedding;

pub use boundary::{boundary_loops, render_boundary_overlays, BoundaryEdge};
pub use gallery::{export_gallery, file_stem, render_map, OverlayStyle};
pub use kelp::render_kelp_overlays;
pub use labels::{place_labels, wrap_label};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RenderError {
    #[error("palette has {available} colors but {needed} are needed")]
    PaletteExhausted { needed: usize, available: usize },
    #[error("unknown overlay set `{0}`")]
    UnknownSet(String),
    #[error("set `{0}` has no recorded flows (solved without contiguity)")]
    MissingFlows(String),
    #[error("element `{0}` has no cell")]
    Unassigned(String),
    #[error("invalid style: {0}")]
    InvalidStyle(String),
    #[error("i/o error: {0}")]
    Io(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FontRange {
    pub max_size: f64,
    pub min_size: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StyleSheet {
    /// Gap between adjacent cells, in edge lengths.
    pub cell_spacing: f64,
    /// Width of one overlay boundary band, in edge lengths.
    pub boundary_thickness: f64,
    pub base_palette: Vec<String>,
    pub overlay_palette: Vec<String>,
    /// Font sizes in pixels.
    pub font: FontRange,
    /// Drawing order of overlays; unlisted overlays follow in declaration order.
    pub overlay_order: Vec<String>,
    /// Number of sub-bands each boundary band is shaded with.
    pub gradient_steps: usize,
    /// Pixels per edge length.
    pub scale: f64,
    pub kelp_node_radius: f64,
    pub kelp_edge_width: f64,
}

pub const PASTEL_PALETTE: [&str; 8] =
    ["#fbb4ae", "#b3cde3", "#ccebc5", "#decbe4", "#fed9a6", "#ffffcc", "#e5d8bd", "#fddaec"];
pub const BRIGHT_PALETTE: [&str; 8] =
    ["#e41a1c", "#377eb8", "#4daf4a", "#984ea3", "#ff7f00", "#a65628", "#f781bf", "#17becf"];

/// Brightness lost per gradient level.
pub const GRADIENT_STEP: f64 = 0.12;
/// Levels after which the gradient stops darkening.
pub const GRADIENT_MAX_LEVELS: usize = 3;

impl Default for StyleSheet {
    fn default() -> Self {
        StyleSheet {
            cell_spacing: 0.06,
            boundary_thickness: 0.05,
            base_palette: PASTEL_PALETTE.iter().map(|s| s.to_string()).collect(),
            overlay_palette: BRIGHT_PALETTE.iter().map(|s| s.to_string()).collect(),
            font: FontRange { max_size: 12.0, min_size: 5.0 },
            overlay_order: Vec::new(),
            gradient_steps: 3,
            scale: 40.0,
            kelp_node_radius: 0.3,
            kelp_edge_width: 0.16,
        }
    }
}

impl StyleSheet {
    pub fn validate(&self) -> Result<(), RenderError> {
        let bad = |m: &str| Err(RenderError::InvalidStyle(m.to_string()));
        if !(0.0..1.0).contains(&self.cell_spacing) {
            return bad("cell_spacing must lie in [0, 1)");
        }
        if self.boundary_thickness < 0.0 {
            return bad("boundary_thickness must be non-negative");
        }
        if !(self.font.min_size > 0.0 && self.font.max_size >= self.font.min_size) {
            return bad("font sizes need max_size ≥ min_size > 0");
        }
        if self.scale <= 0.0 {
            return bad("scale must be positive");
        }
        for c in self.base_palette.iter().chain(&self.overlay_palette) {
            if parse_hex(c).is_none() {
                return bad(&format!("`{c}` is not a #rrggbb color"));
            }
        }
        Ok(())
    }
}

fn parse_hex(c: &str) -> Option<[u8; 3]> {
    let h = c.strip_prefix('#')?;
    if h.len() != 6 {
        return None;
    }
    let b = |i: usize| u8::from_str_radix(&h[i..i + 2], 16).ok();
    Some([b(0)?, b(2)?, b(4)?])
}

/// `color` with its brightness reduced by `fraction`.
pub fn darken(color: &str, fraction: f64) -> String {
    let Some(rgb) = parse_hex(color) else { return color.to_string() };
    let f = (1.0 - fraction).clamp(0.0, 1.0);
    let c = rgb.map(|v| (v as f64 * f).round() as u8);
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

/// Gradient shade of sub-band `level`, counted from the outside.
pub fn gradient_shade(color: &str, level: usize) -> String {
    darken(color, GRADIENT_STEP * level.min(GRADIENT_MAX_LEVELS) as f64)
}

/// Maps layout coordinates to pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frame {
    pub min: Point2,
    pub scale: f64,
    pub margin: f64,
}

impl Frame {
    /// Covers every cell of `grid` so documents over one grid align.
    pub fn for_grid(grid: &HostGrid, scale: f64) -> Frame {
        let r = grid.kind().corners().iter().map(|c| c.x.abs().max(c.y.abs())).fold(0.0, f64::max);
        let (mut minx, mut miny) = (f64::INFINITY, f64::INFINITY);
        for c in grid.cells() {
            minx = minx.min(c.center.x - r);
            miny = miny.min(c.center.y - r);
        }
        Frame { min: Point2::new(minx, miny), scale, margin: 0.5 }
    }

    pub fn map(&self, p: Point2) -> Point2 {
        Point2::new((p.x - self.min.x + self.margin) * self.scale, (p.y - self.min.y + self.margin) * self.scale)
    }

    fn extent(&self, grid: &HostGrid) -> (f64, f64) {
        let r = grid.kind().corners().iter().map(|c| c.x.abs().max(c.y.abs())).fold(0.0, f64::max);
        let (mut maxx, mut maxy) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        for c in grid.cells() {
            maxx = maxx.max(c.center.x + r);
            maxy = maxy.max(c.center.y + r);
        }
        let far = self.map(Point2::new(maxx + self.margin, maxy + self.margin));
        (far.x, far.y)
    }
}

/// Fixed-precision number without negative zero.
pub(crate) fn num(v: f64) -> String {
    let s = format!("{v:.3}");
    if s.trim_start_matches('-').chars().all(|c| c == '0' || c == '.') {
        "0.000".into()
    } else {
        s
    }
}

pub(crate) fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for ch in s.chars() {
        match ch {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

/// An SVG document assembled from layers.
#[derive(Debug, Clone, PartialEq)]
pub struct SvgDocument {
    pub width: f64,
    pub height: f64,
    pub frame: Frame,
    pub defs: Vec<String>,
    pub base: Vec<String>,
    /// `(set name, markup)` in drawing order.
    pub overlays: Vec<(String, String)>,
    pub labels: Vec<String>,
    pub warnings: Vec<String>,
}

impl SvgDocument {
    pub fn new(grid: &HostGrid, style: &StyleSheet) -> SvgDocument {
        let frame = Frame::for_grid(grid, style.scale);
        let (width, height) = frame.extent(grid);
        SvgDocument {
            width,
            height,
            frame,
            defs: Vec::new(),
            base: Vec::new(),
            overlays: Vec::new(),
            labels: Vec::new(),
            warnings: Vec::new(),
        }
    }

    /// Base-map layer markup, shared by every document over the same map.
    pub fn base_layer(&self) -> String {
        let mut s = String::from("<g id=\"base-map\">\n");
        for p in &self.base {
            s.push_str(p);
            s.push('\n');
        }
        s.push_str("</g>\n");
        s
    }

    pub fn overlay_layer(&self, set: &str) -> String {
        self.overlays.iter().filter(|(n, _)| n == set).map(|(_, m)| m.as_str()).collect()
    }

    fn body(&self) -> String {
        let mut s = String::new();
        if !self.defs.is_empty() {
            s.push_str("<defs>\n");
            for d in &self.defs {
                s.push_str(d);
                s.push('\n');
            }
            s.push_str("</defs>\n");
        }
        s.push_str(&self.base_layer());
        s.push_str("<g id=\"overlays\">\n");
        for (_, m) in &self.overlays {
            s.push_str(m);
        }
        s.push_str("</g>\n<g id=\"labels\">\n");
        for l in &self.labels {
            s.push_str(l);
            s.push('\n');
        }
        s.push_str("</g>\n");
        s
    }

    pub fn to_svg_string(&self) -> String {
        let mut s = String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
        let _ = writeln!(
            s,
            "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">",
            w = num(self.width),
            h = num(self.height)
        );
        s.push_str(&self.body());
        s.push_str("</svg>\n");
        s
    }
}

pub(crate) fn points_attr(frame: &Frame, pts: &[Point2]) -> String {
    pts.iter()
        .map(|p| {
            let q = frame.map(*p);
            format!("{},{}", num(q.x), num(q.y))
        })
        .collect::<Vec<_>>()
        .join(" ")
}

/// Cell polygon shrunk toward its center by half the spacing on every side.
pub fn inset_polygon(grid: &HostGrid, cell: CellId, spacing: f64) -> Vec<Point2> {
    let center = grid.center(cell).expect("cell in grid");
    let k = 1.0 - spacing / 2.0 / grid.kind().apothem();
    grid.kind().corners().into_iter().map(|c| center + c * k).collect()
}

fn base_colors(sys: &SetSystem, style: &StyleSheet) -> Result<std::collections::BTreeMap<String, String>, RenderError> {
    let bases: Vec<_> = sys.base_sets().collect();
    if bases.len() > style.base_palette.len() {
        return Err(RenderError::PaletteExhausted { needed: bases.len(), available: style.base_palette.len() });
    }
    Ok(bases.iter().zip(&style.base_palette).map(|(s, c)| (s.name.clone(), c.clone())).collect())
}

/// One polygon per element, filled with its base set's color.
pub fn render_base_map(
    emb: &Embedding,
    sys: &SetSystem,
    grid: &HostGrid,
    style: &StyleSheet,
) -> Result<SvgDocument, RenderError> {
    style.validate()?;
    let colors = base_colors(sys, style)?;
    let mut doc = SvgDocument::new(grid, style);
    for e in sys.elements() {
        let cell = *emb.assignment.get(&e.id).ok_or_else(|| RenderError::Unassigned(e.id.clone()))?;
        if !grid.contains(cell) {
            return Err(RenderError::Unassigned(e.id.clone()));
        }
        let base = sys.base_of(&e.id).unwrap_or_default();
        let fill = colors.get(base).map(String::as_str).unwrap_or("#dddddd");
        doc.base.push(format!(
            "<polygon class=\"cell\" data-element=\"{}\" data-set=\"{}\" points=\"{}\" fill=\"{fill}\"/>",
            escape(&e.id),
            escape(base),
            points_attr(&doc.frame, &inset_polygon(grid, cell, style.cell_spacing)),
        ));
    }
    Ok(doc)
}

/// Selected overlays in drawing order, with their palette colors.
pub(crate) fn ordered_overlays(
    sys: &SetSystem,
    style: &StyleSheet,
    selected: &[String],
) -> Result<Vec<(String, String)>, RenderError> {
    let overlays: Vec<&str> = sys.overlay_sets().map(|s| s.name.as_str()).collect();
    for name in selected {
        if !overlays.contains(&name.as_str()) {
            return Err(RenderError::UnknownSet(name.clone()));
        }
    }
    for name in &style.overlay_order {
        if sys.set(name).map(|s| s.kind) != Some(SetKind::Overlay) {
            return Err(RenderError::UnknownSet(name.clone()));
        }
    }
    let mut order: Vec<&str> = style.overlay_order.iter().map(String::as_str).collect();
    order.extend(overlays.iter().filter(|o| !style.overlay_order.iter().any(|x| x == *o)));
    let mut out = Vec::new();
    for name in order {
        if !selected.iter().any(|s| s == name) {
            continue;
        }
        let idx = overlays.iter().position(|o| *o == name).unwrap();
        let color = style.overlay_palette.get(idx).ok_or(RenderError::PaletteExhausted {
            needed: idx + 1,
            available: style.overlay_palette.len(),
        })?;
        out.push((name.to_string(), color.clone()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid, GridKind};
    use crate::setsystem::{Element, NamedSet};

    pub(crate) fn sample() -> (SetSystem, HostGrid, Embedding) {
        let sys = SetSystem::new(
            ["a", "b", "c"].iter().map(|i| Element { id: i.to_string(), label: i.to_uppercase() }).collect(),
            vec![
                NamedSet { name: "X".into(), members: vec!["a".into(), "b".into()], kind: SetKind::Base },
                NamedSet { name: "Y".into(), members: vec!["c".into()], kind: SetKind::Base },
                NamedSet { name: "P".into(), members: vec!["b".into(), "c".into()], kind: SetKind::Overlay },
            ],
        )
        .unwrap();
        let grid = build_grid(GridKind::Square, 2, 2).unwrap();
        let emb = Embedding {
            assignment: [("a", 0), ("b", 1), ("c", 3)].iter().map(|(e, c)| (e.to_string(), CellId(*c))).collect(),
            flows: Default::default(),
        };
        (sys, grid, emb)
    }

    #[test]
    fn base_map_polygons_and_colors() {
        let (sys, grid, emb) = sample();
        let doc = render_base_map(&emb, &sys, &grid, &StyleSheet::default()).unwrap();
        let svg = doc.to_svg_string();
        assert_eq!(svg.matches("<polygon").count(), 3);
        assert_eq!(svg.matches(PASTEL_PALETTE[0]).count(), 2);
        assert_eq!(svg, render_base_map(&emb, &sys, &grid, &StyleSheet::default()).unwrap().to_svg_string());
    }

    #[test]
    fn zero_spacing_gives_exact_outline() {
        let (_, grid, _) = sample();
        let p = inset_polygon(&grid, CellId(0), 0.0);
        assert_eq!(p[0], Point2::new(0.5, -0.5));
        let hex = build_grid(GridKind::Hex, 1, 1).unwrap();
        let p = inset_polygon(&hex, CellId(0), 0.1);
        // Side midpoints move inward by half the spacing.
        let mid = (p[0] + p[1]) * 0.5;
        assert!((mid.dist(Point2::new(0.0, 0.0)) - (3f64.sqrt() / 2.0 - 0.05)).abs() < 1e-12);
    }

    #[test]
    fn palette_exhaustion() {
        let (sys, grid, emb) = sample();
        let style = StyleSheet { base_palette: vec!["#ffffff".into()], ..Default::default() };
        assert_eq!(
            render_base_map(&emb, &sys, &grid, &style),
            Err(RenderError::PaletteExhausted { needed: 2, available: 1 })
        );
    }

    #[test]
    fn shading() {
        assert_eq!(darken("#ffffff", 0.12), "#e0e0e0");
        assert_eq!(gradient_shade("#646464", 5), gradient_shade("#646464", 3));
        assert_eq!(num(-0.0001), "0.000");
        assert_eq!(escape("a<b&\"c\""), "a&lt;b&amp;&quot;c&quot;");
    }
}

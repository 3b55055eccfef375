//! Static gallery: one SVG per overlay plus an HTML page toggling overlays.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{
    escape, num, place_labels, render_base_map, render_boundary_overlays, render_kelp_overlays, RenderError,
    SvgDocument,
};
use crate::grid::HostGrid;
use crate::setsystem::SetSystem;
use crate::solver::Embedding;
use crate::StyleSheet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OverlayStyle {
    Boundary,
    Kelp,
}

impl std::str::FromStr for OverlayStyle {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "boundary" => Ok(OverlayStyle::Boundary),
            "kelp" => Ok(OverlayStyle::Kelp),
            other => Err(format!("unknown overlay style `{other}`")),
        }
    }
}

/// Base map, the given overlays and labels as one document.
pub fn render_map(
    emb: &Embedding,
    sys: &SetSystem,
    grid: &HostGrid,
    style: &StyleSheet,
    overlays: &[String],
    overlay_style: OverlayStyle,
) -> Result<SvgDocument, RenderError> {
    let doc = render_base_map(emb, sys, grid, style)?;
    let doc = match overlay_style {
        OverlayStyle::Boundary => render_boundary_overlays(doc, emb, sys, grid, style, overlays)?,
        OverlayStyle::Kelp => render_kelp_overlays(doc, emb, sys, grid, style, overlays)?,
    };
    Ok(place_labels(doc, emb, sys, grid, style, overlay_style == OverlayStyle::Kelp))
}

/// File-name-safe form of a set name.
pub fn file_stem(name: &str) -> String {
    name.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect()
}

fn html_page(doc: &SvgDocument, overlays: &[String]) -> String {
    let mut h = String::from(
        "<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n<title>Set map</title>\n<style>\nbody { font-family: sans-serif; }\n.controls label { margin-right: 1em; }\n</style>\n</head>\n<body>\n<div class=\"controls\">\n",
    );
    for (i, name) in overlays.iter().enumerate() {
        let _ = writeln!(
            h,
            "<label><input type=\"checkbox\" class=\"overlay-toggle\" data-layer=\"layer-{i}\" checked> {}</label>",
            escape(name)
        );
    }
    h.push_str("</div>\n");
    let _ = writeln!(
        h,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{ht}\" viewBox=\"0 0 {w} {ht}\">",
        w = num(doc.width),
        ht = num(doc.height)
    );
    if !doc.defs.is_empty() {
        h.push_str("<defs>\n");
        for d in &doc.defs {
            h.push_str(d);
            h.push('\n');
        }
        h.push_str("</defs>\n");
    }
    h.push_str(&doc.base_layer());
    for (i, name) in overlays.iter().enumerate() {
        let _ = write!(h, "<g id=\"layer-{i}\" class=\"overlay-layer\">\n{}</g>\n", doc.overlay_layer(name));
    }
    h.push_str("<g id=\"labels\">\n");
    for l in &doc.labels {
        h.push_str(l);
        h.push('\n');
    }
    h.push_str("</g>\n</svg>\n");
    h.push_str(
        "<script>\nfor (const box of document.querySelectorAll('.overlay-toggle')) {\n  box.addEventListener('change', () => {\n    document.getElementById(box.dataset.layer).style.display = box.checked ? '' : 'none';\n  });\n}\n</script>\n</body>\n</html>\n",
    );
    h
}

/// Writes `basemap.svg`, one `overlay_<name>.svg` per overlay and
/// `gallery.html` into `out_dir`. Returns the written paths.
pub fn export_gallery(
    emb: &Embedding,
    sys: &SetSystem,
    grid: &HostGrid,
    style: &StyleSheet,
    overlays: &[String],
    overlay_style: OverlayStyle,
    out_dir: &Path,
) -> Result<Vec<PathBuf>, RenderError> {
    let io = |e: std::io::Error| RenderError::Io(e.to_string());
    std::fs::create_dir_all(out_dir).map_err(io)?;
    let mut files: Vec<(PathBuf, String)> = Vec::new();
    files.push((out_dir.join("basemap.svg"), render_map(emb, sys, grid, style, &[], overlay_style)?.to_svg_string()));
    for name in overlays {
        let doc = render_map(emb, sys, grid, style, std::slice::from_ref(name), overlay_style)?;
        files.push((out_dir.join(format!("overlay_{}.svg", file_stem(name))), doc.to_svg_string()));
    }
    let all = render_map(emb, sys, grid, style, overlays, overlay_style)?;
    files.push((out_dir.join("gallery.html"), html_page(&all, overlays)));
    for (path, body) in &files {
        std::fs::write(path, body).map_err(io)?;
    }
    Ok(files.into_iter().map(|(p, _)| p).collect())
}

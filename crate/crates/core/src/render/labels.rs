//! Cell labels with one global font size.

use std::fmt::Write as _;

use super::{escape, inset_polygon, num, points_attr, SvgDocument};
use crate::grid::{GridKind, HostGrid, Point2};
use crate::setsystem::SetSystem;
use crate::solver::Embedding;
use crate::StyleSheet;

/// Average glyph advance and line height relative to the font size.
const CHAR_WIDTH: f64 = 0.6;
const LINE_HEIGHT: f64 = 1.2;
const SIZE_STEP: f64 = 0.5;
const DELIMITERS: &[char] = &['-', '/', '_', '.', ',', ';', ':', '&'];

fn text_width(s: &str, size: f64) -> f64 {
    s.chars().count() as f64 * CHAR_WIDTH * size
}

/// Splits `label` into lines no wider than `width` at `size`, breaking after
/// whitespace or delimiters only when the whole label does not fit. `None`
/// if some unbreakable piece is too wide.
pub fn wrap_label(label: &str, size: f64, width: f64) -> Option<Vec<String>> {
    if text_width(label, size) <= width {
        return Some(vec![label.to_string()]);
    }
    let mut pieces = Vec::new();
    let mut cur = String::new();
    for ch in label.chars() {
        if ch.is_whitespace() {
            if !cur.is_empty() {
                pieces.push(std::mem::take(&mut cur));
            }
            continue;
        }
        cur.push(ch);
        if DELIMITERS.contains(&ch) {
            pieces.push(std::mem::take(&mut cur));
        }
    }
    if !cur.is_empty() {
        pieces.push(cur);
    }
    let mut lines: Vec<String> = Vec::new();
    let mut line = String::new();
    for p in pieces {
        if text_width(&p, size) > width {
            return None;
        }
        let joined = if line.is_empty() {
            p.clone()
        } else if line.ends_with(DELIMITERS) {
            format!("{line}{p}")
        } else {
            format!("{line} {p}")
        };
        if text_width(&joined, size) <= width {
            line = joined;
        } else {
            lines.push(std::mem::replace(&mut line, p));
        }
    }
    if !line.is_empty() {
        lines.push(line);
    }
    Some(lines)
}

struct LabelBox {
    width: f64,
    height: f64,
    /// Vertical shift of the label center, in layout units.
    shift: f64,
}

fn label_box(grid: &HostGrid, style: &StyleSheet, below_center: bool) -> LabelBox {
    let usable = 0.9 * style.scale;
    let width = (2.0 * grid.kind().apothem() - style.cell_spacing) * usable;
    let height = match grid.kind() {
        GridKind::Square => (1.0 - style.cell_spacing) * usable,
        GridKind::Hex => usable,
    };
    if below_center {
        LabelBox { width, height: height / 2.0, shift: height / style.scale / 4.0 }
    } else {
        LabelBox { width, height, shift: 0.0 }
    }
}

fn layout(label: &str, size: f64, b: &LabelBox) -> Option<Vec<String>> {
    wrap_label(label, size, b.width).filter(|lines| lines.len() as f64 * LINE_HEIGHT * size <= b.height)
}

/// Largest font size in `[min_size, max_size]`, stepping down by half a
/// pixel, at which every label fits its cell.
fn choose_size(labels: &[&str], style: &StyleSheet, b: &LabelBox) -> Option<f64> {
    let mut size = style.font.max_size;
    loop {
        if labels.iter().all(|l| layout(l, size, b).is_some()) {
            return Some(size);
        }
        if size <= style.font.min_size {
            return None;
        }
        size = (size - SIZE_STEP).max(style.font.min_size);
    }
}

/// Adds a label per element. Labels sit at the cell center, or below it when
/// `below_center` is set for Kelp overlays. Labels that overflow at the
/// minimum size are clipped to their cell and reported in `doc.warnings`.
pub fn place_labels(
    mut doc: SvgDocument,
    emb: &Embedding,
    sys: &SetSystem,
    grid: &HostGrid,
    style: &StyleSheet,
    below_center: bool,
) -> SvgDocument {
    let b = label_box(grid, style, below_center);
    let labels: Vec<&str> = sys.elements().iter().map(|e| e.label.as_str()).collect();
    let size = choose_size(&labels, style, &b).unwrap_or(style.font.min_size);
    for e in sys.elements() {
        let Some(cell) = emb.assignment.get(&e.id).copied() else { continue };
        let Some(center) = grid.center(cell) else { continue };
        let p = doc.frame.map(center + Point2::new(0.0, b.shift));
        let (lines, clip) = match layout(&e.label, size, &b) {
            Some(lines) => (lines, None),
            None => {
                doc.warnings.push(format!("label of `{}` does not fit its cell at {size}px", e.id));
                let id = format!("clip-{}", cell.0);
                doc.defs.push(format!(
                    "<clipPath id=\"{id}\"><polygon points=\"{}\"/></clipPath>",
                    points_attr(&doc.frame, &inset_polygon(grid, cell, style.cell_spacing))
                ));
                let lines = wrap_label(&e.label, size, b.width).unwrap_or_else(|| vec![e.label.clone()]);
                (lines, Some(id))
            }
        };
        let mut s = format!(
            "<text class=\"label\" data-element=\"{}\" x=\"{}\" y=\"{}\" font-size=\"{}\" font-family=\"sans-serif\" text-anchor=\"middle\" dominant-baseline=\"central\"",
            escape(&e.id),
            num(p.x),
            num(p.y),
            num(size)
        );
        if let Some(id) = clip {
            let _ = write!(s, " clip-path=\"url(#{id})\"");
        }
        s.push('>');
        if lines.len() == 1 {
            s.push_str(&escape(&lines[0]));
        } else {
            let first = -(lines.len() as f64 - 1.0) / 2.0 * LINE_HEIGHT * size;
            for (i, line) in lines.iter().enumerate() {
                let dy = if i == 0 { first } else { LINE_HEIGHT * size };
                let _ = write!(s, "<tspan x=\"{}\" dy=\"{}\">{}</tspan>", num(p.x), num(dy), escape(line));
            }
        }
        s.push_str("</text>");
        doc.labels.push(s);
    }
    doc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid, CellId};
    use crate::render::render_base_map;
    use crate::setsystem::{Element, NamedSet, SetKind};

    fn one(label: &str) -> (SetSystem, HostGrid, Embedding) {
        let sys = SetSystem::new(
            vec![Element { id: "a".into(), label: label.into() }],
            vec![NamedSet { name: "S".into(), members: vec!["a".into()], kind: SetKind::Base }],
        )
        .unwrap();
        let grid = build_grid(GridKind::Hex, 1, 1).unwrap();
        let emb = Embedding { assignment: [("a".to_string(), CellId(0))].into(), flows: Default::default() };
        (sys, grid, emb)
    }

    fn render(label: &str) -> SvgDocument {
        let (sys, grid, emb) = one(label);
        let style = StyleSheet::default();
        place_labels(render_base_map(&emb, &sys, &grid, &style).unwrap(), &emb, &sys, &grid, &style, false)
    }

    #[test]
    fn short_label_uses_max_size() {
        let doc = render("A");
        assert!(doc.labels[0].contains("font-size=\"12.000\""));
        assert!(doc.warnings.is_empty());
    }

    #[test]
    fn unbreakable_label_falls_to_min_size() {
        let doc = render("Supercalifragilisticexpialidocious");
        assert!(doc.labels[0].contains("font-size=\"5.000\""));
        assert_eq!(doc.warnings.len(), 1);
        assert!(doc.labels[0].contains("clip-path"));
    }

    #[test]
    fn breaks_at_space_when_needed() {
        assert_eq!(wrap_label("Data Science", 12.0, 60.0), Some(vec!["Data".into(), "Science".into()]));
        assert_eq!(wrap_label("Data Science", 12.0, 200.0), Some(vec!["Data Science".into()]));
        assert_eq!(wrap_label("Bio-Informatics", 10.0, 70.0), Some(vec!["Bio-".into(), "Informatics".into()]));
        assert_eq!(wrap_label("Unbreakable", 12.0, 10.0), None);
    }
}

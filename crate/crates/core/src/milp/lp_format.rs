//! CPLEX LP text output.

use std::fmt::Write;

use super::{Comparator, MilpModel, Sense, VarId, VarKind};

const MAX_LINE: usize = 200;

fn write_terms(out: &mut String, model: &MilpModel, head: &str, terms: &[(VarId, f64)]) {
    let mut line = String::from(head);
    if terms.is_empty() {
        line.push_str(" 0 ");
        line.push_str(&model.variables()[0].name);
    }
    for (i, (v, c)) in terms.iter().enumerate() {
        let name = &model.variable(*v).name;
        let piece = match (i, *c < 0.0) {
            (0, false) => format!(" {} {}", fmt_num(*c), name),
            (0, true) => format!(" - {} {}", fmt_num(-c), name),
            (_, false) => format!(" + {} {}", fmt_num(*c), name),
            (_, true) => format!(" - {} {}", fmt_num(-c), name),
        };
        if line.len() + piece.len() > MAX_LINE {
            out.push_str(&line);
            out.push('\n');
            line = String::from("   ");
        }
        line.push_str(&piece);
    }
    out.push_str(&line);
}

fn fmt_num(x: f64) -> String {
    if x == x.trunc() && x.abs() < 1e15 {
        format!("{}", x as i64)
    } else {
        format!("{x:?}")
    }
}

/// Renders the model in CPLEX LP format with sections `Minimize`/`Maximize`,
/// `Subject To`, `Bounds`, `Generals`, `Binaries`.
pub fn write_lp(model: &MilpModel) -> String {
    let mut out = String::new();
    out.push_str("\\ mosaic set embedding model\n");
    out.push_str(match model.objective().sense {
        Sense::Minimize => "Minimize\n",
        Sense::Maximize => "Maximize\n",
    });
    write_terms(&mut out, model, " obj:", &model.objective().terms);
    out.push_str("\nSubject To\n");
    for c in model.constraints() {
        write_terms(&mut out, model, &format!(" {}:", c.name), &c.terms);
        let op = match c.cmp {
            Comparator::Le => "<=",
            Comparator::Eq => "=",
            Comparator::Ge => ">=",
        };
        let _ = writeln!(out, " {op} {}", fmt_num(c.rhs));
    }
    out.push_str("Bounds\n");
    for v in model.variables() {
        if v.kind == VarKind::Binary && v.lower == 0.0 && v.upper == 1.0 {
            continue;
        }
        if v.lower == v.upper {
            let _ = writeln!(out, " {} = {}", v.name, fmt_num(v.lower));
        } else if v.upper.is_infinite() {
            let _ = writeln!(out, " {} >= {}", v.name, fmt_num(v.lower));
        } else {
            let _ = writeln!(out, " {} <= {} <= {}", fmt_num(v.lower), v.name, fmt_num(v.upper));
        }
    }
    for (section, kind) in [("Generals", VarKind::Integer), ("Binaries", VarKind::Binary)] {
        let names: Vec<&str> =
            model.variables().iter().filter(|v| v.kind == kind).map(|v| v.name.as_str()).collect();
        if names.is_empty() {
            continue;
        }
        let _ = writeln!(out, "{section}");
        for chunk in names.chunks(12) {
            let _ = writeln!(out, " {}", chunk.join(" "));
        }
    }
    out.push_str("End\n");
    out
}

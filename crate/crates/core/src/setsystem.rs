//! Set systems: elements, the base partition and overlapping overlay sets.
//!
//! A [`SetSystem`] is always valid once constructed: base sets partition the
//! elements, every membership resolves, and no set is empty. Contraction of
//! indistinguishable elements lives here as well, since it only depends on
//! membership signatures.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::CellId;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SetSystemError {
    #[error("malformed input: {0}")]
    MalformedInput(String),
    #[error("set `{set}` references unknown element `{element}`")]
    UnknownElement { set: String, element: String },
    #[error("element `{element}` belongs to {count} base sets, expected exactly one")]
    PartitionViolation { element: String, count: usize },
    #[error("duplicate id `{0}`")]
    DuplicateId(String),
    #[error("set `{0}` is empty")]
    EmptySet(String),
    #[error("representative `{rep}` expects {expected} cells, got {got}")]
    CardinalityMismatch { rep: String, expected: usize, got: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Element {
    pub id: String,
    pub label: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SetKind {
    Base,
    Overlay,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NamedSet {
    pub name: String,
    pub members: Vec<String>,
    pub kind: SetKind,
}

/// A validated hypergraph: elements plus base and overlay sets.
///
/// Set order is significant. Base sets come first in order of first
/// appearance, overlays follow in declaration order; renderers use this as
/// the default overlay order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSetSystem", into = "RawSetSystem")]
pub struct SetSystem {
    elements: Vec<Element>,
    sets: Vec<NamedSet>,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

#[derive(Serialize, Deserialize)]
struct RawSetSystem {
    elements: Vec<Element>,
    sets: Vec<NamedSet>,
}

impl TryFrom<RawSetSystem> for SetSystem {
    type Error = SetSystemError;
    fn try_from(raw: RawSetSystem) -> Result<Self, Self::Error> {
        SetSystem::new(raw.elements, raw.sets)
    }
}

impl From<SetSystem> for RawSetSystem {
    fn from(sys: SetSystem) -> Self {
        RawSetSystem { elements: sys.elements, sets: sys.sets }
    }
}

impl SetSystem {
    pub fn new(elements: Vec<Element>, sets: Vec<NamedSet>) -> Result<Self, SetSystemError> {
        let mut index = HashMap::with_capacity(elements.len());
        for (i, e) in elements.iter().enumerate() {
            if e.id.is_empty() {
                return Err(SetSystemError::MalformedInput("empty element id".into()));
            }
            if index.insert(e.id.clone(), i).is_some() {
                return Err(SetSystemError::DuplicateId(e.id.clone()));
            }
        }

        let mut names = HashSet::new();
        let mut base_count = vec![0usize; elements.len()];
        for set in &sets {
            if !names.insert(set.name.as_str()) {
                return Err(SetSystemError::DuplicateId(set.name.clone()));
            }
            if set.members.is_empty() {
                return Err(SetSystemError::EmptySet(set.name.clone()));
            }
            let mut seen = HashSet::new();
            for m in &set.members {
                let Some(&i) = index.get(m) else {
                    return Err(SetSystemError::UnknownElement {
                        set: set.name.clone(),
                        element: m.clone(),
                    });
                };
                if !seen.insert(m.as_str()) {
                    return Err(SetSystemError::DuplicateId(m.clone()));
                }
                if set.kind == SetKind::Base {
                    base_count[i] += 1;
                }
            }
        }
        if let Some((i, &count)) = base_count.iter().enumerate().find(|(_, &c)| c != 1) {
            return Err(SetSystemError::PartitionViolation { element: elements[i].id.clone(), count });
        }

        // Base sets first, overlays after, each group keeping its input order.
        let mut sets = sets;
        sets.sort_by_key(|s| s.kind);
        Ok(SetSystem { elements, sets, index })
    }

    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    pub fn sets(&self) -> &[NamedSet] {
        &self.sets
    }

    pub fn element(&self, id: &str) -> Option<&Element> {
        self.index.get(id).map(|&i| &self.elements[i])
    }

    pub fn element_index(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn set(&self, name: &str) -> Option<&NamedSet> {
        self.sets.iter().find(|s| s.name == name)
    }

    pub fn set_index(&self, name: &str) -> Option<usize> {
        self.sets.iter().position(|s| s.name == name)
    }

    pub fn base_sets(&self) -> impl Iterator<Item = &NamedSet> {
        self.sets.iter().filter(|s| s.kind == SetKind::Base)
    }

    pub fn overlay_sets(&self) -> impl Iterator<Item = &NamedSet> {
        self.sets.iter().filter(|s| s.kind == SetKind::Overlay)
    }

    /// Name of the base set containing `id`.
    pub fn base_of(&self, id: &str) -> Option<&str> {
        self.base_sets().find(|s| s.members.iter().any(|m| m == id)).map(|s| s.name.as_str())
    }

    /// Indices (into [`SetSystem::sets`]) of every set containing each element.
    pub fn signatures(&self) -> Vec<Vec<usize>> {
        let mut sig = vec![Vec::new(); self.elements.len()];
        for (si, set) in self.sets.iter().enumerate() {
            for m in &set.members {
                sig[self.index[m]].push(si);
            }
        }
        sig
    }

    /// Returns a system with the same elements keeping only the named overlays.
    pub fn with_overlays(&self, keep: &[&str]) -> Result<SetSystem, SetSystemError> {
        let sets = self
            .sets
            .iter()
            .filter(|s| s.kind == SetKind::Base || keep.contains(&s.name.as_str()))
            .cloned()
            .collect();
        SetSystem::new(self.elements.clone(), sets)
    }
}

#[derive(Debug, Deserialize)]
struct ElementRow {
    id: String,
    label: String,
    base_set: String,
}

#[derive(Debug, Deserialize)]
struct OverlayRow {
    set: String,
    element_id: String,
}

fn csv_reader(doc: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::Fields).from_reader(doc.as_bytes())
}

fn malformed(e: csv::Error) -> SetSystemError {
    SetSystemError::MalformedInput(e.to_string())
}

fn check_headers(reader: &mut csv::Reader<&[u8]>, expected: &[&str]) -> Result<(), SetSystemError> {
    let headers = reader.headers().map_err(malformed)?;
    let got: Vec<&str> = headers.iter().collect();
    if got != expected {
        return Err(SetSystemError::MalformedInput(format!(
            "expected header `{}`, found `{}`",
            expected.join(","),
            got.join(",")
        )));
    }
    Ok(())
}

/// Parses the element table (`id,label,base_set`) and overlay table
/// (`set,element_id`).
pub fn parse_set_system(elements_doc: &str, overlays_doc: &str) -> Result<SetSystem, SetSystemError> {
    let mut reader = csv_reader(elements_doc);
    check_headers(&mut reader, &["id", "label", "base_set"])?;
    let mut elements = Vec::new();
    let mut bases: Vec<NamedSet> = Vec::new();
    for row in reader.deserialize::<ElementRow>() {
        let row = row.map_err(malformed)?;
        if row.base_set.is_empty() {
            return Err(SetSystemError::PartitionViolation { element: row.id, count: 0 });
        }
        match bases.iter_mut().find(|b| b.name == row.base_set) {
            Some(b) => b.members.push(row.id.clone()),
            None => bases.push(NamedSet {
                name: row.base_set.clone(),
                members: vec![row.id.clone()],
                kind: SetKind::Base,
            }),
        }
        elements.push(Element { id: row.id, label: row.label });
    }

    let mut overlays: Vec<NamedSet> = Vec::new();
    if !overlays_doc.trim().is_empty() {
        let mut reader = csv_reader(overlays_doc);
        check_headers(&mut reader, &["set", "element_id"])?;
        for row in reader.deserialize::<OverlayRow>() {
            let row = row.map_err(malformed)?;
            match overlays.iter_mut().find(|o| o.name == row.set) {
                Some(o) => o.members.push(row.element_id),
                None => overlays.push(NamedSet {
                    name: row.set,
                    members: vec![row.element_id],
                    kind: SetKind::Overlay,
                }),
            }
        }
    }

    bases.extend(overlays);
    SetSystem::new(elements, bases)
}

#[derive(Debug, Deserialize, Serialize)]
struct JsonElement {
    id: String,
    #[serde(default)]
    label: Option<String>,
    base: String,
}

#[derive(Debug, Deserialize, Serialize)]
struct JsonDocument {
    elements: Vec<JsonElement>,
    #[serde(default)]
    overlays: indexmap_like::OrderedMap,
}

/// Overlay maps must keep declaration order, which `serde_json` objects do
/// not guarantee through `HashMap`.
mod indexmap_like {
    use serde::de::{MapAccess, Visitor};
    use serde::ser::SerializeMap;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Debug, Default)]
    pub struct OrderedMap(pub Vec<(String, Vec<String>)>);

    impl<'de> Deserialize<'de> for OrderedMap {
        fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
            struct V;
            impl<'de> Visitor<'de> for V {
                type Value = OrderedMap;
                fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
                    f.write_str("a map from overlay name to element ids")
                }
                fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<OrderedMap, A::Error> {
                    let mut out = Vec::new();
                    while let Some((k, v)) = map.next_entry::<String, Vec<String>>()? {
                        out.push((k, v));
                    }
                    Ok(OrderedMap(out))
                }
            }
            d.deserialize_map(V)
        }
    }

    impl Serialize for OrderedMap {
        fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
            let mut m = s.serialize_map(Some(self.0.len()))?;
            for (k, v) in &self.0 {
                m.serialize_entry(k, v)?;
            }
            m.end()
        }
    }
}

/// Parses the single-document JSON form: `{"elements": [{id, label, base}], "overlays": {name: [ids]}}`.
pub fn parse_set_system_json(doc: &str) -> Result<SetSystem, SetSystemError> {
    let parsed: JsonDocument =
        serde_json::from_str(doc).map_err(|e| SetSystemError::MalformedInput(e.to_string()))?;
    let mut elements = Vec::new();
    let mut sets: Vec<NamedSet> = Vec::new();
    for e in parsed.elements {
        match sets.iter_mut().find(|b| b.name == e.base) {
            Some(b) => b.members.push(e.id.clone()),
            None => sets.push(NamedSet { name: e.base.clone(), members: vec![e.id.clone()], kind: SetKind::Base }),
        }
        let label = e.label.unwrap_or_else(|| e.id.clone());
        elements.push(Element { id: e.id, label });
    }
    for (name, members) in parsed.overlays.0 {
        sets.push(NamedSet { name, members, kind: SetKind::Overlay });
    }
    SetSystem::new(elements, sets)
}

/// Writes the two CSV documents accepted by [`parse_set_system`].
pub fn write_set_system_csv(sys: &SetSystem) -> (String, String) {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["id", "label", "base_set"]).unwrap();
    for e in sys.elements() {
        let base = sys.base_of(&e.id).unwrap_or_default();
        w.write_record([e.id.as_str(), e.label.as_str(), base]).unwrap();
    }
    let elements = String::from_utf8(w.into_inner().unwrap()).unwrap();

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["set", "element_id"]).unwrap();
    for o in sys.overlay_sets() {
        for m in &o.members {
            w.write_record([o.name.as_str(), m.as_str()]).unwrap();
        }
    }
    let overlays = String::from_utf8(w.into_inner().unwrap()).unwrap();
    (elements, overlays)
}

/// A set system whose indistinguishable elements have been merged.
///
/// `system` ranges over representatives only. `alpha[rep]` is the number of
/// original elements (and therefore grid cells) a representative stands for.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContractedSystem {
    pub system: SetSystem,
    pub alpha: BTreeMap<String, usize>,
    pub groups: BTreeMap<String, Vec<String>>,
    pub center: BTreeMap<String, String>,
}

impl ContractedSystem {
    /// Total number of original elements.
    pub fn total_alpha(&self) -> usize {
        self.alpha.values().sum()
    }

    pub fn alpha_of(&self, rep: &str) -> usize {
        self.alpha.get(rep).copied().unwrap_or(0)
    }

    /// Σ α over the members of a set; the number of cells its region covers.
    pub fn set_weight(&self, set: &NamedSet) -> usize {
        set.members.iter().map(|m| self.alpha_of(m)).sum()
    }

    /// Wraps an uncontracted system so each element is its own representative.
    pub fn identity(sys: &SetSystem) -> ContractedSystem {
        let alpha = sys.elements().iter().map(|e| (e.id.clone(), 1)).collect();
        let groups = sys.elements().iter().map(|e| (e.id.clone(), vec![e.id.clone()])).collect();
        let center = sys
            .sets()
            .iter()
            .map(|s| (s.name.clone(), s.members.iter().min().cloned().unwrap_or_default()))
            .collect();
        ContractedSystem { system: sys.clone(), alpha, groups, center }
    }
}

/// Merges elements that belong to exactly the same sets.
///
/// The representative of each class is its lexicographically smallest id.
/// Each set's center is the smallest member representative with α = 1, or
/// the smallest member representative when every member has α > 1.
pub fn contract_indistinguishable(sys: &SetSystem) -> ContractedSystem {
    let signatures = sys.signatures();
    let mut classes: BTreeMap<&[usize], Vec<String>> = BTreeMap::new();
    for (e, sig) in sys.elements().iter().zip(&signatures) {
        classes.entry(sig.as_slice()).or_default().push(e.id.clone());
    }

    let mut rep_of: HashMap<&str, String> = HashMap::new();
    let mut alpha = BTreeMap::new();
    let mut groups = BTreeMap::new();
    for mut ids in classes.into_values() {
        ids.sort();
        let rep = ids[0].clone();
        alpha.insert(rep.clone(), ids.len());
        groups.insert(rep, ids);
    }
    for (rep, ids) in &groups {
        for id in ids {
            rep_of.insert(sys.element(id).map(|e| e.id.as_str()).unwrap(), rep.clone());
        }
    }

    // Representatives keep the original element order of their first member.
    let elements: Vec<Element> = sys
        .elements()
        .iter()
        .filter(|e| groups.contains_key(&e.id))
        .cloned()
        .collect();
    let sets: Vec<NamedSet> = sys
        .sets()
        .iter()
        .map(|s| {
            let mut seen = BTreeSet::new();
            let members = s
                .members
                .iter()
                .map(|m| rep_of[m.as_str()].clone())
                .filter(|r| seen.insert(r.clone()))
                .collect();
            NamedSet { name: s.name.clone(), members, kind: s.kind }
        })
        .collect();

    let center = sets
        .iter()
        .map(|s| {
            let single = s.members.iter().filter(|m| alpha[*m] == 1).min();
            let c = single.or_else(|| s.members.iter().min()).cloned().unwrap_or_default();
            (s.name.clone(), c)
        })
        .collect();

    let system = SetSystem::new(elements, sets).expect("contraction preserves validity");
    ContractedSystem { system, alpha, groups, center }
}

/// Distributes each representative's cells to the original elements of its
/// group: ids and cells are both sorted and paired in order.
pub fn expand_embedding(
    cs: &ContractedSystem,
    contracted: &BTreeMap<String, Vec<CellId>>,
) -> Result<BTreeMap<String, CellId>, SetSystemError> {
    let mut out = BTreeMap::new();
    for (rep, ids) in &cs.groups {
        let mut cells = contracted.get(rep).cloned().unwrap_or_default();
        if cells.len() != ids.len() {
            return Err(SetSystemError::CardinalityMismatch {
                rep: rep.clone(),
                expected: ids.len(),
                got: cells.len(),
            });
        }
        cells.sort();
        let mut ids = ids.clone();
        ids.sort();
        for (id, cell) in ids.into_iter().zip(cells) {
            out.insert(id, cell);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sys(elems: &[&str], sets: &[(&str, SetKind, &[&str])]) -> SetSystem {
        SetSystem::new(
            elems.iter().map(|id| Element { id: id.to_string(), label: id.to_string() }).collect(),
            sets.iter()
                .map(|(n, k, m)| NamedSet {
                    name: n.to_string(),
                    members: m.iter().map(|s| s.to_string()).collect(),
                    kind: *k,
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn parses_csv_pair() {
        let elements = "id,label,base_set\na,Alpha,X\nb,Beta,X\nc,\"Gamma, Delta\",Y\n";
        let overlays = "set,element_id\nP,a\nP,c\n";
        let s = parse_set_system(elements, overlays).unwrap();
        assert_eq!(s.elements().len(), 3);
        assert_eq!(s.set("X").unwrap().members, vec!["a", "b"]);
        assert_eq!(s.set("Y").unwrap().members, vec!["c"]);
        assert_eq!(s.set("P").unwrap().members, vec!["a", "c"]);
        assert_eq!(s.set("P").unwrap().kind, SetKind::Overlay);
        assert_eq!(s.element("c").unwrap().label, "Gamma, Delta");
    }

    #[test]
    fn rejects_unknown_and_duplicate_ids() {
        let elements = "id,label,base_set\na,A,X\n";
        let err = parse_set_system(elements, "set,element_id\nP,z\n").unwrap_err();
        assert!(matches!(err, SetSystemError::UnknownElement { ref element, .. } if element == "z"));

        let err = parse_set_system("id,label,base_set\na,A,X\na,A2,Y\n", "").unwrap_err();
        assert_eq!(err, SetSystemError::DuplicateId("a".into()));

        let err = parse_set_system(elements, "set,element_id\nP,a\nP,a\n").unwrap_err();
        assert_eq!(err, SetSystemError::DuplicateId("a".into()));
    }

    #[test]
    fn rejects_bad_headers_and_missing_base() {
        assert!(matches!(
            parse_set_system("id,name,base\na,A,X\n", ""),
            Err(SetSystemError::MalformedInput(_))
        ));
        assert!(matches!(
            parse_set_system("id,label,base_set\na,A,\n", ""),
            Err(SetSystemError::PartitionViolation { count: 0, .. })
        ));
    }

    #[test]
    fn partition_violation_when_two_bases() {
        let err = SetSystem::new(
            vec![Element { id: "a".into(), label: "a".into() }],
            vec![
                NamedSet { name: "X".into(), members: vec!["a".into()], kind: SetKind::Base },
                NamedSet { name: "Y".into(), members: vec!["a".into()], kind: SetKind::Base },
            ],
        )
        .unwrap_err();
        assert_eq!(err, SetSystemError::PartitionViolation { element: "a".into(), count: 2 });
    }

    #[test]
    fn json_form_matches_csv_form() {
        let json = r#"{"elements":[{"id":"a","label":"A","base":"X"},{"id":"b","label":"B","base":"X"},
            {"id":"c","label":"C","base":"Y"}],"overlays":{"Q":["c"],"P":["a","c"]}}"#;
        let s = parse_set_system_json(json).unwrap();
        let names: Vec<&str> = s.sets().iter().map(|s| s.name.as_str()).collect();
        assert_eq!(names, ["X", "Y", "Q", "P"]);
        let (e, o) = write_set_system_csv(&s);
        assert_eq!(parse_set_system(&e, &o).unwrap(), s);
    }

    #[test]
    fn contraction_groups_by_signature() {
        // S1 = {a,b,c}, S2 = {c,d}
        // d needs a base set of its own; it shares its signature with nobody.
        let s = sys(
            &["a", "b", "c", "d"],
            &[
                ("S1", SetKind::Base, &["a", "b", "c"]),
                ("D", SetKind::Base, &["d"]),
                ("S2", SetKind::Overlay, &["c", "d"]),
            ],
        );
        let cs = contract_indistinguishable(&s);
        assert_eq!(cs.alpha.get("a"), Some(&2));
        assert_eq!(cs.alpha.get("c"), Some(&1));
        assert_eq!(cs.alpha.get("d"), Some(&1));
        assert_eq!(cs.groups["a"], vec!["a", "b"]);
        assert_eq!(cs.system.set("S1").unwrap().members, vec!["a", "c"]);
        assert_eq!(cs.system.set("S2").unwrap().members, vec!["c", "d"]);
        assert_eq!(cs.center["S1"], "c");
        assert_eq!(cs.center["S2"], "c");
        assert_eq!(cs.total_alpha(), 4);
    }

    #[test]
    fn contraction_identity_and_full_merge() {
        let s = sys(&["a", "b"], &[("X", SetKind::Base, &["a"]), ("Y", SetKind::Base, &["b"])]);
        let cs = contract_indistinguishable(&s);
        assert!(cs.alpha.values().all(|&a| a == 1));
        assert_eq!(cs.system.elements().len(), 2);

        let s = sys(&["a", "b"], &[("X", SetKind::Base, &["a", "b"])]);
        let cs = contract_indistinguishable(&s);
        assert_eq!(cs.system.elements().len(), 1);
        assert_eq!(cs.alpha["a"], 2);
        assert_eq!(cs.system.set("X").unwrap().members, vec!["a"]);
        assert_eq!(cs.center["X"], "a");
    }

    #[test]
    fn expansion_pairs_sorted_ids_with_sorted_cells() {
        let s = sys(&["b", "a", "c"], &[("X", SetKind::Base, &["a", "b"]), ("Y", SetKind::Base, &["c"])]);
        let cs = contract_indistinguishable(&s);
        let mut f = BTreeMap::new();
        f.insert("a".to_string(), vec![CellId(7), CellId(2)]);
        f.insert("c".to_string(), vec![CellId(3)]);
        let out = expand_embedding(&cs, &f).unwrap();
        assert_eq!(out["a"], CellId(2));
        assert_eq!(out["b"], CellId(7));
        assert_eq!(out["c"], CellId(3));

        f.insert("a".to_string(), vec![CellId(1)]);
        assert!(matches!(
            expand_embedding(&cs, &f),
            Err(SetSystemError::CardinalityMismatch { expected: 2, got: 1, .. })
        ));
    }

    #[test]
    fn empty_overlay_rejected() {
        let err = SetSystem::new(
            vec![Element { id: "a".into(), label: "a".into() }],
            vec![
                NamedSet { name: "X".into(), members: vec!["a".into()], kind: SetKind::Base },
                NamedSet { name: "P".into(), members: vec![], kind: SetKind::Overlay },
            ],
        )
        .unwrap_err();
        assert_eq!(err, SetSystemError::EmptySet("P".into()));
    }
}

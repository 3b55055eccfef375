use std::collections::BTreeSet;

use mosaic_core::*;
use proptest::prelude::*;

fn kind() -> impl Strategy<Value = GridKind> {
    prop_oneof![Just(GridKind::Square), Just(GridKind::Hex)]
}

/// A grid and a non-empty subset of its cells.
fn region() -> impl Strategy<Value = (HostGrid, BTreeSet<CellId>)> {
    (kind(), 1..6u32, 1..6u32)
        .prop_flat_map(|(k, r, c)| {
            let n = (r * c) as usize;
            (Just((k, r, c)), proptest::collection::btree_set(0..n as u32, 1..=n))
        })
        .prop_map(|((k, r, c), cells)| (build_grid(k, r, c).unwrap(), cells.into_iter().map(CellId).collect()))
}

/// Perimeter by counting cell sides that do not face another region cell.
fn walked_perimeter(grid: &HostGrid, cells: &BTreeSet<CellId>) -> f64 {
    let sides = grid.kind().neighbor_offsets().len();
    cells
        .iter()
        .map(|&c| sides - grid.neighbors(c).filter(|n| cells.contains(n)).count())
        .sum::<usize>() as f64
}

proptest! {
    #[test]
    fn perimeter_matches_side_count((grid, cells) in region()) {
        let g = region_geometry(&grid, &cells).unwrap();
        prop_assert!((g.perimeter - walked_perimeter(&grid, &cells)).abs() < 1e-9);
        prop_assert!((g.area - cells.len() as f64 * grid.kind().cell_area()).abs() < 1e-9);
    }

    #[test]
    fn polsby_popper_is_a_fraction((grid, cells) in region()) {
        let pp = polsby_popper(&region_geometry(&grid, &cells).unwrap());
        prop_assert!(pp > 0.0 && pp <= 1.0);
    }

    #[test]
    fn adjacency_is_symmetric_and_bounded(k in kind(), r in 1..8u32, c in 1..8u32) {
        let grid = build_grid(k, r, c).unwrap();
        prop_assert_eq!(grid.len(), (r * c) as usize);
        for id in grid.cell_ids() {
            let n: Vec<CellId> = grid.neighbors(id).collect();
            prop_assert!(n.len() <= k.neighbor_offsets().len());
            prop_assert!(!n.contains(&id));
            for m in n {
                prop_assert!(grid.are_adjacent(m, id));
            }
        }
        prop_assert!(is_contiguous(&grid, &grid.cell_ids().collect()).unwrap());
    }

    #[test]
    fn contraction_partitions_by_signature(
        owners in proptest::collection::vec(0..3usize, 1..12),
        overlay in proptest::collection::vec(any::<bool>(), 12),
    ) {
        let ids: Vec<String> = (0..owners.len()).map(|i| format!("e{i:02}")).collect();
        let mut sets: Vec<NamedSet> = (0..3)
            .map(|b| NamedSet {
                name: format!("B{b}"),
                members: ids.iter().zip(&owners).filter(|(_, &o)| o == b).map(|(id, _)| id.clone()).collect(),
                kind: SetKind::Base,
            })
            .filter(|s| !s.members.is_empty())
            .collect();
        let p: Vec<String> = ids.iter().zip(&overlay).filter(|(_, &x)| x).map(|(id, _)| id.clone()).collect();
        if !p.is_empty() {
            sets.push(NamedSet { name: "P".into(), members: p, kind: SetKind::Overlay });
        }
        let elements = ids.iter().map(|id| Element { id: id.clone(), label: id.clone() }).collect();
        let sys = SetSystem::new(elements, sets).unwrap();
        let cs = contract_indistinguishable(&sys);

        prop_assert_eq!(cs.total_alpha(), ids.len());
        let signature = |id: &str| -> Vec<&str> {
            sys.sets().iter().filter(|s| s.members.iter().any(|m| m == id)).map(|s| s.name.as_str()).collect()
        };
        let mut seen = BTreeSet::new();
        for (rep, group) in &cs.groups {
            prop_assert_eq!(cs.alpha_of(rep), group.len());
            for id in group {
                prop_assert!(seen.insert(id.clone()));
                prop_assert_eq!(signature(id), signature(rep));
            }
        }
        let reps: Vec<&String> = cs.groups.keys().collect();
        for (i, a) in reps.iter().enumerate() {
            for b in &reps[i + 1..] {
                prop_assert_ne!(signature(a), signature(b));
            }
        }
        for s in cs.system.sets() {
            prop_assert_eq!(cs.set_weight(s), sys.set(&s.name).unwrap().members.len());
        }
    }
}

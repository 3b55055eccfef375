//! Seeded synthetic set systems with the dimensions of the reference data
//! sets.
//!
//! Base sets are arranged in a ring. Each overlay picks a home base set,
//! takes a core of two to four of its elements and adds one to three members
//! from each of the next one or two base sets on the ring, imitating
//! projects that span neighboring departments.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::setsystem::{Element, NamedSet, SetKind, SetSystem};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Profile {
    pub elements: usize,
    pub base_sets: usize,
    pub overlays: usize,
}

impl Profile {
    pub const BONN: Profile = Profile { elements: 51, base_sets: 6, overlays: 3 };
    pub const VIENNA: Profile = Profile { elements: 71, base_sets: 4, overlays: 3 };
    pub const PARLIAMENT: Profile = Profile { elements: 178, base_sets: 5, overlays: 3 };

    /// `bonn`, `vienna` or `parliament`.
    pub fn named(name: &str) -> Option<Profile> {
        match name.to_ascii_lowercase().as_str() {
            "bonn" => Some(Profile::BONN),
            "vienna" => Some(Profile::VIENNA),
            "parliament" => Some(Profile::PARLIAMENT),
            _ => None,
        }
    }

    pub fn with_overlays(self, overlays: usize) -> Profile {
        Profile { overlays, ..self }
    }
}

/// Generates a set system for `profile`. Requires at least one element per
/// base set.
pub fn generate(profile: Profile, seed: u64) -> SetSystem {
    assert!(profile.base_sets >= 1 && profile.elements >= profile.base_sets, "profile needs elements ≥ base sets ≥ 1");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let width = profile.elements.to_string().len();
    let elements: Vec<Element> = (1..=profile.elements)
        .map(|i| Element { id: format!("e{i:0width$}"), label: format!("Unit {i}") })
        .collect();

    let ids: Vec<String> = elements.iter().map(|e| e.id.clone()).collect();
    // One element per base, the rest spread with random weights so sizes vary.
    let weights: Vec<f64> = (0..profile.base_sets).map(|_| rng.random_range(0.5..1.5)).collect();
    let total: f64 = weights.iter().sum();
    let spare = profile.elements - profile.base_sets;
    let mut sizes: Vec<usize> = weights.iter().map(|w| 1 + (w / total * spare as f64).floor() as usize).collect();
    let mut short = profile.elements - sizes.iter().sum::<usize>();
    while short > 0 {
        let k = rng.random_range(0..profile.base_sets);
        sizes[k] += 1;
        short -= 1;
    }
    let mut base_members: Vec<Vec<String>> = Vec::new();
    let mut rest = ids.as_slice();
    for s in &sizes {
        let (head, tail) = rest.split_at(*s);
        base_members.push(head.to_vec());
        rest = tail;
    }

    let mut sets: Vec<NamedSet> = base_members
        .iter()
        .enumerate()
        .map(|(i, m)| NamedSet { name: format!("B{}", i + 1), members: m.clone(), kind: SetKind::Base })
        .collect();

    for o in 0..profile.overlays {
        let home = rng.random_range(0..profile.base_sets);
        let span = rng.random_range(2..=3).min(profile.base_sets);
        let mut members = Vec::new();
        for step in 0..span {
            let pool = &base_members[(home + step) % profile.base_sets];
            let want = if step == 0 { rng.random_range(2..=4) } else { rng.random_range(1..=3) };
            members.extend(pool.choose_multiple(&mut rng, want.min(pool.len())).cloned());
        }
        members.sort();
        members.dedup();
        sets.push(NamedSet { name: format!("P{}", o + 1), members, kind: SetKind::Overlay });
    }
    SetSystem::new(elements, sets).expect("generated systems are valid")
}

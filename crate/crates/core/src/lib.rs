//! Set systems embedded into grid maps.
//!
//! Elements of a set system are assigned injectively to cells of a square or
//! hexagonal grid such that every set occupies a contiguous region. Base sets
//! partition the elements and form the background map; overlay sets may
//! overlap them arbitrarily. The embedding is computed by integer linear
//! programming with a flow-based contiguity formulation and then rendered
//! as SVG.

pub mod backend;
pub mod grid;
pub mod metrics;
pub mod milp;
pub mod render;
pub mod setsystem;
pub mod solver;
pub mod synth;

pub use grid::{build_grid, grid_centroid, grid_size_for, CellId, GridKind, HostGrid, Point2};
pub use setsystem::{
    contract_indistinguishable, expand_embedding, parse_set_system, parse_set_system_json, ContractedSystem,
    Element, NamedSet, SetKind, SetSystem,
};
pub use backend::{backend_by_name, backend_from_env, SolverBackend, SolverConfig};
pub use metrics::{is_contiguous, metrics_report, polsby_popper, pp_scores, region_geometry, PpScores, RegionGeometry};
pub use render::{StyleSheet, SvgDocument};
pub use solver::{brute_force_embed, run_msea, run_mse, run_msp, run_relaxed, Embedding, SolveReport, Variant};

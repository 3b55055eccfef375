//! Python bindings: set systems, grids, the embedding pipelines, metrics and
//! SVG rendering.

use std::collections::{BTreeMap, BTreeSet};
use std::time::Duration;

use mosaic_core::backend::{backend_by_name, backend_from_env, SolverConfig};
use mosaic_core::metrics::{metrics_report, polsby_popper, region_geometry};
use mosaic_core::render::{render_map, OverlayStyle};
use mosaic_core::setsystem::write_set_system_csv;
use mosaic_core::solver::{run_variant, EmbeddingDocument, PipelineOptions, SolveError, SolveReport, Variant};
use mosaic_core::synth::{generate, Profile};
use mosaic_core::{
    build_grid, contract_indistinguishable, grid_size_for, parse_set_system, parse_set_system_json, CellId,
    GridKind, HostGrid, SetKind, StyleSheet,
};
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

create_exception!(mosaicsets, InfeasibleError, PyException, "No embedding satisfies the contiguity constraints.");

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn solve_err(e: SolveError) -> PyErr {
    match e {
        SolveError::Infeasible => InfeasibleError::new_err(e.to_string()),
        SolveError::Model(_) | SolveError::TooLarge { .. } => value_err(e),
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

/// Disjoint base sets plus overlapping overlay sets.
#[pyclass(name = "SetSystem", module = "mosaicsets", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PySetSystem {
    inner: mosaic_core::SetSystem,
}

#[pymethods]
impl PySetSystem {
    /// Parses the elements CSV (`id,label,base_set`) and overlays CSV (`set,element_id`).
    #[staticmethod]
    #[pyo3(signature = (elements_csv, overlays_csv = ""))]
    fn from_csv(elements_csv: &str, overlays_csv: &str) -> PyResult<Self> {
        parse_set_system(elements_csv, overlays_csv).map(|inner| PySetSystem { inner }).map_err(value_err)
    }

    #[staticmethod]
    fn from_json(doc: &str) -> PyResult<Self> {
        parse_set_system_json(doc).map(|inner| PySetSystem { inner }).map_err(value_err)
    }

    /// `(elements_csv, overlays_csv)`.
    fn to_csv(&self) -> (String, String) {
        write_set_system_csv(&self.inner)
    }

    /// `[(id, label, base_set)]` in input order.
    fn elements(&self) -> Vec<(String, String, String)> {
        self.inner
            .elements()
            .iter()
            .map(|e| (e.id.clone(), e.label.clone(), self.inner.base_of(&e.id).unwrap_or_default().to_string()))
            .collect()
    }

    fn base_sets(&self) -> BTreeMap<String, Vec<String>> {
        self.inner.base_sets().map(|s| (s.name.clone(), s.members.clone())).collect()
    }

    fn overlays(&self) -> BTreeMap<String, Vec<String>> {
        self.inner.overlay_sets().map(|s| (s.name.clone(), s.members.clone())).collect()
    }

    /// Representatives after merging indistinguishable elements, with their
    /// multiplicities.
    fn contracted(&self) -> BTreeMap<String, usize> {
        contract_indistinguishable(&self.inner).alpha
    }

    fn __len__(&self) -> usize {
        self.inner.elements().len()
    }

    fn __repr__(&self) -> String {
        format!(
            "SetSystem({} elements, {} base sets, {} overlays)",
            self.inner.elements().len(),
            self.inner.base_sets().count(),
            self.inner.overlay_sets().count()
        )
    }
}

fn grid_kind(kind: &str) -> PyResult<GridKind> {
    kind.parse().map_err(PyValueError::new_err)
}

/// Square or hexagonal host grid with unit edges.
#[pyclass(name = "Grid", module = "mosaicsets", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyGrid {
    inner: HostGrid,
}

#[pymethods]
impl PyGrid {
    #[new]
    fn new(kind: &str, rows: u32, cols: u32) -> PyResult<Self> {
        build_grid(grid_kind(kind)?, rows, cols).map(|inner| PyGrid { inner }).map_err(value_err)
    }

    /// Default `(rows, cols)` for `n` elements.
    #[staticmethod]
    fn size_for(n: usize) -> (u32, u32) {
        grid_size_for(n)
    }

    #[getter]
    fn kind(&self) -> String {
        format!("{:?}", self.inner.kind()).to_lowercase()
    }

    #[getter]
    fn shape(&self) -> (u32, u32) {
        (self.inner.rows(), self.inner.cols())
    }

    /// `[(id, x, y)]` cell centers.
    fn cells(&self) -> Vec<(u32, f64, f64)> {
        self.inner.cells().iter().map(|c| (c.id.0, c.center.x, c.center.y)).collect()
    }

    fn neighbors(&self, cell: u32) -> Vec<u32> {
        self.inner.neighbors(CellId(cell)).map(|c| c.0).collect()
    }

    /// Area, perimeter, component count and Polsby-Popper score of a cell set.
    fn region(&self, cells: Vec<u32>) -> PyResult<BTreeMap<String, f64>> {
        let set: BTreeSet<CellId> = cells.into_iter().map(CellId).collect();
        let g = region_geometry(&self.inner, &set).map_err(value_err)?;
        Ok(BTreeMap::from([
            ("area".to_string(), g.area),
            ("perimeter".to_string(), g.perimeter),
            ("components".to_string(), g.component_count as f64),
            ("pp".to_string(), polsby_popper(&g)),
        ]))
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

/// A solved embedding together with its set system, grid and solve report.
#[pyclass(name = "Embedding", module = "mosaicsets", frozen)]
struct PyEmbedding {
    doc: EmbeddingDocument,
    report: Option<SolveReport>,
}

impl PyEmbedding {
    fn grid(&self) -> PyResult<HostGrid> {
        self.doc.grid.build().map_err(value_err)
    }
}

#[pymethods]
impl PyEmbedding {
    /// Loads an `embedding.json` document as written by `mosaic embed`.
    #[staticmethod]
    fn from_json(doc: &str) -> PyResult<Self> {
        let doc: EmbeddingDocument = serde_json::from_str(doc).map_err(value_err)?;
        Ok(PyEmbedding { doc, report: None })
    }

    fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.doc).expect("serializable")
    }

    fn report_json(&self) -> Option<String> {
        self.report.as_ref().map(|r| serde_json::to_string_pretty(r).expect("serializable"))
    }

    #[getter]
    fn variant(&self) -> String {
        self.doc.variant.to_string()
    }

    /// Element id → cell id.
    fn assignment(&self) -> BTreeMap<String, u32> {
        self.doc.embedding.assignment.iter().map(|(k, v)| (k.clone(), v.0)).collect()
    }

    /// Set name → `[(from, to, amount)]` positive flow arcs.
    fn flows(&self) -> BTreeMap<String, Vec<(u32, u32, u32)>> {
        self.doc
            .embedding
            .flows
            .iter()
            .map(|(k, fs)| (k.clone(), fs.iter().map(|f| (f.from.0, f.to.0, f.amount)).collect()))
            .collect()
    }

    /// Problems with injectivity or contiguity; empty when valid.
    fn validate(&self) -> Vec<String> {
        self.doc.validate().into_iter().map(|v| v.message).collect()
    }

    /// `pp_c1`, `pp_c2`, `pp_c3` and per-set `pp:<name>`, `components:<name>`.
    fn metrics(&self) -> PyResult<BTreeMap<String, f64>> {
        let m = metrics_report(&self.doc.embedding, &self.doc.system, &self.grid()?, self.report.as_ref())
            .map_err(value_err)?;
        let mut out = BTreeMap::from([
            ("pp_c1".to_string(), m.pp_c1),
            ("pp_c2".to_string(), m.pp_c2),
            ("pp_c3".to_string(), m.pp_c3),
        ]);
        for s in m.sets {
            out.insert(format!("pp:{}", s.name), s.pp);
            out.insert(format!("components:{}", s.name), s.components as f64);
        }
        Ok(out)
    }

    /// SVG with the base map, the selected overlays (all by default) and labels.
    #[pyo3(signature = (select = None, style = "boundary"))]
    fn render_svg(&self, select: Option<Vec<String>>, style: &str) -> PyResult<String> {
        let overlay_style: OverlayStyle = style.parse().map_err(PyValueError::new_err)?;
        let selected = select.unwrap_or_else(|| {
            self.doc.system.sets().iter().filter(|s| s.kind == SetKind::Overlay).map(|s| s.name.clone()).collect()
        });
        let doc = render_map(
            &self.doc.embedding,
            &self.doc.system,
            &self.grid()?,
            &StyleSheet::default(),
            &selected,
            overlay_style,
        )
        .map_err(value_err)?;
        Ok(doc.to_svg_string())
    }
}

/// Embeds `system` into a grid. `backend` overrides `MOSAIC_SOLVER`.
#[pyfunction]
#[pyo3(signature = (
    system, grid = "hex", variant = "mse", gap = 0.005, iterations = 5,
    time_limit = None, seed = 0, rows = None, cols = None, backend = None
))]
#[allow(clippy::too_many_arguments)]
fn embed(
    py: Python<'_>,
    system: &PySetSystem,
    grid: &str,
    variant: &str,
    gap: f64,
    iterations: usize,
    time_limit: Option<f64>,
    seed: u64,
    rows: Option<u32>,
    cols: Option<u32>,
    backend: Option<&str>,
) -> PyResult<PyEmbedding> {
    let variant: Variant = variant.parse().map_err(PyValueError::new_err)?;
    if !(0.0..1.0).contains(&gap) || iterations == 0 {
        return Err(PyValueError::new_err("need 0 ≤ gap < 1 and iterations ≥ 1"));
    }
    let (r, c) = grid_size_for(system.inner.elements().len());
    let host = build_grid(grid_kind(grid)?, rows.unwrap_or(r), cols.unwrap_or(c)).map_err(value_err)?;
    let mut solver = match backend {
        Some(name) => backend_by_name(name),
        None => backend_from_env(),
    }
    .map_err(value_err)?;
    let opts = PipelineOptions {
        max_iterations: iterations,
        solver: SolverConfig { relative_gap: gap, time_limit: time_limit.map(Duration::from_secs_f64), seed },
        ..Default::default()
    };
    let sys = system.inner.clone();
    let (emb, report) = py
        .detach(|| {
            let cs = contract_indistinguishable(&sys);
            run_variant(variant, &cs, &host, solver.as_mut(), &opts)
        })
        .map_err(solve_err)?;
    Ok(PyEmbedding { doc: EmbeddingDocument::new(sys, &host, variant, emb), report: Some(report) })
}

/// Synthetic set system with the dimensions of `profile` (`bonn`, `vienna`,
/// `parliament`).
#[pyfunction]
#[pyo3(signature = (profile, seed = 0, overlays = None))]
fn synth(profile: &str, seed: u64, overlays: Option<usize>) -> PyResult<PySetSystem> {
    let p = Profile::named(profile).ok_or_else(|| PyValueError::new_err(format!("unknown profile `{profile}`")))?;
    let p = overlays.map_or(p, |k| p.with_overlays(k));
    Ok(PySetSystem { inner: generate(p, seed) })
}

#[pymodule]
fn mosaicsets(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySetSystem>()?;
    m.add_class::<PyGrid>()?;
    m.add_class::<PyEmbedding>()?;
    m.add_function(wrap_pyfunction!(embed, m)?)?;
    m.add_function(wrap_pyfunction!(synth, m)?)?;
    m.add("InfeasibleError", m.py().get_type::<InfeasibleError>())?;
    Ok(())
}

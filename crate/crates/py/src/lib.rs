//! Python bindings: rings, solved fields, tracing, verification, rendering.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use ringflow::checks::{run_standard_checks, VerdictStatus};
use ringflow::field::{build_grid, gradient, ScalarField, VectorField};
use ringflow::flow::{merge_tree, trace_ascending, trace_descending, Streamline, TraceParams};
use ringflow::geometry::{high_ridge, is_stadium, ConvexBody, ConvexRing, RidgeGeometry};
use ringflow::render::{render_svg, RenderSpec};
use ringflow::solver::{solve_infinity, solve_p, SolveParams};
use ringflow::{Error, Vec2};

fn err(e: Error) -> PyErr {
    match e {
        Error::NoConvergence { .. } | Error::NonFiniteField { .. } => {
            PyRuntimeError::new_err(e.to_string())
        }
        other => PyValueError::new_err(other.to_string()),
    }
}

/// A convex ring: outer body minus inner body.
#[pyclass(frozen, name = "Ring")]
struct PyRing {
    ring: ConvexRing,
}

#[pymethods]
impl PyRing {
    /// Parse a domain spec (JSON text).
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PyRing { ring: ringflow::io::parse_domain(text).map_err(err)? })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(PyRing { ring: ringflow::io::load_domain(path).map_err(err)? })
    }

    fn separation(&self) -> f64 {
        self.ring.separation()
    }

    fn diameter(&self) -> f64 {
        self.ring.diameter()
    }

    fn contains(&self, x: f64, y: f64) -> bool {
        self.ring.contains(Vec2::new(x, y))
    }

    fn clearance(&self, x: f64, y: f64) -> f64 {
        self.ring.clearance(Vec2::new(x, y))
    }

    #[pyo3(signature = (tol = 1e-6))]
    fn is_stadium(&self, tol: f64) -> bool {
        is_stadium(&self.ring, tol)
    }

    /// High ridge of the outer body: ("point", [x, y]) or
    /// ("segment", [x0, y0, x1, y1]) plus the clearance.
    #[pyo3(signature = (tol = 1e-9))]
    fn high_ridge<'py>(&self, py: Python<'py>, tol: f64) -> PyResult<Bound<'py, PyDict>> {
        let ridge = high_ridge(self.ring.outer(), tol).map_err(err)?;
        let d = PyDict::new(py);
        match ridge.geometry {
            RidgeGeometry::Point(p) => {
                d.set_item("kind", "point")?;
                d.set_item("coords", vec![p.x, p.y])?;
            }
            RidgeGeometry::Segment(a, b) => {
                d.set_item("kind", "segment")?;
                d.set_item("coords", vec![a.x, a.y, b.x, b.y])?;
            }
        }
        d.set_item("clearance", ridge.clearance)?;
        Ok(d)
    }

    fn __repr__(&self) -> String {
        format!(
            "Ring(separation={:.6}, diameter={:.6})",
            self.ring.separation(),
            self.ring.diameter()
        )
    }
}

/// Unit disk with a center point inner boundary.
#[pyfunction]
fn disk_ring() -> PyResult<PyRing> {
    ConvexRing::new(ConvexBody::disk(Vec2::ZERO, 1.0), ConvexBody::point(0.0, 0.0))
        .map(|ring| PyRing { ring })
        .map_err(err)
}

/// Square [-1, 1]^2 with a center point inner boundary.
#[pyfunction]
fn square_ring() -> PyResult<PyRing> {
    ConvexRing::new(
        ConvexBody::rectangle(Vec2::new(-1.0, -1.0), Vec2::new(1.0, 1.0)),
        ConvexBody::point(0.0, 0.0),
    )
    .map(|ring| PyRing { ring })
    .map_err(err)
}

/// Axis-aligned ellipse with a center point inner boundary.
#[pyfunction]
fn ellipse_ring(a: f64, b: f64) -> PyResult<PyRing> {
    ConvexRing::new(ConvexBody::ellipse(Vec2::ZERO, a, b, 0.0), ConvexBody::point(0.0, 0.0))
        .map(|ring| PyRing { ring })
        .map_err(err)
}

/// A solved potential with its reconstructed gradient.
#[pyclass(frozen, name = "Field")]
struct PyField {
    field: ScalarField,
    vf: VectorField,
}

#[pymethods]
impl PyField {
    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        let field = ringflow::io::load_field(path).map_err(err)?;
        field.check_finite().map_err(err)?;
        let vf = gradient(&field);
        Ok(PyField { field, vf })
    }

    fn save(&self, path: &str) -> PyResult<()> {
        ringflow::io::save_field(path, &self.field).map_err(err)
    }

    fn h(&self) -> f64 {
        self.field.grid().h()
    }

    fn shape(&self) -> (usize, usize) {
        (self.field.grid().nx(), self.field.grid().ny())
    }

    fn sample(&self, x: f64, y: f64) -> PyResult<f64> {
        self.field.sample(Vec2::new(x, y)).map_err(err)
    }

    fn sample_gradient(&self, x: f64, y: f64) -> PyResult<(f64, f64)> {
        let g = self.vf.sample(Vec2::new(x, y)).map_err(err)?;
        Ok((g.x, g.y))
    }

    /// Closed loops of the level curve at `c`, as lists of (x, y) pairs.
    fn level_curve(&self, c: f64) -> PyResult<Vec<Vec<(f64, f64)>>> {
        let lc = ringflow::field::level_curve(&self.field, c).map_err(err)?;
        Ok(lc
            .loops
            .iter()
            .map(|lp| lp.iter().map(|p| (p.x, p.y)).collect())
            .collect())
    }

    /// Trace a streamline from a seed; `ascending=False` follows the
    /// negative gradient.
    #[pyo3(signature = (x, y, ascending = true))]
    fn trace(&self, x: f64, y: f64, ascending: bool) -> PyResult<PyStreamline> {
        let params = TraceParams::for_grid(self.field.grid());
        let seed = Vec2::new(x, y);
        let s = if ascending {
            trace_ascending(&self.field, &self.vf, seed, &params)
        } else {
            trace_descending(&self.field, &self.vf, seed, &params)
        }
        .map_err(err)?;
        Ok(PyStreamline { s })
    }

    /// Trace all seeds ascending and return the merge-tree edges as dicts.
    fn merge_edges<'py>(
        &self,
        py: Python<'py>,
        seeds: Vec<(f64, f64)>,
    ) -> PyResult<Vec<Bound<'py, PyDict>>> {
        let params = TraceParams::for_grid(self.field.grid());
        let traces: Vec<Streamline> = seeds
            .iter()
            .map(|(x, y)| trace_ascending(&self.field, &self.vf, Vec2::new(*x, *y), &params))
            .collect::<Result<_, _>>()
            .map_err(err)?;
        let tree = merge_tree(&traces, params.merge_tol);
        tree.edges
            .iter()
            .map(|e| {
                let d = PyDict::new(py);
                d.set_item("pair", e.pair)?;
                d.set_item("level", e.level)?;
                d.set_item("location", (e.location.x, e.location.y))?;
                Ok(d)
            })
            .collect()
    }

    /// Run the standard verification battery; returns a list of verdict dicts.
    #[pyo3(signature = (contours = 20, seed = 0, tol = 1e-8))]
    fn verify<'py>(
        &self,
        py: Python<'py>,
        contours: usize,
        seed: u64,
        tol: f64,
    ) -> PyResult<Vec<Bound<'py, PyDict>>> {
        let sparams = SolveParams { tol_res: tol, ..Default::default() };
        let verdicts = run_standard_checks(&self.field, &self.vf, &sparams, contours, seed);
        verdicts
            .iter()
            .map(|v| {
                let d = PyDict::new(py);
                d.set_item("name", &v.name)?;
                d.set_item(
                    "status",
                    match v.status {
                        VerdictStatus::Pass => "pass",
                        VerdictStatus::Fail => "fail",
                        VerdictStatus::ReportOnly => "report",
                    },
                )?;
                d.set_item("threshold", &v.threshold)?;
                let m = PyDict::new(py);
                for (k, val) in &v.measured {
                    m.set_item(k, *val)?;
                }
                d.set_item("measured", m)?;
                Ok(d)
            })
            .collect()
    }

    /// Render the field (no streamlines) to an SVG file.
    fn render(&self, path: &str) -> PyResult<()> {
        render_svg(&self.field, &[], None, &RenderSpec::default(), path).map_err(err)
    }

    fn __repr__(&self) -> String {
        let (nx, ny) = (self.field.grid().nx(), self.field.grid().ny());
        format!("Field({}x{}, h={:.6})", nx, ny, self.field.grid().h())
    }
}

/// A traced streamline.
#[pyclass(frozen, name = "Streamline")]
struct PyStreamline {
    s: Streamline,
}

#[pymethods]
impl PyStreamline {
    fn vertices(&self) -> Vec<(f64, f64)> {
        self.s.vertices.iter().map(|p| (p.x, p.y)).collect()
    }

    fn potential(&self) -> Vec<f64> {
        self.s.potential.clone()
    }

    fn speed(&self) -> Vec<f64> {
        self.s.speed.clone()
    }

    fn arclength(&self) -> f64 {
        self.s.total_arclength()
    }

    fn termination(&self) -> &'static str {
        self.s.termination.tag()
    }

    fn __len__(&self) -> usize {
        self.s.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "Streamline(len={}, arclength={:.4}, termination={})",
            self.s.len(),
            self.s.total_arclength(),
            self.s.termination.tag()
        )
    }
}

/// Solve the ring potential (the limit problem, or the p-Dirichlet problem
/// when `p` is given).
#[pyfunction]
#[pyo3(signature = (ring, h, r_gamma = None, tol = 1e-8, p = None, parallel = false))]
fn solve(
    ring: &PyRing,
    h: f64,
    r_gamma: Option<f64>,
    tol: f64,
    p: Option<f64>,
    parallel: bool,
) -> PyResult<PyField> {
    let grid = build_grid(&ring.ring, h, r_gamma.unwrap_or(h)).map_err(err)?;
    let params = SolveParams { tol_res: tol, parallel, ..Default::default() };
    let field = match p {
        Some(p) => solve_p(&grid, p, &params),
        None => solve_infinity(&grid, &params),
    }
    .map_err(err)?;
    let vf = gradient(&field);
    Ok(PyField { field, vf })
}

#[pymodule]
fn ringflow_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyRing>()?;
    m.add_class::<PyField>()?;
    m.add_class::<PyStreamline>()?;
    m.add_function(wrap_pyfunction!(disk_ring, m)?)?;
    m.add_function(wrap_pyfunction!(square_ring, m)?)?;
    m.add_function(wrap_pyfunction!(ellipse_ring, m)?)?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    Ok(())
}

//! Python module `sdg`.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use sdg_core::cli::{self, RunConfig};
use sdg_core::forms::NonlinearCoefficients;
use sdg_core::solver::{self, PicardConfig, TimeScheme, TimeSchemeConfig};
use sdg_core::verify::{self, error_l2, Forcing, ManufacturedProblem};
use sdg_core::{build_rectangle_mesh, build_staggered, read_polygon_mesh, InteriorPointRule, Rectangle};

fn to_py(e: sdg_core::Error) -> PyErr {
    use sdg_core::Error::*;
    match e {
        InvalidArgument(_) | Parse { .. } | Config(_) | NonManifold { .. } | Geometry { .. } | DimensionMismatch { .. } | OutOfRange { .. } => {
            PyValueError::new_err(e.to_string())
        }
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn parse_scheme(s: &str) -> PyResult<TimeScheme> {
    s.parse().map_err(|_| PyValueError::new_err(format!("unknown scheme `{s}`")))
}

fn parse_forcing(s: &str) -> PyResult<Forcing> {
    match s {
        "manufactured" => Ok(Forcing::Manufactured),
        "zero" => Ok(Forcing::Zero),
        _ => Err(PyValueError::new_err(format!("unknown forcing `{s}`"))),
    }
}

/// Staggered mesh: a primal polygonal mesh split into triangles around one
/// interior point per polygon.
#[pyclass(frozen)]
struct Mesh {
    inner: sdg_core::StaggeredMesh,
}

#[pymethods]
impl Mesh {
    /// Uniform `n×n` square grid on the unit square.
    #[staticmethod]
    fn unit_square(n: usize) -> PyResult<Self> {
        let primal = build_rectangle_mesh(n, n, Rectangle::unit_square()).map_err(to_py)?;
        let inner = build_staggered(primal, &InteriorPointRule::Centroid).map_err(to_py)?;
        Ok(Self { inner })
    }

    /// Mesh from the plain-text polygon format.
    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        let primal = read_polygon_mesh(text.as_bytes()).map_err(to_py)?;
        let inner = build_staggered(primal, &InteriorPointRule::Centroid).map_err(to_py)?;
        Ok(Self { inner })
    }

    #[getter]
    fn h(&self) -> f64 {
        self.inner.h
    }

    #[getter]
    fn num_polygons(&self) -> usize {
        self.inner.primal.num_polygons()
    }

    #[getter]
    fn num_triangles(&self) -> usize {
        self.inner.num_triangles()
    }

    #[getter]
    fn num_primal_edges(&self) -> usize {
        self.inner.num_primal_edges()
    }

    #[getter]
    fn num_dual_edges(&self) -> usize {
        self.inner.num_dual_edges()
    }

    fn __repr__(&self) -> String {
        format!(
            "Mesh(polygons={}, triangles={}, h={})",
            self.num_polygons(),
            self.num_triangles(),
            self.inner.h
        )
    }
}

/// Discrete spaces and assembled operators on a mesh.
#[pyclass(frozen)]
struct Discretization {
    inner: solver::Discretization,
}

#[pymethods]
impl Discretization {
    #[new]
    #[pyo3(signature = (mesh, k = 1))]
    fn new(mesh: &Mesh, k: usize) -> PyResult<Self> {
        let inner = solver::Discretization::new(mesh.inner.clone(), k).map_err(to_py)?;
        Ok(Self { inner })
    }

    /// Global dimensions of the velocity, gradient, pressure and trace spaces.
    fn dimensions<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let s = &self.inner.spaces;
        let d = PyDict::new(py);
        d.set_item("velocity", s.velocity.dim)?;
        d.set_item("gradient", s.gradient.dim)?;
        d.set_item("pressure", s.pressure.dim)?;
        d.set_item("trace", s.trace.dim)?;
        Ok(d)
    }

    /// Runs the manufactured-solution problem and returns final-time errors,
    /// the Picard iteration count of each step and the final velocity
    /// coefficients.
    #[pyo3(signature = (steps, scheme = "backward-euler", alpha = 1.0, beta = 1.0, epsilon = 1.0, final_time = 0.1, forcing = "manufactured", picard_tolerance = 1e-9, picard_max_iterations = 50))]
    #[allow(clippy::too_many_arguments)]
    fn solve<'py>(
        &self,
        py: Python<'py>,
        steps: usize,
        scheme: &str,
        alpha: f64,
        beta: f64,
        epsilon: f64,
        final_time: f64,
        forcing: &str,
        picard_tolerance: f64,
        picard_max_iterations: usize,
    ) -> PyResult<Bound<'py, PyDict>> {
        let coeffs = NonlinearCoefficients::new(alpha, beta, epsilon).map_err(to_py)?;
        let problem = ManufacturedProblem::new(coeffs, parse_forcing(forcing)?);
        let time = TimeSchemeConfig::new(parse_scheme(scheme)?, final_time, steps).map_err(to_py)?;
        let picard = PicardConfig {
            tolerance: picard_tolerance,
            max_iterations: picard_max_iterations,
            ..PicardConfig::default()
        };
        let disc = &self.inner;
        let traj = py
            .detach(|| solver::run_transient(disc, &problem, &time, &picard))
            .map_err(to_py)?;
        let (m, s, f, t) = (&disc.mesh, &disc.spaces, &traj.fields, final_time);
        let eu = error_l2(m, &s.velocity, &f.velocity, |x| problem.velocity(x, t)).map_err(to_py)?;
        let el = error_l2(m, &s.gradient, &f.gradient, |x| problem.gradient_variable(x, t)).map_err(to_py)?;
        let ep = error_l2(m, &s.pressure, &f.pressure, |x| [problem.pressure(x, t)]).map_err(to_py)?;
        let d = PyDict::new(py);
        d.set_item("h", m.h)?;
        d.set_item("error_u", eu)?;
        d.set_item("error_l", el)?;
        d.set_item("error_p", ep)?;
        let its: Vec<usize> = traj.reports.iter().map(|r| r.iterations).collect();
        d.set_item("iterations", its)?;
        d.set_item("velocity", f.velocity.values.clone())?;
        d.set_item("multiplier", f.multiplier)?;
        Ok(d)
    }
}

/// Runs a config given as text and returns the results as CSV text.
#[pyfunction]
fn run_config(py: Python<'_>, text: &str) -> PyResult<String> {
    let mut config: RunConfig = cli::parse_config(text).map_err(to_py)?;
    config.verbosity = 0;
    config.out = None;
    let summary = py
        .detach(|| cli::run(&config, &mut std::io::sink()))
        .map_err(to_py)?;
    Ok(cli::to_csv(&summary))
}

/// Observed orders between consecutive meshes; the first entry is `None`.
#[pyfunction]
fn observed_orders(h: Vec<f64>, errors: Vec<f64>) -> PyResult<Vec<Option<f64>>> {
    if h.len() != errors.len() {
        return Err(PyValueError::new_err("h and errors differ in length"));
    }
    Ok(verify::observed_orders(&h, &errors))
}

#[pymodule]
pub fn sdg(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Mesh>()?;
    m.add_class::<Discretization>()?;
    m.add_function(wrap_pyfunction!(run_config, m)?)?;
    m.add_function(wrap_pyfunction!(observed_orders, m)?)?;
    Ok(())
}

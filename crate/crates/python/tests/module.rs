use pyo3::prelude::*;
use pyo3::types::PyDict;
use pyo3::wrap_pymodule;

#[test]
fn module_exposes_solver() {
    Python::initialize();
    Python::attach(|py| {
        let m = wrap_pymodule!(sdg::sdg)(py);
        let locals = PyDict::new(py);
        locals.set_item("sdg", m).unwrap();
        py.run(
            c"
mesh = sdg.Mesh.unit_square(2)
disc = sdg.Discretization(mesh)
dims = disc.dimensions()
res = disc.solve(2, scheme='second-order')
",
            None,
            Some(&locals),
        )
        .unwrap();
        let dims = locals.get_item("dims").unwrap().unwrap();
        let velocity: usize = dims.get_item("velocity").unwrap().extract().unwrap();
        assert_eq!(velocity, 64);
        let res = locals.get_item("res").unwrap().unwrap();
        let err: f64 = res.get_item("error_u").unwrap().extract().unwrap();
        assert!(err > 0.0 && err < 0.1, "{err}");
        let bad = py.run(c"sdg.Mesh.unit_square(0)", None, Some(&locals));
        assert!(bad.unwrap_err().is_instance_of::<pyo3::exceptions::PyValueError>(py));
    });
}

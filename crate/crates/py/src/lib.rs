//! Python bindings: patches of Hopf hypersurfaces, their shape operators,
//! CKO constants and the report runner.

use std::str::FromStr;

use ht::cko::{self, CKOForm, OneParamConstants, OneParamData};
use ht::hopf::{self, ExampleKind, HopfTolerances, HypersurfacePatch};
use ht::linalg::{matrix_exp as exp_core, validate_algebra};
use ht::twistor::{gamma_curve, Sign, StiefelPoint};
use ht::{report, IndefVector};
use nalgebra::DMatrix;
use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

fn py_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn coords(v: IndefVector) -> Vec<Complex64> {
    v.coords().to_vec()
}

/// A hypersurface patch: the lift Ψ̃ into anti-de Sitter space and its
/// normal lift N′ over a chart.
#[pyclass(name = "Patch", frozen)]
struct PyPatch {
    inner: HypersurfacePatch,
}

#[pymethods]
impl PyPatch {
    /// Classical example: "tube-chk", "tube-rhn" or "horosphere".
    #[staticmethod]
    #[pyo3(signature = (kind, n, r, k = 0))]
    fn example(kind: &str, n: usize, r: f64, k: usize) -> PyResult<Self> {
        let kind = ExampleKind::from_str(kind).map_err(py_err)?;
        Ok(Self {
            inner: kind.build(n, k, r).map_err(py_err)?,
        })
    }

    /// The μ = 2 patch of one-parameter CKO constants on ℂH².
    #[staticmethod]
    fn cko(alpha0: f64, alpha1: f64, x: f64, y0: f64, y1: f64, w: f64) -> PyResult<Self> {
        let k = OneParamConstants {
            alpha0,
            alpha1,
            x,
            y0,
            y1,
            w,
        };
        let d = OneParamData::with_identity(k).map_err(py_err)?;
        Ok(Self {
            inner: cko::build_psi(&d).map_err(py_err)?,
        })
    }

    /// The patch of an integrable CKO-form given as JSON.
    #[staticmethod]
    fn cko_form(form_json: &str) -> PyResult<Self> {
        let f: CKOForm = serde_json::from_str(form_json).map_err(py_err)?;
        let base = ht::GroupElement::identity(f.dim_n());
        Ok(Self {
            inner: cko::build_psi_form(&f, base).map_err(py_err)?,
        })
    }

    #[getter]
    fn label(&self) -> String {
        self.inner.label().to_string()
    }

    #[getter]
    fn dim_n(&self) -> usize {
        self.inner.dim_n()
    }

    #[getter]
    fn param_names(&self) -> Vec<String> {
        self.inner.param_names().to_vec()
    }

    #[getter]
    fn sample_box(&self) -> Vec<(f64, f64)> {
        self.inner.sample_box().to_vec()
    }

    #[getter]
    fn expected_mu(&self) -> Option<f64> {
        self.inner.expected_mu()
    }

    fn center(&self) -> Vec<f64> {
        self.inner.center()
    }

    fn eval(&self, params: Vec<f64>) -> PyResult<Vec<Complex64>> {
        self.inner.eval(&params).map(coords).map_err(py_err)
    }

    fn normal(&self, params: Vec<f64>) -> PyResult<Vec<Complex64>> {
        self.inner.normal_lift(&params).map(coords).map_err(py_err)
    }

    /// Matrix of A in an orthonormal frame whose first vector is ξ.
    #[pyo3(signature = (params, step = 1e-4))]
    fn shape_operator(&self, params: Vec<f64>, step: f64) -> PyResult<Vec<Vec<f64>>> {
        let op = hopf::shape_operator(&self.inner, &params, step).map_err(py_err)?;
        let m = &op.matrix;
        Ok((0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect())
    }

    /// Runs the Hopf certification on a grid; returns the report as JSON.
    #[pyo3(signature = (density = 3, cap = 81, step = 1e-4))]
    fn verify(&self, py: Python<'_>, density: usize, cap: usize, step: f64) -> PyResult<String> {
        let grid = self.inner.sample_grid(density, cap).map_err(py_err)?;
        let report = py.detach(|| hopf::verify_hopf(&self.inner, &grid, step, &HopfTolerances::default()));
        serde_json::to_string(&report).map_err(py_err)
    }

    fn __repr__(&self) -> String {
        format!("Patch({})", self.inner.label())
    }
}

/// κ and the circle residual of the projected curve γ_r^s at t, from the
/// standard base point of ℂHⁿ.
#[pyfunction]
#[pyo3(signature = (s, r, t, n = 2, step = 1e-4))]
fn curve_curvature(s: &str, r: f64, t: f64, n: usize, step: f64) -> PyResult<(f64, f64)> {
    let s = Sign::from_str(s).map_err(py_err)?;
    let c = gamma_curve(s, r, &StiefelPoint::standard(n));
    let k = ht::fibration::curve_curvature(&c, t, step).map_err(py_err)?;
    Ok((k.kappa, k.residual))
}

/// ρ = a/b for one-parameter constants at λ.
#[pyfunction]
#[allow(clippy::too_many_arguments)]
fn predicted_rho(alpha0: f64, alpha1: f64, x: f64, y0: f64, y1: f64, w: f64, lam: f64) -> PyResult<f64> {
    let k = OneParamConstants {
        alpha0,
        alpha1,
        x,
        y0,
        y1,
        w,
    };
    cko::predicted_rho(&k, lam).map_err(py_err)
}

/// Integrability residual of a CKO-form given as JSON.
#[pyfunction]
fn maurer_cartan_residual(form_json: &str) -> PyResult<f64> {
    let f: CKOForm = serde_json::from_str(form_json).map_err(py_err)?;
    Ok(cko::maurer_cartan_residual(&f))
}

/// exp(tX) for X in u(1, n), given as a square list of rows.
#[pyfunction]
fn matrix_exp(x: Vec<Vec<Complex64>>, t: f64) -> PyResult<Vec<Vec<Complex64>>> {
    let size = x.len();
    if size < 3 || x.iter().any(|row| row.len() != size) {
        return Err(PyValueError::new_err("expected a square matrix of size n + 1 >= 3"));
    }
    let m = DMatrix::from_fn(size, size, |i, j| x[i][j]);
    let g = exp_core(&validate_algebra(m, 1e-10).map_err(py_err)?, t).map_err(py_err)?;
    let g = g.matrix();
    Ok((0..size).map(|i| (0..size).map(|j| g[(i, j)]).collect()).collect())
}

/// Runs a command from a JSON run configuration; returns the report JSON.
#[pyfunction]
fn run(py: Python<'_>, config_json: &str) -> PyResult<String> {
    let cfg: report::RunConfig = serde_json::from_str(config_json).map_err(py_err)?;
    let env = py.detach(|| report::run(&cfg)).map_err(py_err)?;
    report::to_json(&env).map_err(py_err)
}

#[pymodule]
fn hopf_twistor(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyPatch>()?;
    m.add_function(wrap_pyfunction!(curve_curvature, m)?)?;
    m.add_function(wrap_pyfunction!(predicted_rho, m)?)?;
    m.add_function(wrap_pyfunction!(maurer_cartan_residual, m)?)?;
    m.add_function(wrap_pyfunction!(matrix_exp, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add("ARTIFACT_VERSION", report::ARTIFACT_VERSION)?;
    Ok(())
}

//! Python bindings for the witness core.
//!
//! Matrices cross the boundary as nested lists of complex numbers. Structured
//! results come back as plain dicts.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use serde::Serialize;

use witness_core::inequality::{self, ConstraintPoint};
use witness_core::linalg::{min_eigenvalue, ComplexMatrix};
use witness_core::optimality::{self, ZeroLocusConfig};
use witness_core::positivity::{self, SearchConfig};
use witness_core::{Permutation, WitnessError, C64};

type Rows = Vec<Vec<C64>>;

fn err(e: WitnessError) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_dict<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn from_rows(rows: Rows) -> PyResult<ComplexMatrix> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|row| row.len() != c) {
        return Err(PyValueError::new_err("ragged matrix"));
    }
    ComplexMatrix::new(r, c, rows.into_iter().flatten().collect()).map_err(err)
}

fn to_rows(m: &ComplexMatrix) -> Rows {
    m.data().chunks(m.cols()).map(<[_]>::to_vec).collect()
}

fn permutation(pi: Option<Vec<usize>>, n: usize) -> PyResult<Permutation> {
    match pi {
        Some(images) => Permutation::from_one_based(&images).map_err(err),
        None => Ok(Permutation::shift(n)),
    }
}

/// The map X -> diag((n - t) x_jj + t x_pi(j)pi(j)) - X.
#[pyclass(name = "DTypeMap", frozen)]
struct PyMap(witness_core::DTypeMap);

#[pymethods]
impl PyMap {
    #[new]
    #[pyo3(signature = (t, pi=None, n=3))]
    fn new(t: f64, pi: Option<Vec<usize>>, n: usize) -> PyResult<Self> {
        let p = permutation(pi, n)?;
        witness_core::DTypeMap::new(t, p).map(PyMap).map_err(err)
    }

    #[getter]
    fn t(&self) -> f64 {
        self.0.t()
    }

    #[getter]
    fn n(&self) -> usize {
        self.0.n()
    }

    #[getter]
    fn pi(&self) -> Vec<usize> {
        self.0.pi().one_based()
    }

    /// Same map minus X -> C X C^dagger.
    fn subtracted(&self, c: Rows) -> PyResult<Self> {
        self.0.subtracted(from_rows(c)?).map(PyMap).map_err(err)
    }

    fn apply(&self, x: Rows) -> PyResult<Rows> {
        self.0
            .apply(&from_rows(x)?)
            .map(|m| to_rows(&m))
            .map_err(err)
    }

    fn choi(&self) -> PyWitness {
        PyWitness(self.0.choi_matrix())
    }

    fn is_completely_positive(&self) -> bool {
        positivity::is_completely_positive(&self.0).completely_positive
    }

    /// Product-vector search for a negative witness value.
    #[pyo3(signature = (restarts=100, seed=42))]
    fn check_positivity<'py>(
        &self,
        py: Python<'py>,
        restarts: usize,
        seed: u64,
    ) -> PyResult<Bound<'py, PyAny>> {
        let config = SearchConfig {
            restarts,
            seed,
            ..SearchConfig::default()
        };
        let w = self.0.choi_matrix();
        let verdict = py.detach(|| positivity::numeric_block_positivity(&w, &config));
        to_dict(py, &verdict)
    }

    #[pyo3(signature = (trials=200, seed=42))]
    fn subtraction_probe<'py>(
        &self,
        py: Python<'py>,
        trials: usize,
        seed: u64,
    ) -> PyResult<Bound<'py, PyAny>> {
        let report = py.detach(|| optimality::subtraction_probe(&self.0, trials, seed));
        to_dict(py, &report)
    }

    fn __repr__(&self) -> String {
        format!("DTypeMap(t={}, pi={})", self.0.t(), self.0.pi())
    }
}

/// Choi matrix of a map on n x n matrices.
#[pyclass(name = "Witness", frozen)]
struct PyWitness(witness_core::Witness);

#[pymethods]
impl PyWitness {
    #[getter]
    fn matrix(&self) -> Rows {
        to_rows(self.0.matrix())
    }

    #[getter]
    fn dims(&self) -> (usize, usize) {
        (self.0.dim_a(), self.0.dim_b())
    }

    fn product_value(&self, e: Vec<C64>, f: Vec<C64>) -> PyResult<f64> {
        if e.len() != self.0.dim_a() || f.len() != self.0.dim_b() {
            return Err(PyValueError::new_err(
                "vector length does not match the factor",
            ));
        }
        Ok(self.0.product_value(&e, &f))
    }

    fn min_eigenvalue(&self) -> PyResult<f64> {
        min_eigenvalue(self.0.matrix()).map_err(err)
    }

    /// Partial transpose on the second factor is PSD.
    fn is_ppt(&self) -> PyResult<bool> {
        positivity::is_ppt(self.0.matrix(), self.0.dim_a(), self.0.dim_b()).map_err(err)
    }

    /// Tr(W rho) for a density matrix rho.
    fn detect(&self, rho: Rows) -> PyResult<f64> {
        optimality::detect_value(&self.0, &from_rows(rho)?).map_err(err)
    }

    #[pyo3(signature = (samples=100_000, seed=42))]
    fn zero_locus<'py>(
        &self,
        py: Python<'py>,
        samples: usize,
        seed: u64,
    ) -> PyResult<Bound<'py, PyAny>> {
        let config = ZeroLocusConfig { samples, seed };
        let z = py.detach(|| optimality::zero_locus_span(&self.0, &config));
        to_dict(py, &z)
    }
}

#[pyfunction]
#[pyo3(signature = (t, pi=None))]
fn optimality_verdict<'py>(
    py: Python<'py>,
    t: f64,
    pi: Option<Vec<usize>>,
) -> PyResult<Bound<'py, PyAny>> {
    let p = permutation(pi, 3)?;
    to_dict(py, &optimality::optimality_verdict(t, &p).map_err(err)?)
}

/// Positive plus PPT split of a transposition witness.
#[pyfunction]
fn decompose<'py>(py: Python<'py>, t: f64, pi: Vec<usize>) -> PyResult<Bound<'py, PyAny>> {
    let p = permutation(Some(pi), 3)?;
    let split = optimality::case2_split(t, &p).map_err(err)?;
    let w = witness_core::DTypeMap::new(t, p)
        .map_err(err)?
        .choi_matrix();
    let dict = to_dict(py, &split)?;
    dict.set_item("check", to_dict(py, &split.check(&w))?)?;
    Ok(dict)
}

#[pyfunction]
fn c0_certificate(t: f64, c: f64) -> PyResult<Rows> {
    optimality::c0_certificate(t, c)
        .map(|m| to_rows(&m))
        .map_err(err)
}

#[pyfunction]
#[pyo3(signature = (t, c=None, samples=10_000, seed=42))]
fn certificate_sweep<'py>(
    py: Python<'py>,
    t: f64,
    c: Option<f64>,
    samples: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let c = c.unwrap_or_else(|| (1.0 - t).max(0.0).sqrt());
    let report = py
        .detach(|| optimality::run_certificate_sweep(t, c, samples, seed))
        .map_err(err)?;
    to_dict(py, &report)
}

#[pyfunction]
#[pyo3(signature = (t, samples=100_000, half_width=3.0, seed=42))]
fn constrained_scan<'py>(
    py: Python<'py>,
    t: f64,
    samples: usize,
    half_width: f64,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let report = py
        .detach(|| inequality::constrained_scan(t, samples, half_width, seed))
        .map_err(err)?;
    to_dict(py, &report)
}

/// Polynomial g on the constraint surface x1 x2 x3 = 1.
#[pyfunction]
fn g_value(t: f64, x: [f64; 3]) -> PyResult<f64> {
    Ok(inequality::g_value(
        &ConstraintPoint::new(x, t).map_err(err)?,
    ))
}

#[pyfunction]
fn f_value(t: f64, x: [f64; 3]) -> PyResult<f64> {
    inequality::f_value(&ConstraintPoint::new(x, t).map_err(err)?).map_err(err)
}

#[pymodule]
fn witness_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMap>()?;
    m.add_class::<PyWitness>()?;
    m.add_function(wrap_pyfunction!(optimality_verdict, m)?)?;
    m.add_function(wrap_pyfunction!(decompose, m)?)?;
    m.add_function(wrap_pyfunction!(c0_certificate, m)?)?;
    m.add_function(wrap_pyfunction!(certificate_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(constrained_scan, m)?)?;
    m.add_function(wrap_pyfunction!(g_value, m)?)?;
    m.add_function(wrap_pyfunction!(f_value, m)?)?;
    Ok(())
}

// SPDX-License-Identifier: Apache-2.0

//! Python bindings. Reports are returned as plain Python objects decoded
//! from the same JSON the command-line tool emits.

use std::f64::consts::FRAC_PI_2;

use num_bigint::BigInt;
use pyo3::exceptions::{PyArithmeticError, PyIndexError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

use modgeo::bqf::{self, Discriminant, QuadForm};
use modgeo::collections::{self as coll, SubcollectionRule, SubcollectionSpec};
use modgeo::frame::Mat2;
use modgeo::harness::{self, QSchedule};
use modgeo::observables::{self as obs, TestFunction};
use modgeo::surface::fold;
use modgeo::units;

fn err(e: modgeo::Error) -> PyErr {
    match e {
        modgeo::Error::NumericalDegeneracy(_) | modgeo::Error::DegenerateFit(_) => {
            PyArithmeticError::new_err(e.to_string())
        }
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn disc(d: i128) -> PyResult<Discriminant> {
    Discriminant::new(d).map_err(err)
}

fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

/// An integral binary quadratic form `a x^2 + b x y + c y^2`.
#[pyclass(name = "QuadForm", frozen, eq, hash, skip_from_py_object)]
#[derive(Clone, PartialEq, Eq, Hash)]
struct PyQuadForm(QuadForm);

#[pymethods]
impl PyQuadForm {
    #[new]
    fn new(a: i128, b: i128, c: i128) -> PyResult<Self> {
        let f = QuadForm::new(a, b, c);
        disc(f.discriminant())?;
        if !f.is_primitive() {
            return Err(PyValueError::new_err(format!("{f} is not primitive")));
        }
        Ok(PyQuadForm(f))
    }

    #[getter]
    fn a(&self) -> i128 {
        self.0.a
    }

    #[getter]
    fn b(&self) -> i128 {
        self.0.b
    }

    #[getter]
    fn c(&self) -> i128 {
        self.0.c
    }

    fn discriminant(&self) -> i128 {
        self.0.discriminant()
    }

    fn is_reduced(&self) -> bool {
        self.0.is_reduced()
    }

    fn rho(&self) -> PyResult<Self> {
        self.0.rho().map(PyQuadForm).map_err(err)
    }

    fn reduce(&self) -> Self {
        PyQuadForm(self.0.reduce())
    }

    fn compose(&self, other: &Self) -> PyResult<Self> {
        self.0.compose(&other.0).map(PyQuadForm).map_err(err)
    }

    /// The full rho-cycle of the reduced form equivalent to this one.
    fn cycle(&self) -> Vec<Self> {
        bqf::reduced_cycle(&self.0.reduce())
            .forms
            .into_iter()
            .map(PyQuadForm)
            .collect()
    }

    fn __repr__(&self) -> String {
        format!("QuadForm{}", self.0)
    }
}

#[pyfunction]
fn is_discriminant(n: i128) -> bool {
    bqf::is_discriminant(n)
}

#[pyfunction]
fn principal_form(d: i128) -> PyResult<PyQuadForm> {
    Ok(PyQuadForm(bqf::principal_form(&disc(d)?)))
}

/// Class group as a dict: order, cycles, composition table.
#[pyfunction]
fn class_group(py: Python<'_>, d: i128) -> PyResult<Bound<'_, PyAny>> {
    #[derive(Serialize)]
    struct Out {
        d: i128,
        order: usize,
        cycles: Vec<Vec<QuadForm>>,
        table: Vec<Vec<usize>>,
    }
    let g = bqf::class_group(&disc(d)?);
    to_py(
        py,
        &Out {
            d,
            order: g.order(),
            cycles: g.cycles.iter().map(|c| c.forms.clone()).collect(),
            table: g.table.clone(),
        },
    )
}

#[pyfunction]
fn class_number(d: i128) -> PyResult<usize> {
    Ok(bqf::reduced_cycles(&disc(d)?).len())
}

/// Fundamental solution `(t, u)` of `t^2 - d u^2 = 4`.
#[pyfunction]
fn fundamental_pell(d: i128) -> PyResult<(BigInt, BigInt)> {
    let p = units::fundamental_pell(&disc(d)?);
    Ok((p.t, p.u))
}

/// `(regulator, period, has_norm_minus_one_unit)`.
#[pyfunction]
fn regulator(d: i128) -> PyResult<(f64, f64, bool)> {
    let r = units::regulator(&disc(d)?);
    Ok((r.regulator, r.period, r.has_norm_minus_one_unit))
}

/// An observable on the unit tangent bundle, built from a spec string such
/// as `cusp:2`, `cusp:2:0.5`, `tube:P5:0.05` or `near:P5:0.1`.
#[pyclass(name = "TestFunction", frozen)]
struct PyTestFunction(TestFunction);

#[pymethods]
impl PyTestFunction {
    #[new]
    fn new(spec: &str) -> PyResult<Self> {
        obs::parse_function(spec).map(PyTestFunction).map_err(err)
    }

    #[getter]
    fn id(&self) -> String {
        self.0.id.clone()
    }

    #[getter]
    fn exact_integral(&self) -> Option<f64> {
        self.0.exact_integral
    }

    /// Value at the base point `x + iy` with flow direction `theta`.
    fn eval(&self, x: f64, y: f64, theta: f64) -> PyResult<f64> {
        if !(y > 0.0) {
            return Err(PyValueError::new_err("y must be positive"));
        }
        let p = fold(&Mat2::iwasawa(x, y, 0.5 * (FRAC_PI_2 - theta))).map_err(err)?;
        Ok(self.0.eval(&p))
    }

    /// Haar integral: exact when known, otherwise Monte-Carlo.
    #[pyo3(signature = (n_samples = 100_000, seed = 0))]
    fn haar_integral<'py>(
        &self,
        py: Python<'py>,
        n_samples: usize,
        seed: u64,
    ) -> PyResult<Bound<'py, PyAny>> {
        let est = py.detach(|| obs::haar_integral(&self.0, n_samples, seed));
        to_py(py, &est)
    }

    fn __repr__(&self) -> String {
        format!("TestFunction({:?})", self.0.id)
    }
}

/// The closed geodesics of one discriminant, or a subcollection of them.
#[pyclass(name = "GeodesicCollection", frozen)]
struct PyCollection {
    full: coll::GeodesicCollection,
    sub: coll::GeodesicCollection,
}

#[pymethods]
impl PyCollection {
    #[new]
    fn new(py: Python<'_>, d: i128) -> PyResult<Self> {
        let d = disc(d)?;
        let full = py.detach(|| coll::build_full(&d));
        Ok(PyCollection {
            sub: full.clone(),
            full,
        })
    }

    #[getter]
    fn d(&self) -> i128 {
        self.sub.d.value()
    }

    fn __len__(&self) -> usize {
        self.sub.len()
    }

    #[getter]
    fn total_length(&self) -> f64 {
        self.sub.total_length
    }

    #[getter]
    fn period(&self) -> f64 {
        self.sub.period()
    }

    fn class_indices(&self) -> Vec<usize> {
        self.sub.class_indices()
    }

    /// Exactly one of `q`, `tube` (`(orbit_d, r)`) or `classes`.
    #[pyo3(signature = (*, q = None, tube = None, classes = None, seed = 0))]
    fn subcollection(
        &self,
        py: Python<'_>,
        q: Option<f64>,
        tube: Option<(i128, f64)>,
        classes: Option<Vec<usize>>,
        seed: u64,
    ) -> PyResult<Self> {
        let rule = match (q, tube, classes) {
            (Some(q), None, None) => SubcollectionRule::RandomFraction { q },
            (None, Some((orbit_d, r)), None) => SubcollectionRule::Tube { orbit_d, r },
            (None, None, Some(indices)) => SubcollectionRule::Explicit { indices },
            _ => {
                return Err(PyValueError::new_err(
                    "give exactly one of q, tube, classes",
                ))
            }
        };
        let spec = SubcollectionSpec { rule, seed };
        let sub = py
            .detach(|| coll::subcollection(&self.full, &spec))
            .map_err(|e| match e {
                modgeo::Error::InvalidInput(m) if m.contains("out of range") => {
                    PyIndexError::new_err(m)
                }
                e => err(e),
            })?;
        Ok(PyCollection {
            full: self.full.clone(),
            sub,
        })
    }

    /// `mu_I(f)` by midpoint quadrature with the given step.
    #[pyo3(signature = (f, step = 1e-2))]
    fn measure(&self, py: Python<'_>, f: &PyTestFunction, step: f64) -> PyResult<f64> {
        py.detach(|| coll::measure(&self.sub, &f.0, step))
            .map_err(err)
    }

    /// Discrepancy report against `mu_X(f)` (exact or Monte-Carlo).
    #[pyo3(signature = (f, step = 1e-2, seed = 0, n_samples = 100_000))]
    fn discrepancy<'py>(
        &self,
        py: Python<'py>,
        f: &PyTestFunction,
        step: f64,
        seed: u64,
        n_samples: usize,
    ) -> PyResult<Bound<'py, PyAny>> {
        let rep = py.detach(|| {
            let mu = obs::haar_integral(&f.0, n_samples, seed).value;
            harness::discrepancy(&self.sub, &self.full, &f.0, mu, step, seed)
        });
        to_py(py, &rep.map_err(err)?)
    }

    fn summary<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.sub.summary())
    }

    fn __repr__(&self) -> String {
        format!(
            "GeodesicCollection(d={}, members={}, total_length={})",
            self.sub.d.value(),
            self.sub.len(),
            self.sub.total_length
        )
    }
}

fn fulls(py: Python<'_>, ds: &[i128]) -> PyResult<Vec<coll::GeodesicCollection>> {
    py.detach(|| harness::build_all(ds)).map_err(err)
}

/// First fundamental discriminants at or above `n` log-spaced targets.
#[pyfunction]
fn fundamental_log_spaced(lo: i128, hi: i128, n: usize) -> PyResult<Vec<i128>> {
    harness::fundamental_log_spaced(lo, hi, n).map_err(err)
}

/// Log-log fit of the full-collection discrepancy against d.
#[pyfunction]
#[pyo3(signature = (ds, f, step = 1e-2, seed = 0))]
fn duke_sweep<'py>(
    py: Python<'py>,
    ds: Vec<i128>,
    f: &PyTestFunction,
    step: f64,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let gs = fulls(py, &ds)?;
    let mu =
        f.0.exact_integral
            .ok_or_else(|| PyValueError::new_err("the sweep needs an exact Haar integral"))?;
    let rep = py.detach(|| harness::duke_sweep(&gs, &f.0, mu, step, seed));
    to_py(py, &rep.map_err(err)?)
}

/// Random subcollections with `q = scale (ln d)^-exponent`.
#[pyfunction]
#[pyo3(signature = (ds, f, scale = 1.0, exponent = 0.5, step = 1e-2, seed = 0))]
fn subcollection_bound_experiment<'py>(
    py: Python<'py>,
    ds: Vec<i128>,
    f: &PyTestFunction,
    scale: f64,
    exponent: f64,
    step: f64,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let gs = fulls(py, &ds)?;
    let mu = obs::haar_integral(&f.0, 100_000, seed).value;
    let sched = QSchedule::LogPower { scale, exponent };
    let rep =
        py.detach(|| harness::subcollection_bound_experiment(&gs, sched, &f.0, mu, step, seed));
    to_py(py, &rep.map_err(err)?)
}

#[pyfunction]
#[pyo3(signature = (f, t_list, n_samples = 100_000, seed = 0))]
fn mixing_correlation<'py>(
    py: Python<'py>,
    f: &PyTestFunction,
    t_list: Vec<f64>,
    n_samples: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let rep = py.detach(|| {
        let mu = obs::haar_integral(&f.0, n_samples, seed).value;
        harness::mixing_correlation(&f.0, &t_list, n_samples, mu, seed)
    });
    to_py(py, &rep.map_err(err)?)
}

#[pyfunction]
#[pyo3(signature = (f, windows, n_samples = 100_000, step = 1e-2, seed = 0))]
fn ergodic_variance<'py>(
    py: Python<'py>,
    f: &PyTestFunction,
    windows: Vec<f64>,
    n_samples: usize,
    step: f64,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let rep = py.detach(|| {
        let mu = obs::haar_integral(&f.0, n_samples, seed).value;
        harness::ergodic_variance(&f.0, &windows, n_samples, step, mu, seed)
    });
    to_py(py, &rep.map_err(err)?)
}

/// Tube subcollections around the principal orbit of `orbit_d` over the
/// discriminants `n^2 + 4`, `n` odd in `[n_lo, n_hi]`.
#[pyfunction]
#[pyo3(signature = (n_lo, n_hi, orbit_d = 5, r = 0.05, probe_r0 = 0.1, n_samples = 100_000, seed = 0))]
#[allow(clippy::too_many_arguments)]
fn adversarial_experiment<'py>(
    py: Python<'py>,
    n_lo: u64,
    n_hi: u64,
    orbit_d: i128,
    r: f64,
    probe_r0: f64,
    n_samples: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let orbit = obs::principal_geodesic(orbit_d).map_err(err)?;
    let cfg = harness::AdversarialConfig {
        r,
        probe_r0,
        n_samples,
        seed,
        ..Default::default()
    };
    let ns = harness::n2plus4_family(n_lo, n_hi);
    let rep = py.detach(|| harness::adversarial_experiment(&ns, &orbit, &cfg));
    to_py(py, &rep.map_err(err)?)
}

#[pyfunction]
#[pyo3(signature = (radii, orbit_d = 5, n_starts = 16, dt = 1e-3, seed = 0))]
fn shadowing_experiment<'py>(
    py: Python<'py>,
    radii: Vec<f64>,
    orbit_d: i128,
    n_starts: usize,
    dt: f64,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let orbit = obs::principal_geodesic(orbit_d).map_err(err)?;
    let rep = py.detach(|| harness::shadowing_experiment(&orbit, &radii, n_starts, dt, seed));
    to_py(py, &rep.map_err(err)?)
}

#[pymodule]
fn pymodgeo(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyQuadForm>()?;
    m.add_class::<PyTestFunction>()?;
    m.add_class::<PyCollection>()?;
    m.add_function(wrap_pyfunction!(is_discriminant, m)?)?;
    m.add_function(wrap_pyfunction!(principal_form, m)?)?;
    m.add_function(wrap_pyfunction!(class_group, m)?)?;
    m.add_function(wrap_pyfunction!(class_number, m)?)?;
    m.add_function(wrap_pyfunction!(fundamental_pell, m)?)?;
    m.add_function(wrap_pyfunction!(regulator, m)?)?;
    m.add_function(wrap_pyfunction!(fundamental_log_spaced, m)?)?;
    m.add_function(wrap_pyfunction!(duke_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(subcollection_bound_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(mixing_correlation, m)?)?;
    m.add_function(wrap_pyfunction!(ergodic_variance, m)?)?;
    m.add_function(wrap_pyfunction!(adversarial_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(shadowing_experiment, m)?)?;
    Ok(())
}

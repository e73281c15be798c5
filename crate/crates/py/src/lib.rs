//! Python module `pyscrn`. Point sets are passed as lists of coordinate
//! lists; reports come back as JSON strings.

use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use pyo3::types::PyDict;
use scrn::construct::{
    build_shl_multiclass, build_shl_separator, build_thl_multiclass, build_thl_separator, ConstructOptions,
};
use scrn::data::{gen_polytope_blobs, gen_rings, gen_xor, BlobParams, LabeledDataset, RingParams};
use scrn::decompose::{full_drill_down, shl_decompose, thl_decompose};
use scrn::geometry::{self, SeparabilityVerdict};
use scrn::mm::MmTrace;
use scrn::train::{self, Init, LossReport, TrainConfig};
use scrn::{PointSet, DEFAULT_TOL};

create_exception!(
    pyscrn,
    ScrnError,
    PyException,
    "Raised for every library error; `args[0]` is the error kind."
);

fn err(e: scrn::ScrnError) -> PyErr {
    ScrnError::new_err((e.kind(), e.to_string()))
}

fn points(p: Vec<Vec<f64>>) -> PyResult<PointSet> {
    PointSet::from_points(&p).map_err(err)
}

/// A constructed or trained network.
#[pyclass(name = "Model", module = "pyscrn", from_py_object)]
#[derive(Clone)]
struct PyModel(scrn::Model);

#[pymethods]
impl PyModel {
    #[getter]
    fn kind(&self) -> &'static str {
        self.0.kind()
    }

    #[getter]
    fn n_in(&self) -> usize {
        self.0.n_in()
    }

    #[getter]
    fn n_out(&self) -> usize {
        self.0.n_out()
    }

    fn forward(&self, x: Vec<f64>) -> PyResult<Vec<f64>> {
        self.0.forward(&x).map_err(err)
    }

    /// Number of weights violating the non-positivity constraints.
    fn sign_violations(&self) -> usize {
        self.0.check_sign_constraints().len()
    }

    fn to_json(&self) -> PyResult<String> {
        self.0.to_json().map_err(err)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        scrn::Model::from_json(text).map(PyModel).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!(
            "Model(kind={:?}, n_in={}, n_out={})",
            self.0.kind(),
            self.0.n_in(),
            self.0.n_out()
        )
    }
}

fn verdict<'py>(py: Python<'py>, v: &SeparabilityVerdict) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("separable", v.separable)?;
    d.set_item("distance", v.distance)?;
    d.set_item("witness_w", v.witness_w.clone())?;
    d.set_item("witness_b", v.witness_b)?;
    d.set_item("closest_index", v.closest_index)?;
    Ok(d)
}

/// `(distance, nearest, coefficients)` from `q` to the hull of `points`.
#[pyfunction]
fn hull_distance(q: Vec<f64>, points: Vec<Vec<f64>>) -> PyResult<(f64, Vec<f64>, Vec<f64>)> {
    let p = geometry::hull_distance(&q, &self::points(points)?).map_err(err)?;
    Ok((p.distance, p.nearest, p.coefficients))
}

#[pyfunction]
#[pyo3(signature = (a, b, tol = DEFAULT_TOL))]
fn is_linearly_separable(py: Python<'_>, a: Vec<Vec<f64>>, b: Vec<Vec<f64>>, tol: f64) -> PyResult<Bound<'_, PyDict>> {
    let v = geometry::is_linearly_separable(&points(a)?, &points(b)?, tol).map_err(err)?;
    verdict(py, &v)
}

/// Whether `CH(a)` contains no point of `b`.
#[pyfunction]
#[pyo3(signature = (a, b, tol = DEFAULT_TOL))]
fn is_convexly_separable(py: Python<'_>, a: Vec<Vec<f64>>, b: Vec<Vec<f64>>, tol: f64) -> PyResult<Bound<'_, PyDict>> {
    let v = geometry::is_convexly_separable(&points(a)?, &points(b)?, tol).map_err(err)?;
    verdict(py, &v)
}

#[pyfunction]
#[pyo3(signature = (a, b, tol = DEFAULT_TOL))]
fn is_mutually_convexly_separable(a: Vec<Vec<f64>>, b: Vec<Vec<f64>>, tol: f64) -> PyResult<bool> {
    let v = geometry::is_mutually_convexly_separable(&points(a)?, &points(b)?, tol).map_err(err)?;
    Ok(v.separable)
}

#[pyfunction]
#[pyo3(signature = (pos, neg, tol = DEFAULT_TOL))]
fn build_shl(pos: Vec<Vec<f64>>, neg: Vec<Vec<f64>>, tol: f64) -> PyResult<PyModel> {
    let m = build_shl_separator(&points(pos)?, &points(neg)?, tol).map_err(err)?;
    Ok(PyModel(scrn::Model::Scrn1(m)))
}

#[pyfunction]
#[pyo3(signature = (pos, neg, tol = DEFAULT_TOL))]
fn build_thl(pos: Vec<Vec<f64>>, neg: Vec<Vec<f64>>, tol: f64) -> PyResult<PyModel> {
    let m = build_thl_separator(&points(pos)?, &points(neg)?, tol).map_err(err)?;
    Ok(PyModel(scrn::Model::Scrn2(m)))
}

/// One output per class; `layers` is 1 or 2.
#[pyfunction]
#[pyo3(signature = (classes, layers = 1, tol = DEFAULT_TOL))]
fn build_multiclass(classes: Vec<Vec<Vec<f64>>>, layers: usize, tol: f64) -> PyResult<PyModel> {
    let sets = classes.into_iter().map(points).collect::<PyResult<Vec<_>>>()?;
    let model = match layers {
        1 => scrn::Model::Scrn1(build_shl_multiclass(&sets, tol).map_err(err)?),
        2 => scrn::Model::Scrn2(build_thl_multiclass(&sets, tol).map_err(err)?),
        _ => return Err(err(scrn::ScrnError::Config("layers must be 1 or 2".into()))),
    };
    Ok(PyModel(model))
}

fn train_config(
    hidden: Vec<usize>,
    lam: f64,
    seed: u64,
    max_outer: usize,
    init: &str,
    warm: Option<PyModel>,
) -> PyResult<TrainConfig> {
    let init = match init {
        "random" => Init::Random { seed },
        "constructive" => Init::Constructive,
        "warm" => Init::Warm(
            warm.ok_or_else(|| err(scrn::ScrnError::Config("init='warm' needs a model".into())))?
                .0,
        ),
        other => return Err(err(scrn::ScrnError::Config(format!("unknown init '{other}'")))),
    };
    Ok(TrainConfig {
        lambda: lam,
        hidden,
        max_outer,
        init,
        ..TrainConfig::default()
    })
}

fn summary<'py>(py: Python<'py>, r: &LossReport, t: &MmTrace) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("j_pos", r.j_pos)?;
    d.set_item("j_neg", r.j_neg)?;
    d.set_item("r", r.r)?;
    d.set_item("total", r.total)?;
    d.set_item("accuracy", r.accuracy)?;
    let mut objectives = vec![t.initial_objective];
    objectives.extend(t.iterations.iter().map(|i| i.objective));
    d.set_item("objectives", objectives)?;
    d.set_item("converged", t.converged)?;
    Ok(d)
}

/// Returns `(model, report)`; `report["objectives"]` starts at the initial point.
#[pyfunction]
#[pyo3(signature = (pos, neg, hidden = 2, lam = train::DEFAULT_LAMBDA, seed = 0, max_outer = 100, init = "random", model = None))]
#[allow(clippy::too_many_arguments)]
fn train_shl<'py>(
    py: Python<'py>,
    pos: Vec<Vec<f64>>,
    neg: Vec<Vec<f64>>,
    hidden: usize,
    lam: f64,
    seed: u64,
    max_outer: usize,
    init: &str,
    model: Option<PyModel>,
) -> PyResult<(PyModel, Bound<'py, PyDict>)> {
    let cfg = train_config(vec![hidden], lam, seed, max_outer, init, model)?;
    let r = train::train_shl(&points(pos)?, &points(neg)?, &cfg).map_err(err)?;
    let s = summary(py, &r.report, &r.trace)?;
    Ok((PyModel(scrn::Model::CanonicalShl(r.model)), s))
}

#[pyfunction]
#[pyo3(signature = (pos, neg, hidden = (4, 2), lam = train::DEFAULT_LAMBDA, seed = 0, max_outer = 100, init = "random", model = None))]
#[allow(clippy::too_many_arguments)]
fn train_thl<'py>(
    py: Python<'py>,
    pos: Vec<Vec<f64>>,
    neg: Vec<Vec<f64>>,
    hidden: (usize, usize),
    lam: f64,
    seed: u64,
    max_outer: usize,
    init: &str,
    model: Option<PyModel>,
) -> PyResult<(PyModel, Bound<'py, PyDict>)> {
    let cfg = train_config(vec![hidden.0, hidden.1], lam, seed, max_outer, init, model)?;
    let r = train::train_thl(&points(pos)?, &points(neg)?, &cfg).map_err(err)?;
    let s = summary(py, &r.report, &r.trace)?;
    Ok((PyModel(scrn::Model::Scrn2(r.model.to_scrn2())), s))
}

/// Report JSON for `mode` in `"shl"`, `"thl"`, `"drill"`.
#[pyfunction]
#[pyo3(signature = (model, pos, neg, mode = "shl", tol = DEFAULT_TOL))]
fn decompose(model: &PyModel, pos: Vec<Vec<f64>>, neg: Vec<Vec<f64>>, mode: &str, tol: f64) -> PyResult<String> {
    let (pos, neg) = (points(pos)?, points(neg)?);
    let wrong = || {
        err(scrn::ScrnError::Config(format!(
            "mode '{mode}' does not fit a {} model",
            model.0.kind()
        )))
    };
    let text = match (mode, &model.0) {
        ("shl", scrn::Model::Scrn1(m)) => shl_decompose(m, &pos, &neg).and_then(|r| r.to_json()),
        ("shl", scrn::Model::CanonicalShl(m)) => shl_decompose(&m.to_scrn1(), &pos, &neg).and_then(|r| r.to_json()),
        ("thl", scrn::Model::Scrn2(m)) => thl_decompose(m, &pos, &neg, tol).and_then(|r| r.to_json()),
        ("drill", scrn::Model::Scrn2(m)) => {
            let opts = ConstructOptions { tol, merge_nodes: true };
            full_drill_down(&pos, &neg, m, &opts).and_then(|r| r.to_json())
        }
        _ => return Err(wrong()),
    };
    text.map_err(err)
}

type Dataset = (Vec<Vec<f64>>, Vec<usize>);

fn split(d: LabeledDataset) -> Dataset {
    (d.points.to_vecs(), d.labels)
}

#[pyfunction(name = "gen_xor")]
fn py_gen_xor() -> Dataset {
    split(gen_xor())
}

#[pyfunction(name = "gen_rings")]
#[pyo3(signature = (n_inner = 8, n_outer = 8, r_inner = 1.0, r_outer = 3.0, include_center = true, jitter = 0.1, seed = 0))]
fn py_gen_rings(
    n_inner: usize,
    n_outer: usize,
    r_inner: f64,
    r_outer: f64,
    include_center: bool,
    jitter: f64,
    seed: u64,
) -> PyResult<Dataset> {
    let p = RingParams {
        n_inner,
        n_outer,
        r_inner,
        r_outer,
        include_center,
        jitter,
        seed,
    };
    gen_rings(&p).map(split).map_err(err)
}

#[pyfunction(name = "gen_blobs")]
#[pyo3(signature = (classes = 3, dim = 2, points_per_class = 20, separation = 4.0, seed = 0))]
fn py_gen_blobs(classes: usize, dim: usize, points_per_class: usize, separation: f64, seed: u64) -> PyResult<Dataset> {
    let p = BlobParams {
        classes,
        dim,
        points_per_class,
        separation,
        seed,
    };
    gen_polytope_blobs(&p).map(split).map_err(err)
}

#[pymodule]
fn pyscrn(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("ScrnError", m.py().get_type::<ScrnError>())?;
    m.add("DEFAULT_TOL", DEFAULT_TOL)?;
    m.add_class::<PyModel>()?;
    m.add_function(wrap_pyfunction!(hull_distance, m)?)?;
    m.add_function(wrap_pyfunction!(is_linearly_separable, m)?)?;
    m.add_function(wrap_pyfunction!(is_convexly_separable, m)?)?;
    m.add_function(wrap_pyfunction!(is_mutually_convexly_separable, m)?)?;
    m.add_function(wrap_pyfunction!(build_shl, m)?)?;
    m.add_function(wrap_pyfunction!(build_thl, m)?)?;
    m.add_function(wrap_pyfunction!(build_multiclass, m)?)?;
    m.add_function(wrap_pyfunction!(train_shl, m)?)?;
    m.add_function(wrap_pyfunction!(train_thl, m)?)?;
    m.add_function(wrap_pyfunction!(decompose, m)?)?;
    m.add_function(wrap_pyfunction!(py_gen_xor, m)?)?;
    m.add_function(wrap_pyfunction!(py_gen_rings, m)?)?;
    m.add_function(wrap_pyfunction!(py_gen_blobs, m)?)?;
    Ok(())
}

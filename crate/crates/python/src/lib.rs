//! Python bindings for the qgeo core library.

use nalgebra::{DMatrix, Scalar};
use num_complex::Complex64;
use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use qgeo::adaptive::{self, AdaptiveTrace, Noise, PeakCriterion, StepPolicy, StepSchedule};
use qgeo::geometry::{self, GridSpec, ProbeChoice};
use qgeo::models::{self, CanonicalParams, SshParams, TptModel};
use qgeo::verify::{self, Fault, VerifyOptions};
use qgeo::{control, HamiltonianField, QgeoError as CoreError, Vec3};

create_exception!(qgeo_py, QgeoError, PyValueError, "Raised for every error reported by the core library.");

fn err(e: CoreError) -> PyErr {
    QgeoError::new_err(e.to_string())
}

fn rows<T: Scalar>(m: &DMatrix<T>) -> Vec<Vec<T>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)].clone()).collect()).collect()
}

fn vec3(v: &[f64]) -> PyResult<Vec3> {
    match v {
        [x, y, z] => Ok(Vec3::new(*x, *y, *z)),
        _ => Err(QgeoError::new_err(format!("expected 3 components, got {}", v.len()))),
    }
}

enum Field {
    Canonical(models::CanonicalField),
    Ssh(models::SshField),
}

/// A model Hamiltonian X(λ)·J over named parameters.
#[pyclass(frozen)]
struct Model {
    field: Field,
}

impl Model {
    fn f(&self) -> &dyn HamiltonianField {
        match &self.field {
            Field::Canonical(f) => f,
            Field::Ssh(f) => f,
        }
    }
}

#[pymethods]
impl Model {
    /// Canonical model over (theta, phi, r) with energy scale h0.
    #[staticmethod]
    #[pyo3(signature = (h0=1.0))]
    fn canonical(h0: f64) -> PyResult<Self> {
        if !(h0 > 0.0 && h0.is_finite()) {
            return Err(QgeoError::new_err(format!("h0 must be positive, got {h0}")));
        }
        Ok(Model { field: Field::Canonical(models::canonical_field(h0)) })
    }

    /// SSH model over (v, w, k).
    #[staticmethod]
    fn ssh() -> Self {
        Model { field: Field::Ssh(models::ssh_field()) }
    }

    #[getter]
    fn names(&self) -> Vec<String> {
        self.f().names().to_vec()
    }

    /// X(λ) at `point`.
    fn field(&self, point: Vec<f64>) -> PyResult<[f64; 3]> {
        Ok(self.f().eval(&point).map_err(err)?.to_array())
    }

    /// ∂X/∂λ_index at `point`.
    fn partial(&self, point: Vec<f64>, index: usize) -> PyResult<[f64; 3]> {
        Ok(self.f().partial(&point, index).map_err(err)?.to_array())
    }

    /// All geometric quantities at `point`. `probe` is "ground",
    /// "optimal:<param>" or a Bloch vector.
    #[pyo3(signature = (point, t, probe=None, repetitions=1))]
    fn geometry(&self, point: Vec<f64>, t: f64, probe: Option<&Bound<'_, PyAny>>, repetitions: u32) -> PyResult<Geometry> {
        let f = self.f();
        let choice = match probe {
            None => ProbeChoice::Ground,
            Some(p) => match p.extract::<String>() {
                Ok(s) if s == "ground" => ProbeChoice::Ground,
                Ok(s) => match s.strip_prefix("optimal:") {
                    Some(name) => ProbeChoice::OptimalFor(f.index_of(name).map_err(err)?),
                    None => return Err(QgeoError::new_err(format!("unknown probe '{s}'"))),
                },
                Err(_) => ProbeChoice::Bloch(vec3(&p.extract::<Vec<f64>>()?)?),
            },
        };
        let r = geometry::resolve_probe(f, &point, t, choice).map_err(err)?;
        let rep = geometry::geometry_report(f, &point, r, t, repetitions).map_err(err)?;
        Ok(Geometry {
            names: rep.names,
            probe: r.to_array(),
            qgt: rows(&rep.qgt),
            qmt: rows(&rep.qmt),
            berry: rows(&rep.berry),
            fom: rows(&rep.fom),
            qfim: rows(&rep.qfim),
            qcrb: rows(&rep.qcrb),
            repetitions: rep.repetitions,
            singular_directions: rep.singular_directions.iter().map(|v| v.iter().copied().collect()).collect(),
        })
    }

    /// QMT with perfect control and a maximally entangled probe, T²/4 ∂X·∂X.
    fn control_qmt(&self, point: Vec<f64>, t: f64) -> PyResult<Vec<Vec<f64>>> {
        Ok(rows(&control::control_qmt_matrix(self.f(), &point, t).map_err(err)?))
    }

    fn __repr__(&self) -> String {
        match &self.field {
            Field::Canonical(c) => format!("Model.canonical(h0={})", c.h0),
            Field::Ssh(_) => "Model.ssh()".into(),
        }
    }
}

/// Geometry at one point. Matrices are nested lists indexed like `names`.
#[pyclass(frozen, get_all)]
struct Geometry {
    names: Vec<String>,
    probe: [f64; 3],
    qgt: Vec<Vec<Complex64>>,
    qmt: Vec<Vec<f64>>,
    berry: Vec<Vec<f64>>,
    fom: Vec<Vec<f64>>,
    qfim: Vec<Vec<f64>>,
    qcrb: Vec<Vec<f64>>,
    repetitions: u32,
    singular_directions: Vec<Vec<f64>>,
}

/// Maximum QMT over probes for (theta, phi, r).
#[pyfunction]
#[pyo3(signature = (theta, phi, r, t, h0=1.0))]
fn max_qmt_canonical(theta: f64, phi: f64, r: f64, t: f64, h0: f64) -> PyResult<[f64; 3]> {
    let p = CanonicalParams::with_h0(theta, phi, r, h0).map_err(err)?;
    models::max_qmt_canonical(&p, t).map_err(err)
}

/// Maximum QMT over probes for (v, w, k).
#[pyfunction]
fn max_qmt_ssh(v: f64, w: f64, k: f64, t: f64) -> PyResult<[f64; 3]> {
    let p = SshParams::new(v, w, k).map_err(err)?;
    models::max_qmt_ssh(&p, t).map_err(err)
}

/// Closed-form coarse-grained Chern number of the canonical model.
#[pyfunction]
fn coarse_chern_canonical(r: f64) -> PyResult<f64> {
    models::coarse_chern_canonical(r).map_err(err)
}

/// Quadrature of the coarse-grained Berry curvature; returns (value, converged).
#[pyfunction]
#[pyo3(signature = (r, nx=400, ny=400))]
fn coarse_chern_canonical_quadrature(r: f64, nx: usize, ny: usize) -> PyResult<(f64, bool)> {
    let c = models::coarse_chern_canonical_quadrature(r, GridSpec { nx, ny }).map_err(err)?;
    Ok((c.value, c.converged))
}

/// SSH winding number; returns (closed_form, quadrature).
#[pyfunction]
#[pyo3(signature = (v, w, nodes=4096))]
fn winding_number(v: f64, w: f64, nodes: usize) -> PyResult<(f64, f64)> {
    let e = geometry::winding_number(v, w, nodes).map_err(err)?;
    Ok((e.closed_form, e.quadrature))
}

#[pyclass(frozen, get_all, skip_from_py_object)]
#[derive(Clone)]
struct TraceRecord {
    iteration: usize,
    params: [f64; 2],
    accumulated: [f64; 2],
    qmt: f64,
    residual_norm: f64,
    estimates: [f64; 2],
    deviations: [f64; 2],
    peak: bool,
}

/// Adaptive run: one record per measured point, the first at the initial values.
#[pyclass(frozen, get_all)]
struct Trace {
    names: [String; 2],
    records: Vec<TraceRecord>,
    estimates: [f64; 2],
    deviations: [f64; 2],
    converged: bool,
}

impl From<AdaptiveTrace> for Trace {
    fn from(t: AdaptiveTrace) -> Self {
        Trace {
            names: t.names.map(String::from),
            records: t
                .records
                .iter()
                .map(|r| TraceRecord {
                    iteration: r.iteration,
                    params: r.params,
                    accumulated: r.accumulated,
                    qmt: r.qmt,
                    residual_norm: r.residual_norm,
                    estimates: r.estimates,
                    deviations: r.deviations,
                    peak: r.peak,
                })
                .collect(),
            estimates: t.estimates,
            deviations: t.deviations,
            converged: t.converged,
        }
    }
}

/// "canonical" uses `fixed` as phi0, "ssh" uses it as w0.
fn tpt_model(model: &str, fixed: Option<f64>) -> PyResult<TptModel> {
    match model {
        "canonical" => Ok(TptModel::Canonical { phi0: fixed.unwrap_or(0.0), h0: 1.0 }),
        "ssh" => Ok(TptModel::Ssh { w0: fixed.unwrap_or(1.0) }),
        _ => Err(QgeoError::new_err(format!("unknown model '{model}', expected canonical or ssh"))),
    }
}

fn criterion(m: &TptModel, t: f64, eta: Option<f64>) -> PyResult<PeakCriterion> {
    let c = PeakCriterion::for_model(m, t);
    match eta {
        Some(e) => c.with_eta(e).map_err(err),
        None => Ok(c),
    }
}

/// Replays a step schedule from hidden initial values (theta, r) or (k, v).
#[pyfunction]
#[pyo3(signature = (model, initial, first, second, t, fixed=None, eta=None, noise_sigma=0.0, seed=0))]
#[allow(clippy::too_many_arguments)]
fn run_schedule(
    model: &str,
    initial: [f64; 2],
    first: Vec<f64>,
    second: Vec<f64>,
    t: f64,
    fixed: Option<f64>,
    eta: Option<f64>,
    noise_sigma: f64,
    seed: u64,
) -> PyResult<Trace> {
    let m = tpt_model(model, fixed)?;
    let s = StepSchedule::new(first, second).map_err(err)?;
    let c = criterion(&m, t, eta)?;
    let tr = adaptive::run_schedule(m, initial, &s, t, c, Noise { sigma: noise_sigma, seed }).map_err(err)?;
    Ok(tr.into())
}

/// Hill climb toward the transition with a "fixed" or "shrinking" step policy.
#[pyfunction]
#[pyo3(signature = (model, initial, t, policy="shrinking", step=0.3, resolution=1e-4, max_iters=1000, fixed=None, eta=None, noise_sigma=0.0, seed=0))]
#[allow(clippy::too_many_arguments)]
fn auto_search(
    model: &str,
    initial: [f64; 2],
    t: f64,
    policy: &str,
    step: f64,
    resolution: f64,
    max_iters: usize,
    fixed: Option<f64>,
    eta: Option<f64>,
    noise_sigma: f64,
    seed: u64,
) -> PyResult<Trace> {
    let m = tpt_model(model, fixed)?;
    let p = match policy {
        "fixed" => StepPolicy::Fixed { step },
        "shrinking" => StepPolicy::Shrinking { initial: step, resolution },
        _ => return Err(QgeoError::new_err(format!("unknown policy '{policy}'"))),
    };
    let c = criterion(&m, t, eta)?;
    let tr = adaptive::auto_search(m, initial, p, c, max_iters, t, Noise { sigma: noise_sigma, seed }).map_err(err)?;
    Ok(tr.into())
}

/// Closed forms against oracles; returns (name, samples, max_deviation, tolerance, passed) tuples.
#[pyfunction]
#[pyo3(signature = (points=100, seed=20240611, include_control=true, flip_berry_sign=false))]
fn run_verification(
    points: usize,
    seed: u64,
    include_control: bool,
    flip_berry_sign: bool,
) -> Vec<(String, usize, f64, f64, bool)> {
    let opts = VerifyOptions {
        points,
        seed,
        include_control,
        fault: if flip_berry_sign { Fault::FlipBerrySign } else { Fault::None },
        ..VerifyOptions::default()
    };
    verify::run_verification(&opts)
        .checks
        .into_iter()
        .map(|c| (c.name, c.samples, c.max_deviation, c.tolerance, c.passed))
        .collect()
}

#[pymodule]
fn qgeo_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("QgeoError", m.py().get_type::<QgeoError>())?;
    m.add_class::<Model>()?;
    m.add_class::<Geometry>()?;
    m.add_class::<Trace>()?;
    m.add_class::<TraceRecord>()?;
    m.add_function(wrap_pyfunction!(max_qmt_canonical, m)?)?;
    m.add_function(wrap_pyfunction!(max_qmt_ssh, m)?)?;
    m.add_function(wrap_pyfunction!(coarse_chern_canonical, m)?)?;
    m.add_function(wrap_pyfunction!(coarse_chern_canonical_quadrature, m)?)?;
    m.add_function(wrap_pyfunction!(winding_number, m)?)?;
    m.add_function(wrap_pyfunction!(run_schedule, m)?)?;
    m.add_function(wrap_pyfunction!(auto_search, m)?)?;
    m.add_function(wrap_pyfunction!(run_verification, m)?)?;
    Ok(())
}

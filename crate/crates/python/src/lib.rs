//! Python bindings: `import vinolab`.

use num_complex::Complex64;
use pyo3::exceptions::{PyKeyError, PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use serde::Serialize;

use vinolab_core::decoupling::{self as dec, MomentOptions};
use vinolab_core::geometry::{self as geo, Interval, Role, Scale};
use vinolab_core::harness::{self, ConfigBuilder};
use vinolab_core::incidence::{self as inc, L4Method};
use vinolab_core::{partition, Error, Vec3};

fn to_py_err(e: Error) -> PyErr {
    match e {
        Error::UnknownExperiment(_) => PyKeyError::new_err(e.to_string()),
        Error::Io(_) => PyOSError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

trait OrPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> OrPy<T> for vinolab_core::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(to_py_err)
    }
}

/// Any serializable value as plain Python objects, through `json.loads`.
fn to_python<T: Serialize>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

fn vec3(v: [f64; 3]) -> Vec3 {
    Vec3::new(v[0], v[1], v[2])
}

fn arr(v: &Vec3) -> [f64; 3] {
    [v.x, v.y, v.z]
}

fn rows(m: &vinolab_core::Mat3) -> [[f64; 3]; 3] {
    [0, 1, 2].map(|i| [m[(i, 0)], m[(i, 1)], m[(i, 2)]])
}

fn parse_role(name: &str) -> PyResult<Role> {
    Ok(match name {
        "freq-plank" => Role::FreqPlank,
        "spatial-plank" => Role::SpatialPlank,
        "tube" => Role::Tube,
        "plate" => Role::Plate,
        "small-plank" => Role::SmallPlank,
        "fat-plate" => Role::FatPlate,
        "box-b" => Role::BoxB,
        "box-sigma" => Role::BoxSigma,
        "box-tau" => Role::BoxTau,
        "box-lambda" => Role::BoxLambda,
        "box-u" => Role::BoxU,
        "plate-phi" => Role::PlatePhi,
        "cube-delta" => Role::CubeDelta,
        "cube-q" => Role::CubeQ,
        "cube-small-q" => Role::CubeSmallQ,
        other => return Err(PyValueError::new_err(format!("unknown box role `{other}`"))),
    })
}

/// Frenet frame of the twisted cubic at `c`.
#[pyclass(name = "Frame", frozen, module = "vinolab")]
struct PyFrame(geo::Frame);

#[pymethods]
impl PyFrame {
    #[getter]
    fn c(&self) -> f64 {
        self.0.c
    }
    #[getter]
    fn tangent(&self) -> [f64; 3] {
        arr(&self.0.tangent)
    }
    #[getter]
    fn normal(&self) -> [f64; 3] {
        arr(&self.0.normal)
    }
    #[getter]
    fn binormal(&self) -> [f64; 3] {
        arr(&self.0.binormal)
    }
    fn __repr__(&self) -> String {
        format!("Frame(c={})", self.0.c)
    }
}

#[pyfunction]
fn frenet_frame(c: f64) -> PyResult<PyFrame> {
    Ok(PyFrame(geo::frenet_frame(c).py()?))
}

/// The unnormalized normal formula that is only orthogonal to the tangent up to `16 c^5`.
#[pyfunction]
fn approx_normal(c: f64) -> [f64; 3] {
    arr(&geo::approx_normal(c))
}

#[pyclass(name = "ShearMap", frozen, module = "vinolab")]
struct PyShearMap(geo::ShearMap);

#[pymethods]
impl PyShearMap {
    #[new]
    fn new(sigma: f64, c: f64) -> PyResult<Self> {
        Ok(PyShearMap(geo::ShearMap::new(sigma, c).py()?))
    }
    fn apply(&self, w: [f64; 3]) -> [f64; 3] {
        arr(&self.0.apply(&vec3(w)))
    }
    fn apply_dual(&self, x: [f64; 3]) -> [f64; 3] {
        arr(&self.0.apply_dual(&vec3(x)))
    }
    #[getter]
    fn forward(&self) -> [[f64; 3]; 3] {
        rows(&self.0.forward)
    }
    #[getter]
    fn inverse_transpose(&self) -> [[f64; 3]; 3] {
        rows(&self.0.inverse_transpose)
    }
    fn det(&self) -> f64 {
        self.0.det()
    }
}

#[pyclass(name = "OrientedBox", frozen, from_py_object, module = "vinolab")]
#[derive(Clone)]
struct PyBox(geo::OrientedBox);

#[pymethods]
impl PyBox {
    /// Box with the standard dimensions of `role`. Give `R` for spatial and
    /// frequency boxes, `delta` for plates, and `R` with `sigma` for small
    /// planks and union boxes.
    #[staticmethod]
    #[pyo3(signature = (role, lo=0.0, hi=None, R=None, delta=None, sigma=None, center=[0.0, 0.0, 0.0]))]
    #[allow(non_snake_case)]
    fn make(
        role: &str,
        lo: f64,
        hi: Option<f64>,
        R: Option<f64>,
        delta: Option<f64>,
        sigma: Option<f64>,
        center: [f64; 3],
    ) -> PyResult<Self> {
        let scale = match (R, delta, sigma) {
            (Some(r), None, Some(sigma)) => Scale::SmallCap { r, sigma },
            (Some(r), None, None) => Scale::R(r),
            (None, Some(d), None) => Scale::Delta(d),
            _ => return Err(PyValueError::new_err("give R, R with sigma, or delta")),
        };
        let interval = Interval::new(lo, hi.unwrap_or(lo)).py()?;
        Ok(PyBox(geo::make_box(parse_role(role)?, Some(interval), scale, vec3(center)).py()?))
    }

    #[getter]
    fn center(&self) -> [f64; 3] {
        arr(&self.0.center)
    }
    #[getter]
    fn axes(&self) -> [[f64; 3]; 3] {
        self.0.axes.each_ref().map(arr)
    }
    #[getter]
    fn lengths(&self) -> [f64; 3] {
        self.0.lengths
    }
    #[getter]
    fn role(&self) -> String {
        format!("{:?}", self.0.role)
    }
    fn volume(&self) -> f64 {
        self.0.volume()
    }
    #[pyo3(signature = (x, factor=1.0))]
    fn contains(&self, x: [f64; 3], factor: f64) -> bool {
        self.0.contains_scaled(&vec3(x), factor)
    }
    fn vertices(&self) -> Vec<[f64; 3]> {
        self.0.vertices().iter().map(arr).collect()
    }
    fn dual(&self) -> PyResult<Self> {
        Ok(PyBox(geo::dual_box(&self.0).py()?))
    }
    fn translated(&self, v: [f64; 3]) -> Self {
        PyBox(self.0.translated(&vec3(v)))
    }
    fn __repr__(&self) -> String {
        format!("OrientedBox({:?}, lengths={:?})", self.0.role, self.0.lengths)
    }
}

/// The sheared small plank at angle `sigma` and shift `s`.
#[pyfunction]
#[allow(non_snake_case)]
fn small_plank(R: f64, sigma: f64, s: f64) -> PyResult<PyBox> {
    Ok(PyBox(geo::small_plank(R, sigma, s).py()?))
}

/// Exact volume of the common part of the boxes.
#[pyfunction]
fn intersection_volume(boxes: Vec<PyBox>) -> PyResult<f64> {
    let boxes: Vec<geo::OrientedBox> = boxes.into_iter().map(|b| b.0).collect();
    Ok(geo::intersect_boxes(&boxes).py()?.volume())
}

#[pyfunction]
#[allow(non_snake_case)]
fn classify_point(py: Python<'_>, w: [f64; 3], R: f64) -> PyResult<Py<PyAny>> {
    to_python(py, &partition::classify_point(&vec3(w), R).py()?)
}

#[pyfunction]
#[pyo3(signature = (R, samples=100_000, seed=0, factor=partition::DEFAULT_FACTOR, layer_factor=1.0))]
#[allow(non_snake_case)]
fn verify_partition_lemmas(
    py: Python<'_>,
    R: f64,
    samples: usize,
    seed: u64,
    factor: f64,
    layer_factor: f64,
) -> PyResult<Py<PyAny>> {
    let rep = py.detach(|| partition::verify_partition_lemmas_with(R, samples, seed, factor, layer_factor)).py()?;
    to_python(py, &rep)
}

/// Volume of three origin-centered planks of width `delta` starting at `c`.
#[pyfunction]
fn triple_volume(delta: f64, c: [f64; 3]) -> PyResult<f64> {
    inc::triple_volume(delta, c).py()
}

/// Fourth and first moments of the origin-centered plank family at `delta`.
#[pyfunction]
#[pyo3(signature = (delta, method="exact", samples=100_000, seed=0))]
fn l4_plank_sum(py: Python<'_>, delta: f64, method: &str, samples: usize, seed: u64) -> PyResult<Py<PyAny>> {
    let method = match method {
        "exact" => L4Method::Exact,
        "monte-carlo" => L4Method::MonteCarlo { samples, seed },
        other => return Err(PyValueError::new_err(format!("unknown method `{other}`"))),
    };
    let family = inc::origin_family(delta).py()?;
    let s = py.detach(|| inc::l4_plank_sum(&family, method)).py()?;
    let d = PyDict::new(py);
    d.set_item("l4", s.l4)?;
    d.set_item("l1", s.l1)?;
    d.set_item("stderr", s.stderr)?;
    d.set_item("work", s.work)?;
    d.set_item("ratio", s.ratio())?;
    Ok(d.into_any().unbind())
}

/// `F(x) = sum_J a_J e(x . xi_J)` over `R^alpha` caps.
#[pyclass(name = "ExpSum", frozen, module = "vinolab")]
struct PyExpSum(dec::ExpSum);

#[pymethods]
impl PyExpSum {
    #[new]
    #[allow(non_snake_case)]
    fn new(R: f64, alpha: f64, coeffs: Vec<Complex64>) -> PyResult<Self> {
        Ok(PyExpSum(dec::ExpSum::new(R, alpha, coeffs).py()?))
    }
    #[staticmethod]
    #[allow(non_snake_case)]
    fn constant(R: f64, alpha: f64) -> PyResult<Self> {
        Ok(PyExpSum(dec::ExpSum::constant(R, alpha).py()?))
    }
    #[staticmethod]
    #[allow(non_snake_case)]
    fn random_phases(R: f64, alpha: f64, seed: u64) -> PyResult<Self> {
        Ok(PyExpSum(dec::ExpSum::random_phases(R, alpha, seed).py()?))
    }
    fn with_jitter(&self, seed: u64) -> Self {
        PyExpSum(self.0.clone().with_jitter(seed))
    }
    #[getter]
    #[allow(non_snake_case)]
    fn R(&self) -> f64 {
        self.0.r
    }
    #[getter]
    fn alpha(&self) -> f64 {
        self.0.alpha
    }
    #[getter]
    fn coeffs(&self) -> Vec<Complex64> {
        self.0.coeffs.clone()
    }
    #[getter]
    fn freqs(&self) -> Vec<[f64; 3]> {
        self.0.freqs.iter().map(arr).collect()
    }
    fn __len__(&self) -> usize {
        self.0.len()
    }
    fn eval(&self, points: Vec<[f64; 3]>) -> Vec<Complex64> {
        let pts: Vec<Vec3> = points.into_iter().map(vec3).collect();
        dec::eval_exp_sum(&self.0, &pts)
    }
}

fn moment_options(samples: usize, seed: u64, sampler: &str, domain: &str) -> PyResult<MomentOptions> {
    Ok(MomentOptions {
        sampler: sampler.parse().py()?,
        domain: domain.parse().py()?,
        samples,
        seed,
        ..Default::default()
    })
}

/// Normalized `L^p` average of `F` over the ball of radius `R` (default: the sum's `R`).
#[pyfunction]
#[pyo3(signature = (sum, p, R=None, samples=100_000, seed=0, sampler="monte-carlo", domain="cube"))]
#[allow(non_snake_case, clippy::too_many_arguments)]
fn lp_moment(
    py: Python<'_>,
    sum: &PyExpSum,
    p: f64,
    R: Option<f64>,
    samples: usize,
    seed: u64,
    sampler: &str,
    domain: &str,
) -> PyResult<Py<PyAny>> {
    let opts = moment_options(samples, seed, sampler, domain)?;
    let r = R.unwrap_or(sum.0.r);
    let est = py.detach(|| dec::lp_moment(&sum.0, p, r, &opts)).py()?;
    to_python(py, &est)
}

#[pyfunction]
#[pyo3(signature = (sum, p, samples=100_000, seed=0, sampler="monte-carlo", domain="cube"))]
fn decoupling_ratio(
    py: Python<'_>,
    sum: &PyExpSum,
    p: f64,
    samples: usize,
    seed: u64,
    sampler: &str,
    domain: &str,
) -> PyResult<Py<PyAny>> {
    let opts = moment_options(samples, seed, sampler, domain)?;
    let est = py.detach(|| dec::decoupling_ratio(&sum.0, p, &opts)).py()?;
    to_python(py, &est)
}

#[pyfunction]
fn sigma_pd(p: f64, d: usize) -> PyResult<f64> {
    dec::sigma_pd(p, d).py()
}

#[pyfunction]
fn critical_p_bound(d: usize) -> PyResult<f64> {
    dec::critical_p_bound(d).py()
}

/// Pigeonholing parameters of a random packet ensemble at scale `R = 64^k`.
#[pyfunction]
#[allow(non_snake_case)]
fn pigeonhole_random(py: Python<'_>, R: f64, seed: u64) -> PyResult<Py<PyAny>> {
    let out = py.detach(|| dec::random_ensemble(R, seed).and_then(|e| dec::pigeonhole_analysis(&e))).py()?;
    to_python(py, &out.params)
}

/// `(id, module, description)` for every registered experiment.
#[pyfunction]
fn list_experiments() -> Vec<(&'static str, &'static str, &'static str)> {
    harness::list_experiments()
}

/// Runs an experiment; `params` override its defaults. Returns the report.
#[pyfunction]
#[pyo3(signature = (experiment, params=None))]
fn run_experiment(py: Python<'_>, experiment: &str, params: Option<&Bound<'_, PyDict>>) -> PyResult<Py<PyAny>> {
    let mut b = ConfigBuilder::new().set("experiment", experiment);
    if let Some(params) = params {
        for (k, v) in params.iter() {
            b = b.set(k.extract::<String>()?, v.str()?.to_string());
        }
    }
    let config = b.build().py()?;
    let report = py.detach(|| harness::run(&config)).py()?;
    to_python(py, &report)
}

#[pymodule]
fn vinolab(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyFrame>()?;
    m.add_class::<PyShearMap>()?;
    m.add_class::<PyBox>()?;
    m.add_class::<PyExpSum>()?;
    m.add_function(wrap_pyfunction!(frenet_frame, m)?)?;
    m.add_function(wrap_pyfunction!(approx_normal, m)?)?;
    m.add_function(wrap_pyfunction!(small_plank, m)?)?;
    m.add_function(wrap_pyfunction!(intersection_volume, m)?)?;
    m.add_function(wrap_pyfunction!(classify_point, m)?)?;
    m.add_function(wrap_pyfunction!(verify_partition_lemmas, m)?)?;
    m.add_function(wrap_pyfunction!(triple_volume, m)?)?;
    m.add_function(wrap_pyfunction!(l4_plank_sum, m)?)?;
    m.add_function(wrap_pyfunction!(lp_moment, m)?)?;
    m.add_function(wrap_pyfunction!(decoupling_ratio, m)?)?;
    m.add_function(wrap_pyfunction!(sigma_pd, m)?)?;
    m.add_function(wrap_pyfunction!(critical_p_bound, m)?)?;
    m.add_function(wrap_pyfunction!(pigeonhole_random, m)?)?;
    m.add_function(wrap_pyfunction!(list_experiments, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}

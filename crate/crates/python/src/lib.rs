//! Python bindings: waves, spectral verdicts, critical curves, decompositions and lattice sums.

use core_crate::blochop::{self, CriticalCurve, StabilityVerdict};
use core_crate::cli::pipeline::{self as pl};
use core_crate::cli::{FieldFamily, RunConfig};
use core_crate::riemann::{self, GaussianSumInput};
use core_crate::semigroup;
use core_crate::wave::{self as wv, LleParams};
use core_crate::Error;
use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use std::collections::BTreeMap;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::InvalidParams(_)
        | Error::Precondition(_)
        | Error::GridMismatch { .. }
        | Error::TruncationTooSmall { .. }
        | Error::Format(_) => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn to_json<T: serde::Serialize>(v: &T) -> PyResult<String> {
    serde_json::to_string(v).map_err(|e| PyValueError::new_err(e.to_string()))
}

fn from_json<T: serde::de::DeserializeOwned>(s: &str) -> PyResult<T> {
    serde_json::from_str(s).map_err(|e| PyValueError::new_err(e.to_string()))
}

/// A T-periodic stationary profile stored as Fourier coefficients c_{-M..M}.
#[pyclass(name = "PeriodicWave", module = "lle_bloch", frozen)]
struct PyWave(wv::PeriodicWave);

#[pymethods]
impl PyWave {
    /// Newton continuation from the small-amplitude seed at distance `mu` above threshold.
    #[staticmethod]
    #[pyo3(signature = (alpha, mu, m=32, tol=1e-11, max_iter=50))]
    fn solve(alpha: f64, mu: f64, m: usize, tol: f64, max_iter: usize) -> PyResult<Self> {
        let seed = wv::bifurcation_seed(alpha, mu, m).map_err(py_err)?;
        wv::newton_solve(&seed, tol, max_iter).map(PyWave).map_err(py_err)
    }

    /// The selected constant state carried on period `period`.
    #[staticmethod]
    #[pyo3(signature = (alpha, f, beta=-1.0, period=std::f64::consts::TAU, m=8))]
    fn constant(alpha: f64, f: f64, beta: f64, period: f64, m: usize) -> PyResult<Self> {
        let p = LleParams::new(alpha, beta, f).map_err(py_err)?;
        let value = wv::constant_state(&p).map_err(py_err)?.selected();
        Ok(PyWave(wv::PeriodicWave::constant(p, value, period, m)))
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        wv::PeriodicWave::from_json(text).map(PyWave).map_err(py_err)
    }

    fn to_json(&self) -> String {
        self.0.to_json()
    }

    #[getter]
    fn alpha(&self) -> f64 {
        self.0.params.alpha
    }

    #[getter]
    fn beta(&self) -> f64 {
        self.0.params.beta
    }

    #[getter(F)]
    fn pump(&self) -> f64 {
        self.0.params.f
    }

    #[getter]
    fn period(&self) -> f64 {
        self.0.period
    }

    #[getter(M)]
    fn m(&self) -> usize {
        self.0.m
    }

    #[getter]
    fn residual_norm(&self) -> f64 {
        self.0.residual_norm
    }

    #[getter]
    fn coeffs(&self) -> Vec<Complex64> {
        self.0.coeffs.clone()
    }

    fn coeff(&self, k: i64) -> Complex64 {
        self.0.coeff(k)
    }

    fn evaluate(&self, xs: Vec<f64>) -> Vec<Complex64> {
        self.0.evaluate(&xs)
    }

    fn collocation_residual(&self) -> f64 {
        self.0.collocation_residual()
    }

    fn __repr__(&self) -> String {
        format!(
            "PeriodicWave(alpha={}, F={}, T={}, M={}, residual={:.2e})",
            self.0.params.alpha, self.0.params.f, self.0.period, self.0.m, self.0.residual_norm
        )
    }
}

/// Outcome of the diffusive spectral stability check.
#[pyclass(name = "StabilityVerdict", module = "lle_bloch", frozen)]
struct PyVerdict(StabilityVerdict);

#[pymethods]
impl PyVerdict {
    #[getter]
    fn stable(&self) -> bool {
        self.0.stable
    }

    #[getter]
    fn conditions(&self) -> (bool, bool, bool) {
        (self.0.condition_i, self.0.condition_ii, self.0.condition_iii)
    }

    #[getter]
    fn theta(&self) -> f64 {
        self.0.theta
    }

    #[getter]
    fn kernel_residual(&self) -> Option<f64> {
        self.0.kernel_residual
    }

    #[getter]
    fn xi1(&self) -> f64 {
        self.0.xi1
    }

    #[getter]
    fn delta1(&self) -> f64 {
        self.0.delta1
    }

    /// (condition, xi, value) for each recorded violation.
    #[getter]
    fn violations(&self) -> Vec<(String, f64, f64)> {
        self.0.violations.iter().map(|v| (v.condition.clone(), v.xi, v.value)).collect()
    }

    fn to_json(&self) -> PyResult<String> {
        to_json(&self.0)
    }

    fn __repr__(&self) -> String {
        format!("StabilityVerdict(stable={}, theta={:.4})", self.0.stable, self.0.theta)
    }
}

/// The eigenvalue branch through zero, with lambda_c ~ i a xi - d xi^2.
#[pyclass(name = "CriticalCurve", module = "lle_bloch", frozen)]
struct PyCurve(CriticalCurve);

#[pymethods]
impl PyCurve {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        from_json(text).map(PyCurve)
    }

    fn to_json(&self) -> PyResult<String> {
        to_json(&self.0)
    }

    #[getter]
    fn a(&self) -> f64 {
        self.0.a
    }

    #[getter]
    fn d(&self) -> f64 {
        self.0.d
    }

    #[getter]
    fn xi1(&self) -> f64 {
        self.0.xi1
    }

    #[getter]
    fn xi(&self) -> Vec<f64> {
        self.0.xi_samples.clone()
    }

    #[getter]
    fn lambda_c(&self) -> Vec<Complex64> {
        self.0.lambda_c.clone()
    }

    fn __repr__(&self) -> String {
        format!("CriticalCurve(d={:.6}, a={:.2e}, xi1={:.4})", self.0.d, self.0.a, self.0.xi1)
    }
}

/// Eigenvalues of the Bloch operator at `xi`, sorted by real part.
#[pyfunction]
#[pyo3(signature = (wave, xi, m=None))]
fn spectrum(wave: &PyWave, xi: f64, m: Option<usize>) -> PyResult<Vec<Complex64>> {
    let a = blochop::assemble(&wave.0, xi, m.unwrap_or(wave.0.m)).map_err(py_err)?;
    Ok(blochop::spectrum(&a).map_err(py_err)?.eigenvalues)
}

#[pyfunction]
#[pyo3(signature = (wave, grid=201, refine=4, n_list=vec![]))]
fn check_stability(wave: &PyWave, grid: usize, refine: usize, n_list: Vec<usize>) -> PyResult<PyVerdict> {
    pl::compute_verdict(&wave.0, grid, refine, &n_list).map(PyVerdict).map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (wave, verdict, samples=32))]
fn critical_curve(wave: &PyWave, verdict: &PyVerdict, samples: usize) -> PyResult<PyCurve> {
    pl::compute_curve(&wave.0, &verdict.0, samples).map(PyCurve).map_err(py_err)
}

fn family(name: &str) -> PyResult<FieldFamily> {
    match name {
        "bump" => Ok(FieldFamily::Bump),
        "random" => Ok(FieldFamily::Random),
        _ => Err(PyValueError::new_err(format!("unknown family {name:?}; use 'bump' or 'random'"))),
    }
}

/// L2 norms of the five-part decomposition of e^{At} f on N periods, plus the closure residual.
#[pyfunction]
#[pyo3(signature = (wave, curve, n, t, cutoff_xi1=None, family="bump", seed=0))]
fn decompose(
    wave: &PyWave,
    curve: &PyCurve,
    n: usize,
    t: f64,
    cutoff_xi1: Option<f64>,
    family: &str,
    seed: u64,
) -> PyResult<BTreeMap<String, f64>> {
    let fam = self::family(family)?;
    let cutoff = pl::cutoff_for(&curve.0, cutoff_xi1).map_err(py_err)?;
    let f = pl::family_field(fam, seed, n, wave.0.period, curve.0.m).map_err(py_err)?;
    let r = semigroup::decompose(&wave.0, &curve.0, cutoff, &f, n, t).map_err(py_err)?;
    let mut out = r.norms.clone();
    out.insert("closure_residual".into(), r.closure_residual);
    Ok(out)
}

/// (2 pi / NT) sum over the nonzero lattice points of exp(-2 d xi^2 t).
#[pyfunction]
fn sum_plain(n: usize, period: f64, d: f64, t: f64) -> PyResult<f64> {
    Ok(riemann::sum_plain(&GaussianSumInput::new(n, period, d, t).map_err(py_err)?))
}

/// (2 pi / NT) sum over the lattice of xi^2 exp(-2 d xi^2 t).
#[pyfunction]
fn sum_weighted(n: usize, period: f64, d: f64, t: f64) -> PyResult<f64> {
    Ok(riemann::sum_weighted(&GaussianSumInput::new(n, period, d, t).map_err(py_err)?))
}

#[pyfunction]
fn integral_plain(period: f64, d: f64, t: f64) -> PyResult<f64> {
    riemann::integral_plain(period, d, t).map_err(py_err)
}

#[pyfunction]
fn integral_weighted(period: f64, d: f64, t: f64) -> PyResult<f64> {
    riemann::integral_weighted(period, d, t).map_err(py_err)
}

/// (plain gap, weighted gap) at one (N, t).
#[pyfunction]
fn sharpness_gap(period: f64, d: f64, n: usize, t: f64) -> PyResult<(f64, f64)> {
    let p = riemann::sharpness_gap(period, d, n, t).map_err(py_err)?;
    Ok((p.plain.gap, p.weighted.gap))
}

/// Run the staged pipeline from a TOML config; returns (ran, skipped, not_applicable).
#[pyfunction]
fn run_pipeline(py: Python<'_>, config_path: &str) -> PyResult<(Vec<String>, Vec<String>, Vec<String>)> {
    let cfg = RunConfig::load(std::path::Path::new(config_path)).map_err(py_err)?;
    let out = py.detach(|| pl::run_pipeline(&cfg)).map_err(py_err)?;
    Ok((out.ran, out.skipped, out.not_applicable))
}

#[pymodule(name = "lle_bloch")]
fn init_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyWave>()?;
    m.add_class::<PyVerdict>()?;
    m.add_class::<PyCurve>()?;
    m.add_function(wrap_pyfunction!(spectrum, m)?)?;
    m.add_function(wrap_pyfunction!(check_stability, m)?)?;
    m.add_function(wrap_pyfunction!(critical_curve, m)?)?;
    m.add_function(wrap_pyfunction!(decompose, m)?)?;
    m.add_function(wrap_pyfunction!(sum_plain, m)?)?;
    m.add_function(wrap_pyfunction!(sum_weighted, m)?)?;
    m.add_function(wrap_pyfunction!(integral_plain, m)?)?;
    m.add_function(wrap_pyfunction!(integral_weighted, m)?)?;
    m.add_function(wrap_pyfunction!(sharpness_gap, m)?)?;
    m.add_function(wrap_pyfunction!(run_pipeline, m)?)?;
    m.add("TEMPLATE", core_crate::cli::TEMPLATE)?;
    Ok(())
}

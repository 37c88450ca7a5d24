//! Python bindings: kernels, predictors, signals, prediction and experiments.

use causal_predict::harness::{
    evaluate_convergence_sweep, evaluate_decomposition_demo, evaluate_uniform_bound_check, run_robustness_probe,
    ExperimentConfig,
};
use causal_predict::kernel::{
    build_kernel, eval_time_kernel, eval_transfer, kernel_l2_norm, KernelSpec, Pole, RationalAnticausalKernel,
};
use causal_predict::predictor::{
    alpha_coefficient, deviation_norm, eval_deviation, eval_phi_real, eval_predictor_transfer, eval_v,
    eval_v_minus_one, synthesize_time_predictor, FrequencyDomain, FrequencyGridSpec, PredictorTransfer, TargetClass,
    TimeGrid,
};
use causal_predict::signals::{self, EnvelopeSpec, MixedSpectrumSpec};
use causal_predict::spectral::{self, PredictionResult};
use causal_predict::Error;
use num_complex::Complex64;
use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

create_exception!(causal_predict_py, PredictError, PyValueError);

fn err(e: Error) -> PyErr {
    PredictError::new_err(format!("{}: {e}", e.kind()))
}

fn target_name(t: TargetClass) -> &'static str {
    match t {
        TargetClass::Low => "LOW",
        TargetClass::High => "HIGH",
    }
}

/// Rational anticausal kernel `K(p) = d(p)/δ(p)` with poles `a - bi`.
#[pyclass(name = "Kernel", module = "causal_predict_py")]
struct PyKernel {
    inner: RationalAnticausalKernel,
}

#[pymethods]
impl PyKernel {
    /// `poles` as `(a, b, multiplicity)` triples, `numerator` in ascending degree.
    #[new]
    fn new(poles: Vec<(f64, f64, u32)>, numerator: Vec<f64>, omega: f64) -> PyResult<Self> {
        let poles: Vec<Pole> = poles.into_iter().map(|(a, b, m)| Pole::new(a, b, m)).collect();
        Ok(Self {
            inner: build_kernel(&poles, &numerator, omega).map_err(err)?,
        })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let spec = KernelSpec::from_json(text).map_err(err)?;
        Ok(Self {
            inner: spec.build().map_err(err)?,
        })
    }

    fn to_json(&self) -> String {
        self.inner.to_spec().to_json()
    }

    #[getter]
    fn omega(&self) -> f64 {
        self.inner.omega()
    }

    #[getter]
    fn poles(&self) -> Vec<(f64, f64, u32)> {
        self.inner.poles().iter().map(|p| (p.a, p.b, p.multiplicity)).collect()
    }

    #[getter]
    fn numerator(&self) -> Vec<f64> {
        self.inner.numerator().to_vec()
    }

    /// `K(iω)`.
    fn transfer(&self, omega: f64) -> Complex64 {
        eval_transfer(&self.inner, omega)
    }

    /// `K(p)` at a complex point.
    fn transfer_at(&self, p: Complex64) -> Complex64 {
        self.inner.transfer(p)
    }

    /// `k(t)`; zero for `t > 0`.
    fn time_kernel(&self, t: f64) -> f64 {
        eval_time_kernel(&self.inner, t)
    }

    fn l2_norm(&self) -> PyResult<f64> {
        kernel_l2_norm(&self.inner).map_err(err)
    }

    /// Partial-fraction terms as `(pole, order, coefficient)`.
    fn residues(&self) -> Vec<(Complex64, u32, Complex64)> {
        self.inner
            .residues()
            .terms
            .iter()
            .map(|t| (t.pole, t.order, t.coefficient))
            .collect()
    }

    fn __repr__(&self) -> String {
        format!("Kernel({})", self.to_json())
    }
}

/// Causal predictor `K̂ = V K` for a kernel and tuning parameter `γ`.
#[pyclass(name = "Predictor", module = "causal_predict_py")]
struct PyPredictor {
    inner: PredictorTransfer,
}

#[pymethods]
impl PyPredictor {
    #[new]
    fn new(kernel: PyRef<'_, PyKernel>, gamma: f64) -> PyResult<Self> {
        Ok(Self {
            inner: PredictorTransfer::new(kernel.inner.clone(), gamma).map_err(err)?,
        })
    }

    #[getter]
    fn gamma(&self) -> f64 {
        self.inner.gamma()
    }

    #[getter]
    fn target(&self) -> &'static str {
        target_name(self.inner.target())
    }

    #[getter]
    fn kernel(&self) -> PyKernel {
        PyKernel {
            inner: self.inner.kernel().clone(),
        }
    }

    /// `V(iω)`.
    fn v(&self, omega: f64) -> PyResult<Complex64> {
        eval_v(&self.inner, Complex64::new(0.0, omega)).map_err(err)
    }

    /// `V(iω) - 1`, accurate when it is small.
    fn v_minus_one(&self, omega: f64) -> PyResult<Complex64> {
        eval_v_minus_one(&self.inner, Complex64::new(0.0, omega)).map_err(err)
    }

    /// `K̂(iω)`.
    fn transfer(&self, omega: f64) -> PyResult<Complex64> {
        eval_predictor_transfer(&self.inner, omega).map_err(err)
    }

    /// `K̂(iω) - K(iω)`.
    fn deviation(&self, omega: f64) -> PyResult<Complex64> {
        eval_deviation(&self.inner, omega).map_err(err)
    }

    /// `‖K̂ - K‖` in `L_μ` over the predictor's band shrunk by `epsilon`.
    #[pyo3(signature = (epsilon, mu = f64::INFINITY))]
    fn deviation_norm(&self, epsilon: f64, mu: f64) -> PyResult<f64> {
        let kernel = self.inner.kernel();
        let domain = FrequencyDomain::new(self.inner.target(), epsilon, kernel.omega()).map_err(err)?;
        deviation_norm(&self.inner, &domain, mu, &FrequencyGridSpec::for_kernel(kernel)).map_err(err)
    }

    /// Samples `k̂` on a centred grid; returns a dict with `t0`, `dt`,
    /// `values`, `leakage` and `jump`.
    fn synthesize<'py>(&self, py: Python<'py>, span: f64, len: usize) -> PyResult<Bound<'py, PyDict>> {
        let k = synthesize_time_predictor(&self.inner, &TimeGrid::centered(span, len)).map_err(err)?;
        let d = PyDict::new(py);
        d.set_item("t0", k.grid.t0)?;
        d.set_item("dt", k.grid.dt)?;
        d.set_item("values", k.values)?;
        d.set_item("leakage", k.leakage)?;
        d.set_item("jump", k.jump)?;
        Ok(d)
    }

    /// Predicts a sampled signal by causal convolution with the synthesized
    /// kernel; the output starts `horizon` after the signal does.
    fn causal_predict(&self, signal: PyRef<'_, PySignal>, span: f64, len: usize, horizon: f64) -> PyResult<PySignal> {
        let grid = TimeGrid::centered(span, len);
        if (grid.dt - signal.inner.dt).abs() > 1e-12 * grid.dt {
            return Err(err(Error::GridMismatch(format!(
                "kernel grid dt {} differs from signal dt {}",
                grid.dt, signal.inner.dt
            ))));
        }
        let k = synthesize_time_predictor(&self.inner, &grid).map_err(err)?;
        let kh = spectral::CausalKernel::from(&k);
        Ok(PySignal {
            inner: spectral::causal_convolve(&kh, &signal.inner, horizon).map_err(err)?,
        })
    }

    fn __repr__(&self) -> String {
        format!("Predictor(gamma={}, target={})", self.inner.gamma(), self.target())
    }
}

/// Uniformly sampled complex signal.
#[pyclass(name = "SampledSignal", module = "causal_predict_py")]
struct PySignal {
    inner: signals::SampledSignal,
}

#[pymethods]
impl PySignal {
    #[new]
    fn new(t0: f64, dt: f64, values: Vec<Complex64>) -> PyResult<Self> {
        Ok(Self {
            inner: signals::SampledSignal::new(t0, dt, values).map_err(err)?,
        })
    }

    #[getter]
    fn t0(&self) -> f64 {
        self.inner.t0
    }

    #[getter]
    fn dt(&self) -> f64 {
        self.inner.dt
    }

    #[getter]
    fn values(&self) -> Vec<Complex64> {
        self.inner.values.clone()
    }

    fn times(&self) -> Vec<f64> {
        (0..self.inner.len()).map(|j| self.inner.time(j)).collect()
    }

    fn energy(&self) -> f64 {
        self.inner.energy()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

/// Samples of a Fourier transform on a uniform frequency grid.
#[pyclass(name = "SampledSpectrum", module = "causal_predict_py")]
struct PySpectrum {
    inner: signals::SampledSpectrum,
}

#[pymethods]
impl PySpectrum {
    #[new]
    #[pyo3(signature = (omega0, domega, values, t0 = 0.0))]
    fn new(omega0: f64, domega: f64, values: Vec<Complex64>, t0: f64) -> Self {
        Self {
            inner: signals::SampledSpectrum {
                omega0,
                domega,
                t0,
                values,
            },
        }
    }

    #[getter]
    fn omega0(&self) -> f64 {
        self.inner.omega0
    }

    #[getter]
    fn domega(&self) -> f64 {
        self.inner.domega
    }

    #[getter]
    fn t0(&self) -> f64 {
        self.inner.t0
    }

    #[getter]
    fn values(&self) -> Vec<Complex64> {
        self.inner.values.clone()
    }

    fn frequencies(&self) -> Vec<f64> {
        self.inner.frequencies().collect()
    }

    fn energy(&self) -> f64 {
        self.inner.energy()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

/// Atoms plus an integrable density, declared LOW or HIGH.
#[pyclass(name = "MixedSpectrum", module = "causal_predict_py")]
struct PyMixed {
    inner: signals::MixedSpectrum,
}

#[pymethods]
impl PyMixed {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let spec: MixedSpectrumSpec = serde_json::from_str(text).map_err(|e| err(e.into()))?;
        Ok(Self {
            inner: spec.build().map_err(err)?,
        })
    }

    fn to_json(&self) -> String {
        serde_json::to_string(&self.inner.to_spec()).expect("spec serializes")
    }

    /// `x(t)`.
    fn eval(&self, t: f64) -> PyResult<Complex64> {
        self.inner.eval(t).map_err(err)
    }

    /// Total-variation norm of the spectral measure.
    fn cstar_norm(&self) -> PyResult<f64> {
        signals::cstar_norm(&self.inner).map_err(err)
    }
}

/// Target `y`, prediction `ŷ` and their error norms.
#[pyclass(name = "Prediction", module = "causal_predict_py")]
struct PyPrediction {
    inner: PredictionResult,
}

#[pymethods]
impl PyPrediction {
    #[getter]
    fn err_l2(&self) -> f64 {
        self.inner.err_l2
    }

    #[getter]
    fn err_linf(&self) -> f64 {
        self.inner.err_linf
    }

    #[getter]
    fn gamma(&self) -> f64 {
        self.inner.gamma
    }

    #[getter]
    fn y(&self) -> PySignal {
        PySignal {
            inner: self.inner.y.clone(),
        }
    }

    #[getter]
    fn yhat(&self) -> PySignal {
        PySignal {
            inner: self.inner.yhat.clone(),
        }
    }

    fn sidecar_json(&self) -> String {
        self.inner.sidecar_json()
    }

    fn __repr__(&self) -> String {
        format!(
            "Prediction(gamma={}, err_l2={:e}, err_linf={:e})",
            self.inner.gamma, self.inner.err_l2, self.inner.err_linf
        )
    }
}

fn envelope(text: &str) -> PyResult<EnvelopeSpec> {
    serde_json::from_str(text).map_err(|e| err(e.into()))
}

fn pair(s: signals::SampledSignal, x: signals::SampledSpectrum) -> (PySignal, PySpectrum) {
    (PySignal { inner: s }, PySpectrum { inner: x })
}

/// Band-limited signal from a JSON envelope such as
/// `{"shape": "raised_cosine", "lo": -0.9, "hi": 0.9}`.
#[pyfunction]
fn bandlimited_signal(envelope_json: &str, omega: f64, span: f64, len: usize) -> PyResult<(PySignal, PySpectrum)> {
    let (s, x) =
        signals::make_bandlimited_signal(&envelope(envelope_json)?, omega, &TimeGrid::centered(span, len)).map_err(err)?;
    Ok(pair(s, x))
}

/// High-frequency signal; the envelope must avoid `(-Ω, Ω)`.
#[pyfunction]
fn highfreq_signal(envelope_json: &str, omega: f64, span: f64, len: usize) -> PyResult<(PySignal, PySpectrum)> {
    let (s, x) =
        signals::make_highfreq_signal(&envelope(envelope_json)?, omega, &TimeGrid::centered(span, len)).map_err(err)?;
    Ok(pair(s, x))
}

#[pyfunction]
fn fourier_forward(signal: PyRef<'_, PySignal>) -> PyResult<PySpectrum> {
    Ok(PySpectrum {
        inner: spectral::fourier_forward(&signal.inner).map_err(err)?,
    })
}

#[pyfunction]
fn fourier_inverse(spectrum: PyRef<'_, PySpectrum>) -> PyResult<PySignal> {
    Ok(PySignal {
        inner: spectral::fourier_inverse(&spectrum.inner).map_err(err)?,
    })
}

/// `(low, high)` parts with `|ω| <= Ω` going low.
#[pyfunction]
fn ideal_lowpass_split(spectrum: PyRef<'_, PySpectrum>, omega: f64) -> (PySpectrum, PySpectrum) {
    let (l, h) = signals::ideal_lowpass_split(&spectrum.inner, omega);
    (PySpectrum { inner: l }, PySpectrum { inner: h })
}

#[pyfunction]
#[allow(clippy::too_many_arguments)]
fn add_outofband_noise(
    signal: PyRef<'_, PySignal>,
    spectrum: PyRef<'_, PySpectrum>,
    eta: f64,
    lo: f64,
    hi: f64,
    omega: f64,
    seed: u64,
) -> PyResult<(PySignal, PySpectrum)> {
    let (s, x) = signals::add_outofband_noise(&signal.inner, &spectrum.inner, eta, (lo, hi), omega, seed).map_err(err)?;
    Ok(pair(s, x))
}

/// Exact-spectrum prediction: `Y = K X`, `Ŷ = K̂ X`, both transformed back.
#[pyfunction]
fn spectral_predict(spectrum: PyRef<'_, PySpectrum>, predictor: PyRef<'_, PyPredictor>) -> PyResult<PyPrediction> {
    Ok(PyPrediction {
        inner: spectral::spectral_predict(&spectrum.inner, &predictor.inner).map_err(err)?,
    })
}

/// Prediction of a mixed-spectrum signal on `len` times from `t0` with step `dt`.
#[pyfunction]
fn mixed_predict(
    mixed: PyRef<'_, PyMixed>,
    predictor: PyRef<'_, PyPredictor>,
    t0: f64,
    dt: f64,
    len: usize,
) -> PyResult<PyPrediction> {
    Ok(PyPrediction {
        inner: spectral::mixed_predict(&mixed.inner, &predictor.inner, &TimeGrid { t0, dt, len }).map_err(err)?,
    })
}

#[pyfunction(name = "alpha_coefficient")]
fn py_alpha_coefficient(a: f64, b: f64, omega: f64) -> PyResult<f64> {
    alpha_coefficient(a, b, omega).map_err(err)
}

/// Closed-form `Re φ(iω)`.
#[pyfunction]
fn phi_real(a: f64, b: f64, omega: f64, omega_val: f64) -> f64 {
    eval_phi_real(a, b, omega, omega_val)
}

/// Runs `sweep`, `bound-check`, `robustness` or `decompose` on a JSON config
/// and returns the report as JSON. Failed checks are reported, not raised.
#[pyfunction]
#[pyo3(signature = (kind, config_json, seed = None))]
fn run_experiment(kind: &str, config_json: &str, seed: Option<u64>) -> PyResult<String> {
    let mut config = ExperimentConfig::from_json(config_json).map_err(err)?;
    if let Some(s) = seed {
        config.seed = s;
    }
    config.validate().map_err(err)?;
    let report = match kind {
        "sweep" => evaluate_convergence_sweep(&config),
        "bound-check" => evaluate_uniform_bound_check(&config),
        "robustness" => run_robustness_probe(&config),
        "decompose" => evaluate_decomposition_demo(&config),
        _ => return Err(PyValueError::new_err(format!("unknown experiment {kind}"))),
    }
    .map_err(err)?;
    Ok(report.to_json().to_string())
}

#[pymodule]
fn causal_predict_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("PredictError", m.py().get_type::<PredictError>())?;
    m.add_class::<PyKernel>()?;
    m.add_class::<PyPredictor>()?;
    m.add_class::<PySignal>()?;
    m.add_class::<PySpectrum>()?;
    m.add_class::<PyMixed>()?;
    m.add_class::<PyPrediction>()?;
    m.add_function(wrap_pyfunction!(bandlimited_signal, m)?)?;
    m.add_function(wrap_pyfunction!(highfreq_signal, m)?)?;
    m.add_function(wrap_pyfunction!(fourier_forward, m)?)?;
    m.add_function(wrap_pyfunction!(fourier_inverse, m)?)?;
    m.add_function(wrap_pyfunction!(ideal_lowpass_split, m)?)?;
    m.add_function(wrap_pyfunction!(add_outofband_noise, m)?)?;
    m.add_function(wrap_pyfunction!(spectral_predict, m)?)?;
    m.add_function(wrap_pyfunction!(mixed_predict, m)?)?;
    m.add_function(wrap_pyfunction!(py_alpha_coefficient, m)?)?;
    m.add_function(wrap_pyfunction!(phi_real, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}

//! Grid Fourier transforms, the anticausal convolution oracle, finite-horizon
//! causal convolution, and the spectral prediction pipelines.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{eval_time_kernel, eval_transfer, KernelSpec, RationalAnticausalKernel};
use crate::predictor::{
    deviation_norm, eval_deviation, eval_predictor_transfer, FrequencyDomain, FrequencyGridSpec, PredictorTransfer,
    SynthesizedKernel, TimeGrid,
};
use crate::quadrature::{integrate_complex, QuadOptions};
use crate::signals::{fmt, MixedSpectrum, SampledSignal, SampledSpectrum};

fn check_len(n: usize) -> Result<()> {
    if n < 2 || !n.is_power_of_two() {
        return Err(Error::GridMismatch(format!("length {n} is not a power of two >= 2")));
    }
    Ok(())
}

/// `X(ω_l) = Σ_j x_j e^{-iω_l t_j} dt` on the centred grid `ω_l = (l - n/2) dω`.
pub fn fourier_forward(signal: &SampledSignal) -> Result<SampledSpectrum> {
    let n = signal.len();
    check_len(n)?;
    let grid = signal.grid();
    grid.validate()?;
    let mut buf: Vec<Complex64> = signal
        .values
        .iter()
        .enumerate()
        .map(|(j, x)| if j % 2 == 0 { *x } else { -x })
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let values = buf
        .iter()
        .enumerate()
        .map(|(l, v)| v * Complex64::new(0.0, -grid.frequency(l) * grid.t0).exp() * signal.dt)
        .collect();
    Ok(SampledSpectrum {
        omega0: grid.frequency(0),
        domega: grid.domega(),
        t0: grid.t0,
        values,
    })
}

/// `x(t_j) = (1/2π) Σ_l X_l e^{iω_l t_j} dω`; the spectrum must sit on a
/// centred grid.
pub fn fourier_inverse(spectrum: &SampledSpectrum) -> Result<SampledSignal> {
    let n = spectrum.len();
    check_len(n)?;
    let dw = spectrum.domega;
    if !(dw > 0.0 && dw.is_finite() && spectrum.t0.is_finite()) {
        return Err(Error::GridMismatch(format!("invalid frequency spacing {dw}")));
    }
    let centred = -dw * (n / 2) as f64;
    if (spectrum.omega0 - centred).abs() > 1e-9 * dw {
        return Err(Error::GridMismatch(format!(
            "spectrum starts at {} but a centred grid starts at {centred}",
            spectrum.omega0
        )));
    }
    let mut buf: Vec<Complex64> = spectrum
        .values
        .iter()
        .enumerate()
        .map(|(l, v)| v * Complex64::new(0.0, spectrum.frequency(l) * spectrum.t0).exp())
        .collect();
    FftPlanner::new().plan_fft_inverse(n).process(&mut buf);
    let scale = dw / (2.0 * PI);
    let values = buf
        .iter()
        .enumerate()
        .map(|(j, v)| if j % 2 == 0 { v * scale } else { -v * scale })
        .collect();
    Ok(SampledSignal {
        t0: spectrum.t0,
        dt: 2.0 * PI / (n as f64 * dw),
        values,
    })
}

/// Linear interpolation of a sampled signal, zero outside its grid.
pub fn interpolate(signal: &SampledSignal, t: f64) -> Complex64 {
    let x = (t - signal.t0) / signal.dt;
    let last = (signal.len() - 1) as f64;
    if !(0.0..=last).contains(&x) {
        return Complex64::new(0.0, 0.0);
    }
    let i = (x.floor() as usize).min(signal.len() - 2);
    let f = x - i as f64;
    signal.values[i] * (1.0 - f) + signal.values[i + 1] * f
}

/// Length `U` of the future window with `|k(-u)| < tol · max|k|` beyond it.
pub fn oracle_window(kernel: &RationalAnticausalKernel, tol: f64) -> f64 {
    let a = kernel.min_decay_rate();
    let peak = (0..=64)
        .map(|i| eval_time_kernel(kernel, -(i as f64) / (4.0 * a)).abs())
        .fold(eval_time_kernel(kernel, -1e-300).abs(), f64::max);
    let mut u = -tol.ln() / a;
    // polynomial factors of repeated poles delay the decay
    while eval_time_kernel(kernel, -u).abs() > tol * peak
        || eval_time_kernel(kernel, -1.5 * u).abs() > tol * peak
    {
        u *= 1.25;
    }
    u
}

/// `y(t) = ∫_0^U k(-u) x(t + u) du` at every point of `times` by adaptive
/// quadrature with relative tolerance `tol`.
pub fn anticausal_convolve_oracle<F>(
    kernel: &RationalAnticausalKernel,
    x: F,
    times: &TimeGrid,
    tol: f64,
) -> Result<SampledSignal>
where
    F: Fn(f64) -> Complex64,
{
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::InvalidInput(format!("tolerance must lie in (0, 1), got {tol}")));
    }
    let u_max = oracle_window(kernel, tol);
    let panels = (u_max * kernel.max_pole_modulus().max(1.0)).ceil().clamp(8.0, 4000.0) as usize;
    let opts = QuadOptions {
        max_intervals: 50_000,
        ..QuadOptions::with_rel_tol(tol).panels(panels).abs(tol * 1e-6)
    };
    let mut values = Vec::with_capacity(times.len);
    for j in 0..times.len {
        let t = times.time(j);
        let r = integrate_complex(|u| eval_time_kernel(kernel, -u) * x(t + u), 0.0, u_max, opts)?;
        values.push(r.value);
    }
    Ok(SampledSignal {
        t0: times.t0,
        dt: times.dt,
        values,
    })
}

/// Causal kernel samples `k̂(m dt)`, `m = 0, 1, ...`; lag 0 holds `k̂(0+)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CausalKernel {
    pub dt: f64,
    pub values: Vec<f64>,
}

impl CausalKernel {
    pub fn span(&self) -> f64 {
        self.dt * (self.values.len().saturating_sub(1)) as f64
    }
}

impl From<&SynthesizedKernel> for CausalKernel {
    fn from(k: &SynthesizedKernel) -> Self {
        let values = (0..).map_while(|j| k.lag(j)).collect();
        Self {
            dt: k.grid.dt,
            values,
        }
    }
}

/// `ŷ(t) = ∫_0^M k̂(τ) x(t - τ) dτ` by the trapezoid rule on the sample grid.
///
/// The output starts at the first sample with `M` worth of history; it only
/// ever reads samples at or before its own time.
pub fn causal_convolve(khat: &CausalKernel, x: &SampledSignal, horizon: f64) -> Result<SampledSignal> {
    if (khat.dt - x.dt).abs() > 1e-12 * x.dt {
        return Err(Error::GridMismatch(format!(
            "kernel spacing {} differs from signal spacing {}",
            khat.dt, x.dt
        )));
    }
    if !(horizon >= 0.0 && horizon.is_finite()) {
        return Err(Error::InvalidInput(format!("horizon must be nonnegative, got {horizon}")));
    }
    let m = (horizon / x.dt).round() as usize;
    let history = x.dt * (x.len().saturating_sub(1)) as f64;
    if m >= x.len() {
        return Err(Error::InsufficientHistory {
            horizon,
            available: history,
        });
    }
    if m >= khat.values.len() {
        return Err(Error::InsufficientHistory {
            horizon,
            available: khat.span(),
        });
    }
    let weights: Vec<f64> = (0..=m)
        .map(|i| {
            let w = if m > 0 && (i == 0 || i == m) { 0.5 } else { 1.0 };
            w * khat.values[i] * x.dt
        })
        .collect();
    let values = (m..x.len())
        .map(|j| weights.iter().enumerate().map(|(i, w)| x.values[j - i] * *w).sum())
        .collect();
    Ok(SampledSignal {
        t0: x.time(m),
        dt: x.dt,
        values,
    })
}

/// Discrete `L2` (trapezoid) and sup norms of `y - yhat`.
pub fn error_norms(y: &SampledSignal, yhat: &SampledSignal) -> Result<(f64, f64)> {
    if y.len() != yhat.len() || (y.dt - yhat.dt).abs() > 1e-12 * y.dt || (y.t0 - yhat.t0).abs() > 1e-9 * y.dt {
        return Err(Error::GridMismatch("y and yhat live on different grids".into()));
    }
    let n = y.len();
    let mut l2 = 0.0;
    let mut linf = 0.0f64;
    for (j, (a, b)) in y.values.iter().zip(&yhat.values).enumerate() {
        let e = (a - b).norm();
        let w = if j == 0 || j + 1 == n { 0.5 } else { 1.0 };
        l2 += w * e * e;
        linf = linf.max(e);
    }
    Ok(((l2 * y.dt).sqrt(), linf))
}

/// Grid and provenance of a prediction run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionMetadata {
    pub t0: f64,
    pub dt: f64,
    pub len: usize,
    pub kernel: KernelSpec,
    pub horizon: Option<f64>,
    pub method: String,
}

/// Target `y`, prediction `ŷ`, and their error norms.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionResult {
    pub y: SampledSignal,
    pub yhat: SampledSignal,
    pub err_l2: f64,
    pub err_linf: f64,
    pub gamma: f64,
    pub metadata: PredictionMetadata,
    /// Named bounds attached by callers, written to the sidecar.
    pub bounds: BTreeMap<String, f64>,
}

#[derive(Serialize)]
struct Sidecar<'a> {
    gamma: f64,
    err_l2: f64,
    err_linf: f64,
    bounds: &'a BTreeMap<String, f64>,
    grid: &'a PredictionMetadata,
}

impl PredictionResult {
    fn assemble(y: SampledSignal, yhat: SampledSignal, gamma: f64, metadata: PredictionMetadata) -> Result<Self> {
        let (err_l2, err_linf) = error_norms(&y, &yhat)?;
        Ok(Self {
            y,
            yhat,
            err_l2,
            err_linf,
            gamma,
            metadata,
            bounds: BTreeMap::new(),
        })
    }

    /// Columns `t, y_re, y_im, yhat_re, yhat_im`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["t", "y_re", "y_im", "yhat_re", "yhat_im"])?;
        for (j, (a, b)) in self.y.values.iter().zip(&self.yhat.values).enumerate() {
            out.write_record(&[fmt(self.y.time(j)), fmt(a.re), fmt(a.im), fmt(b.re), fmt(b.im)])?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn sidecar_json(&self) -> String {
        serde_json::to_string_pretty(&Sidecar {
            gamma: self.gamma,
            err_l2: self.err_l2,
            err_linf: self.err_linf,
            bounds: &self.bounds,
            grid: &self.metadata,
        })
        .expect("sidecar serializes")
    }
}

/// `Y = K X` and `Ŷ = K̂ X` on the spectral grid, transformed back.
///
/// Where `X` vanishes exactly, `Ŷ` is set to zero without evaluating `V`.
pub fn spectral_predict(spectrum: &SampledSpectrum, predictor: &PredictorTransfer) -> Result<PredictionResult> {
    let zero = Complex64::new(0.0, 0.0);
    let mut y = Vec::with_capacity(spectrum.len());
    let mut yhat = Vec::with_capacity(spectrum.len());
    for (l, x) in spectrum.values.iter().enumerate() {
        if *x == zero {
            y.push(zero);
            yhat.push(zero);
            continue;
        }
        let w = spectrum.frequency(l);
        let khat = match eval_predictor_transfer(predictor, w) {
            Ok(v) => v,
            Err(Error::Saturated { .. }) => {
                return Err(Error::ClassMismatch(format!(
                    "signal has energy at omega = {w} where the predictor with gamma = {} saturates",
                    predictor.gamma()
                )))
            }
            Err(e) => return Err(e),
        };
        y.push(eval_transfer(predictor.kernel(), w) * x);
        yhat.push(khat * x);
    }
    let y = fourier_inverse(&spectrum.with_values(y))?;
    let yhat = fourier_inverse(&spectrum.with_values(yhat))?;
    let metadata = PredictionMetadata {
        t0: y.t0,
        dt: y.dt,
        len: y.len(),
        kernel: predictor.kernel().to_spec(),
        horizon: None,
        method: "spectral".into(),
    };
    PredictionResult::assemble(y, yhat, predictor.gamma(), metadata)
}

/// `y` and `ŷ` of a mixed spectrum: atoms exactly, density by quadrature.
pub fn mixed_predict(ms: &MixedSpectrum, predictor: &PredictorTransfer, times: &TimeGrid) -> Result<PredictionResult> {
    if ms.class != predictor.target() {
        return Err(Error::ClassMismatch(format!(
            "signal class {:?} does not match predictor target {:?}",
            ms.class,
            predictor.target()
        )));
    }
    let kernel = predictor.kernel();
    let k = |w: f64| eval_transfer(kernel, w);
    let khat = |w: f64| eval_predictor_transfer(predictor, w).unwrap_or(Complex64::new(f64::NAN, f64::NAN));
    let rel_tol = 1e-12;
    let mut y = Vec::with_capacity(times.len);
    let mut yhat = Vec::with_capacity(times.len);
    for j in 0..times.len {
        let t = times.time(j);
        y.push(ms.eval_filtered(t, &k, rel_tol)?);
        let v = ms.eval_filtered(t, &khat, rel_tol)?;
        if !(v.re.is_finite() && v.im.is_finite()) {
            return Err(Error::ClassMismatch(format!(
                "predictor with gamma = {} saturates on the signal support",
                predictor.gamma()
            )));
        }
        yhat.push(v);
    }
    let wrap = |values| SampledSignal {
        t0: times.t0,
        dt: times.dt,
        values,
    };
    let metadata = PredictionMetadata {
        t0: times.t0,
        dt: times.dt,
        len: times.len,
        kernel: kernel.to_spec(),
        horizon: None,
        method: "mixed".into(),
    };
    PredictionResult::assemble(wrap(y), wrap(yhat), predictor.gamma(), metadata)
}

/// Both sides of `‖Ŷ - Y‖₂ <= ‖K̂ - K‖_{L_μ(D)} ‖X‖_{L_q(D)}`, `1/μ + 1/q = 1/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HolderCheck {
    pub q: f64,
    pub mu: f64,
    /// `‖(K̂ - K) X‖₂` on the spectral grid.
    pub measured: f64,
    pub deviation: f64,
    pub signal_lq: f64,
    pub bound: f64,
}

/// Evaluates both sides of the Hölder estimate for `X` on its grid.
pub fn holder_chain(
    spectrum: &SampledSpectrum,
    predictor: &PredictorTransfer,
    q: f64,
    grid: &FrequencyGridSpec,
) -> Result<HolderCheck> {
    if !(q > 2.0) {
        return Err(Error::InvalidInput(format!("q must exceed 2, got {q}")));
    }
    let mu = if q.is_infinite() { 2.0 } else { 1.0 / (0.5 - 1.0 / q) };
    let domain = FrequencyDomain::new(predictor.target(), 0.0, predictor.kernel().omega())?;
    let mut measured = 0.0;
    let mut lq = 0.0f64;
    for (w, x) in spectrum.frequencies().zip(&spectrum.values) {
        if x.norm() == 0.0 {
            continue;
        }
        if !domain.contains(w) {
            return Err(Error::ClassMismatch(format!("signal has energy at omega = {w} outside the target domain")));
        }
        measured += (eval_deviation(predictor, w)? * x).norm_sqr();
        lq = if q.is_infinite() { lq.max(x.norm()) } else { lq + x.norm().powf(q) };
    }
    let measured = (measured * spectrum.domega).sqrt();
    let signal_lq = if q.is_infinite() { lq } else { (lq * spectrum.domega).powf(1.0 / q) };
    let deviation = deviation_norm(predictor, &domain, mu, grid)?;
    Ok(HolderCheck {
        q,
        mu,
        measured,
        deviation,
        signal_lq,
        bound: deviation * signal_lq,
    })
}

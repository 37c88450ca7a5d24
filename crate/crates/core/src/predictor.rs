//! Causal predictor transfer functions.
//!
//! For a kernel with poles `(a_m, b_m)` the compensator is
//!
//! ```text
//! α_m    = (Ω² - b_m²) / a_m
//! φ_m(p) = (p - a_m + b_m i) / (p + α_m - b_m i)
//! V(p)   = Π_m (1 - exp(γ φ_m(p)))^{mult_m}
//! K̂(p)   = V(p) K(p)
//! ```
//!
//! Each factor `1 - exp(γ φ_m)` vanishes at the unstable pole `a_m - b_m i`
//! of `K`, so `K̂` is analytic and bounded in the right half-plane. On the
//! imaginary axis `Re φ_m(iω) = (ω² - Ω²) / ((ω - b_m)² + α_m²)`, negative
//! in-band and positive off-band, which is why `γ > 0` targets band-limited
//! inputs and `γ < 0` targets high-frequency inputs.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{eval_transfer, KernelSpec, RationalAnticausalKernel};
use crate::series::Series;

/// Exponent real part beyond which `1 - e^z` is treated as saturated.
pub const SATURATION_EXPONENT: f64 = 700.0;

/// Number of Laurent terms at infinity removed in closed form before the
/// inverse FFT in [`synthesize_time_predictor`].
const LAURENT_TERMS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum TargetClass {
    Low,
    High,
}

impl TargetClass {
    pub fn of_gamma(gamma: f64) -> Option<Self> {
        if gamma > 0.0 {
            Some(TargetClass::Low)
        } else if gamma < 0.0 {
            Some(TargetClass::High)
        } else {
            None
        }
    }
}

/// `α = (Ω² - b²) / a`.
pub fn alpha_coefficient(a: f64, b: f64, omega: f64) -> Result<f64> {
    if !(a > 0.0 && b.abs() < omega && a.is_finite() && omega.is_finite()) {
        return Err(Error::DomainError(format!(
            "alpha needs a > 0 and |b| < omega, got a = {a}, b = {b}, omega = {omega}"
        )));
    }
    Ok((omega * omega - b * b) / a)
}

/// `Re φ(iω) = (ω² - Ω²) / ((ω - b)² + α²)`, the closed form of the real part
/// of the Möbius exponent on the imaginary axis.
pub fn eval_phi_real(a: f64, b: f64, omega: f64, omega_val: f64) -> f64 {
    let alpha = (omega * omega - b * b) / a;
    let d = omega_val - b;
    (omega_val * omega_val - omega * omega) / (d * d + alpha * alpha)
}

/// `φ(p) = (p - a + b i) / (p + α - b i)` evaluated by complex arithmetic.
pub fn mobius_exponent(a: f64, b: f64, alpha: f64, p: Complex64) -> Complex64 {
    (p - Complex64::new(a, -b)) / (p + Complex64::new(alpha, -b))
}

/// A kernel together with the tuning parameter `γ`.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictorTransfer {
    kernel: RationalAnticausalKernel,
    gamma: f64,
    alphas: Vec<f64>,
    target: TargetClass,
}

impl PredictorTransfer {
    /// Fails for `γ = 0` (the predictor would be identically zero).
    pub fn new(kernel: RationalAnticausalKernel, gamma: f64) -> Result<Self> {
        if !gamma.is_finite() {
            return Err(Error::InvalidInput(format!("gamma must be finite, got {gamma}")));
        }
        let target = TargetClass::of_gamma(gamma)
            .ok_or_else(|| Error::InvalidInput("gamma must be nonzero".into()))?;
        let alphas = kernel
            .poles()
            .iter()
            .map(|p| alpha_coefficient(p.a, p.b, kernel.omega()))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            kernel,
            gamma,
            alphas,
            target,
        })
    }

    /// Like [`new`](Self::new) but also checks `γ` against a declared class.
    pub fn with_target(kernel: RationalAnticausalKernel, gamma: f64, target: TargetClass) -> Result<Self> {
        let p = Self::new(kernel, gamma)?;
        if p.target != target {
            return Err(Error::ClassMismatch(format!(
                "gamma = {gamma} targets {:?}, declared {target:?}",
                p.target
            )));
        }
        Ok(p)
    }

    pub fn kernel(&self) -> &RationalAnticausalKernel {
        &self.kernel
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn target(&self) -> TargetClass {
        self.target
    }

    pub fn with_gamma(&self, gamma: f64) -> Result<Self> {
        Self::new(self.kernel.clone(), gamma)
    }

    /// Exponents `γ φ_m(p)` paired with their multiplicities.
    fn exponents(&self, p: Complex64) -> impl Iterator<Item = (Complex64, u32)> + '_ {
        self.kernel
            .poles()
            .iter()
            .zip(&self.alphas)
            .map(move |(pole, alpha)| (mobius_exponent(pole.a, pole.b, *alpha, p) * self.gamma, pole.multiplicity))
    }

    fn saturation(&self, p: Complex64) -> Option<Error> {
        let mut log_magnitude = 0.0;
        let mut phase = 0.0;
        let mut saturated = false;
        for (z, mult) in self.exponents(p) {
            let (lm, ph) = if z.re > SATURATION_EXPONENT {
                saturated = true;
                // 1 - e^z = -e^z (1 - e^{-z}); the second factor is 1 to machine precision
                (z.re, z.im + PI)
            } else {
                let v = -z.exp_m1();
                (v.norm().ln(), v.arg())
            };
            log_magnitude += lm * mult as f64;
            phase += ph * mult as f64;
        }
        if saturated || log_magnitude > 709.0 {
            Some(Error::Saturated {
                log_magnitude,
                phase: wrap_phase(phase),
            })
        } else {
            None
        }
    }

    pub fn to_spec(&self) -> PredictorSpec {
        PredictorSpec {
            kernel: self.kernel.to_spec(),
            gamma: self.gamma,
        }
    }
}

fn wrap_phase(phase: f64) -> f64 {
    let mut p = phase.rem_euclid(2.0 * PI);
    if p > PI {
        p -= 2.0 * PI;
    }
    p
}

trait ExpM1 {
    fn exp_m1(self) -> Self;
}

impl ExpM1 for Complex64 {
    /// `e^z - 1` without cancellation for small `|z|`.
    fn exp_m1(self) -> Complex64 {
        // e^{x+iy} - 1 = (e^x - 1) cos y + (cos y - 1) + i e^x sin y
        let em1 = self.re.exp_m1();
        let cm1 = -2.0 * (0.5 * self.im).sin().powi(2);
        Complex64::new(em1 * self.im.cos() + cm1, self.re.exp() * self.im.sin())
    }
}

/// `V(p) = Π (1 - e^{γ φ_m(p)})^{mult_m}` on the closed right half-plane.
pub fn eval_v(predictor: &PredictorTransfer, p: Complex64) -> Result<Complex64> {
    if p.re < 0.0 {
        return Err(Error::DomainError(format!("V is evaluated on Re p >= 0, got {p}")));
    }
    if let Some(err) = predictor.saturation(p) {
        return Err(err);
    }
    let mut v = Complex64::new(1.0, 0.0);
    for (z, mult) in predictor.exponents(p) {
        v *= (-z.exp_m1()).powu(mult);
    }
    Ok(v)
}

/// `V(p) - 1`, accurate when every `e^{γ φ_m}` is tiny.
pub fn eval_v_minus_one(predictor: &PredictorTransfer, p: Complex64) -> Result<Complex64> {
    if p.re < 0.0 {
        return Err(Error::DomainError(format!("V is evaluated on Re p >= 0, got {p}")));
    }
    if let Some(err) = predictor.saturation(p) {
        return Err(err);
    }
    // Π(1 + u_m) - 1 by the recurrence D <- D (1 + u) + u
    let mut d = Complex64::new(0.0, 0.0);
    for (z, mult) in predictor.exponents(p) {
        let u = -z.exp();
        for _ in 0..mult {
            d = d * (u + 1.0) + u;
        }
    }
    Ok(d)
}

/// `K̂(iω) = V(iω) K(iω)`.
pub fn eval_predictor_transfer(predictor: &PredictorTransfer, omega_val: f64) -> Result<Complex64> {
    let p = Complex64::new(0.0, omega_val);
    Ok(eval_v(predictor, p)? * eval_transfer(&predictor.kernel, omega_val))
}

/// `K̂(iω) - K(iω) = (V(iω) - 1) K(iω)`.
pub fn eval_deviation(predictor: &PredictorTransfer, omega_val: f64) -> Result<Complex64> {
    let p = Complex64::new(0.0, omega_val);
    Ok(eval_v_minus_one(predictor, p)? * eval_transfer(&predictor.kernel, omega_val))
}

/// `D = [-Ω, Ω]` (LOW) or `|ω| >= Ω` (HIGH), shrunk by an `ε` gap from the
/// band edge when `epsilon > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrequencyDomain {
    pub kind: TargetClass,
    pub epsilon: f64,
    pub omega: f64,
}

impl FrequencyDomain {
    pub fn new(kind: TargetClass, epsilon: f64, omega: f64) -> Result<Self> {
        if !(omega > 0.0 && omega.is_finite()) {
            return Err(Error::InvalidInput(format!("omega must be positive, got {omega}")));
        }
        if !(epsilon >= 0.0 && epsilon < omega) {
            return Err(Error::InvalidInput(format!(
                "epsilon must lie in [0, omega), got {epsilon}"
            )));
        }
        Ok(Self { kind, epsilon, omega })
    }

    pub fn contains(&self, w: f64) -> bool {
        match self.kind {
            TargetClass::Low => w.abs() <= self.omega - self.epsilon,
            TargetClass::High => w.abs() >= self.omega + self.epsilon,
        }
    }

    /// Inner edge `Ω ∓ ε` of the domain.
    pub fn edge(&self) -> f64 {
        match self.kind {
            TargetClass::Low => self.omega - self.epsilon,
            TargetClass::High => self.omega + self.epsilon,
        }
    }
}

/// Frequency sampling for deviation norms and boundary checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrequencyGridSpec {
    /// Maximum spacing on the bounded part of the domain.
    pub h: f64,
    /// Truncation of unbounded domains; chosen automatically when `None`.
    pub omega_max: Option<f64>,
}

impl FrequencyGridSpec {
    /// Spacing `min(a_m) / 50`, automatic truncation.
    pub fn for_kernel(kernel: &RationalAnticausalKernel) -> Self {
        Self {
            h: kernel.min_decay_rate() / 50.0,
            omega_max: None,
        }
    }
}

/// Where `|K(iω)|` stays below this, a HIGH domain may be truncated.
pub const TRUNCATION_LEVEL: f64 = 1e-10;

fn truncation_point(kernel: &RationalAnticausalKernel, start: f64, requested: Option<f64>) -> Result<f64> {
    let below = |w: f64| eval_transfer(kernel, w).norm().max(eval_transfer(kernel, -w).norm());
    if let Some(w) = requested {
        let m = below(w);
        if m > TRUNCATION_LEVEL || w <= start {
            return Err(Error::TruncationNotJustified {
                omega_max: w,
                magnitude: m,
            });
        }
        return Ok(w);
    }
    // beyond every pole |K(iω)| decreases monotonically
    let mut w = (2.0 * start).max(10.0 * kernel.max_pole_modulus()).max(1.0);
    while below(w) > TRUNCATION_LEVEL {
        w *= 2.0;
        if w > 1e300 {
            return Err(Error::TruncationNotJustified {
                omega_max: w,
                magnitude: below(w),
            });
        }
    }
    Ok(w)
}

/// Nonnegative grid on `[lo, hi]`: uniform spacing `h` up to `dense_until`,
/// geometric growth (ratio `1 + h / dense_until`) beyond it.
fn ray_grid(lo: f64, hi: f64, h: f64, dense_until: f64) -> Vec<f64> {
    let mut pts = Vec::new();
    let dense_end = dense_until.min(hi);
    let n = ((dense_end - lo) / h).ceil().max(1.0) as usize;
    for i in 0..=n {
        pts.push(lo + (dense_end - lo) * i as f64 / n as f64);
    }
    if hi > dense_end {
        let ratio = 1.0 + h / dense_end;
        let mut w = dense_end;
        while w < hi {
            w = (w * ratio).min(hi);
            pts.push(w);
        }
    }
    pts
}

/// Grid points of `domain`, each half-line returned separately (HIGH) or the
/// single interval (LOW).
pub fn domain_grid(
    kernel: &RationalAnticausalKernel,
    domain: &FrequencyDomain,
    grid: &FrequencyGridSpec,
) -> Result<Vec<Vec<f64>>> {
    if !(grid.h > 0.0) {
        return Err(Error::InvalidInput("grid spacing must be positive".into()));
    }
    let edge = domain.edge();
    match domain.kind {
        TargetClass::Low => {
            let n = ((2.0 * edge) / grid.h).ceil().max(1.0) as usize;
            Ok(vec![(0..=n).map(|i| -edge + 2.0 * edge * i as f64 / n as f64).collect()])
        }
        TargetClass::High => {
            let w_max = truncation_point(kernel, edge, grid.omega_max)?;
            let dense = (edge + 20.0 * (kernel.max_pole_modulus() + domain.omega)).min(w_max);
            let right = ray_grid(edge, w_max, grid.h, dense);
            let left: Vec<f64> = right.iter().rev().map(|w| -w).collect();
            Ok(vec![left, right])
        }
    }
}

/// `‖K̂ - K‖_{L_μ(D)}` on a grid; `mu = f64::INFINITY` gives the supremum.
pub fn deviation_norm(
    predictor: &PredictorTransfer,
    domain: &FrequencyDomain,
    mu: f64,
    grid: &FrequencyGridSpec,
) -> Result<f64> {
    if domain.kind != predictor.target {
        return Err(Error::ClassMismatch(format!(
            "domain {:?} does not match predictor target {:?}",
            domain.kind, predictor.target
        )));
    }
    if !(mu >= 1.0) {
        return Err(Error::InvalidInput(format!("mu must be in [1, inf], got {mu}")));
    }
    let segments = domain_grid(&predictor.kernel, domain, grid)?;
    let dev = |w: f64| eval_deviation(predictor, w).map(|d| d.norm());

    if mu.is_infinite() {
        let mut best = 0.0f64;
        for seg in &segments {
            let vals = seg.iter().map(|w| dev(*w)).collect::<Result<Vec<_>>>()?;
            let grid_max = vals.iter().cloned().fold(0.0, f64::max);
            best = best.max(grid_max);
            for j in 0..vals.len() {
                let left = if j > 0 { vals[j - 1] } else { f64::NEG_INFINITY };
                let right = if j + 1 < vals.len() { vals[j + 1] } else { f64::NEG_INFINITY };
                if vals[j] >= left && vals[j] >= right && vals[j] >= 0.99 * grid_max && grid_max > 0.0 {
                    let lo = seg[j.saturating_sub(1)];
                    let hi = seg[(j + 1).min(seg.len() - 1)];
                    best = best.max(golden_max(|w| dev(w).unwrap_or(0.0), lo, hi));
                }
            }
        }
        return Ok(best);
    }

    let mut total = 0.0;
    for seg in &segments {
        let vals = seg.iter().map(|w| dev(*w).map(|d| d.powf(mu))).collect::<Result<Vec<_>>>()?;
        for j in 1..seg.len() {
            total += 0.5 * (seg[j] - seg[j - 1]) * (vals[j] + vals[j - 1]);
        }
    }
    Ok(total.powf(1.0 / mu))
}

fn golden_max<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> f64 {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut best = f(lo).max(f(hi));
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..80 {
        if f1 > f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        }
        best = best.max(f1).max(f2);
        if hi - lo < 1e-15 * hi.abs().max(1.0) {
            break;
        }
    }
    best
}

/// Uniform time grid `t_j = t0 + j dt`, `j < len`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t0: f64,
    pub dt: f64,
    pub len: usize,
}

impl TimeGrid {
    /// Grid of `len` points spanning `span`, centred on `t = 0`.
    pub fn centered(span: f64, len: usize) -> Self {
        let dt = span / len as f64;
        Self {
            t0: -dt * (len / 2) as f64,
            dt,
            len,
        }
    }

    pub fn time(&self, j: usize) -> f64 {
        self.t0 + self.dt * j as f64
    }

    /// Angular frequency spacing of the paired DFT grid.
    pub fn domega(&self) -> f64 {
        2.0 * PI / (self.len as f64 * self.dt)
    }

    /// Frequency of bin `l` on the centred grid `(l - len/2) dω`.
    pub fn frequency(&self, l: usize) -> f64 {
        (l as f64 - (self.len / 2) as f64) * self.domega()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite() && self.t0.is_finite()) {
            return Err(Error::GridMismatch(format!("invalid grid dt = {}, t0 = {}", self.dt, self.t0)));
        }
        if self.len < 2 || !self.len.is_power_of_two() {
            return Err(Error::GridMismatch(format!("grid length {} is not a power of two >= 2", self.len)));
        }
        Ok(())
    }
}

/// Samples of the causal predictor kernel `k̂` on a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthesizedKernel {
    pub grid: TimeGrid,
    pub values: Vec<f64>,
    /// Energy on `t < 0` relative to the total.
    pub leakage: f64,
    /// `k̂(0+)`, the jump of `k̂` at the origin.
    pub jump: f64,
}

impl SynthesizedKernel {
    /// Sample at lag `j dt` for `j >= 0`, if the grid holds it.
    pub fn lag(&self, j: usize) -> Option<f64> {
        let zero = (-self.grid.t0 / self.grid.dt).round() as i64;
        let idx = zero + j as i64;
        (idx >= 0 && (idx as usize) < self.values.len()).then(|| self.values[idx as usize])
    }

    /// Index of `t = 0` when the grid contains it.
    pub fn origin_index(&self) -> Option<usize> {
        let z = -self.grid.t0 / self.grid.dt;
        ((z - z.round()).abs() < 1e-9 && z >= 0.0 && (z as usize) < self.values.len()).then(|| z.round() as usize)
    }
}

/// Laurent coefficients `c_1..c_L` of `K̂(p) = Σ c_n p^{-n}` at infinity.
fn laurent_at_infinity(predictor: &PredictorTransfer, terms: usize) -> Result<Vec<Complex64>> {
    let len = terms + 1;
    let kernel = &predictor.kernel;
    let num = kernel.numerator();
    let den = kernel.denominator_coeffs();
    let nd = num.len() - 1;
    let n = den.len() - 1;
    let d_w = Series::from_coeffs((0..=nd).map(|k| Complex64::new(num[nd - k], 0.0)).collect(), len);
    let delta_w = Series::from_coeffs((0..=n).map(|k| Complex64::new(den[n - k], 0.0)).collect(), len);
    let k_w = d_w.div(&delta_w).shift_up(n - nd);

    if predictor.gamma > SATURATION_EXPONENT {
        return Err(Error::Saturated {
            log_magnitude: predictor.gamma * kernel.denominator_degree() as f64,
            phase: 0.0,
        });
    }
    let eg = predictor.gamma.exp();
    let mut v_w = Series::constant(Complex64::new(1.0, 0.0), len);
    for (pole, alpha) in kernel.poles().iter().zip(&predictor.alphas) {
        // φ(w) = (1 - λ w) / (1 + μ w), λ = a - bi, μ = α - bi
        let lam = pole.location();
        let mu = Complex64::new(*alpha, -pole.b);
        let top = Series::from_coeffs(vec![Complex64::new(1.0, 0.0), -lam], len);
        let bottom = Series::from_coeffs(vec![Complex64::new(1.0, 0.0), mu], len);
        let mut phi_minus_one = top.div(&bottom);
        phi_minus_one.coeffs[0] = Complex64::new(0.0, 0.0);
        let e = phi_minus_one.scale(Complex64::new(predictor.gamma, 0.0)).exp_zero_const();
        let factor = e.scale(Complex64::new(eg, 0.0)).sub_from_constant(Complex64::new(1.0, 0.0));
        v_w = v_w.mul(&factor.powi(pole.multiplicity));
    }
    let khat = v_w.mul(&k_w);
    Ok(khat.coeffs[1..].to_vec())
}

/// Inverse-transform samples of `K̂` on `grid`.
///
/// The Laurent part `Σ_{n≤L} e_n (p + β)^{-n}` of `K̂` at infinity, with
/// `β = min α_m`, is inverted in closed form (`e_n t^{n-1} e^{-βt} / (n-1)!`
/// for `t >= 0`); only the rapidly decaying remainder goes through the FFT.
/// The sample at `t = 0` is the right limit `k̂(0+)`.
pub fn synthesize_time_predictor(predictor: &PredictorTransfer, grid: &TimeGrid) -> Result<SynthesizedKernel> {
    grid.validate()?;
    let n = grid.len;
    let dw = grid.domega();
    let beta = predictor.alphas.iter().cloned().fold(f64::INFINITY, f64::min);

    let mut spectrum = Vec::with_capacity(n);
    let mut peak = 0.0f64;
    for l in 0..n {
        let w = grid.frequency(l);
        let v = match eval_predictor_transfer(predictor, w) {
            Ok(v) => v,
            Err(Error::Saturated { .. }) => return Err(Error::SaturatedSpectrum { omega: w }),
            Err(e) => return Err(e),
        };
        peak = peak.max(v.norm());
        spectrum.push(v);
    }

    let laurent = laurent_at_infinity(predictor, LAURENT_TERMS)
        .map_err(|_| Error::SaturatedSpectrum { omega: f64::INFINITY })?;
    // re-expand in u = 1/(p + β):  1/p = u / (1 - β u)
    let len = LAURENT_TERMS + 1;
    let mut c_w = Series::zeros(len);
    c_w.coeffs[1..].copy_from_slice(&laurent);
    let w_of_u = Series::from_coeffs(
        (0..len)
            .map(|k| if k == 0 { Complex64::new(0.0, 0.0) } else { Complex64::new(beta.powi(k as i32 - 1), 0.0) })
            .collect(),
        len,
    );
    let e_u = c_w.compose(&w_of_u);
    let singular = |p: Complex64| -> Complex64 {
        let u = (p + beta).inv();
        e_u.coeffs[1..]
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, c| (acc + c) * u)
    };

    for (l, s) in spectrum.iter_mut().enumerate() {
        *s -= singular(Complex64::new(0.0, grid.frequency(l)));
    }
    let edge = spectrum[0].norm().max(spectrum[n - 1].norm());
    let threshold = 1e-8 * peak.max(f64::MIN_POSITIVE);
    if edge > threshold {
        return Err(Error::SpectrumNotDecayed {
            residual: edge,
            threshold,
        });
    }

    // r(t_j) = (dω/2π) Σ_l R_l e^{i ω_l t_j}
    //        = (dω/2π) (-1)^j Σ_l [R_l e^{i ω_l t0}] e^{2πi l j / n}
    let mut buf: Vec<Complex64> = spectrum
        .iter()
        .enumerate()
        .map(|(l, r)| r * Complex64::new(0.0, grid.frequency(l) * grid.t0).exp())
        .collect();
    FftPlanner::new().plan_fft_inverse(n).process(&mut buf);
    let scale = dw / (2.0 * PI);
    let mut values = Vec::with_capacity(n);
    for (j, r) in buf.iter().enumerate() {
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        let t = grid.time(j);
        let mut v = r.re * sign * scale;
        if t >= 0.0 {
            let mut poly = Complex64::new(0.0, 0.0);
            let mut tp = 1.0;
            for (k, e) in e_u.coeffs[1..].iter().enumerate() {
                if k > 0 {
                    tp *= t / k as f64;
                }
                poly += e * tp;
            }
            v += (poly * (-beta * t).exp()).re;
        }
        values.push(v);
    }

    let total: f64 = values.iter().map(|v| v * v).sum();
    let negative: f64 = values
        .iter()
        .enumerate()
        .filter(|(j, _)| grid.time(*j) < 0.0)
        .map(|(_, v)| v * v)
        .sum();
    let leakage = if total > 0.0 { negative / total } else { 0.0 };
    Ok(SynthesizedKernel {
        grid: *grid,
        values,
        leakage,
        jump: laurent[0].re,
    })
}

/// `K̂(p)` in the open half-plane; at the removable singularities `p = a_m - b_m i`
/// the limit is approximated by a symmetric average.
fn khat_off_axis(predictor: &PredictorTransfer, p: Complex64, v: Complex64) -> Result<Complex64> {
    let direct = v * predictor.kernel.transfer(p);
    if direct.re.is_finite() && direct.im.is_finite() {
        return Ok(direct);
    }
    let d = Complex64::new(0.0, 1e-6 * p.norm().max(1.0));
    let lo = eval_v(predictor, p - d)? * predictor.kernel.transfer(p - d);
    let hi = eval_v(predictor, p + d)? * predictor.kernel.transfer(p + d);
    Ok(0.5 * (lo + hi))
}

/// Per-line result of [`hardy_boundary_check`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryLine {
    pub s: f64,
    /// `sup_ω |V(s + iω)|` over the sampled window.
    pub sup_v: f64,
    /// `sup_ω |K̂(s + iω)|`.
    pub sup_khat: f64,
    /// `(∫ |K̂(s + iω)|² dω)^{1/2}` over the sampled window.
    pub l2_khat: f64,
    pub finite: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HardyReport {
    pub lines: Vec<BoundaryLine>,
    /// `sup |V|` nonincreasing along the lines with `s >= max a_m`.
    pub sup_nonincreasing: bool,
    pub passed: bool,
}

/// Samples `V` and `K̂` on vertical lines `Re p = s` as a numerical sanity
/// check of boundedness and square integrability. Not a proof.
pub fn hardy_boundary_check(
    predictor: &PredictorTransfer,
    s_levels: &[f64],
    grid: &FrequencyGridSpec,
) -> Result<HardyReport> {
    if s_levels.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
        return Err(Error::InvalidInput("s levels must be finite and positive".into()));
    }
    let kernel = &predictor.kernel;
    let w_max = grid
        .omega_max
        .unwrap_or_else(|| 50.0 * (kernel.max_pole_modulus() + kernel.omega()));
    let n = ((2.0 * w_max) / grid.h).ceil() as usize;
    let mut lines = Vec::with_capacity(s_levels.len());
    for &s in s_levels {
        let mut sup_v = 0.0f64;
        let mut sup_khat = 0.0f64;
        let mut l2 = 0.0;
        let mut prev: Option<f64> = None;
        let mut finite = true;
        for i in 0..=n {
            let w = -w_max + 2.0 * w_max * i as f64 / n as f64;
            let p = Complex64::new(s, w);
            match eval_v(predictor, p) {
                Ok(v) => {
                    let kh = khat_off_axis(predictor, p, v)?.norm();
                    sup_v = sup_v.max(v.norm());
                    sup_khat = sup_khat.max(kh);
                    if let Some(q) = prev {
                        l2 += 0.5 * (2.0 * w_max / n as f64) * (q * q + kh * kh);
                    }
                    prev = Some(kh);
                }
                Err(_) => {
                    finite = false;
                    sup_v = f64::INFINITY;
                    sup_khat = f64::INFINITY;
                    l2 = f64::INFINITY;
                    break;
                }
            }
        }
        lines.push(BoundaryLine {
            s,
            sup_v,
            sup_khat,
            l2_khat: l2.sqrt(),
            finite: finite && sup_v.is_finite() && l2.is_finite(),
        });
    }
    let a_max = kernel.poles().iter().map(|p| p.a).fold(0.0, f64::max);
    let mut beyond: Vec<&BoundaryLine> = lines.iter().filter(|l| l.s >= a_max).collect();
    beyond.sort_by(|x, y| x.s.total_cmp(&y.s));
    let sup_nonincreasing = beyond
        .windows(2)
        .all(|w| w[1].sup_v <= w[0].sup_v * (1.0 + 1e-9) + 1e-12);
    let passed = sup_nonincreasing && lines.iter().all(|l| l.finite);
    Ok(HardyReport {
        lines,
        sup_nonincreasing,
        passed,
    })
}

/// Kernel JSON plus `gamma`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictorSpec {
    #[serde(flatten)]
    pub kernel: KernelSpec,
    pub gamma: f64,
}

impl PredictorSpec {
    pub fn build(&self) -> Result<PredictorTransfer> {
        PredictorTransfer::new(self.kernel.build()?, self.gamma)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{build_kernel, Pole};

    fn single_pole() -> RationalAnticausalKernel {
        build_kernel(&[Pole::new(1.0, 0.0, 1)], &[1.0], 1.0).unwrap()
    }

    fn predictor(gamma: f64) -> PredictorTransfer {
        PredictorTransfer::new(single_pole(), gamma).unwrap()
    }

    #[test]
    fn alpha_examples() {
        assert_eq!(alpha_coefficient(1.0, 0.0, 1.0).unwrap(), 1.0);
        assert!((alpha_coefficient(0.5, 0.8, 1.0).unwrap() - 0.72).abs() < 1e-15);
        assert_eq!(alpha_coefficient(2.0, 0.0, 1.0).unwrap(), 0.5);
        assert!(matches!(alpha_coefficient(0.0, 0.0, 1.0), Err(Error::DomainError(_))));
        assert!(matches!(alpha_coefficient(1.0, 1.0, 1.0), Err(Error::DomainError(_))));
    }

    #[test]
    fn phi_real_examples() {
        assert_eq!(eval_phi_real(1.0, 0.0, 1.0, 0.0), -1.0);
        assert_eq!(eval_phi_real(1.0, 0.0, 1.0, 1.0), 0.0);
        let v = eval_phi_real(0.5, 0.8, 1.0, 2.0);
        // direct complex arithmetic as the oracle
        let direct = mobius_exponent(0.5, 0.8, 0.72, Complex64::new(0.0, 2.0)).re;
        assert!((v - direct).abs() < 1e-12);
        assert!((v - 3.0 / 1.9584).abs() < 1e-12);
        assert!((v - 1.5319).abs() < 1e-4);
    }

    #[test]
    fn zero_gamma_rejected() {
        assert!(matches!(PredictorTransfer::new(single_pole(), 0.0), Err(Error::InvalidInput(_))));
        assert!(matches!(
            PredictorTransfer::with_target(single_pole(), 2.0, TargetClass::High),
            Err(Error::ClassMismatch(_))
        ));
        assert_eq!(predictor(-3.0).target(), TargetClass::High);
    }

    #[test]
    fn v_examples() {
        let v = eval_v(&predictor(1e-12), Complex64::new(0.0, 0.0)).unwrap();
        assert!(v.norm() < 1e-11);
        let v = eval_v(&predictor(5.0), Complex64::new(0.0, 1.0)).unwrap();
        assert!(v.norm() <= 2.0);
        let v = eval_v(&predictor(5.0), Complex64::new(0.0, 0.0)).unwrap();
        assert!((v.re - (1.0 - (-5.0f64).exp())).abs() < 1e-15 && v.im == 0.0);
        assert!((v.re - 0.993262).abs() < 1e-6);
        assert!(matches!(eval_v(&predictor(5.0), Complex64::new(-0.1, 0.0)), Err(Error::DomainError(_))));
    }

    #[test]
    fn v_saturates_instead_of_overflowing() {
        // Re φ(i·10) = 99/101; 2000 · 0.98 > 700
        match eval_v(&predictor(2000.0), Complex64::new(0.0, 10.0)) {
            Err(Error::Saturated { log_magnitude, phase }) => {
                let z = mobius_exponent(1.0, 0.0, 1.0, Complex64::new(0.0, 10.0)) * 2000.0;
                assert!((log_magnitude - z.re).abs() < 1e-9);
                assert!(phase.abs() <= PI);
            }
            other => panic!("expected saturation, got {other:?}"),
        }
    }

    #[test]
    fn predictor_transfer_examples() {
        let v = eval_predictor_transfer(&predictor(5.0), 0.0).unwrap();
        assert!((v.re + 0.993262).abs() < 1e-6);

        let p = predictor(-5.0);
        let dev = eval_deviation(&p, 2.0).unwrap().norm();
        // |V - 1| = e^{-5 Re φ(2)} = e^{-3}, |K| = 1/√5
        let oracle = (-3.0f64).exp() / 5f64.sqrt();
        assert!((dev - oracle).abs() < 1e-15);
        assert!((dev - 0.022265).abs() < 1e-6);
        let direct = (eval_predictor_transfer(&p, 2.0).unwrap() - eval_transfer(p.kernel(), 2.0)).norm();
        assert!((dev - direct).abs() < 1e-14);
    }

    #[test]
    fn in_band_transfer_approaches_kernel() {
        let k = eval_transfer(&single_pole(), 0.4);
        let mut last = f64::INFINITY;
        for g in [1.0, 10.0, 100.0] {
            let d = (eval_predictor_transfer(&predictor(g), 0.4).unwrap() - k).norm();
            assert!(d < last);
            last = d;
        }
        assert!(last < 1e-30);
    }

    #[test]
    fn v_minus_one_keeps_tiny_values() {
        let d = eval_v_minus_one(&predictor(256.0), Complex64::new(0.0, 0.0)).unwrap();
        assert!((d.re + (-256.0f64).exp()).abs() < 1e-125);
    }

    #[test]
    fn deviation_norm_linear_in_kernel() {
        let dom = FrequencyDomain::new(TargetClass::Low, 0.1, 1.0).unwrap();
        let grid = FrequencyGridSpec::for_kernel(&single_pole());
        let p1 = predictor(3.0);
        let p2 = PredictorTransfer::new(single_pole().scaled(2.0).unwrap(), 3.0).unwrap();
        for mu in [1.0, 2.0, 4.0, f64::INFINITY] {
            let a = deviation_norm(&p1, &dom, mu, &grid).unwrap();
            let b = deviation_norm(&p2, &dom, mu, &grid).unwrap();
            assert!((b - 2.0 * a).abs() <= 1e-14 * b, "mu = {mu}");
        }
    }

    #[test]
    fn deviation_sup_at_domain_endpoint() {
        let p = predictor(20.0);
        let dom = FrequencyDomain::new(TargetClass::Low, 0.1, 1.0).unwrap();
        let sup = deviation_norm(&p, &dom, f64::INFINITY, &FrequencyGridSpec::for_kernel(p.kernel())).unwrap();
        // dense argmax oracle
        let mut best = (0.0, 0.0);
        for i in 0..=180_000 {
            let w = -0.9 + 1.8 * i as f64 / 180_000.0;
            let d = eval_deviation(&p, w).unwrap().norm();
            if d > best.1 {
                best = (w, d);
            }
        }
        assert!((best.0.abs() - 0.9).abs() < 1e-12);
        assert!((sup - best.1).abs() <= 1e-14 * sup);
    }

    #[test]
    fn deviation_bounded_by_twice_kernel_in_band() {
        let p = predictor(7.0);
        let dom = FrequencyDomain::new(TargetClass::Low, 0.0, 1.0).unwrap();
        let sup = deviation_norm(&p, &dom, f64::INFINITY, &FrequencyGridSpec::for_kernel(p.kernel())).unwrap();
        // sup |K| on [-1, 1] is |K(0)| = 1
        assert!(sup <= 2.0);
    }

    #[test]
    fn deviation_norm_rejects_mismatch_and_bad_truncation() {
        let p = predictor(3.0);
        let high = FrequencyDomain::new(TargetClass::High, 0.1, 1.0).unwrap();
        let grid = FrequencyGridSpec::for_kernel(p.kernel());
        assert!(matches!(deviation_norm(&p, &high, 2.0, &grid), Err(Error::ClassMismatch(_))));
        let p = predictor(-3.0);
        let bad = FrequencyGridSpec { h: 0.02, omega_max: Some(100.0) };
        assert!(matches!(deviation_norm(&p, &high, 2.0, &bad), Err(Error::TruncationNotJustified { .. })));
        let sup = deviation_norm(&p, &high, f64::INFINITY, &grid).unwrap();
        // for b = 0 the off-band deviation e^{γ Re φ} |K| peaks at the inner edge
        let edge = eval_deviation(&p, 1.1).unwrap().norm();
        assert!((sup - edge).abs() < 1e-12);
    }

    #[test]
    fn frequency_domain_validation() {
        assert!(FrequencyDomain::new(TargetClass::Low, 1.0, 1.0).is_err());
        assert!(FrequencyDomain::new(TargetClass::Low, -0.1, 1.0).is_err());
        let d = FrequencyDomain::new(TargetClass::High, 0.1, 1.0).unwrap();
        assert!(d.contains(1.1) && d.contains(-5.0) && !d.contains(1.05));
    }

    #[test]
    fn synthesis_saturates_for_huge_gamma() {
        let grid = TimeGrid::centered(200.0, 1 << 12);
        assert!(matches!(
            synthesize_time_predictor(&predictor(2000.0), &grid),
            Err(Error::SaturatedSpectrum { .. })
        ));
    }

    #[test]
    fn synthesis_is_linear_in_kernel() {
        let grid = TimeGrid::centered(200.0, 1 << 12);
        let a = synthesize_time_predictor(&predictor(5.0), &grid).unwrap();
        let k2 = single_pole().scaled(2.0).unwrap();
        let b = synthesize_time_predictor(&PredictorTransfer::new(k2, 5.0).unwrap(), &grid).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            assert_eq!(2.0 * x, *y);
        }
    }

    #[test]
    fn synthesis_jump_matches_initial_value() {
        // k̂(0+) = lim p K̂(p) = (1 - e^γ) for K = 1/(p - 1)
        let grid = TimeGrid::centered(200.0, 1 << 14);
        let s = synthesize_time_predictor(&predictor(2.0), &grid).unwrap();
        assert!((s.jump - (1.0 - 2f64.exp())).abs() < 1e-12);
        assert_eq!(s.lag(0), Some(s.values[s.origin_index().unwrap()]));
        assert!((s.lag(0).unwrap() - s.jump).abs() < 1e-8);
    }

    #[test]
    fn hardy_check_examples() {
        let grid = FrequencyGridSpec { h: 0.05, omega_max: None };
        let r = hardy_boundary_check(&predictor(5.0), &[1.0, 2.0, 5.0, 10.0], &grid).unwrap();
        assert!(r.passed, "{r:?}");
        // far right: φ ≈ 1 so |V| ≈ |1 - e^γ|
        let far = r.lines.last().unwrap().sup_v;
        assert!((far - (5f64.exp() - 1.0)).abs() / far < 0.2);

        let r = hardy_boundary_check(&predictor(-5.0), &[1.0, 3.0], &grid).unwrap();
        assert!(r.passed);
        assert!(r.lines[0].sup_v <= 1.0 + 5f64.exp());
    }

    #[test]
    fn predictor_spec_round_trip() {
        let spec = predictor(4.0).to_spec();
        let json = serde_json::to_string(&spec).unwrap();
        assert!(json.contains("\"gamma\":4.0"));
        let back: PredictorSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back.build().unwrap(), predictor(4.0));
    }
}

//! Test signals: band-limited and high-frequency square-integrable signals on
//! uniform grids, mixed atomic-plus-density spectra, the ideal low-/high-pass
//! split, and seeded out-of-band perturbations.

use std::f64::consts::PI;
use std::io::{Read, Write};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::predictor::{TargetClass, TimeGrid};
use crate::quadrature::{integrate, integrate_complex, QuadOptions};
use crate::spectral::fourier_inverse;

/// Samples `x(t0 + j dt)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledSignal {
    pub t0: f64,
    pub dt: f64,
    pub values: Vec<Complex64>,
}

/// Samples `X(omega0 + l domega)`. `t0` is the time origin of the paired
/// signal grid, needed to transform back.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledSpectrum {
    pub omega0: f64,
    pub domega: f64,
    pub t0: f64,
    pub values: Vec<Complex64>,
}

impl SampledSignal {
    pub fn new(t0: f64, dt: f64, values: Vec<Complex64>) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite() && t0.is_finite()) || values.len() < 2 {
            return Err(Error::GridMismatch("signal grid needs dt > 0 and at least two samples".into()));
        }
        Ok(Self { t0, dt, values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn time(&self, j: usize) -> f64 {
        self.t0 + self.dt * j as f64
    }

    pub fn grid(&self) -> TimeGrid {
        TimeGrid {
            t0: self.t0,
            dt: self.dt,
            len: self.values.len(),
        }
    }

    /// `‖x‖²` by the rectangle rule (exact Parseval partner of the DFT).
    pub fn energy(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.dt
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["t", "re", "im"])?;
        for (j, v) in self.values.iter().enumerate() {
            out.write_record(&[fmt(self.time(j)), fmt(v.re), fmt(v.im)])?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let (axis, values) = read_triples(r, "t")?;
        let dt = axis.get(1).zip(axis.first()).map(|(b, a)| b - a).unwrap_or(0.0);
        Self::new(axis.first().copied().unwrap_or(0.0), dt, values)
    }
}

impl SampledSpectrum {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn frequency(&self, l: usize) -> f64 {
        self.omega0 + self.domega * l as f64
    }

    /// `∫ |X|² dω` by the rectangle rule.
    pub fn energy(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.domega
    }

    pub fn frequencies(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.values.len()).map(|l| self.frequency(l))
    }

    /// Same grid, new values.
    pub fn with_values(&self, values: Vec<Complex64>) -> Self {
        Self {
            omega0: self.omega0,
            domega: self.domega,
            t0: self.t0,
            values,
        }
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["omega", "re", "im"])?;
        for (l, v) in self.values.iter().enumerate() {
            out.write_record(&[fmt(self.frequency(l)), fmt(v.re), fmt(v.im)])?;
        }
        out.flush()?;
        Ok(())
    }

    /// Reads `(omega, re, im)` rows; the time origin defaults to the centred grid.
    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let (axis, values) = read_triples(r, "omega")?;
        if axis.len() < 2 {
            return Err(Error::GridMismatch("spectrum needs at least two samples".into()));
        }
        let domega = axis[1] - axis[0];
        let n = values.len();
        let dt = 2.0 * PI / (n as f64 * domega);
        Ok(Self {
            omega0: axis[0],
            domega,
            t0: -dt * (n / 2) as f64,
            values,
        })
    }
}

pub(crate) fn fmt(x: f64) -> String {
    // shortest representation that round-trips
    format!("{x:?}")
}

fn read_triples<R: Read>(r: R, axis_name: &str) -> Result<(Vec<f64>, Vec<Complex64>)> {
    let mut rdr = csv::Reader::from_reader(r);
    let headers = rdr.headers()?.clone();
    if headers.get(0) != Some(axis_name) {
        return Err(Error::Parse(format!("expected first column {axis_name:?}")));
    }
    let mut axis = Vec::new();
    let mut values = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let get = |i: usize| -> Result<f64> {
            rec.get(i)
                .ok_or_else(|| Error::Parse("short CSV row".into()))?
                .trim()
                .parse::<f64>()
                .map_err(|e| Error::Parse(e.to_string()))
        };
        axis.push(get(0)?);
        values.push(Complex64::new(get(1)?, get(2)?));
    }
    Ok((axis, values))
}

/// Spectral envelope shapes, each exactly zero outside its support.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum EnvelopeShape {
    /// `½(1 + cos(2π(ω - c)/w))` on the support.
    RaisedCosine,
    /// Gaussian of standard deviation `sigma` about the centre, shifted down
    /// so that it vanishes at the support ends, then rescaled to unit peak.
    TruncatedGaussian { sigma: f64 },
    Indicator,
    /// Seeded sum of `count` raised-cosine bumps with random centres, widths
    /// and complex amplitudes inside the support.
    BumpMixture { count: usize, seed: u64 },
}

/// Envelope on `[lo, hi]` scaled by `height`. With `hermitian`, the mirrored
/// conjugate `conj X(-ω)` is added so that the time signal is real; a
/// support symmetric about zero is used as is.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeSpec {
    #[serde(flatten)]
    pub shape: EnvelopeShape,
    pub lo: f64,
    pub hi: f64,
    #[serde(default = "one")]
    pub height: f64,
    #[serde(default)]
    pub hermitian: bool,
}

fn one() -> f64 {
    1.0
}

struct Bump {
    center: f64,
    half_width: f64,
    amplitude: Complex64,
}

fn raised_cosine(w: f64, center: f64, half_width: f64) -> f64 {
    let u = (w - center) / half_width;
    if u.abs() > 1.0 {
        0.0
    } else {
        0.5 * (1.0 + (PI * u).cos())
    }
}

impl EnvelopeSpec {
    pub fn new(shape: EnvelopeShape, lo: f64, hi: f64) -> Self {
        Self {
            shape,
            lo,
            hi,
            height: 1.0,
            hermitian: false,
        }
    }

    pub fn hermitian(mut self) -> Self {
        self.hermitian = true;
        self
    }

    pub fn height(mut self, height: f64) -> Self {
        self.height = height;
        self
    }

    fn symmetric(&self) -> bool {
        self.lo == -self.hi
    }

    /// Intervals on which the spectrum may be nonzero.
    pub fn support(&self) -> Vec<(f64, f64)> {
        if self.hermitian && !self.symmetric() {
            vec![(-self.hi, -self.lo), (self.lo, self.hi)]
        } else {
            vec![(self.lo, self.hi)]
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.lo < self.hi && self.lo.is_finite() && self.hi.is_finite()) {
            return Err(Error::SupportViolation(format!("empty support [{}, {}]", self.lo, self.hi)));
        }
        if self.hermitian && !self.symmetric() && self.lo < 0.0 && self.hi > 0.0 {
            return Err(Error::SupportViolation(
                "hermitian envelopes need a support symmetric about 0 or on one side of it".into(),
            ));
        }
        if let EnvelopeShape::TruncatedGaussian { sigma } = self.shape {
            if !(sigma > 0.0) {
                return Err(Error::InvalidInput("gaussian sigma must be positive".into()));
            }
        }
        Ok(())
    }

    fn bumps(&self) -> Vec<Bump> {
        let EnvelopeShape::BumpMixture { count, seed } = self.shape else {
            return Vec::new();
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let width = self.hi - self.lo;
        (0..count.max(1))
            .map(|_| {
                let half_width = width * (0.05 + 0.2 * rng.random::<f64>());
                let center = self.lo + half_width + (width - 2.0 * half_width) * rng.random::<f64>();
                let amplitude = Complex64::from_polar(0.2 + rng.random::<f64>(), 2.0 * PI * rng.random::<f64>());
                Bump {
                    center,
                    half_width,
                    amplitude,
                }
            })
            .collect()
    }

    fn one_sided(&self, w: f64, bumps: &[Bump]) -> Complex64 {
        if w < self.lo || w > self.hi {
            return Complex64::new(0.0, 0.0);
        }
        let center = 0.5 * (self.lo + self.hi);
        let half = 0.5 * (self.hi - self.lo);
        let v = match self.shape {
            EnvelopeShape::RaisedCosine => Complex64::new(raised_cosine(w, center, half), 0.0),
            EnvelopeShape::Indicator => Complex64::new(1.0, 0.0),
            EnvelopeShape::TruncatedGaussian { sigma } => {
                let g = |x: f64| (-(x * x) / (2.0 * sigma * sigma)).exp();
                let edge = g(half);
                Complex64::new(((g(w - center) - edge) / (1.0 - edge)).max(0.0), 0.0)
            }
            EnvelopeShape::BumpMixture { .. } => bumps
                .iter()
                .map(|b| b.amplitude * raised_cosine(w, b.center, b.half_width))
                .sum(),
        };
        v * self.height
    }

    /// Envelope values at the given frequencies.
    pub fn sample(&self, freqs: impl Iterator<Item = f64>) -> Vec<Complex64> {
        let bumps = self.bumps();
        freqs
            .map(|w| {
                let mut v = self.one_sided(w, &bumps);
                if self.hermitian {
                    let m = self.one_sided(-w, &bumps).conj();
                    v = if self.symmetric() { 0.5 * (v + m) } else { v + m };
                }
                v
            })
            .collect()
    }
}

/// Centred spectral grid paired with `grid`.
pub fn spectrum_grid(grid: &TimeGrid) -> SampledSpectrum {
    let dw = grid.domega();
    SampledSpectrum {
        omega0: -dw * (grid.len / 2) as f64,
        domega: dw,
        t0: grid.t0,
        values: vec![Complex64::new(0.0, 0.0); grid.len],
    }
}

fn check_in_grid(grid: &TimeGrid, support: &[(f64, f64)]) -> Result<()> {
    let spec = spectrum_grid(grid);
    let top = spec.frequency(spec.len() - 1);
    for (lo, hi) in support {
        if *lo < spec.omega0 || *hi > top {
            return Err(Error::SupportViolation(format!(
                "support [{lo}, {hi}] exceeds the grid's frequency range [{}, {top}]",
                spec.omega0
            )));
        }
    }
    Ok(())
}

fn synthesize(envelope: &EnvelopeSpec, grid: &TimeGrid) -> Result<(SampledSignal, SampledSpectrum)> {
    grid.validate()?;
    check_in_grid(grid, &envelope.support())?;
    let spec = spectrum_grid(grid);
    let values = envelope.sample(spec.frequencies());
    let spectrum = spec.with_values(values);
    let signal = fourier_inverse(&spectrum)?;
    Ok((signal, spectrum))
}

/// A member of the band-limited class: spectrum supported in `[-Ω, Ω]`.
pub fn make_bandlimited_signal(
    envelope: &EnvelopeSpec,
    omega: f64,
    grid: &TimeGrid,
) -> Result<(SampledSignal, SampledSpectrum)> {
    envelope.validate()?;
    for (lo, hi) in envelope.support() {
        if lo < -omega || hi > omega {
            return Err(Error::SupportViolation(format!(
                "band-limited support [{lo}, {hi}] leaves [-{omega}, {omega}]"
            )));
        }
    }
    synthesize(envelope, grid)
}

/// A member of the high-frequency class: spectrum vanishing on `(-Ω, Ω)`.
pub fn make_highfreq_signal(
    envelope: &EnvelopeSpec,
    omega: f64,
    grid: &TimeGrid,
) -> Result<(SampledSignal, SampledSpectrum)> {
    envelope.validate()?;
    for (lo, hi) in envelope.support() {
        if !(lo >= omega || hi <= -omega) {
            return Err(Error::SupportViolation(format!(
                "high-frequency support [{lo}, {hi}] meets (-{omega}, {omega})"
            )));
        }
    }
    synthesize(envelope, grid)
}

/// Spectral atom `c e^{iωt} / 2π`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub omega: f64,
    pub c: Complex64,
}

/// Absolutely integrable spectral density `X_c`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Density {
    None,
    /// Raised cosine on `[lo, hi]` with total `L1` mass `mass`; mirrored with
    /// the same mass when `hermitian`.
    RaisedCosine {
        lo: f64,
        hi: f64,
        mass: f64,
        #[serde(default)]
        hermitian: bool,
    },
    /// Truncated Gaussian bump (vanishing at `lo`, `hi`) with `L1` mass `mass`.
    GaussianBump {
        lo: f64,
        hi: f64,
        sigma: f64,
        mass: f64,
        #[serde(default)]
        hermitian: bool,
    },
    /// Samples on a uniform grid, linearly interpolated, zero outside.
    Sampled {
        omega0: f64,
        domega: f64,
        values: Vec<Complex64>,
    },
}

impl Density {
    /// Support intervals.
    pub fn support(&self) -> Vec<(f64, f64)> {
        match self {
            Density::None => Vec::new(),
            Density::RaisedCosine { lo, hi, hermitian, .. } | Density::GaussianBump { lo, hi, hermitian, .. } => {
                if *hermitian {
                    vec![(-hi, -lo), (*lo, *hi)]
                } else {
                    vec![(*lo, *hi)]
                }
            }
            Density::Sampled { omega0, domega, values } => {
                vec![(*omega0, omega0 + domega * (values.len().saturating_sub(1)) as f64)]
            }
        }
    }

    fn one_sided(&self, w: f64) -> f64 {
        match *self {
            Density::RaisedCosine { lo, hi, mass, .. } => {
                // ∫ ½(1 + cos) over the support equals half its width
                let half = 0.5 * (hi - lo);
                mass / half * raised_cosine(w, lo + half, half)
            }
            Density::GaussianBump { lo, hi, sigma, mass, .. } => {
                if w < lo || w > hi {
                    return 0.0;
                }
                let half = 0.5 * (hi - lo);
                let g = |x: f64| (-(x * x) / (2.0 * sigma * sigma)).exp();
                let edge = g(half);
                // ∫_{-h}^{h} (g - edge) = σ√(2π) erf(h / (σ√2)) - 2h edge
                let area = sigma * (2.0 * PI).sqrt() * erf(half / (sigma * 2f64.sqrt())) - 2.0 * half * edge;
                mass * (g(w - lo - half) - edge).max(0.0) / area
            }
            _ => 0.0,
        }
    }

    pub fn eval(&self, w: f64) -> Complex64 {
        match self {
            Density::None => Complex64::new(0.0, 0.0),
            Density::RaisedCosine { hermitian, .. } | Density::GaussianBump { hermitian, .. } => {
                let mut v = self.one_sided(w);
                if *hermitian {
                    v += self.one_sided(-w);
                }
                Complex64::new(v, 0.0)
            }
            Density::Sampled { omega0, domega, values } => {
                let x = (w - omega0) / domega;
                if x < 0.0 || x > (values.len() - 1) as f64 {
                    return Complex64::new(0.0, 0.0);
                }
                let i = (x.floor() as usize).min(values.len() - 2);
                let f = x - i as f64;
                values[i] * (1.0 - f) + values[i + 1] * f
            }
        }
    }

    /// Points where the density has kinks, for quadrature breakpoints.
    fn breakpoints(&self) -> Vec<f64> {
        match self {
            Density::Sampled { omega0, domega, values } => {
                (0..values.len()).map(|i| omega0 + domega * i as f64).collect()
            }
            other => other.support().iter().flat_map(|(a, b)| [*a, *b]).collect(),
        }
    }

    /// `∫ |X_c(ω)| dω`.
    pub fn l1_norm(&self) -> Result<f64> {
        match self {
            Density::None => Ok(0.0),
            Density::RaisedCosine { mass, hermitian, .. } | Density::GaussianBump { mass, hermitian, .. } => {
                Ok(mass.abs() * if *hermitian { 2.0 } else { 1.0 })
            }
            Density::Sampled { values, .. } => {
                let bp = self.breakpoints();
                let mut total = 0.0;
                for (j, seg) in bp.windows(2).enumerate() {
                    let (a, b) = (values[j], values[j + 1]);
                    total += integrate(
                        |w| (a + (b - a) * ((w - seg[0]) / (seg[1] - seg[0]))).norm(),
                        seg[0],
                        seg[1],
                        QuadOptions::with_rel_tol(1e-12),
                    )?;
                }
                Ok(total)
            }
        }
    }

    /// `∫ e^{iωt} H(ω) X_c(ω) dω` by adaptive quadrature over the support.
    pub fn transform_with<H: Fn(f64) -> Complex64>(&self, t: f64, h: &H, rel_tol: f64) -> Result<Complex64> {
        let mut total = Complex64::new(0.0, 0.0);
        let bp = self.breakpoints();
        let segments: Vec<(f64, f64)> = match self {
            Density::Sampled { .. } => bp.windows(2).map(|w| (w[0], w[1])).collect(),
            _ => self.support(),
        };
        for (lo, hi) in segments {
            // a few panels per oscillation period of e^{iωt}
            let panels = ((hi - lo) * t.abs() / PI).ceil().clamp(1.0, 2000.0) as usize;
            let opts = QuadOptions {
                max_intervals: 20_000,
                ..QuadOptions::with_rel_tol(rel_tol).panels(panels).abs(1e-15)
            };
            let r = integrate_complex(|w| Complex64::new(0.0, w * t).exp() * h(w) * self.eval(w), lo, hi, opts)?;
            total += r.value;
        }
        Ok(total)
    }
}

/// Abramowitz–Stegun 7.1.26 is too coarse here; use the series/continued
/// fraction pair instead.
fn erf(x: f64) -> f64 {
    if x < 0.0 {
        return -erf(-x);
    }
    if x < 3.0 {
        // Maclaurin series
        let mut sum = x;
        let mut term = x;
        let x2 = x * x;
        for n in 1..200 {
            term *= -x2 / n as f64;
            let add = term / (2 * n + 1) as f64;
            sum += add;
            if add.abs() < 1e-17 * sum.abs() {
                break;
            }
        }
        2.0 / PI.sqrt() * sum
    } else {
        // erfc continued fraction (Lentz)
        let x2 = x * x;
        let mut f = x;
        let mut c = x;
        let mut d = 0.0;
        for n in 1..200 {
            let a = n as f64 * 0.5;
            d = x + a * d;
            d = 1.0 / d;
            c = x + a / c;
            let delta = c * d;
            f *= delta;
            if (delta - 1.0).abs() < 1e-16 {
                break;
            }
        }
        1.0 - (-x2).exp() / (PI.sqrt() * f)
    }
}

/// Atoms plus integrable density, with a declared class and gap `ε`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixedSpectrum {
    pub atoms: Vec<Atom>,
    pub density: Density,
    pub class: TargetClass,
    pub epsilon: f64,
    pub omega: f64,
}

/// JSON form: atoms as `[omega, re, im]` triples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixedSpectrumSpec {
    pub atoms: Vec<[f64; 3]>,
    #[serde(default = "no_density")]
    pub density: Density,
    pub class: TargetClass,
    pub epsilon: f64,
    pub omega: f64,
}

fn no_density() -> Density {
    Density::None
}

impl MixedSpectrumSpec {
    pub fn build(&self) -> Result<MixedSpectrum> {
        let atoms: Vec<Atom> = self
            .atoms
            .iter()
            .map(|[w, re, im]| Atom {
                omega: *w,
                c: Complex64::new(*re, *im),
            })
            .collect();
        make_mixed_signal(&atoms, self.density.clone(), self.class, self.epsilon, self.omega)
    }
}

impl MixedSpectrum {
    pub fn to_spec(&self) -> MixedSpectrumSpec {
        MixedSpectrumSpec {
            atoms: self.atoms.iter().map(|a| [a.omega, a.c.re, a.c.im]).collect(),
            density: self.density.clone(),
            class: self.class,
            epsilon: self.epsilon,
            omega: self.omega,
        }
    }

    /// `(1/2π) Σ H(ω_k) c_k e^{iω_k t} + (1/2π) ∫ e^{iωt} H(ω) X_c(ω) dω`.
    pub fn eval_filtered<H: Fn(f64) -> Complex64>(&self, t: f64, h: &H, rel_tol: f64) -> Result<Complex64> {
        let atoms: Complex64 = self
            .atoms
            .iter()
            .map(|a| h(a.omega) * a.c * Complex64::new(0.0, a.omega * t).exp())
            .sum();
        let density = match self.density {
            Density::None => Complex64::new(0.0, 0.0),
            _ => self.density.transform_with(t, h, rel_tol)?,
        };
        Ok((atoms + density) / (2.0 * PI))
    }

    /// `x(t)`.
    pub fn eval(&self, t: f64) -> Result<Complex64> {
        self.eval_filtered(t, &|_| Complex64::new(1.0, 0.0), 1e-10)
    }
}

/// Validates atoms and density against the class region.
pub fn make_mixed_signal(
    atoms: &[Atom],
    density: Density,
    class: TargetClass,
    epsilon: f64,
    omega: f64,
) -> Result<MixedSpectrum> {
    if !(omega > 0.0 && epsilon > 0.0 && epsilon < omega) {
        return Err(Error::InvalidInput(format!(
            "need 0 < epsilon < omega, got epsilon = {epsilon}, omega = {omega}"
        )));
    }
    let allowed = |w: f64| match class {
        TargetClass::Low => w.abs() <= omega - epsilon,
        TargetClass::High => w.abs() >= omega + epsilon,
    };
    for a in atoms {
        if !(a.omega.is_finite() && a.c.re.is_finite() && a.c.im.is_finite()) {
            return Err(Error::InvalidInput("atoms must be finite".into()));
        }
        if !allowed(a.omega) {
            return Err(Error::ClassConstraintViolation(format!(
                "atom at omega = {} outside the {class:?} region (omega = {omega}, epsilon = {epsilon})",
                a.omega
            )));
        }
    }
    match &density {
        Density::RaisedCosine { lo, hi, .. } | Density::GaussianBump { lo, hi, .. } if !(lo < hi) => {
            return Err(Error::InvalidInput(format!("empty density support [{lo}, {hi}]")));
        }
        Density::GaussianBump { sigma, .. } if !(*sigma > 0.0) => {
            return Err(Error::InvalidInput("gaussian sigma must be positive".into()));
        }
        Density::Sampled { domega, values, .. } if !(*domega > 0.0) || values.len() < 2 => {
            return Err(Error::InvalidInput("sampled density needs domega > 0 and two samples".into()));
        }
        _ => {}
    }
    for (lo, hi) in density.support() {
        let ok = match class {
            TargetClass::Low => allowed(lo) && allowed(hi),
            TargetClass::High => (lo >= omega + epsilon) || (hi <= -(omega + epsilon)),
        };
        if !ok {
            return Err(Error::ClassConstraintViolation(format!(
                "density support [{lo}, {hi}] outside the {class:?} region"
            )));
        }
    }
    Ok(MixedSpectrum {
        atoms: atoms.to_vec(),
        density,
        class,
        epsilon,
        omega,
    })
}

/// Total-variation norm `Σ |c_k| + ∫ |X_c|`.
pub fn cstar_norm(ms: &MixedSpectrum) -> Result<f64> {
    let atoms: f64 = ms.atoms.iter().map(|a| a.c.norm()).sum();
    Ok(atoms + ms.density.l1_norm()?)
}

/// `(χ_L X, χ_H X)` with `χ_L = 1_{|ω| <= Ω}`; band-edge points go LOW.
pub fn ideal_lowpass_split(spectrum: &SampledSpectrum, omega: f64) -> (SampledSpectrum, SampledSpectrum) {
    let zero = Complex64::new(0.0, 0.0);
    let (low, high): (Vec<_>, Vec<_>) = spectrum
        .values
        .iter()
        .enumerate()
        .map(|(l, v)| {
            if spectrum.frequency(l).abs() <= omega {
                (*v, zero)
            } else {
                (zero, *v)
            }
        })
        .unzip();
    (spectrum.with_values(low), spectrum.with_values(high))
}

/// Adds seeded Hermitian noise on `±[lo, hi]` whose energy is `eta` times the
/// signal energy. Grid points outside the noise support are untouched.
pub fn add_outofband_noise(
    signal: &SampledSignal,
    spectrum: &SampledSpectrum,
    eta: f64,
    noise_support: (f64, f64),
    omega: f64,
    seed: u64,
) -> Result<(SampledSignal, SampledSpectrum)> {
    let (lo, hi) = noise_support;
    if !(lo > omega && hi > lo) {
        return Err(Error::SupportViolation(format!(
            "noise support [{lo}, {hi}] must lie strictly above omega = {omega}"
        )));
    }
    if !(eta >= 0.0 && eta.is_finite()) {
        return Err(Error::InvalidInput(format!("eta must be nonnegative, got {eta}")));
    }
    if signal.len() != spectrum.len() {
        return Err(Error::GridMismatch("signal and spectrum lengths differ".into()));
    }
    if eta == 0.0 {
        return Ok((signal.clone(), spectrum.clone()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = spectrum.len();
    let mut noise = vec![Complex64::new(0.0, 0.0); n];
    let mut filled = false;
    for l in 0..n {
        let w = spectrum.frequency(l);
        if w < lo || w > hi {
            continue;
        }
        // Box–Muller pair
        let u1: f64 = 1.0 - rng.random::<f64>();
        let u2: f64 = rng.random::<f64>();
        let r = (-2.0 * u1.ln()).sqrt();
        let z = Complex64::from_polar(r, 2.0 * PI * u2);
        noise[l] = z;
        let mirror = ((-w - spectrum.omega0) / spectrum.domega).round();
        if mirror < 0.0 || mirror as usize >= n {
            return Err(Error::SupportViolation("noise support exceeds the spectral grid".into()));
        }
        noise[mirror as usize] = z.conj();
        filled = true;
    }
    if !filled {
        return Err(Error::SupportViolation("noise support holds no grid points".into()));
    }
    let noise_energy: f64 = noise.iter().map(|v| v.norm_sqr()).sum();
    let signal_energy: f64 = spectrum.values.iter().map(|v| v.norm_sqr()).sum();
    let scale = (eta * signal_energy / noise_energy).sqrt();
    let noise_spec = spectrum.with_values(noise.iter().map(|v| v * scale).collect());
    let noise_time = fourier_inverse(&noise_spec)?;
    let values = spectrum.values.iter().zip(&noise_spec.values).map(|(x, e)| x + e).collect();
    let perturbed = SampledSignal {
        t0: signal.t0,
        dt: signal.dt,
        values: signal.values.iter().zip(&noise_time.values).map(|(x, e)| x + e).collect(),
    };
    Ok((perturbed, spectrum.with_values(values)))
}

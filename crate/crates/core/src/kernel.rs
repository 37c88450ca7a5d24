//! Rational anticausal convolution kernels.
//!
//! A kernel `k` vanishes for `t > 0` and has the transfer function
//! `K(p) = d(p) / δ(p)` with `δ(p) = Π_m (p - a_m + b_m i)^{mult_m}`. Each pole
//! is stored as the pair `(a_m, b_m)`, so the root of the factor
//! `δ_m(p) = p - a_m + b_m i` sits at `p = a_m - b_m i`. Pay attention to the
//! sign of `b`: a pole listed as `(1, 0.5)` lives at `1 - 0.5i`.
//!
//! Admissible kernels have every `a_m > 0` and `|b_m| < Ω`, a real numerator of
//! lower degree than `δ`, and a conjugation-closed pole set, which together
//! make `k` real valued and supported on `(-∞, 0]`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{integrate_real_line, QuadOptions};
use crate::series::Series;

const COINCIDENCE_TOL: f64 = 1e-12;

/// One pole `(a, b, multiplicity)`; the root of `δ` is at `a - b i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pole {
    pub a: f64,
    pub b: f64,
    pub multiplicity: u32,
}

impl Pole {
    pub fn new(a: f64, b: f64, multiplicity: u32) -> Self {
        Self { a, b, multiplicity }
    }

    /// Location of the root of `δ_m(p) = p - a + b i`.
    pub fn location(&self) -> Complex64 {
        Complex64::new(self.a, -self.b)
    }
}

/// Real-coefficient factor of `δ`: either `(p - a)` or
/// `(p - a + bi)(p - a - bi) = p^2 - 2ap + a^2 + b^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
enum RealFactor {
    Linear { a: f64, mult: u32 },
    Quadratic { a: f64, b: f64, mult: u32 },
}

impl RealFactor {
    fn eval(&self, p: Complex64) -> Complex64 {
        match *self {
            RealFactor::Linear { a, mult } => (p - a).powu(mult),
            RealFactor::Quadratic { a, b, mult } => {
                (p * (p - 2.0 * a) + (a * a + b * b)).powu(mult)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidueTerm {
    pub pole: Complex64,
    pub order: u32,
    pub coefficient: Complex64,
}

/// `K(p) = Σ coefficient / (p - pole)^order`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidueExpansion {
    pub terms: Vec<ResidueTerm>,
}

impl ResidueExpansion {
    pub fn eval(&self, p: Complex64) -> Complex64 {
        self.terms
            .iter()
            .map(|t| t.coefficient / (p - t.pole).powu(t.order))
            .sum()
    }

    /// Time-domain value of the anticausal inverse transform for `t <= 0`,
    /// together with the sum of term magnitudes (a cancellation scale).
    fn time_value(&self, t: f64) -> (Complex64, f64) {
        let mut total = Complex64::new(0.0, 0.0);
        let mut scale = 0.0;
        for term in &self.terms {
            let r = term.order as i32;
            let fact: f64 = (1..r).map(f64::from).product();
            let v = -term.coefficient * t.powi(r - 1) / fact * (term.pole * t).exp();
            scale += v.norm();
            total += v;
        }
        (total, scale)
    }
}

/// A validated class-𝒦 kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalAnticausalKernel {
    poles: Vec<Pole>,
    numerator: Vec<f64>,
    omega: f64,
    factors: Vec<RealFactor>,
    expansion: ResidueExpansion,
}

/// Builds and validates a kernel. `numerator_coeffs` are in ascending degree.
pub fn build_kernel(
    poles: &[Pole],
    numerator_coeffs: &[f64],
    omega: f64,
) -> Result<RationalAnticausalKernel> {
    if !(omega.is_finite() && omega > 0.0) {
        return Err(Error::InvalidInput(format!("omega must be finite and positive, got {omega}")));
    }
    if poles.is_empty() {
        return Err(Error::InvalidInput("kernel needs at least one pole".into()));
    }
    if numerator_coeffs.is_empty() || numerator_coeffs.iter().any(|c| !c.is_finite()) {
        return Err(Error::InvalidInput("numerator coefficients must be finite and nonempty".into()));
    }
    for p in poles {
        if !(p.a.is_finite() && p.b.is_finite()) {
            return Err(Error::InvalidInput("pole coordinates must be finite".into()));
        }
        if p.multiplicity == 0 {
            return Err(Error::InvalidInput("pole multiplicity must be positive".into()));
        }
        if p.a <= 0.0 || p.b.abs() >= omega {
            return Err(Error::PoleOutOfRegion {
                a: p.a,
                b: p.b,
                omega,
            });
        }
    }
    let denominator_degree: usize = poles.iter().map(|p| p.multiplicity as usize).sum();
    let numerator_degree = numerator_coeffs
        .iter()
        .rposition(|c| *c != 0.0)
        .unwrap_or(0);
    if numerator_degree >= denominator_degree {
        return Err(Error::DegreeViolation {
            numerator: numerator_degree,
            denominator: denominator_degree,
        });
    }
    for i in 0..poles.len() {
        for j in (i + 1)..poles.len() {
            if (poles[i].location() - poles[j].location()).norm() < COINCIDENCE_TOL {
                return Err(Error::NumericalDegeneracy { first: i, second: j });
            }
        }
    }

    let mut factors = Vec::new();
    let mut matched = vec![false; poles.len()];
    for (i, p) in poles.iter().enumerate() {
        if p.b == 0.0 {
            factors.push(RealFactor::Linear {
                a: p.a,
                mult: p.multiplicity,
            });
            continue;
        }
        if matched[i] {
            continue;
        }
        let mate = poles.iter().enumerate().position(|(j, q)| {
            j != i
                && !matched[j]
                && (q.a - p.a).abs() <= COINCIDENCE_TOL * p.a.abs().max(1.0)
                && (q.b + p.b).abs() <= COINCIDENCE_TOL * p.b.abs().max(1.0)
                && q.multiplicity == p.multiplicity
        });
        match mate {
            Some(j) => {
                matched[i] = true;
                matched[j] = true;
                factors.push(RealFactor::Quadratic {
                    a: p.a,
                    b: p.b.abs(),
                    mult: p.multiplicity,
                });
            }
            None => return Err(Error::NonConjugateSymmetric { a: p.a, b: p.b }),
        }
    }

    let numerator = numerator_coeffs[..=numerator_degree].to_vec();
    let expansion = residue_expansion(poles, &numerator);
    Ok(RationalAnticausalKernel {
        poles: poles.to_vec(),
        numerator,
        omega,
        factors,
        expansion,
    })
}

fn horner(coeffs: &[f64], p: Complex64) -> Complex64 {
    coeffs
        .iter()
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, c| acc * p + c)
}

/// Taylor coefficients of the numerator around `center`, up to `len` terms.
fn taylor_shift(coeffs: &[f64], center: Complex64, len: usize) -> Vec<Complex64> {
    // repeated synthetic division
    let mut work: Vec<Complex64> = coeffs.iter().map(|c| Complex64::new(*c, 0.0)).collect();
    let mut out = Vec::with_capacity(len);
    for _ in 0..len {
        if work.is_empty() {
            out.push(Complex64::new(0.0, 0.0));
            continue;
        }
        let mut carry = Complex64::new(0.0, 0.0);
        let mut quotient = vec![Complex64::new(0.0, 0.0); work.len().saturating_sub(1)];
        for k in (0..work.len()).rev() {
            carry = carry * center + work[k];
            if k > 0 {
                quotient[k - 1] = carry;
            }
        }
        out.push(carry);
        work = quotient;
    }
    out
}

fn residue_expansion(poles: &[Pole], numerator: &[f64]) -> ResidueExpansion {
    let mut terms = Vec::new();
    for (j, pj) in poles.iter().enumerate() {
        let r = pj.multiplicity as usize;
        let center = pj.location();
        let mut g = Series::from_coeffs(taylor_shift(numerator, center, r), r);
        for (i, pi) in poles.iter().enumerate() {
            if i == j {
                continue;
            }
            // 1 / (c + h)^{r_i} with c = λ_j - λ_i
            let c = center - pi.location();
            let mut inv = Series::zeros(r);
            let mut pow = c.inv();
            for n in 0..r {
                inv.coeffs[n] = if n % 2 == 0 { pow } else { -pow };
                pow /= c;
            }
            g = g.mul(&inv.powi(pi.multiplicity));
        }
        for (l, coeff) in g.coeffs.iter().enumerate() {
            terms.push(ResidueTerm {
                pole: center,
                order: (r - l) as u32,
                coefficient: *coeff,
            });
        }
    }
    ResidueExpansion { terms }
}

impl RationalAnticausalKernel {
    pub fn poles(&self) -> &[Pole] {
        &self.poles
    }

    /// Numerator coefficients in ascending degree, trailing zeros removed.
    pub fn numerator(&self) -> &[f64] {
        &self.numerator
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn denominator_degree(&self) -> usize {
        self.poles.iter().map(|p| p.multiplicity as usize).sum()
    }

    pub fn numerator_degree(&self) -> usize {
        self.numerator.len() - 1
    }

    /// Smallest real part among the poles; sets the decay rate of `k`.
    pub fn min_decay_rate(&self) -> f64 {
        self.poles.iter().map(|p| p.a).fold(f64::INFINITY, f64::min)
    }

    pub fn max_pole_modulus(&self) -> f64 {
        self.poles.iter().map(|p| p.location().norm()).fold(0.0, f64::max)
    }

    /// `K(p) = d(p) / δ(p)` at an arbitrary complex point.
    pub fn transfer(&self, p: Complex64) -> Complex64 {
        let den: Complex64 = self.factors.iter().map(|f| f.eval(p)).product();
        horner(&self.numerator, p) / den
    }

    /// Scales the numerator by a real constant.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let num: Vec<f64> = self.numerator.iter().map(|c| c * factor).collect();
        build_kernel(&self.poles, &num, self.omega)
    }

    /// Coefficients of `δ(p)` in ascending degree (real, monic).
    pub fn denominator_coeffs(&self) -> Vec<f64> {
        let mut poly = vec![1.0];
        let mul = |poly: &Vec<f64>, f: &[f64]| {
            let mut out = vec![0.0; poly.len() + f.len() - 1];
            for (i, a) in poly.iter().enumerate() {
                for (j, b) in f.iter().enumerate() {
                    out[i + j] += a * b;
                }
            }
            out
        };
        for factor in &self.factors {
            let (base, mult) = match *factor {
                RealFactor::Linear { a, mult } => (vec![-a, 1.0], mult),
                RealFactor::Quadratic { a, b, mult } => (vec![a * a + b * b, -2.0 * a, 1.0], mult),
            };
            for _ in 0..mult {
                poly = mul(&poly, &base);
            }
        }
        poly
    }

    /// Cached partial-fraction expansion.
    pub fn residues(&self) -> &ResidueExpansion {
        &self.expansion
    }

    pub fn to_spec(&self) -> KernelSpec {
        let poles = self
            .poles
            .iter()
            .filter(|p| p.b >= 0.0)
            .map(|p| [p.a, p.b, p.multiplicity as f64])
            .collect();
        KernelSpec {
            omega: self.omega,
            poles,
            numerator: self.numerator.clone(),
            paired: true,
        }
    }
}

/// `K(iω)`.
pub fn eval_transfer(kernel: &RationalAnticausalKernel, omega_val: f64) -> Complex64 {
    kernel.transfer(Complex64::new(0.0, omega_val))
}

/// Residue (partial fraction) expansion of `K`.
pub fn partial_fraction_expand(kernel: &RationalAnticausalKernel) -> Result<ResidueExpansion> {
    let poles = kernel.poles();
    for i in 0..poles.len() {
        for j in (i + 1)..poles.len() {
            if (poles[i].location() - poles[j].location()).norm() < COINCIDENCE_TOL {
                return Err(Error::NumericalDegeneracy { first: i, second: j });
            }
        }
    }
    Ok(kernel.expansion.clone())
}

/// `k(t)`; exactly zero for `t > 0`.
pub fn eval_time_kernel(kernel: &RationalAnticausalKernel, t: f64) -> f64 {
    if t > 0.0 {
        return 0.0;
    }
    let (value, scale) = kernel.expansion.time_value(t);
    debug_assert!(
        value.im.abs() <= 1e-10 * scale.max(f64::MIN_POSITIVE),
        "imaginary residue {} at t = {t}",
        value.im
    );
    value.re
}

/// `‖k‖_{L2}` via Plancherel, `sqrt((1/2π) ∫ |K(iω)|^2 dω)`, relative tolerance 1e-8.
pub fn kernel_l2_norm(kernel: &RationalAnticausalKernel) -> Result<f64> {
    let scale = kernel.max_pole_modulus().max(kernel.omega).max(1.0);
    let opts = QuadOptions::with_rel_tol(1e-8).panels(32);
    let integral = integrate_real_line(
        |s| eval_transfer(kernel, scale * s).norm_sqr() * scale,
        opts,
    )?;
    Ok((integral / (2.0 * PI)).sqrt())
}

/// JSON form of a kernel. With `paired`, only the `b >= 0` member of each
/// conjugate pair is listed and its mate `(a, -b, mult)` is implied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub omega: f64,
    pub poles: Vec<[f64; 3]>,
    pub numerator: Vec<f64>,
    #[serde(default)]
    pub paired: bool,
}

impl KernelSpec {
    pub fn build(&self) -> Result<RationalAnticausalKernel> {
        let mut poles = Vec::with_capacity(self.poles.len() * 2);
        for &[a, b, mult] in &self.poles {
            if !(mult >= 1.0 && mult.fract() == 0.0 && mult <= u32::MAX as f64) {
                return Err(Error::InvalidInput(format!("multiplicity {mult} is not a positive integer")));
            }
            let mult = mult as u32;
            if self.paired && b < 0.0 {
                return Err(Error::InvalidInput(
                    "paired kernel specs list only the b >= 0 member of each pair".into(),
                ));
            }
            poles.push(Pole::new(a, b, mult));
            if self.paired && b > 0.0 {
                poles.push(Pole::new(a, -b, mult));
            }
        }
        build_kernel(&poles, &self.numerator, self.omega)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("kernel spec serializes")
    }
}

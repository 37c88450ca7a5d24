//! Adaptive Gauss–Kronrod (G7/K15) quadrature and fixed-order composite
//! Gauss–Legendre rules.
//!
//! The adaptive routine is the oracle used for kernel norms, anticausal
//! convolutions and density integrals. The composite Gauss–Legendre rule is a
//! second, independent path used to cross-check it.

// Nodes and weights are kept at their published precision.
#![allow(clippy::excessive_precision)]

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num_complex::Complex64;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];

// Gauss weights for XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Upper bound on the number of subintervals kept by the adaptive loop.
    pub max_intervals: usize,
    /// Number of equal panels the interval is split into before adapting.
    pub initial_panels: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-14,
            max_intervals: 4000,
            initial_panels: 1,
        }
    }
}

impl QuadOptions {
    pub fn with_rel_tol(rel_tol: f64) -> Self {
        Self {
            rel_tol,
            ..Self::default()
        }
    }

    pub fn panels(mut self, n: usize) -> Self {
        self.initial_panels = n.max(1);
        self
    }

    pub fn abs(mut self, abs_tol: f64) -> Self {
        self.abs_tol = abs_tol;
        self
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: Complex64,
    pub error_estimate: f64,
    pub evaluations: usize,
}

struct Segment {
    lo: f64,
    hi: f64,
    value: Complex64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}

impl Eq for Segment {}

impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod_segment<F: Fn(f64) -> Complex64>(f: &F, lo: f64, hi: f64) -> Segment {
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod += pair * WGK[j];
        if j % 2 == 1 {
            gauss += pair * WG[j / 2];
        }
    }
    let value = kronrod * half;
    let error = ((kronrod - gauss) * half).norm();
    Segment {
        lo,
        hi,
        value,
        error,
    }
}

/// Globally adaptive G7/K15 integration of a complex-valued integrand on a
/// finite interval.
pub fn integrate_complex<F>(f: F, lo: f64, hi: f64, opts: QuadOptions) -> Result<QuadResult>
where
    F: Fn(f64) -> Complex64,
{
    if !(lo.is_finite() && hi.is_finite()) {
        return Err(Error::InvalidInput("integration bounds must be finite".into()));
    }
    if lo == hi {
        return Ok(QuadResult {
            value: Complex64::new(0.0, 0.0),
            error_estimate: 0.0,
            evaluations: 0,
        });
    }
    let (lo, hi, sign) = if lo < hi { (lo, hi, 1.0) } else { (hi, lo, -1.0) };

    let panels = opts.initial_panels.max(1);
    let width = (hi - lo) / panels as f64;
    let mut heap = BinaryHeap::with_capacity(panels * 2);
    let mut evaluations = 0;
    for i in 0..panels {
        let a = lo + width * i as f64;
        let b = if i + 1 == panels { hi } else { a + width };
        heap.push(kronrod_segment(&f, a, b));
        evaluations += 15;
    }

    loop {
        let total: Complex64 = heap.iter().map(|s| s.value).sum();
        let error: f64 = heap.iter().map(|s| s.error).sum();
        let target = opts.abs_tol.max(opts.rel_tol * total.norm());
        if error <= target {
            return Ok(QuadResult {
                value: total * sign,
                error_estimate: error,
                evaluations,
            });
        }
        if heap.len() >= opts.max_intervals || !total.re.is_finite() || !total.im.is_finite() {
            return Err(Error::QuadratureNotConverged {
                estimate: total.norm(),
                error_estimate: error,
            });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.lo + worst.hi);
        if mid <= worst.lo || mid >= worst.hi {
            // interval can no longer be split in floating point
            return Err(Error::QuadratureNotConverged {
                estimate: total.norm(),
                error_estimate: error,
            });
        }
        heap.push(kronrod_segment(&f, worst.lo, mid));
        heap.push(kronrod_segment(&f, mid, worst.hi));
        evaluations += 30;
    }
}

/// Real-valued convenience wrapper around [`integrate_complex`].
pub fn integrate<F>(f: F, lo: f64, hi: f64, opts: QuadOptions) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    integrate_complex(|x| Complex64::new(f(x), 0.0), lo, hi, opts).map(|r| r.value.re)
}

/// Integral over the whole real line via the map `x = s / (1 - s^2)`.
pub fn integrate_real_line<F>(f: F, opts: QuadOptions) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let mapped = |s: f64| {
        let d = 1.0 - s * s;
        let x = s / d;
        let jac = (1.0 + s * s) / (d * d);
        let v = f(x) * jac;
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    integrate(mapped, -1.0, 1.0, opts)
}

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi initial guess, then Newton on P_n.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Composite fixed-order Gauss–Legendre rule: `panels` equal panels with
/// `order` nodes each. No adaptivity and no error estimate.
pub fn composite_gauss_legendre<F>(f: F, lo: f64, hi: f64, panels: usize, order: usize) -> Complex64
where
    F: Fn(f64) -> Complex64,
{
    let (nodes, weights) = gauss_legendre(order);
    let width = (hi - lo) / panels as f64;
    let mut total = Complex64::new(0.0, 0.0);
    for p in 0..panels {
        let a = lo + width * p as f64;
        let c = a + 0.5 * width;
        let mut acc = Complex64::new(0.0, 0.0);
        for (x, w) in nodes.iter().zip(&weights) {
            acc += f(c + 0.5 * width * x) * *w;
        }
        total += acc * (0.5 * width);
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let r = integrate(|x| 3.0 * x * x + 1.0, 0.0, 2.0, QuadOptions::default()).unwrap();
        assert!((r - 10.0).abs() < 1e-13);
    }

    #[test]
    fn reversed_bounds_flip_sign() {
        let fwd = integrate(f64::exp, 0.0, 1.0, QuadOptions::default()).unwrap();
        let rev = integrate(f64::exp, 1.0, 0.0, QuadOptions::default()).unwrap();
        assert!((fwd + rev).abs() < 1e-14);
        assert!((fwd - (std::f64::consts::E - 1.0)).abs() < 1e-13);
    }

    #[test]
    fn oscillatory_complex_integrand() {
        // int_0^10 e^{i 3 x} dx = (e^{30 i} - 1) / (3 i)
        let r = integrate_complex(
            |x| Complex64::new(0.0, 3.0 * x).exp(),
            0.0,
            10.0,
            QuadOptions::default(),
        )
        .unwrap();
        let exact = (Complex64::new(0.0, 30.0).exp() - 1.0) / Complex64::new(0.0, 3.0);
        assert!((r.value - exact).norm() < 1e-12);
    }

    #[test]
    fn real_line_gaussian() {
        let r = integrate_real_line(|x| (-x * x).exp(), QuadOptions::default()).unwrap();
        assert!((r - std::f64::consts::PI.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn budget_exhaustion_reports_not_converged() {
        let opts = QuadOptions {
            rel_tol: 1e-15,
            abs_tol: 0.0,
            max_intervals: 3,
            initial_panels: 1,
        };
        let r = integrate(|x| (1.0 / x).sin(), 1e-6, 1.0, opts);
        assert!(matches!(r, Err(Error::QuadratureNotConverged { .. })));
    }

    #[test]
    fn gauss_legendre_weights_and_exactness() {
        for n in [1, 2, 5, 10, 20] {
            let (x, w) = gauss_legendre(n);
            let sum: f64 = w.iter().sum();
            assert!((sum - 2.0).abs() < 1e-13, "n = {n}");
            // exact for degree 2n - 1
            let deg = 2 * n - 1;
            let approx: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32 - 1)).sum();
            let exact = if (deg - 1) % 2 == 0 { 2.0 / deg as f64 } else { 0.0 };
            assert!((approx - exact).abs() < 1e-13, "n = {n}");
        }
    }

    #[test]
    fn composite_rule_agrees_with_adaptive() {
        let f = |x: f64| Complex64::new((x * 2.0).cos() * (-x).exp(), x.sin());
        let a = integrate_complex(f, 0.0, 5.0, QuadOptions::default()).unwrap().value;
        let b = composite_gauss_legendre(f, 0.0, 5.0, 20, 10);
        assert!((a - b).norm() < 1e-12);
    }
}

//! Truncated complex power series in one variable.

use num_complex::Complex64;

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Series {
    pub coeffs: Vec<Complex64>,
}

impl Series {
    pub fn zeros(len: usize) -> Self {
        Self {
            coeffs: vec![Complex64::new(0.0, 0.0); len],
        }
    }

    pub fn constant(c: Complex64, len: usize) -> Self {
        let mut s = Self::zeros(len);
        s.coeffs[0] = c;
        s
    }

    pub fn from_coeffs(mut coeffs: Vec<Complex64>, len: usize) -> Self {
        coeffs.resize(len, Complex64::new(0.0, 0.0));
        Self { coeffs }
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn mul(&self, other: &Series) -> Series {
        let n = self.len();
        let mut out = Series::zeros(n);
        for (i, a) in self.coeffs.iter().enumerate() {
            if *a == Complex64::new(0.0, 0.0) {
                continue;
            }
            for (j, b) in other.coeffs.iter().take(n - i).enumerate() {
                out.coeffs[i + j] += a * b;
            }
        }
        out
    }

    /// `self / other`; `other` must have a nonzero constant term.
    pub fn div(&self, other: &Series) -> Series {
        let n = self.len();
        let c0 = other.coeffs[0];
        let mut out = Series::zeros(n);
        for k in 0..n {
            let mut acc = self.coeffs[k];
            for j in 1..=k.min(other.len() - 1) {
                acc -= other.coeffs[j] * out.coeffs[k - j];
            }
            out.coeffs[k] = acc / c0;
        }
        out
    }

    /// `exp(self)` for a series with zero constant term.
    pub fn exp_zero_const(&self) -> Series {
        debug_assert!(self.coeffs[0].norm() == 0.0);
        let n = self.len();
        // e' = s' e  =>  k e_k = sum_{j=1}^{k} j s_j e_{k-j}
        let mut out = Series::zeros(n);
        out.coeffs[0] = Complex64::new(1.0, 0.0);
        for k in 1..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 1..=k {
                acc += self.coeffs[j] * out.coeffs[k - j] * j as f64;
            }
            out.coeffs[k] = acc / k as f64;
        }
        out
    }

    pub fn powi(&self, exp: u32) -> Series {
        let mut out = Series::constant(Complex64::new(1.0, 0.0), self.len());
        for _ in 0..exp {
            out = out.mul(self);
        }
        out
    }

    pub fn scale(&self, c: Complex64) -> Series {
        Series {
            coeffs: self.coeffs.iter().map(|x| x * c).collect(),
        }
    }

    pub fn sub_from_constant(&self, c: Complex64) -> Series {
        let mut out = self.scale(Complex64::new(-1.0, 0.0));
        out.coeffs[0] += c;
        out
    }

    /// Substitutes `inner` (zero constant term) for the variable.
    pub fn compose(&self, inner: &Series) -> Series {
        debug_assert!(inner.coeffs[0].norm() == 0.0);
        let n = self.len();
        let mut out = Series::zeros(n);
        for c in self.coeffs.iter().rev() {
            out = out.mul(inner);
            out.coeffs[0] += c;
        }
        out
    }

    /// Shifts coefficients up by `k` (multiplication by `x^k`), truncating.
    pub fn shift_up(&self, k: usize) -> Series {
        let n = self.len();
        let mut out = Series::zeros(n);
        for i in 0..n.saturating_sub(k) {
            out.coeffs[i + k] = self.coeffs[i];
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn geometric_series_by_division() {
        // 1 / (1 - x) = 1 + x + x^2 + ...
        let one = Series::constant(c(1.0), 6);
        let den = Series::from_coeffs(vec![c(1.0), c(-1.0)], 6);
        let q = one.div(&den);
        assert!(q.coeffs.iter().all(|v| (v - c(1.0)).norm() < 1e-15));
    }

    #[test]
    fn exponential_coefficients() {
        let x = Series::from_coeffs(vec![c(0.0), c(1.0)], 8);
        let e = x.exp_zero_const();
        let mut fact = 1.0;
        for (k, v) in e.coeffs.iter().enumerate() {
            if k > 0 {
                fact *= k as f64;
            }
            assert!((v.re - 1.0 / fact).abs() < 1e-15);
        }
    }

    #[test]
    fn composition_with_geometric_map() {
        // s(w) = w, w = u / (1 - 2u) = u + 2u^2 + 4u^3 + ...
        let s = Series::from_coeffs(vec![c(0.0), c(1.0)], 5);
        let inner = Series::from_coeffs(vec![c(0.0), c(1.0), c(2.0), c(4.0), c(8.0)], 5);
        let r = s.compose(&inner);
        assert_eq!(r, inner);
    }
}

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{canonical_scale, max_modulus};

/// Univariate complex polynomial, `coeffs[i]` multiplies `z^i`.
///
/// The stored representation never ends in an exact zero, so the zero
/// polynomial is the empty coefficient list.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniPoly {
    coeffs: Vec<Complex64>,
}

impl UniPoly {
    pub fn new(mut coeffs: Vec<Complex64>) -> Self {
        while coeffs.last().is_some_and(|c| *c == Complex64::new(0.0, 0.0)) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn from_real(coeffs: &[f64]) -> Self {
        Self::new(coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect())
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn constant(c: Complex64) -> Self {
        Self::new(vec![c])
    }

    /// Monic polynomial with the given roots.
    pub fn from_roots(roots: &[Complex64]) -> Self {
        let mut p = UniPoly::constant(Complex64::new(1.0, 0.0));
        for &r in roots {
            p = p.mul(&UniPoly::new(vec![-r, Complex64::new(1.0, 0.0)]));
        }
        p
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree, `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn leading(&self) -> Option<Complex64> {
        self.coeffs.last().copied()
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        horner(&self.coeffs, z)
    }

    /// `Σ |c_i| |z|^i`, the natural scale for relative residuals at `z`.
    pub fn scale_at(&self, z: Complex64) -> f64 {
        let r = z.norm();
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * r + c.norm())
    }

    pub fn derivative(&self) -> UniPoly {
        UniPoly::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| c * i as f64)
                .collect(),
        )
    }

    pub fn mul(&self, other: &UniPoly) -> UniPoly {
        if self.is_zero() || other.is_zero() {
            return UniPoly::zero();
        }
        let mut out = vec![Complex64::new(0.0, 0.0); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        UniPoly::new(out)
    }

    pub fn scaled(&self, s: Complex64) -> UniPoly {
        UniPoly::new(self.coeffs.iter().map(|c| c * s).collect())
    }

    /// Divided by its largest coefficient modulus, with a canonical phase.
    pub fn normalized(&self) -> UniPoly {
        match canonical_scale(&self.coeffs) {
            Some(s) => self.scaled(s),
            None => self.clone(),
        }
    }

    pub fn max_modulus(&self) -> f64 {
        max_modulus(&self.coeffs)
    }

    /// Drops leading coefficients below `rel_tol` times the largest one.
    pub fn trimmed(&self, rel_tol: f64) -> UniPoly {
        let m = self.max_modulus();
        let mut c = self.coeffs.clone();
        while c.last().is_some_and(|x| x.norm() <= rel_tol * m) {
            c.pop();
        }
        UniPoly::new(c)
    }

    /// Smallest `‖self - λ other‖∞ / ‖self‖∞` over complex `λ`, a scale-free comparison.
    pub fn distance_up_to_scale(&self, other: &UniPoly) -> f64 {
        super::distance_up_to_scale(&self.coeffs, &other.coeffs)
    }
}

pub(crate) fn horner(coeffs: &[Complex64], z: Complex64) -> Complex64 {
    coeffs
        .iter()
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, c| acc * z + c)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn trailing_zeros_are_trimmed() {
        let p = UniPoly::new(vec![c(1.0), c(2.0), c(0.0)]);
        assert_eq!(p.degree(), Some(1));
        assert!(UniPoly::new(vec![c(0.0)]).is_zero());
        assert_eq!(UniPoly::zero().degree(), None);
    }

    #[test]
    fn arithmetic() {
        let p = UniPoly::from_roots(&[c(1.0), c(-1.0)]);
        assert_eq!(p.coeffs(), &[c(-1.0), c(0.0), c(1.0)]);
        assert_eq!(p.derivative().coeffs(), &[c(0.0), c(2.0)]);
        assert_eq!(p.eval(c(3.0)), c(8.0));
        assert_eq!(p.scale_at(c(2.0)), 5.0);
    }

    #[test]
    fn normalization_fixes_scale_and_phase() {
        let p = UniPoly::from_real(&[1.0, -4.0]);
        let q = p.scaled(Complex64::new(0.0, -7.0)).normalized();
        assert!(p.distance_up_to_scale(&q) < 1e-15);
        assert!((q.max_modulus() - 1.0).abs() < 1e-15);
        assert_eq!(q, p.normalized());
    }
}

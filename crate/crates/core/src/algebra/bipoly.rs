use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{canonical_scale, horner, max_modulus, UniPoly};
use crate::error::{Error, Result};
use crate::sphere::Chart;

/// One of the two variables of a [`BiPoly`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Var {
    X,
    Y,
}

impl Var {
    pub fn other(self) -> Var {
        match self {
            Var::X => Var::Y,
            Var::Y => Var::X,
        }
    }
}

/// Bivariate complex polynomial `Σ c[i][j] x^i y^j` with `i ≤ deg_x`, `j ≤ deg_y`.
///
/// Coefficients are stored row-major by x-power. The bidegree is the
/// formal one; [`BiPoly::tightened`] drops exactly-zero outer rows and columns.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BiPoly {
    deg_x: usize,
    deg_y: usize,
    coeffs: Vec<Complex64>,
}

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

impl BiPoly {
    pub fn new(deg_x: usize, deg_y: usize, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != (deg_x + 1) * (deg_y + 1) {
            return Err(Error::InvalidInput(format!(
                "bidegree ({deg_x},{deg_y}) needs {} coefficients, got {}",
                (deg_x + 1) * (deg_y + 1),
                coeffs.len()
            )));
        }
        Ok(Self {
            deg_x,
            deg_y,
            coeffs,
        })
    }

    pub fn zero() -> Self {
        Self {
            deg_x: 0,
            deg_y: 0,
            coeffs: vec![ZERO],
        }
    }

    pub fn from_fn(deg_x: usize, deg_y: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut coeffs = Vec::with_capacity((deg_x + 1) * (deg_y + 1));
        for i in 0..=deg_x {
            for j in 0..=deg_y {
                coeffs.push(f(i, j));
            }
        }
        Self {
            deg_x,
            deg_y,
            coeffs,
        }
    }

    /// Sum of terms `c x^i y^j`; repeated monomials add up.
    pub fn from_terms(terms: &[(usize, usize, Complex64)]) -> Self {
        let deg_x = terms.iter().map(|t| t.0).max().unwrap_or(0);
        let deg_y = terms.iter().map(|t| t.1).max().unwrap_or(0);
        let mut p = BiPoly::from_fn(deg_x, deg_y, |_, _| ZERO);
        for &(i, j, c) in terms {
            *p.get_mut(i, j) += c;
        }
        p.tightened()
    }

    /// Real-coefficient shorthand for [`BiPoly::from_terms`].
    pub fn from_real_terms(terms: &[(usize, usize, f64)]) -> Self {
        let t: Vec<_> = terms
            .iter()
            .map(|&(i, j, c)| (i, j, Complex64::new(c, 0.0)))
            .collect();
        Self::from_terms(&t)
    }

    /// The product `Π (y - r_k x)` of lines through the origin.
    pub fn linear_pencil(slopes: &[Complex64]) -> Self {
        slopes.iter().fold(BiPoly::from_terms(&[(0, 0, ONE)]), |acc, &r| {
            acc.mul(&BiPoly::from_terms(&[(0, 1, ONE), (1, 0, -r)]))
        })
    }

    /// Graph `y (c x + d) - (a x + b) = 0` of a Möbius map.
    pub fn mobius_graph(m: [Complex64; 4]) -> Self {
        let [a, b, c, d] = m;
        BiPoly::from_terms(&[(1, 1, c), (0, 1, d), (1, 0, -a), (0, 0, -b)])
    }

    pub fn deg_x(&self) -> usize {
        self.deg_x
    }

    pub fn deg_y(&self) -> usize {
        self.deg_y
    }

    pub fn degree(&self, var: Var) -> usize {
        match var {
            Var::X => self.deg_x,
            Var::Y => self.deg_y,
        }
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        if i > self.deg_x || j > self.deg_y {
            return ZERO;
        }
        self.coeffs[i * (self.deg_y + 1) + j]
    }

    fn get_mut(&mut self, i: usize, j: usize) -> &mut Complex64 {
        &mut self.coeffs[i * (self.deg_y + 1) + j]
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| *c == ZERO)
    }

    pub fn max_modulus(&self) -> f64 {
        max_modulus(&self.coeffs)
    }

    /// Drops exactly-zero outer rows and columns.
    pub fn tightened(&self) -> BiPoly {
        let mut dx = self.deg_x;
        while dx > 0 && (0..=self.deg_y).all(|j| self.get(dx, j) == ZERO) {
            dx -= 1;
        }
        let mut dy = self.deg_y;
        while dy > 0 && (0..=dx).all(|i| self.get(i, dy) == ZERO) {
            dy -= 1;
        }
        BiPoly::from_fn(dx, dy, |i, j| self.get(i, j))
    }

    /// Drops outer rows and columns whose coefficients are all below
    /// `rel_tol` times the largest modulus.
    pub fn trimmed(&self, rel_tol: f64) -> BiPoly {
        let thr = rel_tol * self.max_modulus();
        let mut dx = self.deg_x;
        while dx > 0 && (0..=self.deg_y).all(|j| self.get(dx, j).norm() <= thr) {
            dx -= 1;
        }
        let mut dy = self.deg_y;
        while dy > 0 && (0..=dx).all(|i| self.get(i, dy).norm() <= thr) {
            dy -= 1;
        }
        BiPoly::from_fn(dx, dy, |i, j| self.get(i, j))
    }

    /// True when the top row and top column both carry a coefficient above
    /// `rel_tol` times the largest modulus.
    pub fn is_tight(&self, rel_tol: f64) -> bool {
        let thr = rel_tol * self.max_modulus();
        let row = (0..=self.deg_y).any(|j| self.get(self.deg_x, j).norm() > thr);
        let col = (0..=self.deg_x).any(|i| self.get(i, self.deg_y).norm() > thr);
        row && col
    }

    pub fn eval(&self, x: Complex64, y: Complex64) -> Complex64 {
        horner(&self.in_y_at(x), y)
    }

    /// `Σ |c_ij| |x|^i |y|^j`.
    pub fn scale_at(&self, x: Complex64, y: Complex64) -> f64 {
        let (rx, ry) = (x.norm(), y.norm());
        let mut acc = 0.0;
        for i in (0..=self.deg_x).rev() {
            let mut row = 0.0;
            for j in (0..=self.deg_y).rev() {
                row = row * ry + self.get(i, j).norm();
            }
            acc = acc * rx + row;
        }
        acc
    }

    /// Coefficients in `x` of `P(·, y)`, formal length `deg_x + 1`.
    pub fn in_x_at(&self, y: Complex64) -> Vec<Complex64> {
        (0..=self.deg_x)
            .map(|i| horner(&self.coeffs[i * (self.deg_y + 1)..(i + 1) * (self.deg_y + 1)], y))
            .collect()
    }

    /// Coefficients in `y` of `P(x, ·)`, formal length `deg_y + 1`.
    pub fn in_y_at(&self, x: Complex64) -> Vec<Complex64> {
        (0..=self.deg_y)
            .map(|j| {
                (0..=self.deg_x)
                    .rev()
                    .fold(ZERO, |acc, i| acc * x + self.get(i, j))
            })
            .collect()
    }

    /// Coefficients in the free variable after fixing `var = value`.
    pub fn restrict(&self, var: Var, value: Complex64) -> Vec<Complex64> {
        match var {
            Var::X => self.in_y_at(value),
            Var::Y => self.in_x_at(value),
        }
    }

    /// Coefficient of `y^j` as a polynomial in `x`.
    pub fn column(&self, j: usize) -> UniPoly {
        UniPoly::new((0..=self.deg_x).map(|i| self.get(i, j)).collect())
    }

    /// Coefficient of `x^i` as a polynomial in `y`.
    pub fn row(&self, i: usize) -> UniPoly {
        UniPoly::new((0..=self.deg_y).map(|j| self.get(i, j)).collect())
    }

    pub fn partial(&self, var: Var) -> BiPoly {
        match var {
            Var::X => {
                if self.deg_x == 0 {
                    return BiPoly::from_fn(0, self.deg_y, |_, _| ZERO);
                }
                BiPoly::from_fn(self.deg_x - 1, self.deg_y, |i, j| self.get(i + 1, j) * (i + 1) as f64)
            }
            Var::Y => {
                if self.deg_y == 0 {
                    return BiPoly::from_fn(self.deg_x, 0, |_, _| ZERO);
                }
                BiPoly::from_fn(self.deg_x, self.deg_y - 1, |i, j| self.get(i, j + 1) * (j + 1) as f64)
            }
        }
    }

    /// The polynomial with `x` and `y` exchanged.
    pub fn transpose(&self) -> BiPoly {
        BiPoly::from_fn(self.deg_y, self.deg_x, |i, j| self.get(j, i))
    }

    /// Substitutes `var ↦ 1/var` and clears denominators with the formal degree.
    pub fn reversed(&self, var: Var) -> BiPoly {
        match var {
            Var::X => BiPoly::from_fn(self.deg_x, self.deg_y, |i, j| self.get(self.deg_x - i, j)),
            Var::Y => BiPoly::from_fn(self.deg_x, self.deg_y, |i, j| self.get(i, self.deg_y - j)),
        }
    }

    /// The defining polynomial written in the chart pair `(cx, cy)`.
    pub fn in_charts(&self, cx: Chart, cy: Chart) -> BiPoly {
        let mut p = self.clone();
        if cx == Chart::Infinity {
            p = p.reversed(Var::X);
        }
        if cy == Chart::Infinity {
            p = p.reversed(Var::Y);
        }
        p
    }

    pub fn mul(&self, other: &BiPoly) -> BiPoly {
        let mut out = BiPoly::from_fn(self.deg_x + other.deg_x, self.deg_y + other.deg_y, |_, _| ZERO);
        for i in 0..=self.deg_x {
            for j in 0..=self.deg_y {
                let a = self.get(i, j);
                if a == ZERO {
                    continue;
                }
                for k in 0..=other.deg_x {
                    for l in 0..=other.deg_y {
                        *out.get_mut(i + k, j + l) += a * other.get(k, l);
                    }
                }
            }
        }
        out
    }

    pub fn pow(&self, e: u32) -> BiPoly {
        (0..e).fold(BiPoly::from_terms(&[(0, 0, ONE)]), |acc, _| acc.mul(self))
    }

    pub fn scaled(&self, s: Complex64) -> BiPoly {
        BiPoly::from_fn(self.deg_x, self.deg_y, |i, j| self.get(i, j) * s)
    }

    /// Divided by its largest coefficient modulus, with a canonical phase.
    pub fn normalized(&self) -> BiPoly {
        match canonical_scale(&self.coeffs) {
            Some(s) => self.scaled(s),
            None => self.clone(),
        }
    }

    /// Restriction `q(x) = P(x, x)` as formal coefficients of length `deg_x + deg_y + 1`.
    pub fn diagonal(&self) -> Vec<Complex64> {
        let mut q = vec![ZERO; self.deg_x + self.deg_y + 1];
        for i in 0..=self.deg_x {
            for j in 0..=self.deg_y {
                q[i + j] += self.get(i, j);
            }
        }
        q
    }

    /// Exact quotient by `(var - r)`; the remainder is returned alongside.
    pub fn divide_linear(&self, var: Var, r: Complex64) -> (BiPoly, f64) {
        let t = match var {
            Var::X => self.clone(),
            Var::Y => self.transpose(),
        };
        if t.deg_x == 0 {
            return (self.clone(), t.max_modulus());
        }
        let mut q = BiPoly::from_fn(t.deg_x - 1, t.deg_y, |_, _| ZERO);
        let mut rem: f64 = 0.0;
        for j in 0..=t.deg_y {
            let mut carry = ZERO;
            for i in (0..=t.deg_x).rev() {
                let v = t.get(i, j) + carry;
                if i == 0 {
                    rem = rem.max(v.norm());
                } else {
                    *q.get_mut(i - 1, j) = v;
                    carry = v * r;
                }
            }
        }
        let q = match var {
            Var::X => q,
            Var::Y => q.transpose(),
        };
        (q, rem)
    }

    /// Coefficients of `P(x, x + v) = Σ_k R_k(x) v^k`, returned as a polynomial in `(x, v)`.
    pub fn in_diagonal_frame(&self) -> BiPoly {
        // (x + v)^j expanded binomially
        let dx = self.deg_x + self.deg_y;
        let mut out = BiPoly::from_fn(dx, self.deg_y, |_, _| ZERO);
        for i in 0..=self.deg_x {
            for j in 0..=self.deg_y {
                let c = self.get(i, j);
                if c == ZERO {
                    continue;
                }
                let mut binom = 1.0;
                for k in 0..=j {
                    *out.get_mut(i + j - k, k) += c * binom;
                    binom = binom * (j - k) as f64 / (k + 1) as f64;
                }
            }
        }
        out
    }

    /// Inverse of [`BiPoly::in_diagonal_frame`]: substitutes `v = y - x`.
    pub fn from_diagonal_frame(&self) -> BiPoly {
        let dx = self.deg_x;
        let mut out = BiPoly::from_fn(dx + self.deg_y, self.deg_y, |_, _| ZERO);
        for i in 0..=self.deg_x {
            for k in 0..=self.deg_y {
                let c = self.get(i, k);
                if c == ZERO {
                    continue;
                }
                // (y - x)^k = Σ_l binom(k,l) y^l (-x)^(k-l)
                let mut binom = 1.0;
                for l in 0..=k {
                    let sign = if (k - l) % 2 == 0 { 1.0 } else { -1.0 };
                    *out.get_mut(i + k - l, l) += c * (binom * sign);
                    binom = binom * (k - l) as f64 / (l + 1) as f64;
                }
            }
        }
        out.trimmed(0.0)
    }

    pub fn distance_up_to_scale(&self, other: &BiPoly) -> f64 {
        let dx = self.deg_x.max(other.deg_x);
        let dy = self.deg_y.max(other.deg_y);
        let a: Vec<_> = BiPoly::from_fn(dx, dy, |i, j| self.get(i, j)).coeffs;
        let b: Vec<_> = BiPoly::from_fn(dx, dy, |i, j| other.get(i, j)).coeffs;
        super::distance_up_to_scale(&a, &b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn construction_and_evaluation() {
        // y - x^2
        let p = BiPoly::from_real_terms(&[(0, 1, 1.0), (2, 0, -1.0)]);
        assert_eq!((p.deg_x(), p.deg_y()), (2, 1));
        assert_eq!(p.eval(c(2.0), c(4.0)), c(0.0));
        assert_eq!(p.in_x_at(c(4.0)), vec![c(4.0), c(0.0), c(-1.0)]);
        assert_eq!(p.in_y_at(c(3.0)), vec![c(-9.0), c(1.0)]);
        assert!(BiPoly::new(1, 1, vec![c(1.0)]).is_err());
    }

    #[test]
    fn transpose_and_charts() {
        let p = BiPoly::from_real_terms(&[(0, 1, 1.0), (2, 0, -1.0)]);
        let t = p.transpose();
        assert_eq!(t, BiPoly::from_real_terms(&[(1, 0, 1.0), (0, 2, -1.0)]));
        assert_eq!(t.transpose(), p);
        // s = 1/x, t = 1/y:  s^2 t (1/t - 1/s^2) = s^2 - t
        let q = p.in_charts(Chart::Infinity, Chart::Infinity);
        assert_eq!(q, BiPoly::from_real_terms(&[(2, 0, 1.0), (0, 1, -1.0)]));
    }

    #[test]
    fn linear_division() {
        let line = BiPoly::from_real_terms(&[(1, 0, 1.0), (0, 0, -2.0)]); // x - 2
        let g = BiPoly::from_real_terms(&[(0, 1, 1.0), (1, 0, -3.0)]);
        let (q, rem) = line.mul(&g).divide_linear(Var::X, c(2.0));
        assert!(rem < 1e-14);
        assert!(q.distance_up_to_scale(&g) < 1e-14);
        let (_, rem) = g.divide_linear(Var::X, c(2.0));
        assert!(rem > 0.1);
    }

    #[test]
    fn diagonal_frame_round_trip() {
        let p = BiPoly::from_real_terms(&[(0, 2, 1.0), (2, 0, -1.0), (0, 0, -1.0), (1, 1, 0.5)]);
        let back = p.in_diagonal_frame().from_diagonal_frame();
        assert!(back.distance_up_to_scale(&p) < 1e-14);
        // the v^0 column is P(x,x)
        let r0: Vec<_> = (0..=p.in_diagonal_frame().deg_x())
            .map(|i| p.in_diagonal_frame().get(i, 0))
            .collect();
        assert_eq!(r0, p.diagonal());
    }

    #[test]
    fn product_and_pencil() {
        let p = BiPoly::linear_pencil(&[c(2.0), c(3.0)]);
        // (y - 2x)(y - 3x) = y^2 - 5xy + 6x^2
        assert_eq!(p, BiPoly::from_real_terms(&[(0, 2, 1.0), (1, 1, -5.0), (2, 0, 6.0)]));
        assert_eq!(p.partial(Var::Y).tightened(), BiPoly::from_real_terms(&[(0, 1, 2.0), (1, 0, -5.0)]));
    }
}

//! Resultants by evaluation and interpolation.
//!
//! A resultant of polynomials whose coefficients depend polynomially on
//! parameters is itself a polynomial in those parameters with a known
//! degree bound. We evaluate numeric Sylvester determinants on a grid of
//! roots of unity and recover the coefficients with an inverse DFT, which
//! is perfectly conditioned on the unit circle.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;

use super::{BiPoly, UniPoly, Var};
use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Determinant of the Sylvester matrix of `p` and `q`, given as ascending
/// coefficient lists of formal degrees `p.len()-1` and `q.len()-1`.
///
/// Equals `lc(p)^deg(q) Π q(r)` over the roots `r` of `p`.
pub fn sylvester_determinant(p: &[Complex64], q: &[Complex64]) -> Complex64 {
    let m = p.len() - 1;
    let n = q.len() - 1;
    if m == 0 {
        return p[0].powu(n as u32);
    }
    if n == 0 {
        return q[0].powu(m as u32);
    }
    let size = m + n;
    let s = DMatrix::from_fn(size, size, |r, c| {
        if r < n {
            // row r holds p shifted right by r, descending powers
            c.checked_sub(r).filter(|k| *k <= m).map_or(ZERO, |k| p[m - k])
        } else {
            let r = r - n;
            c.checked_sub(r).filter(|k| *k <= n).map_or(ZERO, |k| q[n - k])
        }
    });
    s.lu().determinant()
}

fn unit_nodes(count: usize, offset: f64) -> Vec<Complex64> {
    (0..count)
        .map(|k| Complex64::from_polar(1.0, offset + 2.0 * PI * k as f64 / count as f64))
        .collect()
}

/// Coefficients `c_a` of the polynomial taking `values[k]` at `e^{i(offset + 2πk/N)}`.
fn interpolate_unit(values: &[Complex64], offset: f64) -> Vec<Complex64> {
    let n = values.len();
    (0..n)
        .map(|a| {
            let mut acc = ZERO;
            for (k, v) in values.iter().enumerate() {
                let ang = -2.0 * PI * ((k * a) % n) as f64 / n as f64;
                acc += v * Complex64::from_polar(1.0, ang);
            }
            acc / n as f64 * Complex64::from_polar(1.0, -offset * a as f64)
        })
        .collect()
}

fn check_eliminable(p: &BiPoly, var: Var, name: &str) -> Result<usize> {
    let d = p.degree(var);
    let lead_nonzero = match var {
        Var::X => !p.row(d).is_zero(),
        Var::Y => !p.column(d).is_zero(),
    };
    if d == 0 || !lead_nonzero {
        return Err(Error::DegenerateLeading(format!(
            "{name} does not involve the eliminated variable"
        )));
    }
    Ok(d)
}

/// Resultant eliminating a variable shared by two polynomials in different
/// free variables: `p(u, t)` and `q(t, v)` with `t` the eliminated one.
///
/// `p_elim` / `q_elim` say which variable of each input is `t`. The result
/// is a [`BiPoly`] in `(u, v)` with `u` as its `x` and `v` as its `y`.
pub fn resultant(p: &BiPoly, p_elim: Var, q: &BiPoly, q_elim: Var) -> Result<BiPoly> {
    let m = check_eliminable(p, p_elim, "first polynomial")?;
    let n = check_eliminable(q, q_elim, "second polynomial")?;
    let du = p.degree(p_elim.other()) * n;
    let dv = q.degree(q_elim.other()) * m;
    let (nu, nv) = (du + 1, dv + 1);
    let us = unit_nodes(nu, 0.0);
    let vs = unit_nodes(nv, 0.0);
    let qcs: Vec<Vec<Complex64>> = vs.iter().map(|&v| q.restrict(q_elim.other(), v)).collect();
    let grid: Vec<Vec<Complex64>> = us
        .par_iter()
        .map(|&u| {
            let pc = p.restrict(p_elim.other(), u);
            qcs.iter().map(|qc| sylvester_determinant(&pc, qc)).collect()
        })
        .collect();
    // inverse DFT along v for each u node, then along u
    let along_v: Vec<Vec<Complex64>> = grid.iter().map(|row| interpolate_unit(row, 0.0)).collect();
    let mut coeffs = vec![ZERO; nu * nv];
    for b in 0..nv {
        let column: Vec<Complex64> = along_v.iter().map(|row| row[b]).collect();
        for (a, c) in interpolate_unit(&column, 0.0).into_iter().enumerate() {
            coeffs[a * nv + b] = c;
        }
    }
    BiPoly::new(du, dv, coeffs)
}

/// Resultant of two polynomials in the same pair of variables, eliminating
/// `elim`; the result is univariate in the remaining variable.
pub fn resultant_common(p: &BiPoly, q: &BiPoly, elim: Var) -> Result<UniPoly> {
    let m = check_eliminable(p, elim, "first polynomial")?;
    let n = check_eliminable(q, elim, "second polynomial")?;
    let free = elim.other();
    let bound = p.degree(free) * n + q.degree(free) * m;
    let offset = 0.377;
    let values: Vec<Complex64> = unit_nodes(bound + 1, offset)
        .into_iter()
        .map(|t| sylvester_determinant(&p.restrict(free, t), &q.restrict(free, t)))
        .collect();
    Ok(UniPoly::new(interpolate_unit(&values, offset)).trimmed(1e-12))
}

/// Discriminant of `p` with respect to `var`, a polynomial in the other
/// variable: `(-1)^{n(n-1)/2} Res(p, ∂p) / lc(p)` with `n = deg_var p`.
pub fn discriminant(p: &BiPoly, var: Var) -> Result<UniPoly> {
    let n = p.degree(var);
    if n < 2 {
        return Err(Error::NoRamification { degree: n });
    }
    let free = var.other();
    let bound = (2 * n - 2) * p.degree(free);
    let sign = if (n * (n - 1) / 2).is_multiple_of(2) { 1.0 } else { -1.0 };
    let offset = 0.377;
    let mut values = Vec::with_capacity(bound + 1);
    for t in unit_nodes(bound + 1, offset) {
        let pc = p.restrict(free, t);
        let dc: Vec<Complex64> = pc.iter().enumerate().skip(1).map(|(i, c)| c * i as f64).collect();
        let lc = pc[n];
        if lc == ZERO {
            return Err(Error::DegenerateLeading(
                "leading coefficient vanishes on an interpolation node".into(),
            ));
        }
        values.push(sylvester_determinant(&pc, &dc) / lc * sign);
    }
    Ok(UniPoly::new(interpolate_unit(&values, offset)).trimmed(1e-12))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn two_by_two_determinant() {
        // Res_y(y - x, y + x) = 2x
        let p = BiPoly::from_real_terms(&[(0, 1, 1.0), (1, 0, -1.0)]);
        let q = BiPoly::from_real_terms(&[(0, 1, 1.0), (1, 0, 1.0)]);
        let r = resultant_common(&p, &q, Var::Y).unwrap();
        assert!(r.distance_up_to_scale(&UniPoly::from_real(&[0.0, 2.0])) < 1e-14);
        assert!((r.coeffs()[1] - c(2.0)).norm() < 1e-14);
        assert_eq!(r.degree(), Some(1));
    }

    #[test]
    fn chained_elimination_of_squares() {
        // Res_y(y - x^2, z - y^2) = z - x^4
        let p = BiPoly::from_real_terms(&[(0, 1, 1.0), (2, 0, -1.0)]);
        // q(y, z) = z - y^2, stored with y in the x slot
        let q = BiPoly::from_real_terms(&[(0, 1, 1.0), (2, 0, -1.0)]);
        let r = resultant(&p, Var::Y, &q, Var::X).unwrap();
        let expected = BiPoly::from_real_terms(&[(0, 1, 1.0), (4, 0, -1.0)]);
        assert_eq!((r.deg_x(), r.deg_y()), (4, 1));
        let err = (0..=4)
            .flat_map(|i| (0..=1).map(move |j| (i, j)))
            .map(|(i, j)| (r.get(i, j) - expected.get(i, j)).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-12, "err {err}");
    }

    #[test]
    fn discriminant_of_parabola() {
        let p = BiPoly::from_real_terms(&[(0, 1, 1.0), (2, 0, -1.0)]);
        let d = discriminant(&p, Var::X).unwrap();
        assert!(d.distance_up_to_scale(&UniPoly::from_real(&[0.0, 1.0])) < 1e-12);
        assert!(matches!(discriminant(&p, Var::Y), Err(Error::NoRamification { degree: 1 })));
    }

    #[test]
    fn discriminant_of_crossing_lines() {
        let p = BiPoly::linear_pencil(&[c(2.0), c(3.0)]);
        let d = discriminant(&p, Var::X).unwrap();
        assert!(d.distance_up_to_scale(&UniPoly::from_real(&[0.0, 0.0, 1.0])) < 1e-12);
    }

    #[test]
    fn degenerate_elimination_is_rejected() {
        let p = BiPoly::from_real_terms(&[(1, 0, 1.0), (0, 0, 1.0)]);
        let q = BiPoly::from_real_terms(&[(0, 1, 1.0)]);
        assert!(matches!(resultant(&p, Var::Y, &q, Var::X), Err(Error::DegenerateLeading(_))));
    }
}

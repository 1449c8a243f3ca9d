//! Complex polynomial arithmetic: evaluation, roots, resultants,
//! discriminants and squarefree parts.

mod bipoly;
mod resultant;
mod roots;
mod squarefree;
mod unipoly;

pub use bipoly::{BiPoly, Var};
pub use resultant::{discriminant, resultant, resultant_common, sylvester_determinant};
pub use roots::{cluster_points, roots, sphere_roots, Root};
pub use squarefree::{squarefree_part, Squarefree};
pub use unipoly::UniPoly;

pub(crate) use unipoly::horner;

use num_complex::Complex64;

pub(crate) fn max_modulus(c: &[Complex64]) -> f64 {
    c.iter().map(|x| x.norm()).fold(0.0, f64::max)
}

/// Scalar that maps `c` to max modulus one with the first (near-)maximal
/// entry real and positive. `None` for an all-zero list.
pub(crate) fn canonical_scale(c: &[Complex64]) -> Option<Complex64> {
    let m = max_modulus(c);
    if m == 0.0 || !m.is_finite() {
        return None;
    }
    let pivot = c.iter().find(|x| x.norm() >= m * (1.0 - 1e-9))?;
    Some(pivot.conj() / (pivot.norm() * m))
}

/// `min_λ ‖a - λ b‖∞ / ‖a‖∞` using the least-squares `λ`.
pub(crate) fn distance_up_to_scale(a: &[Complex64], b: &[Complex64]) -> f64 {
    let n = a.len().max(b.len());
    let get = |v: &[Complex64], i: usize| v.get(i).copied().unwrap_or_default();
    let mut num = Complex64::new(0.0, 0.0);
    let mut den = 0.0;
    for i in 0..n {
        num += get(b, i).conj() * get(a, i);
        den += get(b, i).norm_sqr();
    }
    let ma = max_modulus(a);
    if ma == 0.0 {
        return if max_modulus(b) == 0.0 { 0.0 } else { f64::INFINITY };
    }
    if den == 0.0 {
        return 1.0;
    }
    let lambda = num / den;
    (0..n)
        .map(|i| (get(a, i) - lambda * get(b, i)).norm())
        .fold(0.0, f64::max)
        / ma
}

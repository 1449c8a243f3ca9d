use nalgebra::DMatrix;
use num_complex::Complex64;

use super::UniPoly;
use crate::error::{Error, Result};
use crate::policy::NumericPolicy;

/// Result of [`squarefree_part`].
#[derive(Clone, Debug)]
pub struct Squarefree {
    pub poly: UniPoly,
    /// Degree of the approximate `gcd(p, p')`.
    pub gcd_degree: usize,
    /// Ratio of the smallest relative singular values on either side of the rank decision.
    pub rank_gap: f64,
    pub ill_conditioned: bool,
}

/// Smallest relative singular value of the k-th subresultant system
/// `p u + p' v = 0` (`deg u < n-k`, `deg v ≤ n-k`) and its null vector.
fn subresultant_null(p: &[Complex64], dp: &[Complex64], k: usize) -> (f64, Vec<Complex64>) {
    let n = p.len() - 1;
    let nu = n - k;
    let nv = n - k + 1;
    let rows = 2 * n - k;
    let a = DMatrix::from_fn(rows, nu + nv, |r, c| {
        if c < nu {
            r.checked_sub(c).and_then(|i| p.get(i)).copied().unwrap_or_default()
        } else {
            r.checked_sub(c - nu).and_then(|i| dp.get(i)).copied().unwrap_or_default()
        }
    });
    let svd = a.svd(false, true);
    let (imin, smin) = svd
        .singular_values
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, s)| if *s < acc.1 { (i, *s) } else { acc });
    let smax = svd.singular_values.iter().fold(0.0f64, |a, s| a.max(*s));
    let v_t = svd.v_t.expect("requested right singular vectors");
    let null: Vec<Complex64> = v_t.row(imin).iter().map(|c| c.conj()).collect();
    (if smax > 0.0 { smin / smax } else { 0.0 }, null)
}

/// `p / gcd(p, p')` computed from the null space of the Sylvester
/// subresultant system; same roots as `p`, each with multiplicity one.
pub fn squarefree_part(p: &UniPoly, policy: &NumericPolicy) -> Result<Squarefree> {
    let Some(n) = p.degree() else {
        return Err(Error::ZeroPolynomial);
    };
    let p = p.normalized();
    if n <= 1 {
        return Ok(Squarefree {
            poly: p,
            gcd_degree: 0,
            rank_gap: f64::INFINITY,
            ill_conditioned: false,
        });
    }
    let dp = p.derivative();
    let mut above = 1.0;
    for k in (1..n).rev() {
        let (sigma, null) = subresultant_null(p.coeffs(), dp.coeffs(), k);
        if sigma < policy.tol_rank {
            let v = UniPoly::new(null[(n - k)..].to_vec()).normalized();
            let gap = above / sigma.max(f64::MIN_POSITIVE);
            return Ok(Squarefree {
                poly: v,
                gcd_degree: k,
                rank_gap: gap,
                ill_conditioned: gap < policy.min_rank_gap,
            });
        }
        above = sigma;
    }
    let gap = above / policy.tol_rank;
    Ok(Squarefree {
        poly: p,
        gcd_degree: 0,
        rank_gap: gap,
        ill_conditioned: gap < policy.min_rank_gap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::roots;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn removes_repeated_factor() {
        let p = UniPoly::from_roots(&[c(1.0), c(1.0), c(-1.0)]);
        let s = squarefree_part(&p, &NumericPolicy::default()).unwrap();
        assert_eq!(s.gcd_degree, 1);
        assert!(s.poly.distance_up_to_scale(&UniPoly::from_roots(&[c(1.0), c(-1.0)])) < 1e-10);
        assert!(!s.ill_conditioned);
    }

    #[test]
    fn cube_becomes_linear() {
        let s = squarefree_part(&UniPoly::from_real(&[0.0, 0.0, 0.0, 1.0]), &NumericPolicy::default()).unwrap();
        assert_eq!(s.gcd_degree, 2);
        assert!(s.poly.distance_up_to_scale(&UniPoly::from_real(&[0.0, 1.0])) < 1e-12);
    }

    #[test]
    fn squarefree_input_is_kept() {
        let p = UniPoly::from_roots(&[c(1.0), c(2.0), c(-3.0)]);
        let s = squarefree_part(&p, &NumericPolicy::default()).unwrap();
        assert_eq!(s.gcd_degree, 0);
        assert!(s.poly.distance_up_to_scale(&p) < 1e-15);
    }

    #[test]
    fn planted_double_roots_preserve_the_root_set() {
        let policy = NumericPolicy::default();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let r: Vec<Complex64> = (0..3)
                .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect();
            let p = UniPoly::from_roots(&[r[0], r[0], r[1], r[1], r[2]]);
            let s = squarefree_part(&p, &policy).unwrap();
            assert_eq!(s.gcd_degree, 2);
            let found = roots(&s.poly, &policy).unwrap();
            assert_eq!(found.len(), 3);
            for x in &found {
                assert_eq!(x.multiplicity, 1);
                assert!(p.eval(x.value).norm() / p.scale_at(x.value) < 1e-8);
                assert!(r.iter().any(|t| (t - x.value).norm() < 1e-6));
            }
        }
    }
}

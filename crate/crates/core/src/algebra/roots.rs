use nalgebra::{DMatrix, Schur};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{horner, max_modulus, UniPoly};
use crate::error::{Error, Result};
use crate::policy::NumericPolicy;
use crate::sphere::{Chart, SpherePoint};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// A root with its multiplicity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Root {
    pub value: Complex64,
    pub multiplicity: usize,
}

/// Finite roots of `p` with multiplicity; the multiplicities sum to `deg p`.
pub fn roots(p: &UniPoly, policy: &NumericPolicy) -> Result<Vec<Root>> {
    if p.is_zero() {
        return Err(Error::ZeroFiber);
    }
    let pts = sphere_roots(p.coeffs(), policy)?;
    Ok(pts
        .into_iter()
        .map(|(pt, m)| Root {
            value: pt.affine().unwrap_or(Complex64::new(f64::INFINITY, 0.0)),
            multiplicity: m,
        })
        .collect())
}

/// Roots on the sphere of the degree-`N` binary form whose dehomogenized
/// coefficients are `formal` (`N = formal.len() - 1`). Missing top degree
/// shows up as roots at infinity, so the multiplicities always sum to `N`.
pub fn sphere_roots(formal: &[Complex64], policy: &NumericPolicy) -> Result<Vec<(SpherePoint, usize)>> {
    let n = formal.len().saturating_sub(1);
    if formal.iter().all(|c| *c == ZERO) {
        return Err(Error::ZeroFiber);
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let reversed: Vec<Complex64> = formal.iter().rev().copied().collect();
    // negligible top (bottom) coefficients are roots at infinity (zero);
    // solve the rest in the orientation whose leading coefficient is larger
    let small = policy.tol_lead * max_modulus(formal);
    let at_inf = formal.iter().rev().take_while(|c| c.norm() <= small).count();
    let at_zero = formal[..=n - at_inf].iter().take_while(|c| c.norm() <= small).count().min(n - at_inf);
    let core = &formal[at_zero..=n - at_inf];
    let mut raw = vec![SpherePoint::INFINITY; at_inf];
    raw.extend(std::iter::repeat_n(SpherePoint::ZERO, at_zero));
    if core[core.len() - 1].norm() >= core[0].norm() {
        raw.extend(
            finite_roots(core, policy)?
                .into_iter()
                .map(|z| SpherePoint::in_chart(Chart::Zero, z)),
        );
    } else {
        let rc: Vec<Complex64> = core.iter().rev().copied().collect();
        raw.extend(
            finite_roots(&rc, policy)?
                .into_iter()
                .map(|s| SpherePoint::in_chart(Chart::Infinity, s)),
        );
    }
    let mut clusters = cluster_points(&raw, policy.tol_cluster, policy.tol_root);
    for (pt, m) in clusters.iter_mut() {
        let coeffs = match pt.chart {
            Chart::Zero => formal,
            Chart::Infinity => &reversed[..],
        };
        if *m == 1 {
            *pt = SpherePoint::in_chart(pt.chart, newton_polish(coeffs, pt.coord, 3));
        }
        // a cluster centre is only accurate to about eps^(1/m), so
        // multiple roots are judged by the normwise backward error
        let (r, allowed) = if *m == 1 && pt.coord != ZERO {
            (relative_residual(coeffs, pt.coord), 1e-6)
        } else {
            (normwise_residual(coeffs, pt.coord), 1e-3)
        };
        if !(r <= allowed) {
            return Err(Error::RootsNotConverged { degree: n, residual: r });
        }
    }
    Ok(clusters)
}

fn relative_residual(coeffs: &[Complex64], z: Complex64) -> f64 {
    let scale = coeffs.iter().rev().fold(0.0, |acc, c| acc * z.norm() + c.norm());
    if scale == 0.0 {
        return 0.0;
    }
    horner(coeffs, z).norm() / scale
}

fn normwise_residual(coeffs: &[Complex64], z: Complex64) -> f64 {
    let norm: f64 = coeffs.iter().map(|c| c.norm()).sum();
    if norm == 0.0 {
        return 0.0;
    }
    horner(coeffs, z).norm() / (norm * z.norm().max(1.0).powi(coeffs.len() as i32 - 1))
}

fn newton_polish(coeffs: &[Complex64], mut z: Complex64, steps: usize) -> Complex64 {
    let deriv: Vec<Complex64> = coeffs.iter().enumerate().skip(1).map(|(i, c)| c * i as f64).collect();
    let mut best = horner(coeffs, z).norm();
    for _ in 0..steps {
        let d = horner(&deriv, z);
        if d == ZERO || best == 0.0 {
            break;
        }
        let cand = z - horner(coeffs, z) / d;
        let r = horner(coeffs, cand).norm();
        if r.is_finite() && r < best {
            z = cand;
            best = r;
        } else {
            break;
        }
    }
    z
}

/// Roots of a polynomial with nonzero leading coefficient.
fn finite_roots(coeffs: &[Complex64], policy: &NumericPolicy) -> Result<Vec<Complex64>> {
    let n = coeffs.len() - 1;
    let zeros = coeffs.iter().take_while(|c| **c == ZERO).count();
    let c = &coeffs[zeros..];
    let mut out = vec![ZERO; zeros];
    match c.len() - 1 {
        0 => {}
        1 => out.push(-c[0] / c[1]),
        2 => {
            let (a, b, cc) = (c[2], c[1], c[0]);
            let disc = (b * b - a * cc * 4.0).sqrt();
            let q = if (b.conj() * disc).re >= 0.0 {
                -(b + disc) / 2.0
            } else {
                -(b - disc) / 2.0
            };
            if q == ZERO {
                out.extend([ZERO, ZERO]);
            } else {
                out.push(q / a);
                out.push(cc / q);
            }
        }
        m => {
            let lead = c[m];
            let comp = DMatrix::from_fn(m, m, |i, j| {
                if i == 0 {
                    -c[m - 1 - j] / lead
                } else if i == j + 1 {
                    Complex64::new(1.0, 0.0)
                } else {
                    ZERO
                }
            });
            let schur = Schur::try_new(comp, f64::EPSILON, policy.max_eigen_iters).ok_or(
                Error::RootsNotConverged {
                    degree: n,
                    residual: f64::NAN,
                },
            )?;
            let ev = schur.eigenvalues().ok_or(Error::RootsNotConverged {
                degree: n,
                residual: f64::NAN,
            })?;
            out.extend(ev.iter().copied());
        }
    }
    Ok(out)
}

/// Merges points into clusters with multiplicity.
///
/// A group of `m` points is merged when all of them lie within chordal
/// distance `max(tol, residual_tol^(1/m))` (capped at `1e-3`) of a seed
/// point: an m-fold root of a polynomial known to relative accuracy `ε`
/// splits by roughly `ε^(1/m)`. Larger groups are formed first.
pub fn cluster_points(points: &[SpherePoint], tol: f64, residual_tol: f64) -> Vec<(SpherePoint, usize)> {
    const REACH: f64 = 1e-3;
    let threshold = |m: usize| residual_tol.powf(1.0 / m as f64).max(tol).min(REACH);
    let n = points.len();
    let units: Vec<[f64; 3]> = points.iter().map(|p| p.to_unit_vector()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| units[a][2].total_cmp(&units[b][2]));
    // neighbours within REACH, sorted by distance; |Δz| ≤ chord = 2·chordal
    let mut near: Vec<Vec<(f64, usize)>> = vec![Vec::new(); n];
    for (k, &i) in order.iter().enumerate() {
        for &j in &order[k + 1..] {
            if units[j][2] - units[i][2] > 2.0 * REACH {
                break;
            }
            let d = points[i].chordal(&points[j]);
            if d < REACH {
                near[i].push((d, j));
                near[j].push((d, i));
            }
        }
    }
    for list in near.iter_mut() {
        list.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    let best_group = |i: usize, taken: &[bool]| -> Vec<usize> {
        let free: Vec<(f64, usize)> = near[i].iter().copied().filter(|(_, j)| !taken[*j]).collect();
        let mut size = 1;
        for m in (2..=free.len() + 1).rev() {
            if free[m - 2].0 < threshold(m) {
                size = m;
                break;
            }
        }
        std::iter::once(i).chain(free[..size - 1].iter().map(|(_, j)| *j)).collect()
    };
    let mut taken = vec![false; n];
    let mut seeds: Vec<(usize, f64, usize)> = (0..n)
        .map(|i| {
            let g = best_group(i, &taken);
            let radius = g.last().map_or(0.0, |&j| points[i].chordal(&points[j]));
            (g.len(), radius, i)
        })
        .collect();
    seeds.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.total_cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut out = Vec::new();
    for (_, _, i) in seeds {
        if taken[i] {
            continue;
        }
        let group = best_group(i, &taken);
        let chart = points[i].chart;
        let mut sum = Complex64::new(0.0, 0.0);
        for &j in &group {
            taken[j] = true;
            sum += points[j].coord_in(chart).unwrap_or(points[i].coord);
        }
        out.push((SpherePoint::in_chart(chart, sum / group.len() as f64), group.len()));
    }
    out.sort_by(|a, b| {
        let (ua, ub) = (a.0.to_unit_vector(), b.0.to_unit_vector());
        ua.partial_cmp(&ub).unwrap_or(std::cmp::Ordering::Equal)
    });
    out
}

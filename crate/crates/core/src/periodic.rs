//! Periodic points as the intersection of the graph of `fⁿ` with the
//! diagonal, with multipliers, and the pairing of normalized iterated graphs
//! against product test forms.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::algebra::{sphere_roots, BiPoly, Var};
use crate::correspondence::{iterate, Correspondence};
use crate::dynamics::{pullback_form, GridField};
use crate::error::{Error, Result};
use crate::measures::{dual_lip_distance, pair, PointCloudMeasure, TestDictionary, TestFunction};
use crate::policy::NumericPolicy;
use crate::sphere::SpherePoint;

/// Relative remainder below which `y - x` is taken to divide the graph.
const DIAGONAL_TOL: f64 = 1e-8;
/// Images closer than this (in chart units) to `x` pass through the fixed point.
const GERM_RADIUS: f64 = 1e-4;
/// Relative size of Taylor coefficients treated as zero in the tangent cone.
const CONE_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PeriodicClass {
    Repelling,
    Attracting,
    Neutral,
}

impl PeriodicClass {
    /// By `|λ|` against `1 ± tol`; an infinite multiplier is repelling.
    pub fn classify(multiplier: Option<Complex64>, tol: f64) -> Self {
        match multiplier {
            None => PeriodicClass::Repelling,
            Some(m) if m.norm() > 1.0 + tol => PeriodicClass::Repelling,
            Some(m) if m.norm() < 1.0 - tol => PeriodicClass::Attracting,
            Some(_) => PeriodicClass::Neutral,
        }
    }
}

/// One germ of the graph of `fⁿ` crossing the diagonal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriodicPoint {
    pub point: SpherePoint,
    pub period: usize,
    /// Slope of the germ at `(x, x)` in the chart of `x`; `None` when vertical.
    pub multiplier: Option<Complex64>,
    pub multiplicity: usize,
    pub class: PeriodicClass,
    /// `|P_n(x, x)|` relative to the coefficient scale at the point.
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriodicSet {
    pub period: usize,
    pub points: Vec<PeriodicPoint>,
    /// Number of `y - x` factors divided out of the graph.
    pub diagonal_factors: usize,
    /// Sum of multiplicities over `points`.
    pub count: usize,
    /// `d1(fⁿ) + d2(fⁿ)`, the intersection number with the diagonal.
    pub expected: usize,
}

impl PeriodicSet {
    /// Points counted plus the two lost per diagonal factor.
    pub fn total_with_diagonal(&self) -> usize {
        self.count + 2 * self.diagonal_factors
    }

    pub fn class_counts(&self) -> [(PeriodicClass, usize); 3] {
        let count = |c| self.points.iter().filter(|p| p.class == c).map(|p| p.multiplicity).sum();
        [
            (PeriodicClass::Repelling, count(PeriodicClass::Repelling)),
            (PeriodicClass::Attracting, count(PeriodicClass::Attracting)),
            (PeriodicClass::Neutral, count(PeriodicClass::Neutral)),
        ]
    }
}

/// Divides out every factor `y - x`, returning the reduced polynomial and
/// the number of factors removed.
fn remove_diagonal(p: &BiPoly) -> Result<(BiPoly, usize)> {
    let mut cur = p.clone();
    let mut removed = 0;
    while cur.deg_x() > 0 && cur.deg_y() > 0 {
        let frame = cur.in_diagonal_frame();
        let (q, rem) = frame.divide_linear(Var::Y, Complex64::new(0.0, 0.0));
        if rem > DIAGONAL_TOL * frame.max_modulus() {
            break;
        }
        let back = q.from_diagonal_frame();
        let (a, b) = (cur.deg_x() - 1, cur.deg_y() - 1);
        cur = BiPoly::from_fn(a, b, |i, j| back.get(i, j));
        removed += 1;
    }
    if removed > 0 && (cur.deg_x() == 0 || cur.deg_y() == 0) {
        // nothing but the diagonal (up to fibers) remains
        return Err(Error::DiagonalFull);
    }
    Ok((cur, removed))
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Slopes of the branches of `q = 0` through the singular point `(u, u)`,
/// from the lowest nonvanishing homogeneous part of the Taylor expansion.
fn tangent_cone(q: &BiPoly, u: Complex64, policy: &NumericPolicy) -> Result<Vec<Option<Complex64>>> {
    let top = q.deg_x() + q.deg_y();
    let mut terms = vec![vec![Complex64::new(0.0, 0.0); top + 1]; top + 1];
    let mut scale: f64 = 0.0;
    let mut dx = q.clone();
    for i in 0..=q.deg_x() {
        let mut dxy = dx.clone();
        for j in 0..=q.deg_y() {
            let t = dxy.eval(u, u) / (factorial(i) * factorial(j));
            scale = scale.max(t.norm());
            terms[i][j] = t;
            dxy = dxy.partial(Var::Y);
        }
        dx = dx.partial(Var::X);
    }
    for k in 1..=top {
        // H(1, s) = Σ_{i+j=k} T_ij s^j
        let cone: Vec<Complex64> = (0..=k).map(|j| if k - j < terms.len() && j < terms.len() { terms[k - j][j] } else { Complex64::new(0.0, 0.0) }).collect();
        if cone.iter().any(|c| c.norm() > CONE_TOL * scale) {
            let cleaned: Vec<Complex64> =
                cone.iter().map(|c| if c.norm() > CONE_TOL * scale { *c } else { Complex64::new(0.0, 0.0) }).collect();
            let slopes = sphere_roots(&cleaned, policy)?;
            return Ok(slopes
                .into_iter()
                .flat_map(|(s, m)| std::iter::repeat_n(s.affine(), m))
                .collect());
        }
    }
    Ok(vec![None])
}

/// Periodic points of period dividing `n`: roots of `P_n(x, x)` on the
/// sphere after removing diagonal components, one row per germ of the graph.
pub fn periodic_points(f: &Correspondence, n: usize, policy: &NumericPolicy) -> Result<PeriodicSet> {
    if n == 0 {
        return Err(Error::InvalidInput("period must be positive".into()));
    }
    let fn_ = iterate(f, n, policy)?;
    let expected = fn_.d1() + fn_.d2();
    let (reduced, diagonal_factors) = remove_diagonal(fn_.poly())?;
    let q = reduced.diagonal();
    if q.iter().all(|c| c.norm() == 0.0) {
        return Err(Error::DiagonalFull);
    }
    let roots = sphere_roots(&q, policy)?;
    let mut points = Vec::new();
    for (x, m) in roots {
        let local = reduced.in_charts(x.chart, x.chart);
        let u = x.coord;
        let residual = local.eval(u, u).norm() / local.scale_at(u, u).max(f64::MIN_POSITIVE);
        let through = sphere_roots(&local.restrict(Var::X, u), policy)?
            .into_iter()
            .filter(|(y, _)| y.affine().is_some_and(|w| (w - u).norm() < GERM_RADIUS))
            .map(|(_, k)| k)
            .sum::<usize>();
        let slopes = if through <= 1 {
            let qx = local.partial(Var::X).eval(u, u);
            let qy = local.partial(Var::Y).eval(u, u);
            let s = -qx / qy;
            vec![if s.is_finite() { Some(s) } else { None }]
        } else {
            tangent_cone(&local, u, policy)?
        };
        let g = slopes.len().max(1);
        for (k, s) in slopes.into_iter().enumerate() {
            let share = m / g + usize::from(k < m % g);
            if share == 0 {
                continue;
            }
            points.push(PeriodicPoint {
                point: x,
                period: n,
                multiplier: s,
                multiplicity: share,
                class: PeriodicClass::classify(s, policy.tol_neutral),
                residual,
            });
        }
    }
    let count = points.iter().map(|p| p.multiplicity).sum();
    Ok(PeriodicSet { period: n, points, diagonal_factors, count, expected })
}

/// Fraction of repelling points and the distance of their normalized
/// counting measure to a reference measure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RepellingSummary {
    pub fraction: f64,
    pub distance_to_reference: Option<f64>,
}

pub fn repelling_summary(
    set: &PeriodicSet,
    reference: &PointCloudMeasure,
    dict: &TestDictionary,
) -> Result<RepellingSummary> {
    let total: usize = set.count;
    let rep: Vec<SpherePoint> = set
        .points
        .iter()
        .filter(|p| p.class == PeriodicClass::Repelling)
        .flat_map(|p| std::iter::repeat_n(p.point, p.multiplicity))
        .collect();
    let fraction = if total == 0 { 0.0 } else { rep.len() as f64 / total as f64 };
    let distance_to_reference = if rep.is_empty() {
        None
    } else {
        Some(dual_lip_distance(&PointCloudMeasure::uniform(&rep)?, reference, dict)?)
    };
    Ok(RepellingSummary { fraction, distance_to_reference })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphPairing {
    /// `d⁻ⁿ ∫ φ (fⁿ)* ψ`.
    pub lhs: f64,
    /// `c_ψ ⟨μ⁺, φ⟩` with `μ⁺` from a deeper independent run.
    pub rhs: f64,
    /// Total mass of `ψ`.
    pub c_psi: f64,
    pub reference_n: usize,
    pub monte_carlo: bool,
}

/// Depth added to `n` for the reference run of [`graph_pairing`].
pub const REFERENCE_EXTRA_DEPTH: usize = 10;

/// Pairs the normalized graph of `fⁿ` with `π₁*φ ∧ π₂*ψ`, for a density `ψ`
/// on the grid, and compares with `c_ψ ⟨μ⁺, φ⟩`.
pub fn graph_pairing(
    f: &Correspondence,
    n: usize,
    phi: &TestFunction,
    psi: &GridField,
    budget: usize,
    seed: u64,
    policy: &NumericPolicy,
) -> Result<GraphPairing> {
    let w = psi.grid.weight();
    let c_psi = crate::measures::neumaier_sum(psi.values.iter().map(|v| v.re * w));
    let cloud = pullback_form(f, psi, n, budget, seed, policy)?;
    let reference_n = n + REFERENCE_EXTRA_DEPTH;
    let reference = pullback_form(f, psi, reference_n, budget, seed.wrapping_add(1), policy)?;
    Ok(GraphPairing {
        lhs: c_psi * pair(&cloud, phi),
        rhs: c_psi * pair(&reference, phi),
        c_psi,
        reference_n,
        monte_carlo: cloud.meta.monte_carlo || reference.meta.monte_carlo,
    })
}

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

use super::grid::{chart_factor, oneform_metric, unit_frame, FieldKind, Grid, GridField};
use super::rng::stream_rng;
use crate::measures::TestDictionary;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use crate::algebra::{BiPoly, Var};
use crate::correspondence::{critical_values, Correspondence};
use crate::error::{Error, Result};
use crate::policy::NumericPolicy;
use crate::sphere::{Chart, SpherePoint};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// `(Λh)(y) = d⁻¹ Σ_{x ∈ f⁻¹(y)} h(x)` at every node, with `h` interpolated.
pub fn transfer_apply(f: &Correspondence, h: &GridField, policy: &NumericPolicy) -> Result<GridField> {
    if h.kind != FieldKind::Function {
        return Err(Error::InvalidInput("transfer operator acts on functions".into()));
    }
    let d = f.d2() as f64;
    let values = h
        .grid
        .nodes()
        .par_iter()
        .map(|y| {
            let fiber = f.preimages(y, policy)?;
            Ok(fiber.iter().map(|(x, m)| h.interpolate(x) * (*m as f64 / d)).sum())
        })
        .collect::<Result<Vec<Complex64>>>()?;
    Ok(GridField { grid: h.grid.clone(), values, kind: FieldKind::Function })
}

/// `P` in each chart pair with its partial derivatives, indexed `[cx][cy]`.
struct ChartPartials([[(BiPoly, BiPoly, BiPoly); 2]; 2]);

impl ChartPartials {
    fn new(p: &BiPoly) -> Self {
        let make = |cx, cy| {
            let q = p.in_charts(cx, cy);
            let qx = q.partial(Var::X);
            let qy = q.partial(Var::Y);
            (q, qx, qy)
        };
        Self([
            [make(Chart::Zero, Chart::Zero), make(Chart::Zero, Chart::Infinity)],
            [make(Chart::Infinity, Chart::Zero), make(Chart::Infinity, Chart::Infinity)],
        ])
    }

    /// `dy/dx = -P_x / P_y` in the charts of the two points.
    fn slope(&self, x: &SpherePoint, y: &SpherePoint) -> Complex64 {
        let (_, qx, qy) = &self.0[x.chart.id() as usize][y.chart.id() as usize];
        -qx.eval(x.coord, y.coord) / qy.eval(x.coord, y.coord)
    }
}

/// The discretized pullback of one-forms `u ↦ f*u` as a sparse matrix on
/// grid nodes. Rows of nodes near the critical values of the adjoint, or
/// with colliding images, are zeroed (masked).
#[derive(Clone, Debug)]
pub struct PullbackPlan {
    pub grid: Arc<Grid>,
    offsets: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<Complex64>,
    // the transpose, for the adjoint
    t_offsets: Vec<usize>,
    t_rows: Vec<usize>,
    t_vals: Vec<Complex64>,
    pub masked: Vec<bool>,
}

impl PullbackPlan {
    pub fn new(f: &Correspondence, grid: Arc<Grid>, policy: &NumericPolicy) -> Result<Self> {
        let branches = BranchTable::new(f, &grid, policy)?;
        let rows: Vec<Option<Vec<(usize, Complex64)>>> = branches
            .0
            .par_iter()
            .map(|row| {
                row.as_ref().map(|r| {
                    r.iter()
                        .flat_map(|(y, s)| {
                            let grid = &grid;
                            grid.stencil(y).into_iter().map(move |(k, w)| (k, chart_factor(&grid.node(k), y.chart) * s * w))
                        })
                        .collect()
                })
            })
            .collect();
        let n = grid.len();
        let mut offsets = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        let mut masked = Vec::with_capacity(n);
        offsets.push(0);
        for row in &rows {
            masked.push(row.is_none());
            if let Some(r) = row {
                for &(k, v) in r {
                    cols.push(k);
                    vals.push(v);
                }
            }
            offsets.push(cols.len());
        }
        // transpose by counting sort, rows kept in increasing order
        let mut counts = vec![0usize; n + 1];
        for &c in &cols {
            counts[c + 1] += 1;
        }
        for i in 0..n {
            counts[i + 1] += counts[i];
        }
        let t_offsets = counts.clone();
        let mut fill = counts;
        let mut t_rows = vec![0; cols.len()];
        let mut t_vals = vec![ZERO; cols.len()];
        for r in 0..n {
            for e in offsets[r]..offsets[r + 1] {
                let c = cols[e];
                t_rows[fill[c]] = r;
                t_vals[fill[c]] = vals[e];
                fill[c] += 1;
            }
        }
        Ok(Self { grid, offsets, cols, vals, t_offsets, t_rows, t_vals, masked })
    }

    pub fn masked_fraction(&self) -> f64 {
        self.masked.iter().filter(|m| **m).count() as f64 / self.masked.len() as f64
    }

    /// `f*u` on the grid.
    pub fn apply(&self, u: &[Complex64]) -> Vec<Complex64> {
        (0..self.grid.len())
            .into_par_iter()
            .map(|r| (self.offsets[r]..self.offsets[r + 1]).map(|e| self.vals[e] * u[self.cols[e]]).sum())
            .collect()
    }

    /// Adjoint of [`PullbackPlan::apply`] for the one-form inner product.
    pub fn apply_adjoint(&self, v: &[Complex64]) -> Vec<Complex64> {
        let g: Vec<f64> = self.grid.nodes().iter().map(|p| oneform_metric(p).powi(2)).collect();
        (0..self.grid.len())
            .into_par_iter()
            .map(|c| {
                let s: Complex64 = (self.t_offsets[c]..self.t_offsets[c + 1])
                    .map(|e| {
                        let r = self.t_rows[e];
                        self.t_vals[e].conj() * v[r] * g[r]
                    })
                    .sum();
                s / g[c]
            })
            .collect()
    }
}

/// `f*u`: at each node `x`, `Σ_{y ∈ f(x)} u(y) y'(x)`. Masked nodes get zero.
pub fn oneform_pullback(f: &Correspondence, u: &GridField, policy: &NumericPolicy) -> Result<GridField> {
    if u.kind != FieldKind::OneForm {
        return Err(Error::InvalidInput("oneform_pullback needs a one-form field".into()));
    }
    let plan = PullbackPlan::new(f, u.grid.clone(), policy)?;
    let frac = plan.masked_fraction();
    if frac > policy.max_mask_fraction {
        return Err(Error::GridTooCoarse { fraction: frac });
    }
    Ok(GridField { grid: u.grid.clone(), values: plan.apply(&u.values), kind: FieldKind::OneForm })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Pullback,
    Pushforward,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormEstimate {
    pub norm_estimate: f64,
    /// `‖T u_k‖ / ‖u_k‖` along the power iteration.
    pub history: Vec<f64>,
    /// Spread (max - min) of the last five history values.
    pub last5_spread: f64,
    /// Exact norm of `T` on the basis span, from the eigenvalues of the
    /// Gram pencil; the iteration converges to it.
    pub subspace_norm: f64,
    pub masked_fraction: f64,
    /// Estimate within 0.02 of one.
    pub weak_modularity_suspected: bool,
}

/// Real harmonic degree of the one-form basis used by [`operator_norm_estimate`].
pub const NORM_BASIS_DEGREE: usize = 8;

/// Power iteration for the norm of `T = d⁻¹ f*` (or `d⁻¹ f_*`) on L²
/// one-forms, `d` the topological degree of `f`.
///
/// Fields range over `V = {h e}` with `h` a complex combination of the real
/// harmonics of degree at most [`NORM_BASIS_DEGREE`] and `e` the unit frame.
/// `T` is applied exactly along the branches at every unmasked grid node and
/// `‖T u‖²` is integrated with the grid quadrature, giving the Gram matrices
/// `K = (⟨T b_i, T b_j⟩)` and `G = (⟨b_i, b_j⟩)`. The iteration `u ↦ G⁻¹K u`
/// then records `‖T u_k‖ / ‖u_k‖`, which increases towards `‖T|_V‖ ≤ ‖T‖`.
/// The estimate is the geometric mean of the last five ratios.
pub fn operator_norm_estimate(
    f: &Correspondence,
    direction: Direction,
    iters: usize,
    resolution: usize,
    seed: u64,
    policy: &NumericPolicy,
) -> Result<NormEstimate> {
    if iters < 10 {
        return Err(Error::InvalidInput("operator_norm_estimate needs at least 10 iterations".into()));
    }
    let g = match direction {
        Direction::Pullback => f.clone(),
        Direction::Pushforward => f.adjoint(),
    };
    let grid = Grid::new(resolution);
    let dict = TestDictionary::harmonics(NORM_BASIS_DEGREE)?;
    let branches = BranchTable::new(&g, &grid, policy)?;
    let masked_fraction = branches.masked_fraction();
    if masked_fraction > policy.max_mask_fraction {
        return Err(Error::GridTooCoarse { fraction: masked_fraction });
    }
    let scale = 1.0 / f.d2() as f64;
    let m = dict.len();
    let (gram, k) = galerkin_matrices(&grid, &branches, &dict, scale);
    let chol = gram.clone().cholesky().ok_or_else(|| Error::InvalidInput("singular basis Gram matrix".into()))?;
    let mut rng = stream_rng(seed, 0);
    let mut v = DVector::<Complex64>::from_fn(m, |_, _| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    let quad = |a: &DMatrix<Complex64>, v: &DVector<Complex64>| v.dotc(&(a * v)).re;
    let mut history = Vec::with_capacity(iters);
    for _ in 0..iters {
        let nv = quad(&gram, &v);
        if !(nv > 0.0) {
            return Err(Error::ZeroMass);
        }
        history.push((quad(&k, &v).max(0.0) / nv).sqrt());
        v = chol.solve(&(&k * &v));
        let nb = quad(&gram, &v).sqrt();
        if !(nb > 0.0) {
            return Err(Error::ZeroMass);
        }
        v /= Complex64::new(nb, 0.0);
    }
    // exact top of the pencil (K, G) for reference
    let l_inv = chol.l().try_inverse().ok_or_else(|| Error::InvalidInput("singular basis Gram matrix".into()))?;
    let sym = &l_inv * &k * l_inv.adjoint();
    let sym = (&sym + sym.adjoint()) * Complex64::new(0.5, 0.0);
    let top = sym.symmetric_eigenvalues().iter().cloned().fold(0.0, f64::max);
    let tail = &history[history.len() - 5..];
    let norm_estimate = (tail.iter().map(|h| h.ln()).sum::<f64>() / 5.0).exp();
    let last5_spread = tail.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - tail.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(NormEstimate {
        norm_estimate,
        history,
        last5_spread,
        subspace_norm: top.max(0.0).sqrt(),
        masked_fraction,
        weak_modularity_suspected: (norm_estimate - 1.0).abs() <= 0.02,
    })
}

/// Branches `(y, dy/dx)` at every grid node, `None` for masked nodes.
struct BranchTable(Vec<Option<Vec<(SpherePoint, Complex64)>>>);

impl BranchTable {
    fn new(f: &Correspondence, grid: &Grid, policy: &NumericPolicy) -> Result<Self> {
        let crit: Vec<SpherePoint> = critical_values(f, policy)?.b1.iter().map(|c| c.value).collect();
        let radius = policy.mask_factor / grid.resolution() as f64;
        let partials = ChartPartials::new(f.poly());
        let rows = grid
            .nodes()
            .par_iter()
            .map(|x| {
                if crit.iter().any(|c| c.chordal(x) <= radius) {
                    return Ok(None);
                }
                let images = f.images(x, policy)?;
                if images.iter().any(|(_, m)| *m > 1) {
                    return Ok(None);
                }
                let mut row = Vec::with_capacity(images.len());
                for (y, _) in images {
                    let s = partials.slope(x, &y);
                    if !s.is_finite() {
                        return Ok(None);
                    }
                    row.push((y, s));
                }
                Ok(Some(row))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self(rows))
    }

    fn masked_fraction(&self) -> f64 {
        self.0.iter().filter(|r| r.is_none()).count() as f64 / self.0.len() as f64
    }
}

/// Gram matrices `G_ij = ⟨b_i, b_j⟩` and `K_ij = ⟨T b_i, T b_j⟩` by grid
/// quadrature, summed chunk by chunk in a fixed order.
fn galerkin_matrices(
    grid: &Grid,
    branches: &BranchTable,
    dict: &TestDictionary,
    scale: f64,
) -> (DMatrix<Complex64>, DMatrix<Complex64>) {
    const CHUNK: usize = 1024;
    let m = dict.len();
    let w = grid.weight();
    let idx: Vec<usize> = (0..grid.len()).collect();
    let partial: Vec<(DMatrix<Complex64>, DMatrix<Complex64>)> = idx
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut gram = DMatrix::<Complex64>::zeros(m, m);
            let mut k = DMatrix::<Complex64>::zeros(m, m);
            for &i in chunk {
                let x = grid.node(i);
                let weight = w * oneform_metric(&x).powi(2);
                let e = unit_frame(&x);
                let b = DVector::<Complex64>::from_iterator(m, dict.eval_all(&x).into_iter().map(|h| e * h));
                gram.gerc(Complex64::new(weight, 0.0), &b, &b, Complex64::new(1.0, 0.0));
                if let Some(row) = &branches.0[i] {
                    let mut t = DVector::<Complex64>::zeros(m);
                    for (y, s) in row {
                        let c = unit_frame(y) * s * scale;
                        for (tj, h) in t.iter_mut().zip(dict.eval_all(y)) {
                            *tj += c * h;
                        }
                    }
                    k.gerc(Complex64::new(weight, 0.0), &t, &t, Complex64::new(1.0, 0.0));
                }
            }
            (gram, k)
        })
        .collect();
    let mut gram = DMatrix::<Complex64>::zeros(m, m);
    let mut k = DMatrix::<Complex64>::zeros(m, m);
    for (a, b) in partial {
        gram += a;
        k += b;
    }
    (gram, k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::neumaier_sum;
    use crate::dynamics::transport::pullback_dirac;

    fn pol() -> NumericPolicy {
        NumericPolicy::default()
    }

    fn corr(p: BiPoly) -> Correspondence {
        Correspondence::from_bipoly(&p, &pol()).unwrap()
    }

    fn linear_pair() -> Correspondence {
        corr(BiPoly::linear_pencil(&[Complex64::new(2.0, 0.0), Complex64::new(3.0, 0.0)]))
    }

    /// Coefficients of `dz` in the chart of each node.
    fn dz(grid: Arc<Grid>) -> GridField {
        GridField::from_fn(grid, FieldKind::OneForm, |p| match p.chart {
            Chart::Zero => Complex64::new(1.0, 0.0),
            Chart::Infinity => -(p.coord * p.coord).inv(),
        })
    }

    #[test]
    fn constants_are_fixed_by_the_transfer_operator() {
        let grid = Arc::new(Grid::new(24));
        let f = corr(BiPoly::from_real_terms(&[(0, 2, 1.0), (2, 0, -1.0), (0, 0, -1.0)]));
        let h = GridField::constant(grid, FieldKind::Function, Complex64::new(0.7, 0.0));
        let l = transfer_apply(&f, &h, &pol()).unwrap();
        assert!(l.values.iter().all(|v| (v - Complex64::new(0.7, 0.0)).norm() < 1e-9));
    }

    #[test]
    fn transfer_of_the_coordinate() {
        let grid = Arc::new(Grid::new(128));
        let h = GridField::from_fn(grid.clone(), FieldKind::Function, |p| p.affine().filter(|z| z.norm() <= 1.0).unwrap_or_default());
        let l = transfer_apply(&linear_pair(), &h, &pol()).unwrap();
        let mut checked = 0;
        for (k, y) in grid.nodes().iter().enumerate() {
            let z = y.affine().unwrap();
            // bilinear interpolation degrades at the poles, so stay away from 0
            if z.norm() > 0.45 && z.norm() < 0.8 {
                assert!((l.values[k] - z * (5.0 / 12.0)).norm() < 2e-3, "{} {}", l.values[k], z * 5.0 / 12.0);
                checked += 1;
            }
        }
        assert!(checked > 500);
    }

    #[test]
    fn dirac_duality() {
        let grid = Arc::new(Grid::new(64));
        let f = corr(BiPoly::from_real_terms(&[(0, 2, 1.0), (2, 0, -1.0), (0, 0, -1.0), (1, 1, 0.3)]));
        let h = GridField::from_fn(grid.clone(), FieldKind::Function, |p| {
            let [x, y, z] = p.to_unit_vector();
            Complex64::new(x * z + y, 0.0)
        });
        let l = transfer_apply(&f, &h, &pol()).unwrap();
        for k in [100, 1000, 2000, 3000] {
            let a = grid.node(k);
            let mu = pullback_dirac(&f, a, &pol()).unwrap();
            let lhs = neumaier_sum(mu.atoms.iter().map(|at| at.weight * h.interpolate(&at.point).re));
            assert!((lhs - l.values[k].re).abs() < 1e-12);
        }
    }

    #[test]
    fn pullback_of_dz() {
        let grid = Arc::new(Grid::new(64));
        let u = dz(grid.clone());
        let line = corr(BiPoly::from_real_terms(&[(0, 1, 1.0), (1, 0, -2.0)]));
        let r = oneform_pullback(&line, &u, &pol()).unwrap();
        let r2 = oneform_pullback(&linear_pair(), &u, &pol()).unwrap();
        for (k, x) in grid.nodes().iter().enumerate() {
            // images stay in chart zero and the coefficient of dz is exactly 1 there
            if x.chart == Chart::Zero && x.coord.norm() < 0.3 && !r2.values[k].is_nan() {
                assert!((r.values[k] - Complex64::new(2.0, 0.0)).norm() < 1e-12);
                if r2.values[k] != ZERO {
                    assert!((r2.values[k] - Complex64::new(5.0, 0.0)).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn cauchy_schwarz_bound() {
        let grid = Arc::new(Grid::new(96));
        let f = corr(BiPoly::from_real_terms(&[(0, 2, 1.0), (2, 0, -1.0), (0, 0, -1.0)]));
        let plan = PullbackPlan::new(&f, grid.clone(), &pol()).unwrap();
        for seed in 0..5 {
            let u = GridField::random_oneform(grid.clone(), seed);
            let v = GridField { grid: grid.clone(), values: plan.apply(&u.values), kind: FieldKind::OneForm };
            assert!(v.l2_norm() / 2.0 <= 1.02 * u.l2_norm(), "{} {}", v.l2_norm() / 2.0, u.l2_norm());
        }
    }

    #[test]
    fn discrete_adjoint_identity() {
        let grid = Arc::new(Grid::new(24));
        let f = corr(BiPoly::from_real_terms(&[(0, 2, 1.0), (2, 0, -1.0), (0, 0, -1.0), (1, 1, 0.5)]));
        let plan = PullbackPlan::new(&f, grid.clone(), &pol()).unwrap();
        let u = GridField::random_oneform(grid.clone(), 1);
        let v = GridField::random_oneform(grid.clone(), 2);
        let tu = GridField { grid: grid.clone(), values: plan.apply(&u.values), kind: FieldKind::OneForm };
        let tv = GridField { grid: grid.clone(), values: plan.apply_adjoint(&v.values), kind: FieldKind::OneForm };
        let a = v.inner(&tu);
        let b = tv.inner(&u);
        assert!((a - b).norm() < 1e-12 * a.norm().max(1.0));
    }

    #[test]
    fn map_case_pushforward_contracts() {
        let sq = corr(BiPoly::from_real_terms(&[(0, 1, 1.0), (2, 0, -1.0)]));
        let est = operator_norm_estimate(&sq, Direction::Pushforward, 20, 64, 3, &pol()).unwrap();
        assert!(est.norm_estimate < 0.95, "{}", est.norm_estimate);
        for w in est.history.windows(2).skip(5) {
            assert!(w[1] >= w[0] - 1e-3);
        }
        assert!(matches!(
            operator_norm_estimate(&sq, Direction::Pullback, 5, 16, 0, &pol()),
            Err(Error::InvalidInput(_))
        ));
    }
}

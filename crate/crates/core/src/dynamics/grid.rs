//! Equal-area grid on the sphere and fields sampled on it.
//!
//! `R` bands of equal height in the axial coordinate `Z` times `R`
//! longitudes; by Archimedes every cell has the same area, so all
//! quadrature weights equal `1/R²`.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

use super::rng::stream_rng;
use crate::measures::neumaier_sum;
use crate::sphere::{Chart, SpherePoint};

#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    r: usize,
    nodes: Vec<SpherePoint>,
}

impl Grid {
    pub fn new(r: usize) -> Self {
        assert!(r >= 2, "grid resolution must be at least 2");
        let mut nodes = Vec::with_capacity(r * r);
        for b in 0..r {
            let z = -1.0 + (2 * b + 1) as f64 / r as f64;
            let rho = (1.0 - z * z).sqrt();
            for j in 0..r {
                let phi = 2.0 * PI * (j as f64 + 0.5) / r as f64;
                nodes.push(SpherePoint::from_unit_vector([rho * phi.cos(), rho * phi.sin(), z]));
            }
        }
        Self { r, nodes }
    }

    pub fn resolution(&self) -> usize {
        self.r
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Quadrature weight of every node; they sum to one.
    pub fn weight(&self) -> f64 {
        1.0 / (self.r * self.r) as f64
    }

    pub fn node(&self, k: usize) -> SpherePoint {
        self.nodes[k]
    }

    pub fn nodes(&self) -> &[SpherePoint] {
        &self.nodes
    }

    /// Bilinear interpolation stencil in `(Z, longitude)`; clamped in `Z`
    /// beyond the outermost bands, periodic in longitude.
    pub fn stencil(&self, p: &SpherePoint) -> [(usize, f64); 4] {
        let r = self.r;
        let [x, y, z] = p.to_unit_vector();
        let t = (z + 1.0) * r as f64 / 2.0 - 0.5;
        let b0 = (t.floor().max(0.0) as usize).min(r - 2);
        let ft = (t - b0 as f64).clamp(0.0, 1.0);
        let phi = y.atan2(x).rem_euclid(2.0 * PI);
        let s = phi * r as f64 / (2.0 * PI) - 0.5;
        let sf = s.floor();
        let fj = s - sf;
        let j0 = (sf as i64).rem_euclid(r as i64) as usize;
        let j1 = (j0 + 1) % r;
        [
            (b0 * r + j0, (1.0 - ft) * (1.0 - fj)),
            (b0 * r + j1, (1.0 - ft) * fj),
            ((b0 + 1) * r + j0, ft * (1.0 - fj)),
            ((b0 + 1) * r + j1, ft * fj),
        ]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FieldKind {
    Function,
    /// Coefficient `u` of `u dz`, stored in the chart of each node.
    OneForm,
}

/// Factor turning the coefficient of a one-form in the chart of `from`
/// into its coefficient in `chart`: `dz = -w⁻² dw`, so `u_w = -u_z z²`.
pub fn chart_factor(from: &SpherePoint, chart: Chart) -> Complex64 {
    if from.chart == chart {
        Complex64::new(1.0, 0.0)
    } else {
        -from.coord * from.coord
    }
}

/// Pointwise Fubini–Study size factor of a one-form coefficient:
/// `|u dz|_{FS} ∝ |u| (1 + |z|²) / 2`, the same in both charts.
pub fn oneform_metric(p: &SpherePoint) -> f64 {
    (1.0 + p.coord.norm_sqr()) / 2.0
}

/// Coefficient of the unit-length frame `dz / (1 + |z|²)` in the chart of
/// `p`; in the far chart it reads `-(w̄/w) dw / (1 + |w|²)`.
pub fn unit_frame(p: &SpherePoint) -> Complex64 {
    let s = p.coord;
    match p.chart {
        Chart::Zero => Complex64::new(1.0 / (1.0 + s.norm_sqr()), 0.0),
        Chart::Infinity => {
            let phase = if s.norm() == 0.0 { Complex64::new(1.0, 0.0) } else { s.conj() / s };
            -phase / (1.0 + s.norm_sqr())
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridField {
    pub grid: Arc<Grid>,
    pub values: Vec<Complex64>,
    pub kind: FieldKind,
}

impl GridField {
    pub fn constant(grid: Arc<Grid>, kind: FieldKind, c: Complex64) -> Self {
        let values = vec![c; grid.len()];
        Self { grid, values, kind }
    }

    /// Samples `f` at every node; for one-forms `f` returns the coefficient
    /// in the node's chart.
    pub fn from_fn(grid: Arc<Grid>, kind: FieldKind, f: impl Fn(&SpherePoint) -> Complex64) -> Self {
        let values = grid.nodes().iter().map(f).collect();
        Self { grid, values, kind }
    }

    /// A smooth random one-form `h(p) dz / (1 + |z|²)` with `h` a random
    /// complex cubic in the unit-vector coordinates.
    pub fn random_oneform(grid: Arc<Grid>, seed: u64) -> Self {
        let mut rng = stream_rng(seed, 0);
        let mut coeff = || Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let mut terms = Vec::new();
        for a in 0..=3u32 {
            for b in 0..=(3 - a) {
                for c in 0..=(3 - a - b) {
                    terms.push((a, b, c, coeff()));
                }
            }
        }
        Self::from_fn(grid, FieldKind::OneForm, |p| {
            let [x, y, z] = p.to_unit_vector();
            let h: Complex64 = terms
                .iter()
                .map(|&(a, b, c, k)| k * x.powi(a as i32) * y.powi(b as i32) * z.powi(c as i32))
                .sum();
            h * unit_frame(p)
        })
    }

    /// Value at `p`; for one-forms the coefficient in the chart of `p`.
    pub fn interpolate(&self, p: &SpherePoint) -> Complex64 {
        let st = self.grid.stencil(p);
        match self.kind {
            FieldKind::Function => st.iter().map(|&(k, w)| self.values[k] * w).sum(),
            FieldKind::OneForm => st
                .iter()
                .map(|&(k, w)| self.values[k] * chart_factor(&self.grid.node(k), p.chart) * w)
                .sum(),
        }
    }

    /// Quadrature inner product `Σ w ū v` (with the metric factor for one-forms).
    pub fn inner(&self, other: &GridField) -> Complex64 {
        let w = self.grid.weight();
        let terms = self.values.iter().zip(&other.values).enumerate().map(|(k, (a, b))| {
            let g = match self.kind {
                FieldKind::Function => 1.0,
                FieldKind::OneForm => oneform_metric(&self.grid.node(k)).powi(2),
            };
            a.conj() * b * (w * g)
        });
        let (re, im): (Vec<f64>, Vec<f64>) = terms.map(|c| (c.re, c.im)).unzip();
        Complex64::new(neumaier_sum(re), neumaier_sum(im))
    }

    pub fn l2_norm(&self) -> f64 {
        self.inner(self).re.max(0.0).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_one() {
        let g = Grid::new(32);
        assert_eq!(g.len(), 1024);
        let total = neumaier_sum(std::iter::repeat_n(g.weight(), g.len()));
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn interpolation_reproduces_node_values_and_constants() {
        let g = Arc::new(Grid::new(20));
        let f = GridField::from_fn(g.clone(), FieldKind::Function, |p| Complex64::new(p.to_unit_vector()[2], 0.0));
        for k in [0, 57, 211, 399] {
            assert!((f.interpolate(&g.node(k)) - f.values[k]).norm() < 1e-12);
        }
        let c = GridField::constant(g.clone(), FieldKind::Function, Complex64::new(2.5, -1.0));
        for p in crate::sphere::fibonacci_points(50) {
            assert!((c.interpolate(&p) - Complex64::new(2.5, -1.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn oneform_norm_matches_the_integral() {
        // φ = dz / (1 + |z|²)²: |φ| = (1 - Z)/4 pointwise, so ‖φ‖² = ∫ (1 - Z)²/16 dω = 1/12
        let g = Arc::new(Grid::new(128));
        let u = GridField::from_fn(g, FieldKind::OneForm, |p| {
            let s = p.coord;
            match p.chart {
                Chart::Zero => Complex64::new(1.0, 0.0) / (1.0 + s.norm_sqr()).powi(2),
                Chart::Infinity => -(s.conj() * s.conj()) / (1.0 + s.norm_sqr()).powi(2),
            }
        });
        assert!((u.l2_norm().powi(2) - 1.0 / 12.0).abs() < 1e-4);
        // interpolating across the equator converts charts consistently
        let p = SpherePoint::from_re_im(1.02, 0.1);
        assert_eq!(p.chart, Chart::Infinity);
        let w = p.coord;
        let want = -(w.conj() * w.conj()) / (1.0 + w.norm_sqr()).powi(2);
        assert!((u.interpolate(&p) - want).norm() < 1e-3, "{} {}", u.interpolate(&p), want);
    }
}

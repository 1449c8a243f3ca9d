//! Points of the Riemann sphere in a two-chart atlas.
//!
//! Chart `Zero` uses the affine coordinate `z`, chart `Infinity` uses
//! `w = 1/z`. A canonical point always lives in the chart where its
//! coordinate has modulus at most one (ties go to `Zero`).
//!
//! The sphere is identified with the unit sphere of R³ through
//! stereographic projection from the north pole, so `0` is the south
//! pole, `∞` the north pole and the unit circle the equator.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Chart {
    Zero,
    Infinity,
}

impl Chart {
    pub fn id(self) -> u8 {
        match self {
            Chart::Zero => 0,
            Chart::Infinity => 1,
        }
    }

    pub fn from_id(id: u8) -> Option<Chart> {
        match id {
            0 => Some(Chart::Zero),
            1 => Some(Chart::Infinity),
            _ => None,
        }
    }

    pub fn other(self) -> Chart {
        match self {
            Chart::Zero => Chart::Infinity,
            Chart::Infinity => Chart::Zero,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpherePoint {
    pub chart: Chart,
    pub coord: Complex64,
}

impl SpherePoint {
    pub const ZERO: SpherePoint = SpherePoint {
        chart: Chart::Zero,
        coord: Complex64::new(0.0, 0.0),
    };
    pub const INFINITY: SpherePoint = SpherePoint {
        chart: Chart::Infinity,
        coord: Complex64::new(0.0, 0.0),
    };

    /// Point with affine coordinate `z`.
    pub fn finite(z: Complex64) -> Self {
        Self::in_chart(Chart::Zero, z)
    }

    pub fn from_re_im(re: f64, im: f64) -> Self {
        Self::finite(Complex64::new(re, im))
    }

    /// Point given by coordinate `c` in `chart`, re-expressed canonically.
    pub fn in_chart(chart: Chart, c: Complex64) -> Self {
        let r = c.norm();
        if !r.is_finite() {
            return SpherePoint {
                chart: chart.other(),
                coord: Complex64::new(0.0, 0.0),
            };
        }
        // equator ties go to chart Zero
        if r < 1.0 || (r == 1.0 && chart == Chart::Zero) {
            SpherePoint { chart, coord: c }
        } else {
            SpherePoint {
                chart: chart.other(),
                coord: c.inv(),
            }
        }
    }

    pub fn is_infinity(&self) -> bool {
        self.chart == Chart::Infinity && self.coord == Complex64::new(0.0, 0.0)
    }

    /// Affine coordinate, `None` at infinity.
    pub fn affine(&self) -> Option<Complex64> {
        match self.chart {
            Chart::Zero => Some(self.coord),
            Chart::Infinity => {
                if self.coord == Complex64::new(0.0, 0.0) {
                    None
                } else {
                    Some(self.coord.inv())
                }
            }
        }
    }

    /// Coordinate of this point in `chart`, `None` if it is the pole of that chart.
    pub fn coord_in(&self, chart: Chart) -> Option<Complex64> {
        if chart == self.chart {
            Some(self.coord)
        } else if self.coord == Complex64::new(0.0, 0.0) {
            None
        } else {
            Some(self.coord.inv())
        }
    }

    pub fn to_unit_vector(&self) -> [f64; 3] {
        let c = self.coord;
        let r2 = c.norm_sqr();
        let den = 1.0 + r2;
        let x = 2.0 * c.re / den;
        match self.chart {
            Chart::Zero => [x, 2.0 * c.im / den, (r2 - 1.0) / den],
            // w = 1/z = conj(z)/|z|^2 flips the imaginary part and the pole
            Chart::Infinity => [x, -2.0 * c.im / den, (1.0 - r2) / den],
        }
    }

    pub fn from_unit_vector(v: [f64; 3]) -> Self {
        let [x, y, z] = v;
        if z <= 0.0 {
            // z = (X + iY) / (1 - Z)
            SpherePoint::in_chart(Chart::Zero, Complex64::new(x, y) / (1.0 - z))
        } else {
            // w = 1/z = (X - iY) / (1 + Z)
            SpherePoint::in_chart(Chart::Infinity, Complex64::new(x, -y) / (1.0 + z))
        }
    }

    /// Great-circle distance on the unit sphere, in radians.
    pub fn geodesic(&self, other: &SpherePoint) -> f64 {
        let a = self.to_unit_vector();
        let b = other.to_unit_vector();
        let dot = a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
        let cx = a[1] * b[2] - a[2] * b[1];
        let cy = a[2] * b[0] - a[0] * b[2];
        let cz = a[0] * b[1] - a[1] * b[0];
        (cx * cx + cy * cy + cz * cz).sqrt().atan2(dot)
    }

    /// Chordal distance `|z - w| / sqrt((1+|z|²)(1+|w|²))`, at most one.
    pub fn chordal(&self, other: &SpherePoint) -> f64 {
        if self.chart == other.chart {
            let (z, w) = (self.coord, other.coord);
            (z - w).norm() / ((1.0 + z.norm_sqr()) * (1.0 + w.norm_sqr())).sqrt()
        } else {
            // z and 1/w' : |z - 1/w'| / sqrt((1+|z|²)(1+1/|w'|²)) = |z w' - 1| / sqrt((1+|z|²)(1+|w'|²))
            let (z, w) = (self.coord, other.coord);
            (z * w - 1.0).norm() / ((1.0 + z.norm_sqr()) * (1.0 + w.norm_sqr())).sqrt()
        }
    }
}

impl fmt::Display for SpherePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.affine() {
            None => write!(f, "∞"),
            Some(z) => write!(f, "{:.6}{:+.6}i", z.re, z.im),
        }
    }
}

/// Rotation of the sphere written as the Möbius map
/// `z ↦ (αz + β) / (-conj(β) z + conj(α))` with `|α|² + |β|² = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SphereRotation {
    pub alpha: Complex64,
    pub beta: Complex64,
}

impl SphereRotation {
    /// Rotation by `angle` around the axis through the unit vector `axis`.
    pub fn about_axis(axis: [f64; 3], angle: f64) -> Self {
        let n = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
        let (nx, ny, nz) = (axis[0] / n, axis[1] / n, axis[2] / n);
        let (s, c) = (angle / 2.0).sin_cos();
        let alpha = Complex64::new(c, nz * s);
        let beta = Complex64::new(-ny * s, nx * s);
        Self { alpha, beta }
    }

    pub fn apply(&self, p: &SpherePoint) -> SpherePoint {
        let (a, b) = (self.alpha, self.beta);
        let (c, d) = (-b.conj(), a.conj());
        // (a z + b) / (c z + d), evaluated in the chart of p
        match p.chart {
            Chart::Zero => {
                let z = p.coord;
                mobius_to_point(a * z + b, c * z + d)
            }
            Chart::Infinity => {
                let w = p.coord;
                mobius_to_point(a + b * w, c + d * w)
            }
        }
    }

    /// Coefficients `(a, b, c, d)` of the Möbius map.
    pub fn coefficients(&self) -> [Complex64; 4] {
        [self.alpha, self.beta, -self.beta.conj(), self.alpha.conj()]
    }
}

fn mobius_to_point(num: Complex64, den: Complex64) -> SpherePoint {
    if num.norm() <= den.norm() {
        SpherePoint::in_chart(Chart::Zero, num / den)
    } else {
        SpherePoint::in_chart(Chart::Infinity, den / num)
    }
}

/// Evenly spread points on the sphere (Fibonacci lattice).
pub fn fibonacci_points(count: usize) -> Vec<SpherePoint> {
    let golden = PI * (3.0 - 5f64.sqrt());
    (0..count)
        .map(|k| {
            let z = 1.0 - 2.0 * (k as f64 + 0.5) / count as f64;
            let r = (1.0 - z * z).sqrt();
            let phi = golden * k as f64;
            SpherePoint::from_unit_vector([r * phi.cos(), r * phi.sin(), z])
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_chart_choice() {
        let p = SpherePoint::from_re_im(3.0, 0.0);
        assert_eq!(p.chart, Chart::Infinity);
        assert!((p.coord - Complex64::new(1.0 / 3.0, 0.0)).norm() < 1e-15);
        let q = SpherePoint::in_chart(Chart::Infinity, Complex64::new(1.0, 0.0));
        assert_eq!(q.chart, Chart::Zero);
        assert!(SpherePoint::INFINITY.affine().is_none());
    }

    #[test]
    fn unit_vector_round_trip() {
        for p in fibonacci_points(200) {
            let q = SpherePoint::from_unit_vector(p.to_unit_vector());
            assert!(p.geodesic(&q) < 1e-12);
        }
        assert_eq!(SpherePoint::ZERO.to_unit_vector(), [0.0, 0.0, -1.0]);
        assert_eq!(SpherePoint::INFINITY.to_unit_vector(), [0.0, 0.0, 1.0]);
    }

    #[test]
    fn distances_agree_across_charts() {
        let a = SpherePoint::from_re_im(0.3, -0.4);
        let b = SpherePoint::from_re_im(2.0, 1.0);
        let g = a.geodesic(&b);
        let c = a.chordal(&b);
        // chordal = sin(g/2) on the unit sphere normalised to diameter one
        assert!((c - (g / 2.0).sin()).abs() < 1e-12);
        assert!((SpherePoint::ZERO.geodesic(&SpherePoint::INFINITY) - PI).abs() < 1e-15);
    }

    #[test]
    fn rotation_fixes_its_axis() {
        let axis = [0.3, -0.5, 0.8];
        let r = SphereRotation::about_axis(axis, 1.1);
        let n = (0.09f64 + 0.25 + 0.64).sqrt();
        let p = SpherePoint::from_unit_vector([0.3 / n, -0.5 / n, 0.8 / n]);
        assert!(r.apply(&p).geodesic(&p) < 1e-12);
        let q = SpherePoint::from_re_im(0.2, 0.1);
        let angle_moved = r.apply(&q).geodesic(&q);
        assert!(angle_moved > 0.01);
    }

    #[test]
    fn rotations_are_isometries() {
        let r = SphereRotation::about_axis([1.0, 2.0, 0.5], 0.7);
        let pts = fibonacci_points(50);
        for a in &pts {
            for b in pts.iter().take(5) {
                let d0 = a.geodesic(b);
                let d1 = r.apply(a).geodesic(&r.apply(b));
                assert!((d0 - d1).abs() < 1e-12);
            }
        }
    }
}

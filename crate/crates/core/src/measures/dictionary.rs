use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::cloud::{neumaier_sum, PointCloudMeasure};
use crate::error::{Error, Result};
use crate::sphere::SpherePoint;

/// Highest harmonic degree supported by the built-in dictionary.
pub const MAX_DEGREE: usize = 8;

const LIP_SAFETY: f64 = 1.05;
const SAMPLES: usize = 20_001;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Basis {
    Constant,
    /// Real spherical harmonic `P_l^m(Z) cos(mθ)` or, with `sine`, `sin(mθ)`.
    Harmonic { l: usize, m: usize, sine: bool },
    /// One coordinate of the unit vector.
    Coordinate(usize),
    /// `max(0, 1 - chordal(p, center) / radius)`.
    Bump { center: SpherePoint, radius: f64 },
}

/// A real Lipschitz test function on the sphere with its sup norm and a
/// Lipschitz bound for the great-circle distance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestFunction {
    pub basis: Basis,
    pub lip: f64,
    pub sup: f64,
    scale: f64,
}

/// `P_l^m(t)` for `0 ≤ m ≤ l ≤ L`, stored at `l * (L + 1) + m`, without the
/// Condon–Shortley sign.
fn legendre_table(t: f64, big_l: usize) -> Vec<f64> {
    let w = big_l + 1;
    let mut p = vec![0.0; w * w];
    let s = (1.0 - t * t).max(0.0).sqrt();
    let mut pmm = 1.0;
    for m in 0..=big_l {
        if m > 0 {
            pmm *= (2 * m - 1) as f64 * s;
        }
        p[m * w + m] = pmm;
        if m < big_l {
            p[(m + 1) * w + m] = t * (2 * m + 1) as f64 * pmm;
        }
        for l in (m + 2)..=big_l {
            p[l * w + m] = ((2 * l - 1) as f64 * t * p[(l - 1) * w + m] - (l + m - 1) as f64 * p[(l - 2) * w + m])
                / (l - m) as f64;
        }
    }
    p
}

fn legendre(l: usize, m: usize, t: f64) -> f64 {
    legendre_table(t, l)[l * (l + 1) + m]
}

/// Sup norm and gradient bound of `P_l^m(cos φ) cos(mθ)` by dense sampling of
/// the polar angle; the azimuthal factor is maximized in closed form.
fn harmonic_bounds(l: usize, m: usize) -> (f64, f64) {
    let h = 1e-6;
    let mut sup: f64 = 0.0;
    let mut grad: f64 = 0.0;
    for k in 0..SAMPLES {
        let phi = PI * k as f64 / (SAMPLES - 1) as f64;
        let g = legendre(l, m, phi.cos());
        sup = sup.max(g.abs());
        let dg = (legendre(l, m, (phi + h).cos()) - legendre(l, m, (phi - h).cos())) / (2.0 * h);
        let azimuthal = if m == 0 {
            0.0
        } else if phi.sin() > 1e-9 {
            m as f64 * g.abs() / phi.sin()
        } else {
            0.0
        };
        grad = grad.max(dg.abs()).max(azimuthal);
    }
    (sup, grad)
}

fn polar(p: &SpherePoint) -> (f64, f64) {
    let [x, y, z] = p.to_unit_vector();
    (z, y.atan2(x))
}

impl TestFunction {
    pub fn constant() -> Self {
        Self { basis: Basis::Constant, lip: 0.0, sup: 1.0, scale: 1.0 }
    }

    /// A real spherical harmonic scaled to sup norm one.
    pub fn harmonic(l: usize, m: usize, sine: bool) -> Result<Self> {
        if l == 0 || m > l || (m == 0 && sine) || l > MAX_DEGREE {
            return Err(Error::InvalidInput(format!("no harmonic ({l}, {m}, sine = {sine})")));
        }
        let (sup, grad) = harmonic_bounds(l, m);
        Ok(Self { basis: Basis::Harmonic { l, m, sine }, lip: LIP_SAFETY * grad / sup, sup: 1.0, scale: 1.0 / sup })
    }

    pub fn coordinate(axis: usize) -> Result<Self> {
        if axis > 2 {
            return Err(Error::InvalidInput(format!("axis {axis} out of range")));
        }
        Ok(Self { basis: Basis::Coordinate(axis), lip: 1.0, sup: 1.0, scale: 1.0 })
    }

    pub fn bump(center: SpherePoint, radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::InvalidInput("bump radius must be positive".into()));
        }
        // chordal ≤ geodesic, so 1/radius bounds the slope
        Ok(Self { basis: Basis::Bump { center, radius }, lip: 1.0 / radius, sup: 1.0, scale: 1.0 })
    }

    pub fn is_constant(&self) -> bool {
        self.basis == Basis::Constant
    }

    pub fn name(&self) -> String {
        match &self.basis {
            Basis::Constant => "1".into(),
            Basis::Harmonic { l, m, sine } => format!("Y({l},{m},{})", if *sine { "sin" } else { "cos" }),
            Basis::Coordinate(a) => ["X", "Y", "Z"][*a].into(),
            Basis::Bump { center, radius } => format!("bump({center},{radius})"),
        }
    }

    pub fn eval(&self, p: &SpherePoint) -> f64 {
        match &self.basis {
            Basis::Constant => 1.0,
            Basis::Harmonic { l, m, sine } => {
                let (t, theta) = polar(p);
                let a = *m as f64 * theta;
                self.scale * legendre(*l, *m, t) * if *sine { a.sin() } else { a.cos() }
            }
            Basis::Coordinate(a) => p.to_unit_vector()[*a],
            Basis::Bump { center, radius } => (1.0 - p.chordal(center) / radius).max(0.0),
        }
    }
}

/// A finite family of test functions; index 0 is always the constant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestDictionary {
    functions: Vec<TestFunction>,
    /// Harmonic degree when the dictionary is the standard one.
    degree: Option<usize>,
}

impl TestDictionary {
    /// The constant plus all real harmonics of degree `1..=degree`.
    pub fn harmonics(degree: usize) -> Result<Self> {
        if degree > MAX_DEGREE {
            return Err(Error::InvalidInput(format!("harmonic degree {degree} above {MAX_DEGREE}")));
        }
        let mut spec = Vec::new();
        for l in 1..=degree {
            spec.push((l, 0, false));
            for m in 1..=l {
                spec.push((l, m, false));
                spec.push((l, m, true));
            }
        }
        let mut functions = vec![TestFunction::constant()];
        functions.extend(
            spec.par_iter()
                .map(|&(l, m, s)| TestFunction::harmonic(l, m, s))
                .collect::<Result<Vec<_>>>()?,
        );
        Ok(Self { functions, degree: Some(degree) })
    }

    /// The standard dictionary of degree 8 (80 harmonics and the constant).
    pub fn standard() -> Self {
        Self::harmonics(MAX_DEGREE).expect("degree within range")
    }

    /// The constant followed by `functions`.
    pub fn from_functions(functions: Vec<TestFunction>) -> Self {
        let mut all = vec![TestFunction::constant()];
        all.extend(functions.into_iter().filter(|f| !f.is_constant()));
        Self { functions: all, degree: None }
    }

    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    pub fn functions(&self) -> &[TestFunction] {
        &self.functions
    }

    pub fn get(&self, i: usize) -> Option<&TestFunction> {
        self.functions.get(i)
    }

    /// Every function at `p`, in dictionary order.
    pub fn eval_all(&self, p: &SpherePoint) -> Vec<f64> {
        match self.degree {
            Some(big_l) => {
                let (t, theta) = polar(p);
                let table = legendre_table(t, big_l.max(1));
                let w = big_l.max(1) + 1;
                self.functions
                    .iter()
                    .map(|f| match &f.basis {
                        Basis::Harmonic { l, m, sine } => {
                            let a = *m as f64 * theta;
                            f.scale * table[l * w + m] * if *sine { a.sin() } else { a.cos() }
                        }
                        _ => f.eval(p),
                    })
                    .collect()
            }
            None => self.functions.iter().map(|f| f.eval(p)).collect(),
        }
    }

    /// `⟨μ, φ_m⟩` for every function, with a fixed summation order.
    pub fn moments(&self, mu: &PointCloudMeasure) -> Vec<f64> {
        const CHUNK: usize = 4096;
        let k = self.len();
        let partials: Vec<Vec<f64>> = mu
            .atoms
            .par_chunks(CHUNK)
            .map(|chunk| {
                let vals: Vec<Vec<f64>> = chunk.iter().map(|a| self.eval_all(&a.point)).collect();
                (0..k).map(|j| neumaier_sum(chunk.iter().zip(&vals).map(|(a, v)| a.weight * v[j]))).collect()
            })
            .collect();
        (0..k).map(|j| neumaier_sum(partials.iter().map(|p| p[j]))).collect()
    }

    pub(crate) fn check_nonconstant(&self) -> Result<()> {
        if self.functions.iter().any(|f| !f.is_constant()) {
            Ok(())
        } else {
            Err(Error::EmptyDictionary)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sphere::fibonacci_points;

    #[test]
    fn standard_dictionary_shape() {
        let d = TestDictionary::standard();
        assert_eq!(d.len(), 81);
        assert!(d.functions()[0].is_constant());
        assert!(d.functions().iter().all(|f| f.lip.is_finite() && f.sup == 1.0));
    }

    #[test]
    fn table_matches_single_evaluations() {
        let d = TestDictionary::harmonics(4).unwrap();
        for p in fibonacci_points(30) {
            let all = d.eval_all(&p);
            for (f, v) in d.functions().iter().zip(&all) {
                assert!((f.eval(&p) - v).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn low_degree_harmonics_are_coordinates() {
        // P_1^0 = Z and P_1^1 cos θ = X, both with sup 1 and slope 1
        let z = TestFunction::harmonic(1, 0, false).unwrap();
        let x = TestFunction::harmonic(1, 1, false).unwrap();
        for p in fibonacci_points(20) {
            let v = p.to_unit_vector();
            assert!((z.eval(&p) - v[2]).abs() < 1e-12);
            assert!((x.eval(&p) - v[0]).abs() < 1e-12);
        }
        assert!((z.lip - 1.05).abs() < 1e-6 && (x.lip - 1.05).abs() < 1e-6);
    }

    #[test]
    fn lipschitz_bounds_hold_on_close_pairs() {
        let d = TestDictionary::standard();
        let pts = fibonacci_points(400);
        for (i, p) in pts.iter().enumerate() {
            let [x, y, z] = p.to_unit_vector();
            let step = 1e-3 * (1 + i % 7) as f64;
            let q = SpherePoint::from_unit_vector({
                let v = [x + step * y, y - step * x, z + step * 0.3];
                let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
                [v[0] / n, v[1] / n, v[2] / n]
            });
            let dist = p.geodesic(&q);
            let (a, b) = (d.eval_all(p), d.eval_all(&q));
            for (f, (u, v)) in d.functions().iter().zip(a.iter().zip(&b)) {
                assert!((u - v).abs() <= f.lip * dist + 1e-12, "{}", f.name());
                assert!(u.abs() <= f.sup + 1e-9);
            }
        }
    }
}

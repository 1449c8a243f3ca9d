//! Holomorphic correspondences on the sphere, given by the affine equation
//! `P(x, y) = 0` of their graph.
//!
//! `f(x)` is the set of `y` with `P(x, y) = 0`; `d1 = deg_y P` counts
//! images and `d2 = deg_x P` counts preimages.

mod critical;

pub use critical::{
    critical_orbit_report, critical_values, delta_bound, CriticalData, CriticalKind, CriticalOrbitReport,
    CriticalValue, HypothesisStatus, OrbitEntry, Witness,
};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::algebra::{resultant, roots, sphere_roots, BiPoly, Var};
use crate::error::{Error, Result};
use crate::policy::NumericPolicy;
use crate::sphere::{Chart, SpherePoint};

/// Relative size below which resultant coefficients count as noise.
const RESULTANT_TRIM: f64 = 1e-11;
/// Relative residual for a numerical common root of all coefficient polynomials.
const CONTENT_TOL: f64 = 1e-7;

/// A factor of the graph with its multiplicity.
#[derive(Clone, Debug, PartialEq)]
pub struct Component {
    pub poly: BiPoly,
    pub multiplicity: usize,
}

#[derive(Clone, Debug)]
pub struct Correspondence {
    poly: BiPoly,
    d1: usize,
    d2: usize,
    components: Option<Vec<Component>>,
    // P written with y in each chart (for preimages) and x in each chart (for images)
    by_y_chart: [BiPoly; 2],
    by_x_chart: [BiPoly; 2],
}

/// Common roots of the coefficient polynomials of `p` with respect to
/// `var`; each is the root of a factor of `p` in the other variable alone.
fn univariate_content(p: &BiPoly, var: Var, policy: &NumericPolicy) -> Result<Vec<Complex64>> {
    let coeff_polys: Vec<_> = (0..=p.degree(var))
        .map(|k| match var {
            Var::Y => p.column(k),
            Var::X => p.row(k),
        })
        .filter(|c| !c.is_zero())
        .collect();
    let Some(shortest) = coeff_polys.iter().min_by_key(|c| c.degree()) else {
        return Ok(Vec::new());
    };
    if shortest.degree() == Some(0) {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    for r in roots(shortest, policy)? {
        let common = coeff_polys
            .iter()
            .all(|c| c.eval(r.value).norm() <= CONTENT_TOL * c.scale_at(r.value));
        if common {
            out.extend(std::iter::repeat_n(r.value, r.multiplicity));
        }
    }
    Ok(out)
}

fn check_no_fiber(p: &BiPoly, policy: &NumericPolicy) -> Result<()> {
    if p.deg_y() == 0 {
        return Err(Error::FiberComponent("polynomial in x alone".into()));
    }
    if p.deg_x() == 0 {
        return Err(Error::FiberComponent("polynomial in y alone".into()));
    }
    if let Some(r) = univariate_content(p, Var::Y, policy)?.first() {
        return Err(Error::FiberComponent(format!("factor vanishing on x = {r}")));
    }
    if let Some(r) = univariate_content(p, Var::X, policy)?.first() {
        return Err(Error::FiberComponent(format!("factor vanishing on y = {r}")));
    }
    Ok(())
}

impl Correspondence {
    fn assemble(poly: BiPoly, components: Option<Vec<Component>>) -> Self {
        let by_y_chart = [
            poly.in_charts(Chart::Zero, Chart::Zero),
            poly.in_charts(Chart::Zero, Chart::Infinity),
        ];
        let by_x_chart = [
            poly.in_charts(Chart::Zero, Chart::Zero),
            poly.in_charts(Chart::Infinity, Chart::Zero),
        ];
        Self {
            d1: poly.deg_y(),
            d2: poly.deg_x(),
            poly,
            components,
            by_y_chart,
            by_x_chart,
        }
    }

    /// Validates `p` and normalizes it to max coefficient modulus one.
    pub fn from_bipoly(p: &BiPoly, policy: &NumericPolicy) -> Result<Self> {
        if p.is_zero() {
            return Err(Error::ZeroPolynomial);
        }
        let p = p.trimmed(policy.tol_lead).normalized();
        if p.deg_x() == 0 && p.deg_y() == 0 {
            return Err(Error::ConstantPolynomial);
        }
        check_no_fiber(&p, policy)?;
        Ok(Self::assemble(p, None))
    }

    /// The correspondence `Π P_k^{m_k}` with the factorization remembered.
    pub fn from_components(components: &[(BiPoly, usize)], policy: &NumericPolicy) -> Result<Self> {
        if components.is_empty() || components.iter().any(|(_, m)| *m == 0) {
            return Err(Error::InvalidInput("empty factor list or zero multiplicity".into()));
        }
        let mut comps = Vec::with_capacity(components.len());
        let mut product = BiPoly::from_real_terms(&[(0, 0, 1.0)]);
        for (p, m) in components {
            let c = Correspondence::from_bipoly(p, policy)?;
            product = product.mul(&c.poly.pow(*m as u32));
            comps.push(Component {
                poly: c.poly,
                multiplicity: *m,
            });
        }
        let mut f = Correspondence::from_bipoly(&product, policy)?;
        f.components = Some(comps);
        Ok(f)
    }

    pub fn poly(&self) -> &BiPoly {
        &self.poly
    }

    /// Number of images of a generic point, `deg_y P`.
    pub fn d1(&self) -> usize {
        self.d1
    }

    /// Number of preimages of a generic point, `deg_x P`; the topological degree.
    pub fn d2(&self) -> usize {
        self.d2
    }

    pub fn components(&self) -> Option<&[Component]> {
        self.components.as_deref()
    }

    /// The correspondence with reflected graph `(x, y) ↦ (y, x)`.
    pub fn adjoint(&self) -> Self {
        let components = self.components.as_ref().map(|cs| {
            cs.iter()
                .map(|c| Component {
                    poly: c.poly.transpose(),
                    multiplicity: c.multiplicity,
                })
                .collect()
        });
        Self::assemble(self.poly.transpose(), components)
    }

    /// Preimages `f⁻¹(a)` with multiplicity; they always number `d2`.
    pub fn preimages(&self, a: &SpherePoint, policy: &NumericPolicy) -> Result<Vec<(SpherePoint, usize)>> {
        let q = &self.by_y_chart[a.chart.id() as usize];
        sphere_roots(&q.restrict(Var::Y, a.coord), policy)
    }

    /// Images `f(x)` with multiplicity; they always number `d1`.
    pub fn images(&self, x: &SpherePoint, policy: &NumericPolicy) -> Result<Vec<(SpherePoint, usize)>> {
        let q = &self.by_x_chart[x.chart.id() as usize];
        sphere_roots(&q.restrict(Var::X, x.coord), policy)
    }

    /// `|P(x, y)|` relative to the coefficient scale, evaluated in the charts of the points.
    pub fn residual(&self, x: &SpherePoint, y: &SpherePoint) -> f64 {
        let q = self.poly.in_charts(x.chart, y.chart);
        let s = q.scale_at(x.coord, y.coord);
        if s == 0.0 {
            return 0.0;
        }
        q.eval(x.coord, y.coord).norm() / s
    }

    pub fn to_record(&self) -> CorrespondenceRecord {
        CorrespondenceRecord {
            bidegree: [self.poly.deg_x(), self.poly.deg_y()],
            coeffs: pairs(self.poly.coeffs()),
            components: self.components.as_ref().map(|cs| {
                cs.iter()
                    .map(|c| ComponentRecord {
                        bidegree: [c.poly.deg_x(), c.poly.deg_y()],
                        coeffs: pairs(c.poly.coeffs()),
                        multiplicity: c.multiplicity,
                    })
                    .collect()
            }),
        }
    }

    /// Rebuilds a correspondence from its record without rescaling, so
    /// that records round-trip bit for bit.
    pub fn from_record(r: &CorrespondenceRecord, policy: &NumericPolicy) -> Result<Self> {
        let poly = BiPoly::new(r.bidegree[0], r.bidegree[1], unpairs(&r.coeffs))?;
        if poly.is_zero() {
            return Err(Error::ZeroPolynomial);
        }
        if !poly.is_tight(0.0) {
            return Err(Error::InvalidInput("bidegree is not tight".into()));
        }
        check_no_fiber(&poly, policy)?;
        let components = match &r.components {
            None => None,
            Some(cs) => Some(
                cs.iter()
                    .map(|c| {
                        Ok(Component {
                            poly: BiPoly::new(c.bidegree[0], c.bidegree[1], unpairs(&c.coeffs))?,
                            multiplicity: c.multiplicity,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?,
            ),
        };
        Ok(Self::assemble(poly, components))
    }

    /// SHA-256 of the JSON record, hex encoded.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(&self.to_record()).expect("record serializes");
        hex::encode(Sha256::digest(json))
    }
}

fn pairs(c: &[Complex64]) -> Vec<[f64; 2]> {
    c.iter().map(|z| [z.re, z.im]).collect()
}

fn unpairs(c: &[[f64; 2]]) -> Vec<Complex64> {
    c.iter().map(|p| Complex64::new(p[0], p[1])).collect()
}

/// Serialized form: bidegree `(deg_x, deg_y)` and row-major `(re, im)` coefficients.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrespondenceRecord {
    pub bidegree: [usize; 2],
    pub coeffs: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub components: Option<Vec<ComponentRecord>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComponentRecord {
    pub bidegree: [usize; 2],
    pub coeffs: Vec<[f64; 2]>,
    pub multiplicity: usize,
}

/// Removes factors in one variable alone from a freshly eliminated graph.
fn remove_fiber_factors(mut p: BiPoly, policy: &NumericPolicy) -> Result<(BiPoly, usize)> {
    let mut removed = 0;
    for var in [Var::Y, Var::X] {
        // content along `var` is a factor in the other variable
        let divide_in = var.other();
        for r in univariate_content(&p, var, policy)? {
            let (q, rem) = p.divide_linear(divide_in, r);
            if rem > 1e-6 * p.max_modulus() {
                break;
            }
            p = q.normalized();
            removed += 1;
        }
    }
    Ok((p, removed))
}

/// `f ∘ g`: first `g`, then `f`. Its graph is `Res_y(g(x, y), f(y, z))`.
pub fn compose(f: &Correspondence, g: &Correspondence, policy: &NumericPolicy) -> Result<Correspondence> {
    let raw = resultant(&g.poly, Var::Y, &f.poly, Var::X)?;
    let trimmed = raw.trimmed(RESULTANT_TRIM).normalized();
    let (clean, removed) = remove_fiber_factors(trimmed, policy)?;
    if removed > 0 {
        log::warn!("composition: removed {removed} fiber factor(s) from the resultant");
    }
    let clean = clean.trimmed(RESULTANT_TRIM);
    let want = (f.d2 * g.d2, f.d1 * g.d1);
    if (clean.deg_x(), clean.deg_y()) != want || !clean.is_tight(RESULTANT_TRIM) {
        return Err(Error::CompositionDegenerated(format!(
            "bidegree ({}, {}) after cleanup, expected ({}, {}); {removed} fiber factor(s) removed",
            clean.deg_x(),
            clean.deg_y(),
            want.0,
            want.1
        )));
    }
    let components = match (&f.components, &g.components) {
        (Some(_), _) | (_, Some(_)) => {
            log::warn!("composition does not track factored forms; result stored unfactored");
            None
        }
        _ => None,
    };
    Ok(Correspondence::assemble(clean.normalized(), components))
}

/// The n-th iterate `fⁿ`.
pub fn iterate(f: &Correspondence, n: usize, policy: &NumericPolicy) -> Result<Correspondence> {
    if n == 0 {
        return Err(Error::InvalidInput("iterate needs n ≥ 1".into()));
    }
    let cap = policy.iterate_cap;
    for d in [f.d1, f.d2] {
        let mut deg: usize = 1;
        for _ in 0..n {
            deg = deg.saturating_mul(d);
            if deg > cap {
                return Err(Error::IterateCap { degree: deg, cap });
            }
        }
    }
    let mut acc = f.clone();
    for _ in 1..n {
        acc = compose(f, &acc, policy)?;
    }
    Ok(acc)
}

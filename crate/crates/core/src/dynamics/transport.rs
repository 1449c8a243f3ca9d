use rayon::prelude::*;

use super::grid::{FieldKind, GridField};
use super::rng::{uniform, RESAMPLE_STREAM};
use crate::correspondence::Correspondence;
use crate::error::{Error, Result};
use crate::measures::{neumaier_sum, Atom, CloudMeta, PointCloudMeasure};
use crate::policy::NumericPolicy;
use crate::sphere::SpherePoint;

/// Systematic resampling to `count` equally weighted particles.
fn resample(atoms: &[Atom], count: usize, seed: u64, step: usize) -> Vec<Atom> {
    let total = neumaier_sum(atoms.iter().map(|a| a.weight));
    let u0 = uniform(seed, RESAMPLE_STREAM, step as u64);
    let w = 1.0 / count as f64;
    let mut out = Vec::with_capacity(count);
    let mut cum = 0.0;
    let mut j = 0;
    for i in 0..count {
        let target = (u0 + i as f64) / count as f64 * total;
        while j + 1 < atoms.len() && cum + atoms[j].weight <= target {
            cum += atoms[j].weight;
            j += 1;
        }
        out.push(Atom { point: atoms[j].point, weight: w });
    }
    out
}

/// Index of the branch picked by a uniform draw `u`, with probability
/// multiplicity / degree.
fn pick_branch(fiber: &[(SpherePoint, usize)], degree: usize, u: f64) -> SpherePoint {
    let target = u * degree as f64;
    let mut cum = 0.0;
    for (p, m) in fiber {
        cum += *m as f64;
        if target < cum {
            return *p;
        }
    }
    fiber[fiber.len() - 1].0
}

/// Pushes a weighted cloud `n` steps backward along `f`.
///
/// The full preimage tree is expanded while it stays within `max_atoms`
/// atoms. Beyond that the cloud is resampled to `max_atoms` particles and
/// each particle follows one branch per step, chosen with probability
/// multiplicity / d from the counter-based stream `(seed, particle, step)`.
/// Both modes realize the law of the uniform backward chain.
pub fn backward_transport(
    f: &Correspondence,
    initial: Vec<Atom>,
    n: usize,
    max_atoms: usize,
    seed: u64,
    policy: &NumericPolicy,
) -> Result<(Vec<Atom>, bool)> {
    if max_atoms == 0 {
        return Err(Error::InvalidInput("atom budget must be positive".into()));
    }
    let d = f.d2();
    let mut atoms = initial;
    let mut sampled = false;
    if atoms.len() > max_atoms {
        atoms = resample(&atoms, max_atoms, seed, 0);
        sampled = true;
    }
    for step in 1..=n {
        if !sampled && atoms.len().saturating_mul(d) <= max_atoms {
            let expanded = atoms
                .par_iter()
                .map(|a| {
                    let fiber = f.preimages(&a.point, policy)?;
                    Ok(fiber
                        .into_iter()
                        .map(|(p, m)| Atom { point: p, weight: a.weight * m as f64 / d as f64 })
                        .collect::<Vec<_>>())
                })
                .collect::<Result<Vec<_>>>()?;
            atoms = expanded.concat();
        } else {
            if !sampled {
                atoms = resample(&atoms, max_atoms, seed, step);
                sampled = true;
            }
            atoms = atoms
                .par_iter()
                .enumerate()
                .map(|(i, a)| {
                    let fiber = f.preimages(&a.point, policy)?;
                    let u = uniform(seed, i as u64, step as u64);
                    Ok(Atom { point: pick_branch(&fiber, d, u), weight: a.weight })
                })
                .collect::<Result<Vec<_>>>()?;
        }
    }
    Ok((atoms, sampled))
}

/// Cloud approximating `d⁻ⁿ (fⁿ)* δ_a`.
pub fn backward_cloud(
    f: &Correspondence,
    a: SpherePoint,
    n: usize,
    max_atoms: usize,
    seed: u64,
    policy: &NumericPolicy,
) -> Result<PointCloudMeasure> {
    let (atoms, sampled) = backward_transport(f, vec![Atom { point: a, weight: 1.0 }], n, max_atoms, seed, policy)?;
    let meta = CloudMeta { seed, n, hash: f.hash(), monte_carlo: sampled };
    PointCloudMeasure::new(atoms, meta)
}

/// Cloud approximating `d⁻ⁿ (fⁿ)_* δ_a`: the backward cloud of the adjoint.
pub fn forward_cloud(
    f: &Correspondence,
    a: SpherePoint,
    n: usize,
    max_atoms: usize,
    seed: u64,
    policy: &NumericPolicy,
) -> Result<PointCloudMeasure> {
    backward_cloud(&f.adjoint(), a, n, max_atoms, seed, policy)
}

/// `d⁻¹ f* δ_a`: the preimages of `a` weighted by multiplicity / d.
pub fn pullback_dirac(f: &Correspondence, a: SpherePoint, policy: &NumericPolicy) -> Result<PointCloudMeasure> {
    backward_cloud(f, a, 1, usize::MAX, 0, policy)
}

/// `d⁻ⁿ (fⁿ)* α` normalized to mass one, for the area form `α` given by
/// nonnegative density values on the grid.
pub fn pullback_form(
    f: &Correspondence,
    alpha: &GridField,
    n: usize,
    budget: usize,
    seed: u64,
    policy: &NumericPolicy,
) -> Result<PointCloudMeasure> {
    if alpha.kind != FieldKind::Function {
        return Err(Error::InvalidInput("pullback_form needs a density field".into()));
    }
    let grid = &alpha.grid;
    let mut atoms = Vec::with_capacity(grid.len());
    for (k, v) in alpha.values.iter().enumerate() {
        if !(v.re >= 0.0) || !v.re.is_finite() {
            return Err(Error::InvalidInput("density must be finite and nonnegative".into()));
        }
        if v.re > 0.0 {
            atoms.push(Atom { point: grid.node(k), weight: grid.weight() * v.re });
        }
    }
    let mass = neumaier_sum(atoms.iter().map(|a| a.weight));
    if !(mass > 0.0) {
        return Err(Error::ZeroMass);
    }
    for a in atoms.iter_mut() {
        a.weight /= mass;
    }
    let (atoms, sampled) = backward_transport(f, atoms, n, budget, seed, policy)?;
    PointCloudMeasure::normalized(atoms, CloudMeta { seed, n, hash: f.hash(), monte_carlo: sampled })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::BiPoly;
    use crate::dynamics::grid::Grid;
    use num_complex::Complex64;
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn pol() -> NumericPolicy {
        NumericPolicy::default()
    }

    fn linear_pair() -> Correspondence {
        Correspondence::from_bipoly(
            &BiPoly::linear_pencil(&[Complex64::new(2.0, 0.0), Complex64::new(3.0, 0.0)]),
            &pol(),
        )
        .unwrap()
    }

    fn corr(terms: &[(usize, usize, f64)]) -> Correspondence {
        Correspondence::from_bipoly(&BiPoly::from_real_terms(terms), &pol()).unwrap()
    }

    fn sorted_reals(c: &PointCloudMeasure) -> Vec<(f64, f64)> {
        let mut v: Vec<(f64, f64)> = c.atoms.iter().map(|a| (a.point.affine().unwrap().re, a.weight)).collect();
        v.sort_by(|a, b| a.0.total_cmp(&b.0));
        v
    }

    #[test]
    fn dirac_pullbacks() {
        let sq = corr(&[(0, 1, 1.0), (2, 0, -1.0)]);
        let c = pullback_dirac(&sq, SpherePoint::from_re_im(4.0, 0.0), &pol()).unwrap();
        let v = sorted_reals(&c);
        assert!((v[0].0 + 2.0).abs() < 1e-14 && (v[1].0 - 2.0).abs() < 1e-14);
        assert!(v.iter().all(|a| a.1 == 0.5));
        let c = pullback_dirac(&linear_pair(), SpherePoint::from_re_im(6.0, 0.0), &pol()).unwrap();
        let v = sorted_reals(&c);
        assert!((v[0].0 - 2.0).abs() < 1e-14 && (v[1].0 - 3.0).abs() < 1e-14);
        let hyp = corr(&[(0, 2, 1.0), (2, 0, -1.0), (0, 0, -1.0)]);
        let c = pullback_dirac(&hyp, SpherePoint::ZERO, &pol()).unwrap();
        let mut ims: Vec<f64> = c.atoms.iter().map(|a| a.point.affine().unwrap().im).collect();
        ims.sort_by(f64::total_cmp);
        assert!((ims[0] + 1.0).abs() < 1e-14 && (ims[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn exact_trees() {
        let c = backward_cloud(&linear_pair(), SpherePoint::from_re_im(1.0, 0.0), 2, 1 << 20, 0, &pol()).unwrap();
        let v = sorted_reals(&c);
        for (a, want) in v.iter().zip([1.0 / 9.0, 1.0 / 6.0, 1.0 / 6.0, 0.25]) {
            assert!((a.0 - want).abs() < 1e-12);
            assert_eq!(a.1, 0.25);
        }
        assert!(!c.meta.monte_carlo);
        let sq = corr(&[(0, 1, 1.0), (2, 0, -1.0)]);
        let c = backward_cloud(&sq, SpherePoint::from_re_im(1.0, 0.0), 3, 1 << 20, 0, &pol()).unwrap();
        assert_eq!(c.len(), 8);
        for a in &c.atoms {
            let z = a.point.affine().unwrap();
            assert!((z.powu(8) - 1.0).norm() < 1e-12);
            assert_eq!(a.weight, 0.125);
        }
        // the eighth roots of unity are all distinct
        let mut args: Vec<f64> = c.atoms.iter().map(|a| a.point.affine().unwrap().arg().rem_euclid(2.0 * PI)).collect();
        args.sort_by(f64::total_cmp);
        for (k, a) in args.iter().enumerate() {
            assert!((a - k as f64 * PI / 4.0).abs() < 1e-12);
        }
        let c0 = backward_cloud(&sq, SpherePoint::from_re_im(0.3, 0.1), 0, 10, 0, &pol()).unwrap();
        assert_eq!(c0.atoms, vec![Atom { point: SpherePoint::from_re_im(0.3, 0.1), weight: 1.0 }]);
    }

    #[test]
    fn forward_clouds() {
        let f = linear_pair();
        let c = forward_cloud(&f, SpherePoint::from_re_im(1.0, 0.0), 2, 1 << 20, 0, &pol()).unwrap();
        let v = sorted_reals(&c);
        for (a, want) in v.iter().zip([4.0, 6.0, 6.0, 9.0]) {
            assert!((a.0 - want).abs() < 1e-12);
        }
        let a = SpherePoint::from_re_im(0.4, -0.2);
        let fw = forward_cloud(&f, a, 9, 100, 5, &pol()).unwrap();
        let bw = backward_cloud(&f.adjoint(), a, 9, 100, 5, &pol()).unwrap();
        assert_eq!(fw, bw);
    }

    #[test]
    fn monte_carlo_mode_is_seeded_and_keeps_mass() {
        let f = linear_pair();
        let a = SpherePoint::from_re_im(1.0, 0.0);
        let c1 = backward_cloud(&f, a, 10, 64, 11, &pol()).unwrap();
        let c2 = backward_cloud(&f, a, 10, 64, 11, &pol()).unwrap();
        let c3 = backward_cloud(&f, a, 10, 64, 12, &pol()).unwrap();
        assert_eq!(c1, c2);
        assert_ne!(c1, c3);
        assert!(c1.meta.monte_carlo);
        assert_eq!(c1.len(), 64);
        assert!((c1.total_mass() - 1.0).abs() < 1e-12);
        // every particle lies on an exact branch: a product of 1/2 and 1/3 factors
        for at in &c1.atoms {
            let x = at.point.affine().unwrap().re;
            let k = ((-x.ln() - 10.0 * 2f64.ln()) / 1.5f64.ln()).round();
            let j = 10.0 - k;
            assert!((x - 0.5f64.powf(j) * (1.0f64 / 3.0).powf(k)).abs() < 1e-12);
        }
    }

    #[test]
    fn form_pullback_of_the_area_form() {
        let grid = Arc::new(Grid::new(16));
        let omega = GridField::constant(grid.clone(), FieldKind::Function, Complex64::new(1.0, 0.0));
        let sq = corr(&[(0, 1, 1.0), (2, 0, -1.0)]);
        let c0 = pullback_form(&sq, &omega, 0, 1 << 20, 1, &pol()).unwrap();
        assert_eq!(c0.len(), grid.len());
        assert!(c0.atoms.iter().all(|a| (a.weight - grid.weight()).abs() < 1e-15));
        let c = pullback_form(&sq, &omega, 12, 20_000, 1, &pol()).unwrap();
        assert!((c.total_mass() - 1.0).abs() < 1e-12);
        // pulling back by z ↦ z² drives mass to the unit circle
        let near_circle: f64 = neumaier_sum(
            c.atoms
                .iter()
                .filter(|a| (a.point.coord.norm() - 1.0).abs() < 0.05)
                .map(|a| a.weight),
        );
        assert!(near_circle > 0.95, "{near_circle}");
        let zero = GridField::constant(grid, FieldKind::Function, Complex64::new(0.0, 0.0));
        assert!(matches!(pullback_form(&sq, &zero, 1, 10, 1, &pol()), Err(Error::ZeroMass)));
    }
}

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cloud::{neumaier_sum, Atom, PointCloudMeasure};
use super::dictionary::{TestDictionary, TestFunction};
use crate::correspondence::{critical_orbit_report, critical_values, Correspondence, HypothesisStatus};
use crate::dynamics::rng::uniform;
use crate::dynamics::{backward_cloud, backward_transport};
use crate::error::{Error, Result};
use crate::policy::NumericPolicy;
use crate::sphere::SpherePoint;

/// `⟨μ, φ⟩ = Σ w_i φ(p_i)`.
pub fn pair(mu: &PointCloudMeasure, phi: &TestFunction) -> f64 {
    neumaier_sum(mu.atoms.iter().map(|a| a.weight * phi.eval(&a.point)))
}

/// Max over the non-constant dictionary functions of `|⟨μ - ν, φ⟩| / Lip(φ)`.
pub fn dual_lip_distance(mu: &PointCloudMeasure, nu: &PointCloudMeasure, dict: &TestDictionary) -> Result<f64> {
    dict.check_nonconstant()?;
    Ok(moment_distance(&dict.moments(mu), &dict.moments(nu), dict))
}

/// The distance of [`dual_lip_distance`] from precomputed moments.
pub fn moment_distance(a: &[f64], b: &[f64], dict: &TestDictionary) -> f64 {
    dict.functions()
        .iter()
        .zip(a.iter().zip(b))
        .filter(|(f, _)| !f.is_constant() && f.lip > 0.0)
        .map(|(f, (x, y))| (x - y).abs() / f.lip)
        .fold(0.0, f64::max)
}

/// Max over the dictionary of `|⟨μ, Λφ⟩ - ⟨μ, φ⟩| / Lip(φ)`, with `Λφ`
/// evaluated exactly at the atoms by solving their fibers.
pub fn invariance_residual(
    f: &Correspondence,
    mu: &PointCloudMeasure,
    dict: &TestDictionary,
    policy: &NumericPolicy,
) -> Result<f64> {
    dict.check_nonconstant()?;
    // ⟨μ, Λφ⟩ = ⟨d⁻¹ f* μ, φ⟩
    let (atoms, _) = backward_transport(f, mu.atoms.clone(), 1, usize::MAX, 0, policy)?;
    let pulled = PointCloudMeasure { atoms, meta: mu.meta.clone() };
    Ok(moment_distance(&dict.moments(&pulled), &dict.moments(mu), dict))
}

/// Least-squares line through `(x, y)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope (zero for two points).
    pub slope_se: f64,
    /// Root-mean-square residual.
    pub residual: f64,
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    let n = x.len();
    if n < 2 || n != y.len() {
        return Err(Error::InvalidInput("a line fit needs at least two points".into()));
    }
    let mx = neumaier_sum(x.iter().cloned()) / n as f64;
    let my = neumaier_sum(y.iter().cloned()) / n as f64;
    let sxx = neumaier_sum(x.iter().map(|v| (v - mx).powi(2)));
    let sxy = neumaier_sum(x.iter().zip(y).map(|(u, v)| (u - mx) * (v - my)));
    if !(sxx > 0.0) {
        return Err(Error::InvalidInput("a line fit needs distinct abscissae".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss = neumaier_sum(x.iter().zip(y).map(|(u, v)| (v - intercept - slope * u).powi(2)));
    let slope_se = if n > 2 { (ss / (n - 2) as f64 / sxx).sqrt() } else { 0.0 };
    Ok(LinearFit { slope, intercept, slope_se, residual: (ss / n as f64).sqrt() })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateOptions {
    pub n_min: usize,
    pub n_max: usize,
    pub budget: usize,
    pub seed: u64,
    /// Horizon of the critical orbit check.
    pub horizon: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub ns: Vec<usize>,
    pub distances: Vec<f64>,
    pub reference_n: usize,
    /// `exp(slope)` of the fit of `log d_n`.
    pub lambda: f64,
    /// `exp(slope ∓ 2 se)`.
    pub lambda_band: [f64; 2],
    pub fit: LinearFit,
    /// Distances never grow by more than the sampling noise floor.
    pub reliable: bool,
    pub noise_floor: f64,
    pub hypothesis: HypothesisStatus,
}

/// Exponential rate of `d⁻ⁿ(fⁿ)*δ_a → μ⁺`, measured against a deeper
/// iterate `N = n_max + 4` of the same chain.
pub fn rate_fit(
    f: &Correspondence,
    a: SpherePoint,
    opts: &RateOptions,
    dict: &TestDictionary,
    policy: &NumericPolicy,
) -> Result<RateReport> {
    dict.check_nonconstant()?;
    if opts.n_max <= opts.n_min {
        return Err(Error::InvalidInput("rate fit needs n_min < n_max".into()));
    }
    let data = critical_values(f, policy)?;
    let hypothesis = critical_orbit_report(f, &data, opts.horizon, policy)?.hypothesis();
    let reference_n = opts.n_max + 4;
    let reference = dict.moments(&backward_cloud(f, a, reference_n, opts.budget, opts.seed, policy)?);
    let ns: Vec<usize> = (opts.n_min..=opts.n_max).collect();
    let mut distances = Vec::with_capacity(ns.len());
    for &n in &ns {
        let m = dict.moments(&backward_cloud(f, a, n, opts.budget, opts.seed, policy)?);
        distances.push(moment_distance(&m, &reference, dict));
    }
    let noise_floor = 3.0 / (opts.budget as f64).sqrt();
    let reliable = distances.windows(2).all(|w| w[1] <= w[0] + noise_floor);
    let (xs, ys): (Vec<f64>, Vec<f64>) = ns
        .iter()
        .zip(&distances)
        .filter(|(_, d)| **d > 0.0)
        .map(|(n, d)| (*n as f64, d.ln()))
        .unzip();
    let fit = linear_fit(&xs, &ys)?;
    Ok(RateReport {
        ns,
        distances,
        reference_n,
        lambda: fit.slope.exp(),
        lambda_band: [(fit.slope - 2.0 * fit.slope_se).exp(), (fit.slope + 2.0 * fit.slope_se).exp()],
        fit,
        reliable,
        noise_floor,
        hypothesis,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixingSeries {
    pub ns: Vec<usize>,
    pub values: Vec<f64>,
    /// Some per-atom tree exceeded its budget and was sampled.
    pub monte_carlo: bool,
}

/// `I_n = ⟨μ, (Λⁿφ) ψ⟩ - ⟨μ, φ⟩⟨μ, ψ⟩` for `n` in `ns`.
///
/// `Λⁿφ` at each atom is the mean of `φ` over its depth-`n` preimage tree,
/// expanded exactly up to `budget` leaves and sampled beyond.
pub fn mixing_correlation(
    f: &Correspondence,
    mu: &PointCloudMeasure,
    phi: &TestFunction,
    psi: &TestFunction,
    ns: &[usize],
    budget: usize,
    seed: u64,
    policy: &NumericPolicy,
) -> Result<MixingSeries> {
    let n_max = ns.iter().cloned().max().unwrap_or(0);
    let mp = pair(mu, phi);
    let mq = pair(mu, psi);
    // per atom: Λⁿφ at every depth 0..=n_max
    let per_atom = mu
        .atoms
        .par_iter()
        .enumerate()
        .map(|(i, a)| {
            let mut frontier = vec![Atom { point: a.point, weight: 1.0 }];
            let mut lam = vec![phi.eval(&a.point)];
            let mut sampled = false;
            for step in 1..=n_max {
                let s = (uniform(seed, i as u64, step as u64) * u64::MAX as f64) as u64;
                let (next, mc) = backward_transport(f, frontier, 1, budget, s, policy)?;
                sampled |= mc;
                frontier = next;
                let total = neumaier_sum(frontier.iter().map(|b| b.weight));
                lam.push(neumaier_sum(frontier.iter().map(|b| b.weight * phi.eval(&b.point))) / total);
            }
            Ok((lam, psi.eval(&a.point), sampled))
        })
        .collect::<Result<Vec<_>>>()?;
    let monte_carlo = per_atom.iter().any(|p| p.2);
    let values = ns
        .iter()
        .map(|&n| {
            let corr = neumaier_sum(mu.atoms.iter().zip(&per_atom).map(|(a, (lam, q, _))| a.weight * lam[n] * q));
            corr - mp * mq
        })
        .collect();
    Ok(MixingSeries { ns: ns.to_vec(), values, monte_carlo })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::BiPoly;
    use crate::sphere::fibonacci_points;
    use num_complex::Complex64;

    fn pol() -> NumericPolicy {
        NumericPolicy::default()
    }

    fn corr(terms: &[(usize, usize, f64)]) -> Correspondence {
        Correspondence::from_bipoly(&BiPoly::from_real_terms(terms), &pol()).unwrap()
    }

    fn linear_pair() -> Correspondence {
        corr(&[(0, 2, 1.0), (1, 1, -5.0), (2, 0, 6.0)])
    }

    fn circle(k: usize, r: f64) -> PointCloudMeasure {
        let pts: Vec<SpherePoint> = (0..k)
            .map(|j| SpherePoint::finite(Complex64::from_polar(r, 2.0 * std::f64::consts::PI * j as f64 / k as f64)))
            .collect();
        PointCloudMeasure::uniform(&pts).unwrap()
    }

    #[test]
    fn pairings() {
        let phi = TestFunction::harmonic(3, 1, true).unwrap();
        let a = SpherePoint::from_re_im(0.3, -2.0);
        assert_eq!(pair(&PointCloudMeasure::dirac(a), &phi), phi.eval(&a));
        let x = TestFunction::coordinate(0).unwrap();
        assert!(pair(&circle(4, 1.0), &x).abs() < 1e-12);
        let mu = backward_cloud(&linear_pair(), SpherePoint::from_re_im(1.0, 0.0), 2, 1 << 10, 0, &pol()).unwrap();
        let want = [0.25, 1.0 / 6.0, 1.0 / 6.0, 1.0 / 9.0]
            .iter()
            .map(|v| phi.eval(&SpherePoint::from_re_im(*v, 0.0)))
            .sum::<f64>()
            / 4.0;
        assert!((pair(&mu, &phi) - want).abs() < 1e-12);
    }

    #[test]
    fn pairing_is_linear_in_the_measure() {
        let d = TestDictionary::standard();
        let mu = PointCloudMeasure::uniform(&fibonacci_points(50)).unwrap();
        let nu = circle(7, 0.4);
        let mix = mu.mixture(0.3, &nu).unwrap();
        for phi in d.functions() {
            let lhs = pair(&mix, phi);
            let rhs = 0.3 * pair(&mu, phi) + 0.7 * pair(&nu, phi);
            assert!((lhs - rhs).abs() < 1e-14);
        }
    }

    #[test]
    fn distance_is_a_pseudometric_below_the_geodesic() {
        let d = TestDictionary::standard();
        let pts = fibonacci_points(12);
        for p in &pts {
            let dp = PointCloudMeasure::dirac(*p);
            assert_eq!(dual_lip_distance(&dp, &dp, &d).unwrap(), 0.0);
            for q in &pts {
                let dq = PointCloudMeasure::dirac(*q);
                let a = dual_lip_distance(&dp, &dq, &d).unwrap();
                assert_eq!(a, dual_lip_distance(&dq, &dp, &d).unwrap());
                assert!(a <= p.geodesic(q) + 1e-12);
            }
        }
        let (a, b, c) = (circle(5, 0.5), circle(9, 2.0), PointCloudMeasure::uniform(&pts).unwrap());
        let ab = dual_lip_distance(&a, &b, &d).unwrap();
        let bc = dual_lip_distance(&b, &c, &d).unwrap();
        let ac = dual_lip_distance(&a, &c, &d).unwrap();
        assert!(ac <= ab + bc + 1e-15);
        let only_const = TestDictionary::from_functions(vec![]);
        assert!(matches!(dual_lip_distance(&a, &b, &only_const), Err(Error::EmptyDictionary)));
    }

    #[test]
    fn invariance_of_the_origin_under_the_linear_pair() {
        let d = TestDictionary::standard();
        let r = invariance_residual(&linear_pair(), &PointCloudMeasure::dirac(SpherePoint::ZERO), &d, &pol()).unwrap();
        assert!(r < 1e-12);
        let generic = corr(&[(0, 2, 1.0), (2, 0, -1.0), (0, 0, -1.0), (1, 1, 0.4), (2, 2, 0.2)]);
        let uniform = PointCloudMeasure::uniform(&fibonacci_points(2000)).unwrap();
        assert!(invariance_residual(&generic, &uniform, &d, &pol()).unwrap() > 0.01);
    }

    #[test]
    fn rate_of_the_square_map() {
        // preimages of 3 under z² are equally spaced on the circle of radius 3^{2^-n}
        let sq = corr(&[(0, 1, 1.0), (2, 0, -1.0)]);
        let d = TestDictionary::standard();
        let opts = RateOptions { n_min: 2, n_max: 8, budget: 1 << 14, seed: 0, horizon: 6 };
        let r = rate_fit(&sq, SpherePoint::from_re_im(3.0, 0.0), &opts, &d, &pol()).unwrap();
        assert!((r.lambda - 0.5).abs() < 0.1, "{:?}", r);
        assert_eq!(r.reference_n, 12);
        // 0 is a fixed critical value of z², so the hypothesis fails
        assert_eq!(r.hypothesis, HypothesisStatus::Violated);
        let lp = rate_fit(&linear_pair(), SpherePoint::from_re_im(1.0, 0.0), &opts, &d, &pol()).unwrap();
        assert!(lp.lambda <= 0.55, "{:?}", lp);
    }

    #[test]
    fn uniformity_in_the_starting_point() {
        let f = linear_pair();
        let d = TestDictionary::standard();
        let dist = |n| {
            let a = backward_cloud(&f, SpherePoint::from_re_im(1.0, 0.0), n, 1 << 12, 1, &pol()).unwrap();
            let b = backward_cloud(&f, SpherePoint::from_re_im(2.0, 0.0), n, 1 << 12, 1, &pol()).unwrap();
            dual_lip_distance(&a, &b, &d).unwrap()
        };
        let series: Vec<f64> = (1..8).map(dist).collect();
        assert!(series.windows(2).all(|w| w[1] < 0.7 * w[0]), "{series:?}");
    }

    #[test]
    fn mixing_with_constants() {
        let f = corr(&[(0, 2, 1.0), (2, 0, -1.0), (0, 0, -1.0), (1, 1, 0.4)]);
        let mu = backward_cloud(&f, SpherePoint::from_re_im(0.3, 0.1), 6, 200, 3, &pol()).unwrap();
        let one = TestFunction::constant();
        let psi = TestFunction::harmonic(2, 1, false).unwrap();
        let s = mixing_correlation(&f, &mu, &one, &psi, &[1, 2, 3, 4], 64, 0, &pol()).unwrap();
        assert!(s.values.iter().all(|v| v.abs() < 1e-10));
        let s2 = mixing_correlation(&f, &mu, &psi, &one, &[0, 3], 4, 0, &pol()).unwrap();
        assert!(s2.values[0].abs() < 1e-12);
        assert!(s2.monte_carlo);
        let again = mixing_correlation(&f, &mu, &psi, &one, &[0, 3], 4, 0, &pol()).unwrap();
        assert_eq!(s2, again);
    }

    #[test]
    fn line_fit() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 - 0.5 * v).collect();
        let fit = linear_fit(&x, &y).unwrap();
        assert!((fit.slope + 0.5).abs() < 1e-14 && (fit.intercept - 2.0).abs() < 1e-14);
        assert!(fit.residual < 1e-14);
    }
}

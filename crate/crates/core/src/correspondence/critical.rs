use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::Correspondence;
use crate::algebra::{discriminant, sphere_roots, BiPoly, Var};
use crate::error::{Error, Result};
use crate::policy::NumericPolicy;
use crate::sphere::{Chart, SpherePoint};

/// Chordal radius used to recognise colliding fiber points at a candidate value.
const COLLISION_RADIUS: f64 = 1e-3;
/// Distinct critical values closer than this are merged.
const VALUE_MERGE: f64 = 1e-6;
/// Branch spread ratio between perturbations of size 1e-3 and 1e-5 above
/// which a collision counts as a crossing of unramified branches
/// (ratio 100 for crossings, 100^(1/m) for m-fold ramification).
const CROSSING_RATIO: f64 = 31.6;
/// Chart coordinates below this are snapped onto the pole.
const POLE_SNAP: f64 = 1e-13;
const PROBE_STEPS: [f64; 2] = [1e-3, 1e-5];
/// Largest number of distinct orbit points followed per level.
const ORBIT_POINT_CAP: usize = 4096;
/// Residual under which a returning branch path counts as algebraically closed.
const CERTIFY_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CriticalKind {
    /// Some branch of the projection is ramified over the value.
    Ramification,
    /// Only distinct unramified branches meet over the value.
    ComponentCrossing,
}

/// A point of the graph over a critical value where fiber points collide.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub point: SpherePoint,
    pub multiplicity: usize,
    pub kind: CriticalKind,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalValue {
    pub value: SpherePoint,
    pub kind: CriticalKind,
    pub witnesses: Vec<Witness>,
}

/// `b2`: values over which preimages collide (critical values of `f`);
/// `b1`: values over which images collide (critical values of the adjoint).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalData {
    pub b1: Vec<CriticalValue>,
    pub b2: Vec<CriticalValue>,
}

impl CriticalData {
    pub fn b1_includes_infinity(&self) -> bool {
        self.b1.iter().any(|c| c.value.is_infinity())
    }

    pub fn b2_includes_infinity(&self) -> bool {
        self.b2.iter().any(|c| c.value.is_infinity())
    }

    pub fn b2_ramified(&self) -> impl Iterator<Item = &CriticalValue> {
        self.b2.iter().filter(|c| c.kind == CriticalKind::Ramification)
    }
}

fn loose(policy: &NumericPolicy) -> NumericPolicy {
    NumericPolicy {
        tol_cluster: COLLISION_RADIUS,
        tol_root: COLLISION_RADIUS,
        ..*policy
    }
}

fn sharp(policy: &NumericPolicy) -> NumericPolicy {
    NumericPolicy {
        tol_cluster: 1e-14,
        tol_root: 1e-28,
        ..*policy
    }
}

/// Largest pairwise chordal distance among the `m` roots of the fiber over
/// `y` closest to `x0`.
fn branch_spread(q: &BiPoly, y: Complex64, x0: &SpherePoint, m: usize, policy: &NumericPolicy) -> Result<f64> {
    let mut pts: Vec<SpherePoint> = sphere_roots(&q.restrict(Var::Y, y), &sharp(policy))?
        .into_iter()
        .flat_map(|(p, k)| std::iter::repeat_n(p, k))
        .collect();
    pts.sort_by(|a, b| a.chordal(x0).total_cmp(&b.chordal(x0)));
    pts.truncate(m);
    let mut spread: f64 = 0.0;
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            spread = spread.max(pts[i].chordal(&pts[j]));
        }
    }
    Ok(spread)
}

fn classify(q: &BiPoly, y: Complex64, x0: &SpherePoint, m: usize, policy: &NumericPolicy) -> Result<CriticalKind> {
    let dir = Complex64::from_polar(1.0, 0.3);
    let wide = branch_spread(q, y + dir * PROBE_STEPS[0], x0, m, policy)?;
    let narrow = branch_spread(q, y + dir * PROBE_STEPS[1], x0, m, policy)?;
    if narrow == 0.0 || wide / narrow > CROSSING_RATIO {
        Ok(CriticalKind::ComponentCrossing)
    } else {
        Ok(CriticalKind::Ramification)
    }
}

fn reduced_poly(f: &Correspondence) -> BiPoly {
    match f.components() {
        Some(cs) if cs.iter().any(|c| c.multiplicity > 1) => cs
            .iter()
            .fold(BiPoly::from_real_terms(&[(0, 0, 1.0)]), |acc, c| acc.mul(&c.poly))
            .normalized(),
        _ => f.poly().clone(),
    }
}

/// Values `y` over which points of `{x : P(x, y) = 0}` collide.
fn preimage_collisions(f: &Correspondence, policy: &NumericPolicy) -> Result<Vec<CriticalValue>> {
    let p = reduced_poly(f);
    if p.deg_x() < 2 {
        return Ok(Vec::new());
    }
    // generic fibers of a reduced graph are simple
    let generic = [Complex64::new(0.6180339887, 0.2887), Complex64::new(-0.3141592653, -0.7193)];
    let mut repeated = 0;
    for y in generic {
        let pts = sphere_roots(&p.restrict(Var::Y, y), policy)?;
        if pts.iter().any(|(_, m)| *m > 1) {
            repeated += 1;
        }
    }
    if repeated == generic.len() {
        return Err(Error::NonReduced);
    }
    let mut out: Vec<CriticalValue> = Vec::new();
    for chart in [Chart::Zero, Chart::Infinity] {
        let q = p.in_charts(Chart::Zero, chart);
        let disc = discriminant(&q, Var::X)?;
        if disc.is_zero() {
            return Err(Error::NonReduced);
        }
        let cands = match disc.degree() {
            Some(0) | None => Vec::new(),
            _ => crate::algebra::roots(&disc, policy)?,
        };
        for cand in cands {
            let y = cand.value;
            let inside = match chart {
                Chart::Zero => y.norm() <= 1.0 + 1e-9,
                Chart::Infinity => y.norm() < 1.0,
            };
            if !inside {
                continue;
            }
            // values at a pole are kept exact
            let y = if y.norm() < POLE_SNAP { Complex64::new(0.0, 0.0) } else { y };
            let value = SpherePoint::in_chart(chart, y);
            if out.iter().any(|c| c.value.chordal(&value) < VALUE_MERGE) {
                continue;
            }
            let fiber = sphere_roots(&q.restrict(Var::Y, y), &loose(policy))?;
            let mut witnesses = Vec::new();
            for (x0, m) in fiber.into_iter().filter(|(_, m)| *m > 1) {
                let kind = classify(&q, y, &x0, m, policy)?;
                witnesses.push(Witness {
                    point: x0,
                    multiplicity: m,
                    kind,
                });
            }
            if witnesses.is_empty() {
                continue;
            }
            let kind = if witnesses.iter().any(|w| w.kind == CriticalKind::Ramification) {
                CriticalKind::Ramification
            } else {
                CriticalKind::ComponentCrossing
            };
            out.push(CriticalValue { value, kind, witnesses });
        }
    }
    out.sort_by(|a, b| {
        a.value
            .to_unit_vector()
            .partial_cmp(&b.value.to_unit_vector())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    Ok(out)
}

/// Critical values of `f` (B2) and of its adjoint (B1), each with witness
/// points of the graph and a ramification / crossing classification.
pub fn critical_values(f: &Correspondence, policy: &NumericPolicy) -> Result<CriticalData> {
    Ok(CriticalData {
        b2: preimage_collisions(f, policy)?,
        b1: preimage_collisions(&f.adjoint(), policy)?,
    })
}

/// `d^{#B2}` counting the ramified critical values of `f`, including `∞`.
pub fn delta_bound(f: &Correspondence, data: &CriticalData) -> u64 {
    (f.d2() as u64).pow(data.b2_ramified().count() as u32)
}

/// Forward orbit summary of one critical value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitEntry {
    pub value: SpherePoint,
    pub kind: CriticalKind,
    /// Number of forward steps actually explored.
    pub horizon: usize,
    pub periodic_detected: bool,
    /// The returning path closes with algebraic residuals below tolerance.
    pub certified: bool,
    pub returning_branch: Option<Vec<SpherePoint>>,
    pub min_return_distance: f64,
    /// The point cap stopped the search before the horizon.
    pub inconclusive: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum HypothesisStatus {
    /// No ramified critical value returns within the horizon.
    Holds,
    /// A ramified critical value is certified periodic.
    Violated,
    /// A near return or an inconclusive search.
    Unverified,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalOrbitReport {
    pub horizon: usize,
    pub tol_periodic: f64,
    pub entries: Vec<OrbitEntry>,
}

impl CriticalOrbitReport {
    /// Status of "no critical value of f is periodic", judged on ramified values.
    pub fn hypothesis(&self) -> HypothesisStatus {
        let ramified = || self.entries.iter().filter(|e| e.kind == CriticalKind::Ramification);
        if ramified().any(|e| e.periodic_detected && e.certified) {
            HypothesisStatus::Violated
        } else if ramified().any(|e| e.periodic_detected || e.inconclusive) {
            HypothesisStatus::Unverified
        } else {
            HypothesisStatus::Holds
        }
    }
}

fn orbit_entry(
    f: &Correspondence,
    cv: &CriticalValue,
    horizon: usize,
    policy: &NumericPolicy,
) -> Result<OrbitEntry> {
    let v = cv.value;
    // arena of (point, parent)
    let mut nodes: Vec<(SpherePoint, Option<usize>)> = vec![(v, None)];
    let mut level: Vec<usize> = vec![0];
    let mut entry = OrbitEntry {
        value: v,
        kind: cv.kind,
        horizon: 0,
        periodic_detected: false,
        certified: false,
        returning_branch: None,
        min_return_distance: f64::INFINITY,
        inconclusive: false,
    };
    for step in 1..=horizon {
        let mut next: Vec<usize> = Vec::new();
        for &i in &level {
            let x = nodes[i].0;
            for (y, _) in f.images(&x, policy)? {
                if next.iter().any(|&k| nodes[k].0.chordal(&y) < 1e-10) {
                    continue;
                }
                nodes.push((y, Some(i)));
                next.push(nodes.len() - 1);
            }
        }
        entry.horizon = step;
        for &k in &next {
            let d = nodes[k].0.chordal(&v);
            entry.min_return_distance = entry.min_return_distance.min(d);
            if d <= policy.tol_periodic && !entry.periodic_detected {
                let mut path = vec![nodes[k].0];
                let mut cur = nodes[k].1;
                while let Some(i) = cur {
                    path.push(nodes[i].0);
                    cur = nodes[i].1;
                }
                path.reverse();
                let n = path.len();
                let closes = (0..n - 1).all(|j| {
                    let target = if j + 1 == n - 1 { v } else { path[j + 1] };
                    f.residual(&path[j], &target) <= CERTIFY_TOL
                });
                entry.periodic_detected = true;
                entry.certified = closes;
                entry.returning_branch = Some(path);
            }
        }
        if entry.periodic_detected {
            break;
        }
        if next.len() > ORBIT_POINT_CAP {
            entry.inconclusive = true;
            break;
        }
        level = next;
    }
    Ok(entry)
}

/// Breadth-first forward orbits of every value in B2 up to `horizon` steps.
pub fn critical_orbit_report(
    f: &Correspondence,
    data: &CriticalData,
    horizon: usize,
    policy: &NumericPolicy,
) -> Result<CriticalOrbitReport> {
    let entries = data
        .b2
        .iter()
        .map(|cv| orbit_entry(f, cv, horizon, policy))
        .collect::<Result<Vec<_>>>()?;
    Ok(CriticalOrbitReport {
        horizon,
        tol_periodic: policy.tol_periodic,
        entries,
    })
}

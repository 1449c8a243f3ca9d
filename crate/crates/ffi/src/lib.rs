//! C ABI over `corrdyn`.
//!
//! Objects are opaque handles created by `*_new`-style calls and released
//! with the matching `*_free`. Every fallible call returns a [`CdStatus`];
//! on failure the message is available from [`corrdyn_last_error`] until the
//! next call on the same thread. All calls use the default numeric policy.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use corrdyn::algebra::BiPoly;
use corrdyn::correspondence::{self, Correspondence};
use corrdyn::dynamics::{self, Direction};
use corrdyn::measures::{dual_lip_distance, PointCloudMeasure, TestDictionary};
use corrdyn::periodic::{self, PeriodicClass, PeriodicSet};
use corrdyn::{Chart, Error, NumericPolicy, SpherePoint};
use num_complex::Complex64;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CdStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidInput = 2,
    NumericFailure = 3,
    IndexOutOfRange = 4,
    Panic = 5,
}

/// A correspondence on the Riemann sphere.
pub struct CdCorrespondence(Correspondence);

/// A weighted point cloud.
pub struct CdCloud(PointCloudMeasure);

/// Periodic points of one period.
pub struct CdPeriodicSet(PeriodicSet);

/// A point on the sphere in one of two charts: `chart` 0 uses `z`, chart 1
/// uses `w = 1/z`.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CdPoint {
    pub chart: u8,
    pub re: f64,
    pub im: f64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CdPeriodicPoint {
    pub point: CdPoint,
    pub period: usize,
    /// 0 when the germ is vertical and the multiplier infinite.
    pub has_multiplier: u8,
    pub multiplier_re: f64,
    pub multiplier_im: f64,
    pub multiplicity: usize,
    /// 0 repelling, 1 attracting, 2 neutral.
    pub kind: u8,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> CdStatus {
    match e {
        Error::InvalidInput(_)
        | Error::ZeroPolynomial
        | Error::ConstantPolynomial
        | Error::FiberComponent(_)
        | Error::ZeroFiber
        | Error::EmptyDictionary => CdStatus::InvalidInput,
        _ => CdStatus::NumericFailure,
    }
}

/// Runs `body`, converting errors and panics into status codes.
fn guard(body: impl FnOnce() -> Result<(), CdStatus>) -> CdStatus {
    set_error(String::new());
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => CdStatus::Ok,
        Ok(Err(s)) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            CdStatus::Panic
        }
    }
}

fn lib<T>(r: corrdyn::Result<T>) -> Result<T, CdStatus> {
    r.map_err(|e| {
        set_error(e.to_string());
        status_of(&e)
    })
}

fn non_null<'a, T>(p: *const T, name: &str) -> Result<&'a T, CdStatus> {
    // SAFETY: the caller passes either null or a pointer obtained from this library.
    unsafe { p.as_ref() }.ok_or_else(|| {
        set_error(format!("{name} is null"));
        CdStatus::NullArgument
    })
}

fn out_ptr<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, CdStatus> {
    // SAFETY: as above, for caller-owned output slots.
    unsafe { p.as_mut() }.ok_or_else(|| {
        set_error(format!("{name} is null"));
        CdStatus::NullArgument
    })
}

fn invalid(msg: &str) -> CdStatus {
    set_error(msg.into());
    CdStatus::InvalidInput
}

fn to_point(p: CdPoint) -> Result<SpherePoint, CdStatus> {
    let chart = Chart::from_id(p.chart).ok_or_else(|| invalid("chart must be 0 or 1"))?;
    if !(p.re.is_finite() && p.im.is_finite()) {
        return Err(invalid("point coordinates must be finite"));
    }
    Ok(SpherePoint::in_chart(chart, Complex64::new(p.re, p.im)))
}

fn from_point(p: &SpherePoint) -> CdPoint {
    CdPoint { chart: p.chart.id(), re: p.coord.re, im: p.coord.im }
}

/// Message of the last failed call on this thread, or an empty string.
/// The pointer stays valid until the next call into the library.
#[no_mangle]
pub extern "C" fn corrdyn_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn corrdyn_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds the correspondence `P(x, y) = Σ c_ij x^i y^j = 0` from
/// `(deg_x + 1)(deg_y + 1)` coefficients, row-major by x-power.
///
/// # Safety
/// `re` and `im` must each point to that many doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn corrdyn_correspondence_new(
    deg_x: usize,
    deg_y: usize,
    re: *const f64,
    im: *const f64,
    out: *mut *mut CdCorrespondence,
) -> CdStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        non_null(re, "re")?;
        non_null(im, "im")?;
        let len = (deg_x + 1).checked_mul(deg_y + 1).ok_or_else(|| invalid("bidegree too large"))?;
        let (re, im) = (std::slice::from_raw_parts(re, len), std::slice::from_raw_parts(im, len));
        let coeffs = re.iter().zip(im).map(|(a, b)| Complex64::new(*a, *b)).collect();
        let policy = NumericPolicy::default();
        let f = lib(BiPoly::new(deg_x, deg_y, coeffs).and_then(|p| Correspondence::from_bipoly(&p, &policy)))?;
        *out = Box::into_raw(Box::new(CdCorrespondence(f)));
        Ok(())
    })
}

/// # Safety
/// `f` must be null or a handle from this library, freed at most once.
#[no_mangle]
pub unsafe extern "C" fn corrdyn_correspondence_free(f: *mut CdCorrespondence) {
    if !f.is_null() {
        drop(Box::from_raw(f));
    }
}

/// `d1 = deg_y` and `d2 = deg_x` of the graph.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn corrdyn_correspondence_degrees(f: *const CdCorrespondence, d1: *mut usize, d2: *mut usize) -> CdStatus {
    guard(|| {
        let f = &non_null(f, "f")?.0;
        *out_ptr(d1, "d1")? = f.d1();
        *out_ptr(d2, "d2")? = f.d2();
        Ok(())
    })
}

/// `f ∘ g`: first `g`, then `f`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn corrdyn_correspondence_compose(
    f: *const CdCorrespondence,
    g: *const CdCorrespondence,
    out: *mut *mut CdCorrespondence,
) -> CdStatus {
    guard(|| {
        let (f, g) = (&non_null(f, "f")?.0, &non_null(g, "g")?.0);
        let out = out_ptr(out, "out")?;
        let h = lib(correspondence::compose(f, g, &NumericPolicy::default()))?;
        *out = Box::into_raw(Box::new(CdCorrespondence(h)));
        Ok(())
    })
}

/// The `n`-th iterate, `n ≥ 1`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn corrdyn_correspondence_iterate(
    f: *const CdCorrespondence,
    n: usize,
    out: *mut *mut CdCorrespondence,
) -> CdStatus {
    guard(|| {
        let f = &non_null(f, "f")?.0;
        let out = out_ptr(out, "out")?;
        let h = lib(correspondence::iterate(f, n, &NumericPolicy::default()))?;
        *out = Box::into_raw(Box::new(CdCorrespondence(h)));
        Ok(())
    })
}

/// Cloud approximating `d⁻ⁿ (fⁿ)* δ_a` (`forward = 0`) or
/// `d⁻ⁿ (fⁿ)_* δ_a` (`forward ≠ 0`) with at most about `max_atoms` atoms.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn corrdyn_cloud_new(
    f: *const CdCorrespondence,
    a: CdPoint,
    n: usize,
    max_atoms: usize,
    seed: u64,
    forward: u8,
    out: *mut *mut CdCloud,
) -> CdStatus {
    guard(|| {
        let f = &non_null(f, "f")?.0;
        let out = out_ptr(out, "out")?;
        let a = to_point(a)?;
        let policy = NumericPolicy::default();
        let mu = if forward == 0 {
            dynamics::backward_cloud(f, a, n, max_atoms, seed, &policy)
        } else {
            dynamics::forward_cloud(f, a, n, max_atoms, seed, &policy)
        };
        *out = Box::into_raw(Box::new(CdCloud(lib(mu)?)));
        Ok(())
    })
}

/// # Safety
/// `c` must be null or a handle from this library, freed at most once.
#[no_mangle]
pub unsafe extern "C" fn corrdyn_cloud_free(c: *mut CdCloud) {
    if !c.is_null() {
        drop(Box::from_raw(c));
    }
}

/// Number of atoms; 0 for a null handle.
///
/// # Safety
/// `c` must be null or valid.
#[no_mangle]
pub unsafe extern "C" fn corrdyn_cloud_len(c: *const CdCloud) -> usize {
    c.as_ref().map_or(0, |c| c.0.len())
}

/// Atom `i`: its point and weight.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn corrdyn_cloud_atom(c: *const CdCloud, i: usize, point: *mut CdPoint, weight: *mut f64) -> CdStatus {
    guard(|| {
        let c = &non_null(c, "cloud")?.0;
        let atom = c.atoms.get(i).ok_or_else(|| {
            set_error(format!("atom {i} of {}", c.len()));
            CdStatus::IndexOutOfRange
        })?;
        *out_ptr(point, "point")? = from_point(&atom.point);
        *out_ptr(weight, "weight")? = atom.weight;
        Ok(())
    })
}

/// Mass within chordal distance `r` of `p`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn corrdyn_cloud_mass_near(c: *const CdCloud, p: CdPoint, r: f64, out: *mut f64) -> CdStatus {
    guard(|| {
        let c = &non_null(c, "cloud")?.0;
        *out_ptr(out, "out")? = c.mass_near(&to_point(p)?, r);
        Ok(())
    })
}

/// Dual-Lipschitz distance between two clouds on the degree-8 harmonic dictionary.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn corrdyn_cloud_distance(a: *const CdCloud, b: *const CdCloud, out: *mut f64) -> CdStatus {
    guard(|| {
        let (a, b) = (&non_null(a, "a")?.0, &non_null(b, "b")?.0);
        let out = out_ptr(out, "out")?;
        *out = lib(dual_lip_distance(a, b, &TestDictionary::standard()))?;
        Ok(())
    })
}

/// Estimated norm of `d⁻¹f*` (`pushforward = 0`) or `d⁻¹f_*` on L²
/// one-forms; `suspected` is set when it is within 0.02 of one.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn corrdyn_operator_norm(
    f: *const CdCorrespondence,
    pushforward: u8,
    iters: usize,
    resolution: usize,
    seed: u64,
    norm: *mut f64,
    suspected: *mut u8,
) -> CdStatus {
    guard(|| {
        let f = &non_null(f, "f")?.0;
        let (norm, suspected) = (out_ptr(norm, "norm")?, out_ptr(suspected, "suspected")?);
        let dir = if pushforward == 0 { Direction::Pullback } else { Direction::Pushforward };
        let e = lib(dynamics::operator_norm_estimate(f, dir, iters, resolution, seed, &NumericPolicy::default()))?;
        *norm = e.norm_estimate;
        *suspected = u8::from(e.weak_modularity_suspected);
        Ok(())
    })
}

/// Periodic points of period `n`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn corrdyn_periodic_points(f: *const CdCorrespondence, n: usize, out: *mut *mut CdPeriodicSet) -> CdStatus {
    guard(|| {
        let f = &non_null(f, "f")?.0;
        let out = out_ptr(out, "out")?;
        let set = lib(periodic::periodic_points(f, n, &NumericPolicy::default()))?;
        *out = Box::into_raw(Box::new(CdPeriodicSet(set)));
        Ok(())
    })
}

/// # Safety
/// `s` must be null or a handle from this library, freed at most once.
#[no_mangle]
pub unsafe extern "C" fn corrdyn_periodic_free(s: *mut CdPeriodicSet) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Number of rows (germs); 0 for a null handle.
///
/// # Safety
/// `s` must be null or valid.
#[no_mangle]
pub unsafe extern "C" fn corrdyn_periodic_len(s: *const CdPeriodicSet) -> usize {
    s.as_ref().map_or(0, |s| s.0.points.len())
}

/// Sum of multiplicities and number of diagonal factors removed.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn corrdyn_periodic_count(s: *const CdPeriodicSet, count: *mut usize, diagonal_factors: *mut usize) -> CdStatus {
    guard(|| {
        let s = &non_null(s, "set")?.0;
        *out_ptr(count, "count")? = s.count;
        *out_ptr(diagonal_factors, "diagonal_factors")? = s.diagonal_factors;
        Ok(())
    })
}

/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn corrdyn_periodic_get(s: *const CdPeriodicSet, i: usize, out: *mut CdPeriodicPoint) -> CdStatus {
    guard(|| {
        let s = &non_null(s, "set")?.0;
        let p = s.points.get(i).ok_or_else(|| {
            set_error(format!("row {i} of {}", s.points.len()));
            CdStatus::IndexOutOfRange
        })?;
        let m = p.multiplier.unwrap_or_default();
        *out_ptr(out, "out")? = CdPeriodicPoint {
            point: from_point(&p.point),
            period: p.period,
            has_multiplier: u8::from(p.multiplier.is_some()),
            multiplier_re: m.re,
            multiplier_im: m.im,
            multiplicity: p.multiplicity,
            kind: match p.class {
                PeriodicClass::Repelling => 0,
                PeriodicClass::Attracting => 1,
                PeriodicClass::Neutral => 2,
            },
        };
        Ok(())
    })
}

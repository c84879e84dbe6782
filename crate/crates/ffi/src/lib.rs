//! C ABI over the `formbound` library.
//!
//! Objects are opaque handles created by `fb_*_new`/`fb_*_load` style
//! functions and released with the matching `fb_*_free`. Every fallible
//! call returns an [`FbStatus`]; on failure a message is available from
//! [`fb_last_error`] until the next failing call on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use formbound::capacity::{self, CapacityFlavor, CompactSet};
use formbound::fbf::{self, Dtype};
use formbound::form_norm;
use formbound::hodge::Flavor;
use formbound::measure::{self, DiscreteMeasure};
use formbound::report;
use formbound::verdict::{self, Overall, Thresholds, Verdict};
use formbound::{presets, Error, Field, Grid, MatrixField, ScalarField, VectorField};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FbStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    GridMismatch = 3,
    RankMismatch = 4,
    NotConverged = 5,
    UnknownPreset = 6,
    Io = 7,
    Format = 8,
    Panic = 9,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FbFlavor {
    Homogeneous = 0,
    Inhomogeneous = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FbPipeline {
    Homogeneous = 0,
    Inhomogeneous = 1,
    Magnetic = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FbOverall {
    CertifiedBounded = 0,
    CertifiedUnboundedN2 = 1,
    Inconclusive = 2,
}

/// Periodic grid handle.
pub struct FbGrid(Grid);

/// Field handle of any rank.
pub struct FbField(Field);

/// Verdict handle with its serialized report.
pub struct FbReport {
    verdict: Verdict,
    json: CString,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> FbStatus {
    match e {
        Error::InvalidGrid(_) | Error::InvalidParameter(_) | Error::Empty(_) | Error::NonzeroMean(_) | Error::NonFinite(_) => {
            FbStatus::InvalidArgument
        }
        Error::GridMismatch => FbStatus::GridMismatch,
        Error::RankMismatch { .. } => FbStatus::RankMismatch,
        Error::NotConverged { .. } => FbStatus::NotConverged,
        Error::UnknownPreset(_) => FbStatus::UnknownPreset,
        Error::Format(_) => FbStatus::Format,
        Error::Io(_) => FbStatus::Io,
    }
}

enum Failure {
    Lib(Error),
    Null(&'static str),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

type Outcome<T> = std::result::Result<T, Failure>;

fn guard(f: impl FnOnce() -> Outcome<()>) -> FbStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => FbStatus::Ok,
        Ok(Err(Failure::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Ok(Err(Failure::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            FbStatus::NullPointer
        }
        Err(_) => {
            set_error("internal panic".into());
            FbStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &'static str) -> Outcome<&'a T> {
    p.as_ref().ok_or(Failure::Null(what))
}

unsafe fn out<T>(p: *mut *mut T, what: &'static str, value: T) -> Outcome<()> {
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    *p = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn write<T>(p: *mut T, what: &'static str, value: T) -> Outcome<()> {
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    *p = value;
    Ok(())
}

unsafe fn string<'a>(p: *const c_char, what: &'static str) -> Outcome<&'a str> {
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Error::InvalidParameter(format!("{what} is not UTF-8")).into())
}

unsafe fn samples<'a>(p: *const f64, len: usize, what: &'static str) -> Outcome<&'a [f64]> {
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

fn flavor(f: FbFlavor) -> Flavor {
    match f {
        FbFlavor::Homogeneous => Flavor::Homogeneous,
        FbFlavor::Inhomogeneous => Flavor::Inhomogeneous,
    }
}

fn scalar(f: &FbField) -> Outcome<&ScalarField> {
    match &f.0 {
        Field::Scalar(s) => Ok(s),
        other => Err(Error::RankMismatch { expected: "scalar", found: other.rank_name() }.into()),
    }
}

fn vector(f: &FbField) -> Outcome<&VectorField> {
    match &f.0 {
        Field::Vector(v) => Ok(v),
        other => Err(Error::RankMismatch { expected: "vector", found: other.rank_name() }.into()),
    }
}

fn matrix(f: &FbField) -> Outcome<&MatrixField> {
    match &f.0 {
        Field::Matrix(m) => Ok(m),
        other => Err(Error::RankMismatch { expected: "matrix", found: other.rank_name() }.into()),
    }
}

/// Message of the last failure on this thread, or null. Owned by the library.
#[no_mangle]
pub extern "C" fn fb_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// # Safety
/// `out_grid` must be a valid pointer to writable storage.
#[no_mangle]
pub unsafe extern "C" fn fb_grid_new(dim: usize, points_per_axis: usize, period: f64, out_grid: *mut *mut FbGrid) -> FbStatus {
    guard(|| out(out_grid, "out_grid", FbGrid(Grid::new(dim, points_per_axis, period)?)))
}

/// # Safety
/// `grid` must come from `fb_grid_new` and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn fb_grid_free(grid: *mut FbGrid) {
    if !grid.is_null() {
        drop(Box::from_raw(grid));
    }
}

/// Number of samples of the grid, 0 for null.
///
/// # Safety
/// `grid` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fb_grid_len(grid: *const FbGrid) -> usize {
    grid.as_ref().map_or(0, |g| g.0.len())
}

/// Real field from `components * len(grid)` samples, component-major.
/// `components` is 1 (scalar), `dim` (vector) or `dim * dim` (matrix).
///
/// # Safety
/// `values` must point to `count` readable doubles.
#[no_mangle]
pub unsafe extern "C" fn fb_field_from_real(
    grid: *const FbGrid,
    components: usize,
    values: *const f64,
    count: usize,
    out_field: *mut *mut FbField,
) -> FbStatus {
    guard(|| {
        let g = deref(grid, "grid")?.0;
        let vals = samples(values, count, "values")?;
        let d = g.dim();
        if components == 0 || count != components * g.len() {
            return Err(Error::InvalidParameter(format!("expected {} samples per component", g.len())).into());
        }
        let comps = vals
            .chunks(g.len())
            .map(|c| ScalarField::from_real(g, c.to_vec()))
            .collect::<formbound::Result<Vec<_>>>()?;
        let field = match components {
            1 => Field::Scalar(comps.into_iter().next().expect("one component")),
            c if c == d => Field::Vector(VectorField::new(comps)?),
            c if c == d * d => Field::Matrix(MatrixField::new(comps, false)?),
            c => return Err(Error::InvalidParameter(format!("{c} components invalid for dim {d}")).into()),
        };
        out(out_field, "out_field", FbField(field))
    })
}

/// Load an FBF1 file.
///
/// # Safety
/// `path` must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn fb_field_load(path: *const c_char, period: f64, out_field: *mut *mut FbField) -> FbStatus {
    guard(|| out(out_field, "out_field", FbField(fbf::load(string(path, "path")?, period)?)))
}

/// Save a field as FBF1; `complex` selects complex samples.
///
/// # Safety
/// `field` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn fb_field_save(field: *const FbField, path: *const c_char, complex: bool) -> FbStatus {
    guard(|| {
        let f = deref(field, "field")?;
        fbf::save(string(path, "path")?, &f.0, if complex { Dtype::Complex } else { Dtype::Real })?;
        Ok(())
    })
}

/// Drift `b` of a named coefficient preset.
///
/// # Safety
/// `grid` must be a live handle and `name` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn fb_preset_drift(grid: *const FbGrid, name: *const c_char, seed: u64, out_field: *mut *mut FbField) -> FbStatus {
    guard(|| {
        let c = presets::coefficients(string(name, "name")?, deref(grid, "grid")?.0, seed)?;
        out(out_field, "out_field", FbField(Field::Vector(c.b)))
    })
}

/// Potential `q` of a named coefficient preset.
///
/// # Safety
/// As [`fb_preset_drift`].
#[no_mangle]
pub unsafe extern "C" fn fb_preset_potential(grid: *const FbGrid, name: *const c_char, seed: u64, out_field: *mut *mut FbField) -> FbStatus {
    guard(|| {
        let c = presets::coefficients(string(name, "name")?, deref(grid, "grid")?.0, seed)?;
        out(out_field, "out_field", FbField(Field::Scalar(c.q)))
    })
}

/// Cell density of a named measure preset.
///
/// # Safety
/// As [`fb_preset_drift`].
#[no_mangle]
pub unsafe extern "C" fn fb_preset_measure(grid: *const FbGrid, name: *const c_char, out_field: *mut *mut FbField) -> FbStatus {
    guard(|| {
        let mu = presets::measure(string(name, "name")?, deref(grid, "grid")?.0)?;
        out(out_field, "out_field", FbField(Field::Scalar(mu.density())))
    })
}

/// # Safety
/// `field` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fb_field_free(field: *mut FbField) {
    if !field.is_null() {
        drop(Box::from_raw(field));
    }
}

/// Number of scalar components (1, dim or dim^2), 0 for null.
///
/// # Safety
/// `field` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fb_field_components(field: *const FbField) -> usize {
    field.as_ref().map_or(0, |f| f.0.scalar_components().len())
}

/// Copy the real parts of one component into `buffer` of `count` doubles.
///
/// # Safety
/// `buffer` must point to `count` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn fb_field_copy_real(field: *const FbField, component: usize, buffer: *mut f64, count: usize) -> FbStatus {
    guard(|| {
        let f = deref(field, "field")?;
        let comps = f.0.scalar_components();
        let c = comps
            .get(component)
            .ok_or_else(|| Error::InvalidParameter(format!("component {component} out of range")))?;
        if buffer.is_null() {
            return Err(Failure::Null("buffer"));
        }
        if count != c.values().len() {
            return Err(Error::InvalidParameter(format!("buffer holds {count}, field has {}", c.values().len())).into());
        }
        let dst = std::slice::from_raw_parts_mut(buffer, count);
        for (d, v) in dst.iter_mut().zip(c.values()) {
            *d = v.re;
        }
        Ok(())
    })
}

fn measure_of(density: &FbField) -> Outcome<DiscreteMeasure> {
    Ok(DiscreteMeasure::from_density(scalar(density)?)?)
}

/// Dyadic Carleson constant of the measure with the given cell density.
///
/// # Safety
/// `density` must be a live scalar handle, `out_value` writable.
#[no_mangle]
pub unsafe extern "C" fn fb_carleson_constant(density: *const FbField, out_value: *mut f64) -> FbStatus {
    guard(|| write(out_value, "out_value", measure::carleson_test(&measure_of(deref(density, "density")?)?).constant))
}

/// Trace constant of the measure with the given cell density.
///
/// # Safety
/// As [`fb_carleson_constant`].
#[no_mangle]
pub unsafe extern "C" fn fb_trace_constant(density: *const FbField, fl: FbFlavor, out_value: *mut f64) -> FbStatus {
    guard(|| {
        let mu = measure_of(deref(density, "density")?)?;
        write(out_value, "out_value", form_norm::trace_constant(&mu, flavor(fl))?.value)
    })
}

struct Coefficients {
    a: MatrixField,
    b: VectorField,
    q: ScalarField,
}

/// Null coefficient handles stand for zero fields on the grid of the others.
unsafe fn coefficients(a: *const FbField, b: *const FbField, q: *const FbField) -> Outcome<Coefficients> {
    let (a, b, q) = (a.as_ref(), b.as_ref(), q.as_ref());
    let grid = [a, b, q]
        .into_iter()
        .flatten()
        .map(|f| *f.0.grid())
        .next()
        .ok_or(Failure::Null("all coefficients"))?;
    let c = Coefficients {
        a: a.map(matrix).transpose()?.cloned().unwrap_or_else(|| MatrixField::zeros(grid)),
        b: b.map(vector).transpose()?.cloned().unwrap_or_else(|| VectorField::zeros(grid)),
        q: q.map(scalar).transpose()?.cloned().unwrap_or_else(|| ScalarField::zeros(grid)),
    };
    if c.a.grid() != &grid || c.b.grid() != &grid || c.q.grid() != &grid {
        return Err(Error::GridMismatch.into());
    }
    Ok(c)
}

/// Form norm of `div(A grad) + b . grad + q`; any coefficient may be null.
///
/// # Safety
/// Non-null handles must be live; `out_value` writable.
#[no_mangle]
pub unsafe extern "C" fn fb_form_norm(
    a: *const FbField,
    b: *const FbField,
    q: *const FbField,
    fl: FbFlavor,
    out_value: *mut f64,
) -> FbStatus {
    guard(|| {
        let c = coefficients(a, b, q)?;
        write(out_value, "out_value", form_norm::form_norm(&c.a, &c.b, &c.q, flavor(fl))?.value)
    })
}

/// Capacity of the ball `|x - center| <= radius` (center has `dim` entries).
///
/// # Safety
/// `center` must point to `dim` doubles, `out_value` writable.
#[no_mangle]
pub unsafe extern "C" fn fb_capacity_ball(
    grid: *const FbGrid,
    center: *const f64,
    radius: f64,
    fl: FbFlavor,
    out_value: *mut f64,
) -> FbStatus {
    guard(|| {
        let g = deref(grid, "grid")?.0;
        let c = samples(center, g.dim(), "center")?;
        let mut x = [0.0; 3];
        x[..c.len()].copy_from_slice(c);
        let e = CompactSet::ball(g, x, radius);
        let f = match fl {
            FbFlavor::Homogeneous => CapacityFlavor::Homogeneous,
            FbFlavor::Inhomogeneous => CapacityFlavor::Inhomogeneous,
        };
        write(out_value, "out_value", capacity::capacity(&e, f)?.value)
    })
}

/// Run a certification pipeline with default thresholds. For the magnetic
/// pipeline `b` is the vector potential and `a` must be null.
///
/// # Safety
/// Non-null handles must be live; `out_report` writable.
#[no_mangle]
pub unsafe extern "C" fn fb_verdict(
    pipeline: FbPipeline,
    a: *const FbField,
    b: *const FbField,
    q: *const FbField,
    out_report: *mut *mut FbReport,
) -> FbStatus {
    guard(|| {
        let c = coefficients(a, b, q)?;
        let t = Thresholds::default();
        let v = match pipeline {
            FbPipeline::Homogeneous => verdict::assess_homogeneous(&c.a, &c.b, &c.q, &t)?,
            FbPipeline::Inhomogeneous => verdict::assess_inhomogeneous(&c.a, &c.b, &c.q, &t)?,
            FbPipeline::Magnetic => {
                if !a.is_null() {
                    return Err(Error::InvalidParameter("magnetic pipeline takes no principal part".into()).into());
                }
                verdict::assess_magnetic(&c.b, &c.q, &t)?
            }
        };
        let text = report::to_json(&report::Report::new((), &v))?;
        let json = CString::new(text).map_err(|e| Error::Format(e.to_string()))?;
        out(out_report, "out_report", FbReport { verdict: v, json })
    })
}

/// Overall outcome of a verdict; `Inconclusive` for null.
///
/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fb_report_overall(report: *const FbReport) -> FbOverall {
    match report.as_ref().map(|r| r.verdict.overall) {
        Some(Overall::CertifiedBounded) => FbOverall::CertifiedBounded,
        Some(Overall::CertifiedUnboundedN2) => FbOverall::CertifiedUnboundedN2,
        _ => FbOverall::Inconclusive,
    }
}

/// Direct form constant recorded in the verdict, NaN when absent.
///
/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fb_report_form_constant(report: *const FbReport) -> f64 {
    report.as_ref().and_then(|r| r.verdict.form_constant).unwrap_or(f64::NAN)
}

/// JSON report text, valid until the report is freed.
///
/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fb_report_json(report: *const FbReport) -> *const c_char {
    report.as_ref().map_or(ptr::null(), |r| r.json.as_ptr())
}

/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fb_report_free(report: *mut FbReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn status_mapping_covers_errors() {
        assert_eq!(status_of(&Error::GridMismatch), FbStatus::GridMismatch);
        assert_eq!(status_of(&Error::UnknownPreset("x".into())), FbStatus::UnknownPreset);
        assert_eq!(guard(|| panic!("boom")), FbStatus::Panic);
        let msg = unsafe { CStr::from_ptr(fb_last_error()) };
        assert_eq!(msg.to_str().unwrap(), "internal panic");
    }
}

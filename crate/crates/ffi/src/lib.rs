//! C ABI over `hardy_flow`.
//!
//! Fields cross the boundary as opaque [`HfField`] handles. Every fallible
//! call returns an [`HfStatus`]; on failure [`hf_last_error_message`] holds a
//! description until the next failing call on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use hardy_flow::flow::{run_from, FlowState, Solver, SolverConfig};
use hardy_flow::logineq::verify_main_inequality;
use hardy_flow::norms::NormReport;
use hardy_flow::osgood::{integrate_majorant, rate_exponent, OsgoodProblem};
use hardy_flow::{Axis, Error, GridSpec, ScalarField};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidGrid = 2,
    NonFinite = 3,
    GridMismatch = 4,
    InvalidArgument = 5,
    Degenerate = 6,
    BlowUp = 7,
    Io = 8,
    Panic = 9,
}

impl From<&Error> for HfStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::InvalidGrid(_) => HfStatus::InvalidGrid,
            Error::NonFinite { .. } => HfStatus::NonFinite,
            Error::GridMismatch { .. } => HfStatus::GridMismatch,
            Error::InvalidArgument(_) => HfStatus::InvalidArgument,
            Error::Degenerate(_) => HfStatus::Degenerate,
            Error::BlowUp { .. } => HfStatus::BlowUp,
            Error::Parse(_) | Error::Io(_) | Error::Csv(_) => HfStatus::Io,
        }
    }
}

/// Opaque scalar field on an `n × n` periodic grid, row-major.
pub struct HfField(ScalarField);

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct HfNorms {
    pub l1: f64,
    pub l2: f64,
    pub linf: f64,
    pub lp_sigma: f64,
    pub bmo: f64,
    pub hardy: f64,
    pub llogl: f64,
}

/// Both sides of the BMO–L1 inequality. `ratio` is NaN when the right side vanishes.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct HfIneqTrial {
    pub lhs: f64,
    pub bmo_f: f64,
    pub l1_g: f64,
    pub linf_g: f64,
    pub bracket: f64,
    pub ratio: f64,
}

/// Majorant endpoint. `blow_up_time` is NaN when the solution stayed finite.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct HfMajorant {
    pub final_value: f64,
    pub blow_up_time: f64,
    pub steps: usize,
    pub converged: bool,
}

/// Summary of a flow run. `blow_up_time` is NaN for a completed run.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct HfFlowSummary {
    pub steps: usize,
    pub dt: f64,
    pub samples: usize,
    pub final_time: f64,
    pub final_energy: f64,
    pub final_enstrophy: f64,
    pub blow_up_time: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn guard(body: impl FnOnce() -> Result<(), HfStatus>) -> HfStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => HfStatus::Ok,
        Ok(Err(status)) => status,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_last_error(msg);
            HfStatus::Panic
        }
    }
}

fn fail(e: Error) -> HfStatus {
    let status = HfStatus::from(&e);
    set_last_error(e.to_string());
    status
}

fn null(what: &str) -> HfStatus {
    set_last_error(format!("{what} is null"));
    HfStatus::NullPointer
}

unsafe fn field_ref<'a>(h: *const HfField, what: &str) -> Result<&'a ScalarField, HfStatus> {
    // SAFETY: caller passes null or a live handle from `hf_field_new`.
    unsafe { h.as_ref() }.map(|f| &f.0).ok_or_else(|| null(what))
}

unsafe fn out_mut<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, HfStatus> {
    // SAFETY: caller passes null or a valid writable pointer.
    unsafe { p.as_mut() }.ok_or_else(|| null(what))
}

fn boxed(f: ScalarField) -> *mut HfField {
    Box::into_raw(Box::new(HfField(f)))
}

/// Message for the last failure on this thread, or null. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn hf_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Copies `n * n` row-major samples into a new field.
///
/// # Safety
/// `values` must point to `len` readable doubles and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hf_field_new(n: usize, values: *const f64, len: usize, out: *mut *mut HfField) -> HfStatus {
    guard(|| {
        let out = unsafe { out_mut(out, "out") }?;
        *out = ptr::null_mut();
        if values.is_null() {
            return Err(null("values"));
        }
        let grid = GridSpec::new(n).map_err(fail)?;
        if len != grid.len() {
            return Err(fail(Error::InvalidArgument(format!("expected {} values, got {len}", grid.len()))));
        }
        // SAFETY: checked non-null; caller guarantees `len` readable elements.
        let data = unsafe { std::slice::from_raw_parts(values, len) }.to_vec();
        *out = boxed(ScalarField::new(grid, data).map_err(fail)?);
        Ok(())
    })
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `field` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hf_field_free(field: *mut HfField) {
    if !field.is_null() {
        // SAFETY: handle originated from `Box::into_raw` in this crate.
        drop(unsafe { Box::from_raw(field) });
    }
}

/// Points per axis of the field, or 0 for null.
///
/// # Safety
/// `field` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn hf_field_points_per_axis(field: *const HfField) -> usize {
    // SAFETY: see above.
    unsafe { field.as_ref() }.map_or(0, |f| f.0.grid().points_per_axis())
}

/// Copies the samples into `out`, which must hold exactly `n * n` doubles.
///
/// # Safety
/// `field` must be a live handle and `out` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn hf_field_values(field: *const HfField, out: *mut f64, len: usize) -> HfStatus {
    guard(|| {
        let f = unsafe { field_ref(field, "field") }?;
        if out.is_null() {
            return Err(null("out"));
        }
        if len != f.values().len() {
            return Err(fail(Error::InvalidArgument(format!("buffer holds {len}, field has {}", f.values().len()))));
        }
        // SAFETY: checked non-null and length.
        unsafe { std::slice::from_raw_parts_mut(out, len) }.copy_from_slice(f.values());
        Ok(())
    })
}

/// # Safety
/// `field` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn hf_norms(field: *const HfField, sigma: f64, out: *mut HfNorms) -> HfStatus {
    guard(|| {
        let f = unsafe { field_ref(field, "field") }?;
        let out = unsafe { out_mut(out, "out") }?;
        let r = NormReport::compute(f, sigma).map_err(fail)?;
        *out = HfNorms {
            l1: r.l1,
            l2: r.l2,
            linf: r.linf,
            lp_sigma: r.lp_sigma,
            bmo: r.bmo,
            hardy: r.hardy,
            llogl: r.llogl,
        };
        Ok(())
    })
}

/// Riesz transform along `axis` (0 or 1) as a new handle.
///
/// # Safety
/// `field` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn hf_riesz_transform(field: *const HfField, axis: u32, out: *mut *mut HfField) -> HfStatus {
    guard(|| {
        let f = unsafe { field_ref(field, "field") }?;
        let out = unsafe { out_mut(out, "out") }?;
        *out = ptr::null_mut();
        let axis = match axis {
            0 => Axis::X1,
            1 => Axis::X2,
            other => return Err(fail(Error::InvalidArgument(format!("axis must be 0 or 1, got {other}")))),
        };
        *out = boxed(f.riesz_transform(axis));
        Ok(())
    })
}

/// # Safety
/// `f` and `g` must be live handles and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn hf_ineq_trial(f: *const HfField, g: *const HfField, out: *mut HfIneqTrial) -> HfStatus {
    guard(|| {
        let f = unsafe { field_ref(f, "f") }?;
        let g = unsafe { field_ref(g, "g") }?;
        let out = unsafe { out_mut(out, "out") }?;
        let t = verify_main_inequality(f, g).map_err(fail)?;
        *out = HfIneqTrial {
            lhs: t.lhs,
            bmo_f: t.bmo_f,
            l1_g: t.l1_g,
            linf_g: t.linf_g,
            bracket: t.bracket,
            ratio: t.ratio.unwrap_or(f64::NAN),
        };
        Ok(())
    })
}

/// Limiting rate exponent `e^{-2 m T}`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hf_rate_exponent(m: f64, horizon: f64, out: *mut f64) -> HfStatus {
    guard(|| {
        let out = unsafe { out_mut(out, "out") }?;
        *out = rate_exponent(m, horizon).map_err(fail)?.exponent;
        Ok(())
    })
}

/// Integrates the logarithmic majorant with constant coefficients to `horizon`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hf_osgood_constant(
    f: f64,
    g: f64,
    g0: f64,
    nu: f64,
    horizon: f64,
    out: *mut HfMajorant,
) -> HfStatus {
    guard(|| {
        let out = unsafe { out_mut(out, "out") }?;
        let p = OsgoodProblem::constant(f, g, g0, nu, horizon).map_err(fail)?;
        let tr = integrate_majorant(&p).map_err(fail)?;
        *out = HfMajorant {
            final_value: tr.final_value(),
            blow_up_time: tr.blow_up.unwrap_or(f64::NAN),
            steps: tr.steps,
            converged: tr.converged,
        };
        Ok(())
    })
}

/// Evolves the vorticity `omega` to `horizon` at viscosity `nu` (0 for Euler).
/// `final_vorticity` may be null; otherwise it receives a new handle.
///
/// # Safety
/// `omega` must be a live handle, `summary` writable, and `final_vorticity`
/// null or writable.
#[no_mangle]
pub unsafe extern "C" fn hf_flow_run(
    omega: *const HfField,
    nu: f64,
    horizon: f64,
    cfl: f64,
    summary: *mut HfFlowSummary,
    final_vorticity: *mut *mut HfField,
) -> HfStatus {
    guard(|| {
        let omega = unsafe { field_ref(omega, "omega") }?;
        let summary = unsafe { out_mut(summary, "summary") }?;
        // SAFETY: null or writable per contract.
        let final_out = unsafe { final_vorticity.as_mut() };
        let cfg = SolverConfig::new(omega.grid(), nu, horizon).and_then(|c| c.with_cfl(cfl)).map_err(fail)?;
        let solver = Solver::new(cfg).map_err(fail)?;
        let r = run_from(&solver, FlowState::from_vorticity(omega)).map_err(fail)?;
        let last = r.final_state();
        *summary = HfFlowSummary {
            steps: r.steps,
            dt: r.dt,
            samples: r.samples.len(),
            final_time: last.time,
            final_energy: r.series.energy.last().copied().unwrap_or(f64::NAN),
            final_enstrophy: r.series.enstrophy.last().copied().unwrap_or(f64::NAN),
            blow_up_time: r.blow_up.unwrap_or(f64::NAN),
        };
        if let Some(slot) = final_out {
            *slot = boxed(last.vorticity());
        }
        Ok(())
    })
}

//! C ABI over `spectra_lab`.
//!
//! Atoms and instances are opaque heap handles created by the `sl_atom_*`
//! and `sl_instance_*` constructors and released with the matching
//! `sl_*_free`. Every fallible call returns an [`SlStatus`]; the message
//! of the last failure on the calling thread is available through
//! [`sl_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use spectra_lab::atoms::Atom;
use spectra_lab::lifts::{random_instance, InstanceGraph, NegationKind, NegationModel};
use spectra_lab::{ihara, nomadic, sdp, spectra, Error};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidUtf8 = 3,
    TooLarge = 4,
    NoConvergence = 5,
    Io = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlNegation {
    None = 0,
    Constraint = 1,
    Variable = 2,
}

/// Bounds from `sl_sdp_sandwich`. `opt` and `formula` are NaN when not
/// available (too many vertices for brute force, or `c < 2`).
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlSandwich {
    pub opt: f64,
    pub sdp_lower: f64,
    pub sdp_upper: f64,
    pub formula: f64,
    pub bad_vertex_count: usize,
    pub tail_mass: f64,
}

pub struct SlAtom(Atom);

pub struct SlInstance(InstanceGraph);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> SlStatus {
    match e {
        Error::TooLarge(_) | Error::BallTooLarge(_) | Error::ArityTooLarge(..) | Error::BudgetExceeded(_) => SlStatus::TooLarge,
        Error::NoConvergence(_) => SlStatus::NoConvergence,
        Error::Io(_) => SlStatus::Io,
        _ => SlStatus::InvalidArgument,
    }
}

fn guard(f: impl FnOnce() -> Result<(), SlStatus>) -> SlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SlStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("panic inside spectra-lab".into());
            SlStatus::Panic
        }
    }
}

fn fail(e: Error) -> SlStatus {
    let s = status_of(&e);
    set_error(e.to_string());
    s
}

unsafe fn str_arg<'a>(p: *const c_char) -> Result<&'a str, SlStatus> {
    if p.is_null() {
        set_error("null string argument".into());
        return Err(SlStatus::NullPointer);
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        set_error("argument is not valid UTF-8".into());
        SlStatus::InvalidUtf8
    })
}

unsafe fn ref_arg<'a, T>(p: *const T) -> Result<&'a T, SlStatus> {
    p.as_ref().ok_or_else(|| {
        set_error("null handle".into());
        SlStatus::NullPointer
    })
}

unsafe fn out_arg<'a, T>(p: *mut T) -> Result<&'a mut T, SlStatus> {
    p.as_mut().ok_or_else(|| {
        set_error("null output pointer".into());
        SlStatus::NullPointer
    })
}

fn into_c_string(s: String) -> Result<*mut c_char, SlStatus> {
    CString::new(s).map(CString::into_raw).map_err(|_| {
        set_error("string contains an interior NUL".into());
        SlStatus::InvalidArgument
    })
}

/// Message for the last failed call on this thread, or NULL. Free with
/// [`sl_string_free`].
#[no_mangle]
pub extern "C" fn sl_last_error() -> *mut c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null_mut(), |c| c.clone().into_raw()))
}

/// # Safety
/// `s` must be NULL or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sl_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses `edge`, `sort4`, `chsh`, `complete:R` or `forrelation:K`.
///
/// # Safety
/// `token` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn sl_atom_from_token(token: *const c_char, out: *mut *mut SlAtom) -> SlStatus {
    guard(|| {
        let out = out_arg(out)?;
        let atom = Atom::from_token(str_arg(token)?).map_err(fail)?;
        *out = Box::into_raw(Box::new(SlAtom(atom)));
        Ok(())
    })
}

/// Builds an atom from an `r×r` row-major table of weights in {−1, 0, 1}.
///
/// # Safety
/// `weights` must point to `r*r` readable bytes and `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn sl_atom_from_weights(r: usize, weights: *const i8, out: *mut *mut SlAtom) -> SlStatus {
    guard(|| {
        let out = out_arg(out)?;
        if weights.is_null() {
            set_error("null weight table".into());
            return Err(SlStatus::NullPointer);
        }
        let len = r.checked_mul(r).ok_or_else(|| fail(Error::ArityTooLarge(r, spectra_lab::atoms::MAX_ARITY)))?;
        let w = std::slice::from_raw_parts(weights, len).to_vec();
        let atom = Atom::new("custom", r, w).map_err(fail)?;
        *out = Box::into_raw(Box::new(SlAtom(atom)));
        Ok(())
    })
}

/// # Safety
/// `atom` must be NULL or a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn sl_atom_free(atom: *mut SlAtom) {
    if !atom.is_null() {
        drop(Box::from_raw(atom));
    }
}

/// # Safety
/// `atom` must be a live handle; the out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn sl_atom_info(atom: *const SlAtom, r: *mut usize, lambda1: *mut f64, lambda2: *mut f64) -> SlStatus {
    guard(|| {
        let a = &ref_arg(atom)?.0;
        *out_arg(r)? = a.r();
        *out_arg(lambda1)? = a.lambda1();
        *out_arg(lambda2)? = a.lambda2();
        Ok(())
    })
}

/// Random `n`-lift with `c` copies of `atom`.
///
/// # Safety
/// `atom` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sl_instance_random(
    atom: *const SlAtom,
    c: usize,
    n: usize,
    seed: u64,
    negation: SlNegation,
    out: *mut *mut SlInstance,
) -> SlStatus {
    guard(|| {
        let a = &ref_arg(atom)?.0;
        let out = out_arg(out)?;
        let kind = match negation {
            SlNegation::None => NegationKind::None,
            SlNegation::Constraint => NegationKind::Constraint,
            SlNegation::Variable => NegationKind::Variable,
        };
        let atoms = vec![a.clone(); c];
        let inst = random_instance(&atoms, n, seed, NegationModel { kind, seed }).map_err(fail)?;
        *out = Box::into_raw(Box::new(SlInstance(inst)));
        Ok(())
    })
}

/// # Safety
/// `json` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sl_instance_from_json(json: *const c_char, out: *mut *mut SlInstance) -> SlStatus {
    guard(|| {
        let out = out_arg(out)?;
        let inst: InstanceGraph = serde_json::from_str(str_arg(json)?).map_err(|e| fail(Error::Invalid(e.to_string())))?;
        *out = Box::into_raw(Box::new(SlInstance(inst)));
        Ok(())
    })
}

/// Serializes the instance; free the result with [`sl_string_free`].
///
/// # Safety
/// `inst` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sl_instance_to_json(inst: *const SlInstance, out: *mut *mut c_char) -> SlStatus {
    guard(|| {
        let g = &ref_arg(inst)?.0;
        let out = out_arg(out)?;
        let s = serde_json::to_string(g).map_err(|e| fail(e.into()))?;
        *out = into_c_string(s)?;
        Ok(())
    })
}

/// # Safety
/// `inst` must be NULL or a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn sl_instance_free(inst: *mut SlInstance) {
    if !inst.is_null() {
        drop(Box::from_raw(inst));
    }
}

/// # Safety
/// `inst` must be a live handle; the out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn sl_instance_size(inst: *const SlInstance, vertices: *mut usize, edges: *mut usize) -> SlStatus {
    guard(|| {
        let g = &ref_arg(inst)?.0;
        *out_arg(vertices)? = g.num_vertices();
        *out_arg(edges)? = g.edges().len();
        Ok(())
    })
}

/// Relative residual of the determinant identity at `t`.
///
/// # Safety
/// `inst` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sl_ihara_residual(inst: *const SlInstance, t: f64, out: *mut f64) -> SlStatus {
    guard(|| {
        let g = &ref_arg(inst)?.0;
        *out_arg(out)? = ihara::ihara_bass_residual(g, t).map_err(fail)?;
        Ok(())
    })
}

/// Spectral radii of the adjacency matrix and of the nomadic operator.
///
/// # Safety
/// `inst` must be a live handle; the out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn sl_spectral_radii(inst: *const SlInstance, rho_a: *mut f64, rho_b: *mut f64) -> SlStatus {
    guard(|| {
        let g = &ref_arg(inst)?.0;
        let (ra, rb) = (out_arg(rho_a)?, out_arg(rho_b)?);
        let a = spectra::eig_symmetric(&g.adjacency_f64()).map_err(fail)?;
        *ra = a.iter().map(|x| x.abs()).fold(0.0, f64::max);
        *rb = nomadic::nomadic_spectral_radius(g).map_err(fail)?;
        Ok(())
    })
}

/// Witness lower bound and eigenvalue upper bound on the SDP value.
///
/// # Safety
/// `inst` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sl_sdp_sandwich(inst: *const SlInstance, s: i8, delta: f64, l: usize, out: *mut SlSandwich) -> SlStatus {
    guard(|| {
        let g = &ref_arg(inst)?.0;
        let out = out_arg(out)?;
        let rep = sdp::sandwich(g, s, delta, l).map_err(fail)?;
        *out = SlSandwich {
            opt: rep.opt.unwrap_or(f64::NAN),
            sdp_lower: rep.sdp_lower,
            sdp_upper: rep.sdp_upper,
            formula: rep.formula.unwrap_or(f64::NAN),
            bad_vertex_count: rep.bad_vertex_count,
            tail_mass: rep.tail_mass,
        };
        Ok(())
    })
}

/// `(λ₁+λ₂+2√((c−1)(−λ₁λ₂)))/(c(−λ₁λ₂))`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sl_sdp_value_formula(lambda1: f64, lambda2: f64, c: usize, out: *mut f64) -> SlStatus {
    guard(|| {
        *out_arg(out)? = sdp::sdp_value_formula(lambda1, lambda2, c).map_err(fail)?;
        Ok(())
    })
}

/// Library version as a static string; do not free.
#[no_mangle]
pub extern "C" fn sl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

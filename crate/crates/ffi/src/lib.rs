//! C ABI over sketch parsing and evaluation and over linear hole
//! constraints.
//!
//! Every function returns an [`SrStatus`]. On failure the message is kept
//! per thread and read back with [`sr_last_error`]. Handles are opaque and
//! must be released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::sync::Arc;

use sketchreward::constraint::{
    eval_constraint, grad_soft_penalty, parse_constraints, soft_penalty, Constraint,
};
use sketchreward::dsl::{parse_sketch, print_sketch, Sketch, Vocabulary};
use sketchreward::env::{Env, GridConfig, GridEnv};

/// Result codes.
#[repr(C)]
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum SrStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    ParseError = 3,
    LinkError = 4,
    InvalidArgument = 5,
    BufferTooSmall = 6,
    Panic = 7,
}

/// A parsed reward sketch.
pub struct SrSketch {
    sketch: Sketch,
}

/// A constraint file linked to a fixed number of holes.
pub struct SrConstraint {
    constraint: Constraint,
    n_holes: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl ToString) {
    let s = msg.to_string().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(s).expect("nul bytes removed"));
}

fn fail(status: SrStatus, msg: impl ToString) -> SrStatus {
    set_error(msg);
    status
}

fn guard(f: impl FnOnce() -> SrStatus) -> SrStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => {
            if s == SrStatus::Ok {
                set_error("");
            }
            s
        }
        Err(_) => fail(SrStatus::Panic, "internal panic"),
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, SrStatus> {
    if p.is_null() {
        return Err(fail(SrStatus::NullPointer, format!("{name} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(SrStatus::InvalidUtf8, format!("{name} is not UTF-8")))
}

unsafe fn slice_arg<'a, T>(p: *const T, len: usize, name: &str) -> Result<&'a [T], SrStatus> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(fail(SrStatus::NullPointer, format!("{name} is null")));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

macro_rules! tri {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(s) => return s,
        }
    };
}

/// Message of the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn sr_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version, a static string.
#[no_mangle]
pub extern "C" fn sr_version() -> *const c_char {
    static V: &[u8] = concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes();
    V.as_ptr().cast()
}

fn store_sketch(sketch: Sketch, out: *mut *mut SrSketch) -> SrStatus {
    let b = Box::new(SrSketch { sketch });
    // SAFETY: caller checked `out` for null
    unsafe { *out = Box::into_raw(b) };
    SrStatus::Ok
}

/// Parses `src` against the DoorKey event vocabulary.
///
/// # Safety
/// `src` must be a nul-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sr_sketch_parse_doorkey(
    src: *const c_char,
    out: *mut *mut SrSketch,
) -> SrStatus {
    guard(|| {
        if out.is_null() {
            return fail(SrStatus::NullPointer, "out is null");
        }
        let src = tri!(str_arg(src, "src"));
        let env = match GridEnv::new(GridConfig::doorkey_6x6()) {
            Ok(e) => e,
            Err(e) => return fail(SrStatus::Panic, e),
        };
        match parse_sketch(src, env.vocabulary().clone()) {
            Ok(s) => store_sketch(s, out),
            Err(e) => fail(SrStatus::ParseError, e),
        }
    })
}

/// Parses `src` against a vocabulary of `n_tokens` token names.
///
/// # Safety
/// `src` and each of the `n_tokens` entries of `tokens` must be
/// nul-terminated strings; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sr_sketch_parse(
    src: *const c_char,
    tokens: *const *const c_char,
    n_tokens: usize,
    out: *mut *mut SrSketch,
) -> SrStatus {
    guard(|| {
        if out.is_null() {
            return fail(SrStatus::NullPointer, "out is null");
        }
        let src = tri!(str_arg(src, "src"));
        let ptrs = tri!(slice_arg(tokens, n_tokens, "tokens"));
        let mut names = Vec::with_capacity(n_tokens);
        for p in ptrs {
            names.push(tri!(str_arg(*p, "token name")).to_string());
        }
        let vocab = match Vocabulary::new(names) {
            Ok(v) => Arc::new(v),
            Err(e) => return fail(SrStatus::InvalidArgument, e),
        };
        match parse_sketch(src, vocab) {
            Ok(s) => store_sketch(s, out),
            Err(e) => fail(SrStatus::ParseError, e),
        }
    })
}

/// Releases a sketch; null is ignored.
///
/// # Safety
/// `sketch` must come from a parse function and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn sr_sketch_free(sketch: *mut SrSketch) {
    if !sketch.is_null() {
        drop(Box::from_raw(sketch));
    }
}

/// Number of holes.
///
/// # Safety
/// `sketch` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sr_sketch_n_holes(sketch: *const SrSketch, out: *mut usize) -> SrStatus {
    guard(|| {
        if sketch.is_null() || out.is_null() {
            return fail(SrStatus::NullPointer, "sketch or out is null");
        }
        *out = (*sketch).sketch.n_holes();
        SrStatus::Ok
    })
}

/// Per-step rewards of the program `sketch[holes]` on a trajectory given
/// by its `len` event token names. Writes `len` values to `rewards`.
///
/// # Safety
/// Pointers must be valid for the given lengths; token names must be
/// nul-terminated.
#[no_mangle]
pub unsafe extern "C" fn sr_sketch_eval(
    sketch: *const SrSketch,
    holes: *const f64,
    n_holes: usize,
    tokens: *const *const c_char,
    len: usize,
    rewards: *mut f64,
) -> SrStatus {
    guard(|| {
        if sketch.is_null() {
            return fail(SrStatus::NullPointer, "sketch is null");
        }
        let s = &(*sketch).sketch;
        let h = tri!(slice_arg(holes, n_holes, "holes"));
        let ptrs = tri!(slice_arg(tokens, len, "tokens"));
        if len > 0 && rewards.is_null() {
            return fail(SrStatus::NullPointer, "rewards is null");
        }
        let vocab = s.vocabulary();
        let mut toks = Vec::with_capacity(len);
        for p in ptrs {
            let name = tri!(str_arg(*p, "token name"));
            match vocab.lookup(name) {
                Some(t) => toks.push(t),
                None => return fail(SrStatus::InvalidArgument, format!("unknown token `{name}`")),
            }
        }
        match s.eval_tokens(h, &toks) {
            Ok(r) => {
                ptr::copy_nonoverlapping(r.as_ptr(), rewards, r.len());
                SrStatus::Ok
            }
            Err(e) => fail(SrStatus::InvalidArgument, e),
        }
    })
}

/// Source text of the sketch, or of the complete program when `holes` is
/// given. `needed` receives the size including the terminating nul; the
/// text is written only if `cap` is large enough.
///
/// # Safety
/// `buf` must be valid for `cap` bytes (may be null when `cap` is 0);
/// `holes` must be valid for `n_holes` values or null.
#[no_mangle]
pub unsafe extern "C" fn sr_sketch_print(
    sketch: *const SrSketch,
    holes: *const f64,
    n_holes: usize,
    buf: *mut c_char,
    cap: usize,
    needed: *mut usize,
) -> SrStatus {
    guard(|| {
        if sketch.is_null() || needed.is_null() {
            return fail(SrStatus::NullPointer, "sketch or needed is null");
        }
        let s = &(*sketch).sketch;
        let text = if holes.is_null() {
            print_sketch(s)
        } else {
            let h = tri!(slice_arg(holes, n_holes, "holes"));
            match s.substitute(h) {
                Ok(p) => print_sketch(&p),
                Err(e) => return fail(SrStatus::InvalidArgument, e),
            }
        };
        let bytes = text.as_bytes();
        *needed = bytes.len() + 1;
        if cap < bytes.len() + 1 {
            return fail(
                SrStatus::BufferTooSmall,
                format!("need {} bytes", bytes.len() + 1),
            );
        }
        ptr::copy_nonoverlapping(bytes.as_ptr(), buf.cast::<u8>(), bytes.len());
        *buf.add(bytes.len()) = 0;
        SrStatus::Ok
    })
}

/// Parses a constraint file and links it to `n_holes` holes.
///
/// # Safety
/// `src` must be nul-terminated and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sr_constraint_parse(
    src: *const c_char,
    n_holes: usize,
    out: *mut *mut SrConstraint,
) -> SrStatus {
    guard(|| {
        if out.is_null() {
            return fail(SrStatus::NullPointer, "out is null");
        }
        let src = tri!(str_arg(src, "src"));
        let file = match parse_constraints(src) {
            Ok(f) => f,
            Err(e) => return fail(SrStatus::ParseError, e),
        };
        match file.link(n_holes) {
            Ok(constraint) => {
                *out = Box::into_raw(Box::new(SrConstraint {
                    constraint,
                    n_holes,
                }));
                SrStatus::Ok
            }
            Err(e) => fail(SrStatus::LinkError, e),
        }
    })
}

/// Releases a constraint; null is ignored.
///
/// # Safety
/// `c` must come from [`sr_constraint_parse`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn sr_constraint_free(c: *mut SrConstraint) {
    if !c.is_null() {
        drop(Box::from_raw(c));
    }
}

unsafe fn holes_for<'a>(
    c: *const SrConstraint,
    holes: *const f64,
    n: usize,
) -> Result<(&'a SrConstraint, &'a [f64]), SrStatus> {
    if c.is_null() {
        return Err(fail(SrStatus::NullPointer, "constraint is null"));
    }
    let c = &*c;
    if n != c.n_holes {
        return Err(fail(
            SrStatus::InvalidArgument,
            format!("expected {} hole values, got {n}", c.n_holes),
        ));
    }
    Ok((c, slice_arg(holes, n, "holes")?))
}

/// `+1` if the holes satisfy the constraint, `-1` otherwise.
///
/// # Safety
/// `holes` must be valid for `n_holes` values and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sr_constraint_eval(
    c: *const SrConstraint,
    holes: *const f64,
    n_holes: usize,
    out: *mut f64,
) -> SrStatus {
    guard(|| {
        if out.is_null() {
            return fail(SrStatus::NullPointer, "out is null");
        }
        let (c, h) = tri!(holes_for(c, holes, n_holes));
        *out = eval_constraint(&c.constraint, h);
        SrStatus::Ok
    })
}

/// Smooth penalty of the constraint at `holes`.
///
/// # Safety
/// `holes` must be valid for `n_holes` values and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sr_constraint_penalty(
    c: *const SrConstraint,
    holes: *const f64,
    n_holes: usize,
    out: *mut f64,
) -> SrStatus {
    guard(|| {
        if out.is_null() {
            return fail(SrStatus::NullPointer, "out is null");
        }
        let (c, h) = tri!(holes_for(c, holes, n_holes));
        match soft_penalty(&c.constraint, h) {
            Ok(v) => {
                *out = v;
                SrStatus::Ok
            }
            Err(e) => fail(SrStatus::InvalidArgument, e),
        }
    })
}

/// Gradient of the smooth penalty; writes `n_holes` values to `grad`.
///
/// # Safety
/// `holes` and `grad` must be valid for `n_holes` values.
#[no_mangle]
pub unsafe extern "C" fn sr_constraint_penalty_grad(
    c: *const SrConstraint,
    holes: *const f64,
    n_holes: usize,
    grad: *mut f64,
) -> SrStatus {
    guard(|| {
        let (c, h) = tri!(holes_for(c, holes, n_holes));
        if n_holes > 0 && grad.is_null() {
            return fail(SrStatus::NullPointer, "grad is null");
        }
        match grad_soft_penalty(&c.constraint, h) {
            Ok(g) => {
                ptr::copy_nonoverlapping(g.as_ptr(), grad, g.len());
                SrStatus::Ok
            }
            Err(e) => fail(SrStatus::InvalidArgument, e),
        }
    })
}

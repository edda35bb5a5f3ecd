//! C ABI over the `logspace` library.
//!
//! Fields are opaque handles. Elements cross the boundary as their `u32`
//! digit index (power-basis coordinates read base `p`). Everything richer
//! is exchanged as JSON strings in the library's record format; strings
//! returned through `out` parameters must be released with
//! [`ls_string_free`]. On failure a function returns a nonzero
//! [`LsStatus`] and [`ls_last_error`] describes it.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use logspace::constructions::matignon_space;
use logspace::forms::{cartier, derivative_criterion, is_logarithmic, residue_criterion};
use logspace::lemma::lemma210_verify;
use logspace::search::{theorem29_verify, SearchOptions};
use logspace::serial::{form_from_record, form_to_record, from_json, space_from_record, space_to_record, FormRecord, SpaceRecord};
use logspace::{validate_space, Error, Fe, Field};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// Status returned by every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LsStatus {
    Ok = 0,
    InvalidParameter = 1,
    ReducibleModulus = 2,
    FieldMismatch = 3,
    NeedsLargerField = 4,
    Precondition = 5,
    NotInvertible = 6,
    Parse = 7,
    Io = 8,
    Internal = 9,
    NullPointer = 10,
    Panic = 11,
}

/// A finite field `F_{p^k}`.
pub struct LsField {
    inner: Field,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> LsStatus {
    match e {
        Error::InvalidParameter(_) => LsStatus::InvalidParameter,
        Error::ReducibleModulus { .. } => LsStatus::ReducibleModulus,
        Error::FieldMismatch(_) => LsStatus::FieldMismatch,
        Error::NeedsLargerField(_) => LsStatus::NeedsLargerField,
        Error::Precondition(_) => LsStatus::Precondition,
        Error::NotInvertible(_) => LsStatus::NotInvertible,
        Error::Parse(_) => LsStatus::Parse,
        Error::Io(_) => LsStatus::Io,
        Error::Internal(_) => LsStatus::Internal,
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

fn guard(body: impl FnOnce() -> Result<(), Failure>) -> LsStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => LsStatus::Ok,
        Ok(Err(Failure::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Ok(Err(Failure::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            LsStatus::NullPointer
        }
        Err(_) => {
            set_error("panic inside the library".into());
            LsStatus::Panic
        }
    }
}

unsafe fn field_ref<'a>(f: *const LsField) -> Result<&'a Field, Failure> {
    f.as_ref().map(|h| &h.inner).ok_or(Failure::Null("field"))
}

unsafe fn str_arg<'a>(s: *const c_char, what: &'static str) -> Result<&'a str, Failure> {
    if s.is_null() {
        return Err(Failure::Null(what));
    }
    CStr::from_ptr(s).to_str().map_err(|_| Failure::Lib(Error::Parse(format!("{what} is not UTF-8"))))
}

unsafe fn put<T>(out: *mut T, v: T, what: &'static str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::Null(what));
    }
    out.write(v);
    Ok(())
}

unsafe fn put_string(out: *mut *mut c_char, s: String) -> Result<(), Failure> {
    let c = CString::new(s).map_err(|_| Failure::Lib(Error::Internal("interior nul in output".into())))?;
    put(out, c.into_raw(), "out")
}

unsafe fn put_json<T: Serialize>(out: *mut *mut c_char, v: &T) -> Result<(), Failure> {
    let s = serde_json::to_string(v).map_err(|e| Failure::Lib(Error::Internal(e.to_string())))?;
    put_string(out, s)
}

fn element(f: &Field, x: u32) -> Result<Fe, Failure> {
    if x >= f.order() {
        return Err(Failure::Lib(Error::InvalidParameter(format!("element index {x} out of range"))));
    }
    Ok(Fe(x))
}

/// Message for the last failed call on this thread, or null. The pointer is
/// valid until the next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn ls_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed already.
#[no_mangle]
pub unsafe extern "C" fn ls_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Builds `F_{p^k}` from the shipped modulus table (or the table named by
/// the `LOGSPACE_FIELD_TABLE` environment variable).
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ls_field_new(p: u32, k: u32, out: *mut *mut LsField) -> LsStatus {
    guard(|| {
        let f = Field::new(p, k)?;
        put(out, Box::into_raw(Box::new(LsField { inner: f })), "out")
    })
}

/// # Safety
/// `f` must come from [`ls_field_new`] and not have been freed already.
#[no_mangle]
pub unsafe extern "C" fn ls_field_free(f: *mut LsField) {
    if !f.is_null() {
        drop(Box::from_raw(f));
    }
}

/// Number of elements, or 0 for a null handle.
///
/// # Safety
/// `f` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ls_field_order(f: *const LsField) -> u32 {
    f.as_ref().map_or(0, |h| h.inner.order())
}

/// # Safety
/// `f` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ls_field_add(f: *const LsField, a: u32, b: u32, out: *mut u32) -> LsStatus {
    guard(|| {
        let f = field_ref(f)?;
        let r = f.add(element(f, a)?, element(f, b)?);
        put(out, r.0, "out")
    })
}

/// # Safety
/// `f` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ls_field_mul(f: *const LsField, a: u32, b: u32, out: *mut u32) -> LsStatus {
    guard(|| {
        let f = field_ref(f)?;
        let r = f.mul(element(f, a)?, element(f, b)?);
        put(out, r.0, "out")
    })
}

/// # Safety
/// `f` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ls_field_inv(f: *const LsField, a: u32, out: *mut u32) -> LsStatus {
    guard(|| {
        let f = field_ref(f)?;
        let r = f.inv(element(f, a)?)?;
        put(out, r.0, "out")
    })
}

/// Parses element syntax such as `t^2+2t+1`.
///
/// # Safety
/// `f` must be a live handle, `s` a nul-terminated string and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn ls_field_parse(f: *const LsField, s: *const c_char, out: *mut u32) -> LsStatus {
    guard(|| {
        let f = field_ref(f)?;
        let x = f.parse_element(str_arg(s, "s")?)?;
        put(out, x.0, "out")
    })
}

/// # Safety
/// `f` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ls_field_format(f: *const LsField, a: u32, out: *mut *mut c_char) -> LsStatus {
    guard(|| {
        let f = field_ref(f)?;
        put_string(out, f.format(element(f, a)?))
    })
}

/// Validates a space record; writes the validation report as JSON.
///
/// # Safety
/// `space_json` must be a nul-terminated string and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn ls_validate_space_json(space_json: *const c_char, out: *mut *mut c_char) -> LsStatus {
    guard(|| {
        let rec: SpaceRecord = from_json(str_arg(space_json, "space_json")?)?;
        let v = validate_space(&space_from_record(&rec)?)?;
        put_json(out, &v)
    })
}

/// Builds the additive-polynomial space from `n` random independent
/// generators (seeded); writes the space record.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ls_construct_matignon_json(p: u32, k: u32, n: u32, seed: u64, out: *mut *mut c_char) -> LsStatus {
    guard(|| {
        let f = Field::new(p, k)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = logspace::instances::random_independent(&f, n as usize, &mut rng)?;
        put_json(out, &space_to_record(&matignon_space(&f, &a)?.space))
    })
}

/// Builds a random characteristic-two space with `3n` poles over
/// `F_{2^k}`; writes the space record.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ls_construct_p2_json(k: u32, n: u32, seed: u64, out: *mut *mut c_char) -> LsStatus {
    guard(|| {
        let f = Field::new(2, k)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        put_json(out, &space_to_record(&logspace::instances::random_p2(&f, n as usize, &mut rng)?.space))
    })
}

/// Writes `{"form", "cartier", "fixed", "logarithmic", "derivative_criterion",
/// "residue_criterion"}` for a form record over `F_{p^k}`.
///
/// # Safety
/// `form_json` must be a nul-terminated string and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn ls_cartier_json(p: u32, k: u32, form_json: *const c_char, out: *mut *mut c_char) -> LsStatus {
    guard(|| {
        let f = Field::new(p, k)?;
        let rec: FormRecord = from_json(str_arg(form_json, "form_json")?)?;
        let w = form_from_record(&f, &rec)?;
        let c = cartier(&f, &w);
        put_json(
            out,
            &serde_json::json!({
                "form": form_to_record(&f, &w), "cartier": form_to_record(&f, &c), "fixed": c == w,
                "logarithmic": is_logarithmic(&f, &w),
                "derivative_criterion": derivative_criterion(&f, &w),
                "residue_criterion": residue_criterion(&f, &w),
            }),
        )
    })
}

/// Writes the coefficient-identity report for `(p, n)`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ls_lemma210_json(p: u32, n: u32, out: *mut *mut c_char) -> LsStatus {
    guard(|| put_json(out, &lemma210_verify(p, n)?))
}

/// Runs the two-dimensional existence check for `p`, `2p`, `3p` poles over
/// `F_{p^k}`, `k <= k_max`; writes the report. `jobs = 0` uses all cores.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ls_theorem29_json(p: u32, k_max: u32, long_run: bool, jobs: u32, out: *mut *mut c_char) -> LsStatus {
    guard(|| {
        let opts = SearchOptions { jobs: jobs as usize, ..Default::default() };
        put_json(out, &theorem29_verify(p, k_max, long_run, &opts)?)
    })
}

/// Runs the command-line tool on `argv[0..argc]` (without the program
/// name) and writes its JSON-lines output to `out`. Returns the process
/// exit status (0, 1 or 2), or -1 when the arguments are unusable.
///
/// # Safety
/// `argv` must hold `argc` nul-terminated strings and `out` be valid.
#[no_mangle]
pub unsafe extern "C" fn ls_run(argc: c_int, argv: *const *const c_char, out: *mut *mut c_char) -> c_int {
    let mut code = -1;
    let status = guard(|| {
        if argc < 0 || (argc > 0 && argv.is_null()) {
            return Err(Failure::Null("argv"));
        }
        let mut args = vec!["logspace".to_string()];
        for i in 0..argc as usize {
            args.push(str_arg(*argv.add(i), "argv")?.to_string());
        }
        let mut buf = Vec::new();
        code = logspace::cli::run(args, &mut buf);
        put_string(out, String::from_utf8_lossy(&buf).into_owned())
    });
    if status == LsStatus::Ok {
        code
    } else {
        -1
    }
}

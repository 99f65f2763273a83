//! C interface to `flatmodel`.
//!
//! Instances are opaque handles. Structured results cross the boundary as
//! NUL-terminated JSON strings owned by the library; release them with
//! [`fm_string_free`]. Every entry point returns an [`FmStatus`], and the
//! message of the last failure on the calling thread is available from
//! [`fm_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use flatmodel::certify::{cert_verify, CertVerdict, PathCertificate};
use flatmodel::instance::Instance;
use flatmodel::lattice::{lat_det_profile, lat_is_ordinary, LatticePoint};
use flatmodel::moduli::{mod_enumerate, SearchStatus};
use flatmodel::pathfinder::{pf_connect_traced, PfOptions};
use flatmodel::Error;
use serde_json::json;

/// Result codes of every `fm_*` call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FmStatus {
    Ok = 0,
    /// A certificate was rejected, or an internal invariant failed.
    VerifyFailed = 1,
    /// Malformed input or an instance outside the supported range.
    Invalid = 2,
    /// Search budget or precision ceiling reached.
    Exhausted = 3,
    NullPointer = 4,
    /// The library panicked; the handle should be discarded.
    Panic = 5,
}

/// Opaque instance handle.
pub struct FmInstance {
    inner: Instance,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> FmStatus {
    match e {
        Error::SearchBudgetExceeded { .. } | Error::PrecisionExhausted(_) => FmStatus::Exhausted,
        Error::InternalInvariantViolation(_) => FmStatus::VerifyFailed,
        _ => FmStatus::Invalid,
    }
}

struct Fail(FmStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Fail {
        Fail(status_of(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<FmStatus, Fail>) -> FmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(s)) => {
            set_error("");
            s
        }
        Ok(Err(Fail(s, msg))) => {
            set_error(&msg);
            s
        }
        Err(_) => {
            set_error("panic inside flatmodel");
            FmStatus::Panic
        }
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail(FmStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Fail(FmStatus::Invalid, format!("{what} is not UTF-8")))
}

unsafe fn handle<'a>(h: *const FmInstance) -> Result<&'a Instance, Fail> {
    h.as_ref().map(|h| &h.inner).ok_or_else(|| Fail(FmStatus::NullPointer, "instance handle is null".into()))
}

unsafe fn put_string(out: *mut *mut c_char, s: String) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail(FmStatus::NullPointer, "output pointer is null".into()));
    }
    let c = CString::new(s).map_err(|_| Fail(FmStatus::Invalid, "output contains NUL".into()))?;
    *out = c.into_raw();
    Ok(())
}

fn points(inst: &Instance) -> Result<(Vec<LatticePoint>, SearchStatus, u64), Fail> {
    let en = inst.with_retry(|i| mod_enumerate(&i.params, i.tuple(), &i.file.bounds))?;
    Ok((en.points, en.status, en.explored))
}

/// Parse an instance file. On success `*out` owns a new handle.
///
/// # Safety
/// `json` must be a valid C string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fm_instance_from_json(json: *const c_char, out: *mut *mut FmInstance) -> FmStatus {
    guard(|| {
        let s = text(json, "instance text")?;
        if out.is_null() {
            return Err(Fail(FmStatus::NullPointer, "output pointer is null".into()));
        }
        *out = ptr::null_mut();
        let inner = Instance::from_json(s)?;
        *out = Box::into_raw(Box::new(FmInstance { inner }));
        Ok(FmStatus::Ok)
    })
}

/// Release a handle. Null is ignored.
///
/// # Safety
/// `h` must come from [`fm_instance_from_json`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn fm_instance_free(h: *mut FmInstance) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Instance hash, profile and parameters as JSON.
///
/// # Safety
/// `h` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fm_describe_json(h: *const FmInstance, out: *mut *mut c_char) -> FmStatus {
    guard(|| {
        let inst = handle(h)?;
        let profile = lat_det_profile(&inst.params, inst.tuple())?;
        let doc = json!({
            "instance_hash": inst.hash,
            "p": inst.file.p,
            "n": inst.file.n,
            "e": inst.file.e,
            "precision": inst.params.precision,
            "det_profile": profile,
        });
        put_string(out, doc.to_string())?;
        Ok(FmStatus::Ok)
    })
}

/// All moduli points with IDs, Hermite exponents and ordinarity. Returns
/// [`FmStatus::Exhausted`] together with the partial list when the search
/// budget runs out.
///
/// # Safety
/// `h` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fm_enumerate_json(h: *const FmInstance, out: *mut *mut c_char) -> FmStatus {
    guard(|| {
        let inst = handle(h)?;
        let (pts, status, explored) = points(inst)?;
        let mut rows = Vec::with_capacity(pts.len());
        for l in &pts {
            let ord = inst.with_retry(|i| lat_is_ordinary(&i.params, l))?.is_ordinary();
            rows.push(json!({ "id": l.id(), "exponents": l.exponents(), "ordinary": ord }));
        }
        let doc = json!({ "instance_hash": inst.hash, "status": status, "explored": explored, "points": rows });
        put_string(out, doc.to_string())?;
        Ok(if status == SearchStatus::BudgetExceeded { FmStatus::Exhausted } else { FmStatus::Ok })
    })
}

/// Certificate joining the points with IDs `from` and `to`, as JSON.
///
/// # Safety
/// `h` must be a live handle, `from` and `to` valid C strings, `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fm_connect_json(
    h: *const FmInstance,
    from: *const c_char,
    to: *const c_char,
    out: *mut *mut c_char,
) -> FmStatus {
    guard(|| {
        let inst = handle(h)?;
        let (from, to) = (text(from, "source ID")?, text(to, "target ID")?);
        let (pts, _, _) = points(inst)?;
        let find = |id: &str| {
            pts.iter()
                .find(|l| l.id() == id)
                .cloned()
                .ok_or_else(|| Fail(FmStatus::Invalid, format!("no point with ID {id}")))
        };
        let (l1, l2) = (find(from)?, find(to)?);
        let opts = PfOptions { bounds: None, points: Some(pts.clone()) };
        let (cert, _) = inst.with_retry(|i| pf_connect_traced(i, &l1, &l2, &opts))?;
        put_string(out, cert.to_json())?;
        Ok(FmStatus::Ok)
    })
}

/// Check a certificate. Returns [`FmStatus::Ok`] if it verifies and
/// [`FmStatus::VerifyFailed`] otherwise; the reason is in [`fm_last_error`].
///
/// # Safety
/// `h` must be a live handle and `cert` a valid C string.
#[no_mangle]
pub unsafe extern "C" fn fm_verify_certificate(h: *const FmInstance, cert: *const c_char) -> FmStatus {
    guard(|| {
        let inst = handle(h)?;
        let cert = PathCertificate::from_json(inst.ctx(), text(cert, "certificate")?)
            .map_err(|e| Fail(FmStatus::VerifyFailed, format!("malformed certificate: {e}")))?;
        match cert_verify(&inst.params, inst.tuple(), &inst.hash, &cert) {
            CertVerdict::Ok => Ok(FmStatus::Ok),
            v @ CertVerdict::Fail { .. } => Err(Fail(FmStatus::VerifyFailed, v.to_string())),
        }
    })
}

/// Release a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from an `fm_*_json` call and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn fm_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Message of the last failed call on this thread, or an empty string. The
/// pointer stays valid until the next `fm_*` call on the same thread.
#[no_mangle]
pub extern "C" fn fm_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

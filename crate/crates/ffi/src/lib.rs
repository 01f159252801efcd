//! C interface to `plaqed`.
//!
//! Every function returns a [`PlaqedStatus`]; results go through out
//! pointers. On failure the message is kept per thread and can be read with
//! [`plaqed_last_error_message`]. Clusters are opaque handles created by
//! `plaqed_cluster_new*` and released with [`plaqed_cluster_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use plaqed::coverings::{enumerate_valid_coverings, CoveringProblem};
use plaqed::eigensolver::SolverOptions;
use plaqed::spectrum::{ModelContext, Sector};
use plaqed::{Cluster, Error, ModelParams};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlaqedStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidCluster = 3,
    NoConvergence = 4,
    BufferTooSmall = 5,
    Internal = 6,
}

/// Opaque cluster handle; owns the basis and matrix caches of the cluster.
pub struct PlaqedCluster {
    ctx: ModelContext,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn status_of(e: &Error) -> PlaqedStatus {
    match e {
        Error::InvalidCluster(_) | Error::UnknownCluster(_) => PlaqedStatus::InvalidCluster,
        Error::NoConvergence { .. } => PlaqedStatus::NoConvergence,
        Error::Io(_) => PlaqedStatus::Internal,
        _ => PlaqedStatus::InvalidArgument,
    }
}

/// Run `f`, turning errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), (PlaqedStatus, String)>) -> PlaqedStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            PlaqedStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            PlaqedStatus::Internal
        }
    }
}

fn fail(e: Error) -> (PlaqedStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (PlaqedStatus, String) {
    (PlaqedStatus::NullPointer, format!("{what} is NULL"))
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, (PlaqedStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (PlaqedStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn cluster_ref<'a>(c: *const PlaqedCluster) -> Result<&'a PlaqedCluster, (PlaqedStatus, String)> {
    c.as_ref().ok_or_else(|| null("cluster"))
}

fn boxed(cluster: Cluster) -> *mut PlaqedCluster {
    Box::into_raw(Box::new(PlaqedCluster {
        ctx: ModelContext::new(cluster),
    }))
}

/// Copy the last error message of this thread into `buf` (NUL terminated,
/// truncated to `len`). Returns the full message length without the NUL.
///
/// # Safety
/// `buf` must be NULL or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn plaqed_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr(), buf as *mut u8, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Cluster by catalog name ("16", "20", "32") or "x1,y1;x2,y2".
///
/// # Safety
/// `name` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn plaqed_cluster_new(name: *const c_char, out: *mut *mut PlaqedCluster) -> PlaqedStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let name = read_str(name, "name")?;
        let c = Cluster::named(name).map_err(fail)?;
        *out = boxed(c);
        Ok(())
    })
}

/// Cluster spanned by `(x1, y1)` and `(x2, y2)`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn plaqed_cluster_from_vectors(
    x1: i64,
    y1: i64,
    x2: i64,
    y2: i64,
    out: *mut *mut PlaqedCluster,
) -> PlaqedStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let c = Cluster::new([x1, y1], [x2, y2]).map_err(fail)?;
        *out = boxed(c);
        Ok(())
    })
}

/// Release a cluster. NULL is ignored.
///
/// # Safety
/// `c` must come from `plaqed_cluster_new*` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn plaqed_cluster_free(c: *mut PlaqedCluster) {
    if !c.is_null() {
        drop(Box::from_raw(c));
    }
}

/// # Safety
/// `c` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn plaqed_cluster_n_sites(c: *const PlaqedCluster, out: *mut usize) -> PlaqedStatus {
    guard(|| {
        let c = cluster_ref(c)?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = c.ctx.cluster().n_sites();
        Ok(())
    })
}

/// Lowest `count` eigenvalues in the sector `(2 Sz, k)` at couplings
/// `(j, gamma, delta)`. `momentum` is e.g. "pi,0" or "0,0"; NULL selects the
/// plain `Sz` basis. Writes `count` values into `out`; whole multiplets are
/// kept internally, so the last values may belong to a larger multiplet.
///
/// # Safety
/// `c` must be a live handle, `momentum` NULL or NUL terminated, `out`
/// writable for `count` doubles.
#[no_mangle]
pub unsafe extern "C" fn plaqed_lowest_energies(
    c: *const PlaqedCluster,
    j: f64,
    gamma: f64,
    delta: f64,
    twice_sz: i32,
    momentum: *const c_char,
    count: usize,
    out: *mut f64,
) -> PlaqedStatus {
    guard(|| {
        let c = cluster_ref(c)?;
        if out.is_null() {
            return Err(null("out"));
        }
        if count == 0 {
            return Err((PlaqedStatus::InvalidArgument, "count must be positive".into()));
        }
        let k = if momentum.is_null() {
            None
        } else {
            Some(c.ctx.cluster().momentum(read_str(momentum, "momentum")?).map_err(fail)?)
        };
        let params = ModelParams::new(j, gamma, delta).map_err(fail)?;
        let opts = SolverOptions {
            want_vectors: false,
            ..SolverOptions::default()
        };
        let sector = Sector::new(twice_sz as f64 / 2.0, k);
        let r = c.ctx.solve(&params, sector, count, &opts).map_err(fail)?;
        if r.eigenvalues.len() < count {
            return Err((
                PlaqedStatus::BufferTooSmall,
                format!("sector holds only {} levels", r.eigenvalues.len()),
            ));
        }
        ptr::copy_nonoverlapping(r.eigenvalues.as_ptr(), out, count);
        Ok(())
    })
}

/// Number of valid dimer coverings of the cluster.
///
/// # Safety
/// `c` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn plaqed_count_coverings(c: *const PlaqedCluster, out: *mut usize) -> PlaqedStatus {
    guard(|| {
        let c = cluster_ref(c)?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = enumerate_valid_coverings(&CoveringProblem::new(c.ctx.cluster())).len();
        Ok(())
    })
}

/// Library version, static NUL-terminated string.
#[no_mangle]
pub extern "C" fn plaqed_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

//! C interface to the rankjoin engine.
//!
//! Handles are opaque. Every fallible call returns an [`RjStatus`]; on
//! failure [`rj_last_error_message`] describes the error for the calling
//! thread. Strings returned to the caller are freed with [`rj_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;
use std::sync::Arc;

use rankjoin::error::Error;
use rankjoin::job::{Job, JobCursor, JobSpec};

/// Status codes. Values 1 to 4 match the command-line exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RjStatus {
    Ok = 0,
    Io = 1,
    Invalid = 2,
    Incompatible = 3,
    TooLarge = 4,
    /// The cursor has no more results.
    Exhausted = 5,
    /// The record did not fit; `*out_len` holds the size needed.
    BufferTooSmall = 6,
    NullArgument = 7,
    Panic = 8,
}

/// A loaded query job.
pub struct RjJob {
    job: Arc<Job>,
}

/// A cursor over a job's results in rank order.
pub struct RjCursor {
    job: Arc<Job>,
    cursor: JobCursor,
    pending: Option<CString>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let msg = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn fail(e: Error) -> RjStatus {
    let status = match e.exit_code() {
        1 => RjStatus::Io,
        3 => RjStatus::Incompatible,
        4 => RjStatus::TooLarge,
        _ => RjStatus::Invalid,
    };
    set_error(e.to_string());
    status
}

fn guard(f: impl FnOnce() -> RjStatus) -> RjStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => {
            set_error("internal panic".into());
            RjStatus::Panic
        }
    }
}

/// Borrows a C string; `None` for NULL or invalid UTF-8 (error recorded).
unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<Option<&'a str>, RjStatus> {
    if p.is_null() {
        return Ok(None);
    }
    match CStr::from_ptr(p).to_str() {
        Ok(s) => Ok(Some(s)),
        Err(_) => {
            set_error(format!("{what} is not valid UTF-8"));
            Err(RjStatus::Invalid)
        }
    }
}

fn split(list: Option<&str>) -> Vec<String> {
    list.map(|s| s.split(',').map(str::trim).filter(|p| !p.is_empty()).map(str::to_owned).collect())
        .unwrap_or_default()
}

/// Loads a job. `query` is the query text; `rank` a ranking spec such as
/// `tuple_sum` or `lex(x,y)`. `weight_cols` and `decomps` are comma
/// separated lists and may be NULL. On success `*out` owns a new job.
///
/// # Safety
/// String arguments must be NULL or NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rj_job_open(
    query: *const c_char,
    data_dir: *const c_char,
    rank: *const c_char,
    weight_cols: *const c_char,
    decomps: *const c_char,
    out: *mut *mut RjJob,
) -> RjStatus {
    guard(|| {
        if out.is_null() {
            set_error("out is NULL".into());
            return RjStatus::NullArgument;
        }
        *out = ptr::null_mut();
        let args = (|| {
            Ok::<_, RjStatus>((
                text(query, "query")?,
                text(data_dir, "data_dir")?,
                text(rank, "rank")?,
                text(weight_cols, "weight_cols")?,
                text(decomps, "decomps")?,
            ))
        })();
        let (Some(query), Some(data_dir), rank, weight_cols, decomps) = (match args {
            Ok(a) => a,
            Err(s) => return s,
        }) else {
            set_error("query and data_dir are required".into());
            return RjStatus::NullArgument;
        };
        let spec = JobSpec {
            query_text: query.to_owned(),
            data_dir: PathBuf::from(data_dir),
            rank: rank.unwrap_or("tuple_sum").to_owned(),
            decomps: split(decomps).into_iter().map(PathBuf::from).collect(),
            weight_cols: split(weight_cols),
            vertex_weights: None,
        };
        match Job::load(&spec) {
            Ok(job) => {
                *out = Box::into_raw(Box::new(RjJob { job: Arc::new(job) }));
                RjStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `job` must be NULL or a handle from [`rj_job_open`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rj_job_free(job: *mut RjJob) {
    if !job.is_null() {
        drop(Box::from_raw(job));
    }
}

/// Writes the plan report to `*out` (free with [`rj_string_free`]).
///
/// # Safety
/// `job` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rj_plan_report(job: *const RjJob, out: *mut *mut c_char) -> RjStatus {
    guard(|| {
        if job.is_null() || out.is_null() {
            set_error("job or out is NULL".into());
            return RjStatus::NullArgument;
        }
        let report = (*job).job.plan_report();
        *out = CString::new(report).expect("report has no NULs").into_raw();
        RjStatus::Ok
    })
}

/// Prepares the job and opens a cursor. The cursor keeps the job alive, so
/// the job handle may be freed first.
///
/// # Safety
/// `job` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rj_cursor_open(job: *const RjJob, out: *mut *mut RjCursor) -> RjStatus {
    guard(|| {
        if job.is_null() || out.is_null() {
            set_error("job or out is NULL".into());
            return RjStatus::NullArgument;
        }
        *out = ptr::null_mut();
        let job = Arc::clone(&(*job).job);
        match job.cursor() {
            Ok(cursor) => {
                *out = Box::into_raw(Box::new(RjCursor { job, cursor, pending: None }));
                RjStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Copies the next record (`score<TAB>v1,v2,...`, NUL-terminated) into
/// `buf`. `*out_len` receives the record length including the NUL. When the
/// buffer is too small nothing is consumed and the same record is returned by
/// the next call.
///
/// # Safety
/// `cursor` must be a live handle; `buf` must hold `buf_len` bytes (or be
/// NULL with `buf_len` 0); `out_len` must be NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn rj_cursor_next_record(
    cursor: *mut RjCursor,
    buf: *mut c_char,
    buf_len: usize,
    out_len: *mut usize,
) -> RjStatus {
    guard(|| {
        if cursor.is_null() || (buf.is_null() && buf_len > 0) {
            set_error("cursor or buf is NULL".into());
            return RjStatus::NullArgument;
        }
        let c = &mut *cursor;
        if c.pending.is_none() {
            match c.cursor.next() {
                Some(t) => c.pending = Some(CString::new(c.job.record(&t)).expect("records have no NULs")),
                None => return RjStatus::Exhausted,
            }
        }
        let rec = c.pending.as_ref().expect("filled above").as_bytes_with_nul();
        if !out_len.is_null() {
            *out_len = rec.len();
        }
        if rec.len() > buf_len {
            return RjStatus::BufferTooSmall;
        }
        ptr::copy_nonoverlapping(rec.as_ptr().cast::<c_char>(), buf, rec.len());
        c.pending = None;
        RjStatus::Ok
    })
}

/// # Safety
/// `cursor` must be NULL or a handle from [`rj_cursor_open`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rj_cursor_free(cursor: *mut RjCursor) {
    if !cursor.is_null() {
        drop(Box::from_raw(cursor));
    }
}

/// Message for the last failed call on this thread, or NULL. Valid until
/// the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn rj_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |m| m.as_ptr()))
}

/// # Safety
/// `s` must be NULL or a string returned by this library.
#[no_mangle]
pub unsafe extern "C" fn rj_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

#[no_mangle]
pub extern "C" fn rj_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
